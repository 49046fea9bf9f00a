import { ApiClient } from "./api.js";
import { mountApp } from "./app.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");
mountApp(root, new ApiClient());
