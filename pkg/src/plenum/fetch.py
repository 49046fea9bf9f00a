"""Incremental retrieval of new session documents from an open-data endpoint.

The client speaks plain HTTP GET with after-key/limit query parameters:

    GET {endpoint_url}?after={last_session_key}&limit={page_size}

and expects an XML envelope listing sessions in ascending key order::

    <protokollliste>
      <eintrag key="20-012">
        <dbtplenarprotokoll ...> ... </dbtplenarprotokoll>
      </eintrag>
    </protokollliste>

Each entry wraps one full session document in the bundestag schema
subset. Fetching is idempotent for an unchanged remote; transient
failures (connection errors, HTTP 5xx) are retried with bounded
exponential backoff.
"""

from __future__ import annotations

import time
import urllib.error
import urllib.parse
import urllib.request
import xml.etree.ElementTree as ET
from dataclasses import dataclass, replace
from typing import Callable

from plenum.ingest import RawSessionDoc, SourceSchema

MAX_PAGE_SIZE = 500
DEFAULT_ATTEMPTS = 3


@dataclass(frozen=True)
class FetchCursor:
    endpoint_url: str
    last_session_key: str | None = None
    page_size: int = 50


class NetworkError(Exception):
    """Endpoint unreachable or persistently failing after retries."""


class RemoteFormatError(Exception):
    """Endpoint payload is not the expected session-list envelope."""


HttpGet = Callable[[str], tuple[int, bytes]]


def _default_http_get(url: str) -> tuple[int, bytes]:
    try:
        with urllib.request.urlopen(url, timeout=30) as resp:
            return resp.status, resp.read()
    except urllib.error.HTTPError as exc:
        return exc.code, exc.read()


def fetch_updates(
    cursor: FetchCursor,
    *,
    http_get: HttpGet | None = None,
    max_attempts: int = DEFAULT_ATTEMPTS,
    backoff_base: float = 0.5,
    sleep: Callable[[float], None] = time.sleep,
) -> tuple[list[RawSessionDoc], FetchCursor]:
    """Return up to ``page_size`` documents strictly after the cursor key.

    The advanced cursor points at the last returned document; an empty
    page returns the cursor unchanged. Callers must not share one cursor
    across concurrent fetches.
    """
    if not 1 <= cursor.page_size <= MAX_PAGE_SIZE:
        raise ValueError(f"page_size must be in [1, {MAX_PAGE_SIZE}]")
    if http_get is None:
        http_get = _default_http_get

    params = {"limit": str(cursor.page_size)}
    if cursor.last_session_key:
        params["after"] = cursor.last_session_key
    url = f"{cursor.endpoint_url}?{urllib.parse.urlencode(params)}"

    body: bytes | None = None
    last_failure = ""
    for attempt in range(max_attempts):
        try:
            status, payload = http_get(url)
        except OSError as exc:
            last_failure = str(exc)
        else:
            if status == 200:
                body = payload
                break
            last_failure = f"HTTP {status}"
            if status < 500:
                raise NetworkError(f"{url}: {last_failure}")
        if attempt < max_attempts - 1:
            sleep(backoff_base * (2**attempt))
    if body is None:
        raise NetworkError(f"{url}: giving up after {max_attempts} attempts ({last_failure})")

    return _parse_listing(body, cursor)


def _parse_listing(body: bytes, cursor: FetchCursor) -> tuple[list[RawSessionDoc], FetchCursor]:
    try:
        root = ET.fromstring(body)
    except ET.ParseError as exc:
        raise RemoteFormatError(f"response is not XML: {exc.msg}") from exc
    if root.tag != "protokollliste":
        raise RemoteFormatError(f"unexpected response root {root.tag!r}")

    docs: list[RawSessionDoc] = []
    last_key = None
    for entry in root:
        if entry.tag != "eintrag":
            raise RemoteFormatError(f"unexpected listing element {entry.tag!r}")
        key = entry.get("key")
        if not key:
            raise RemoteFormatError("listing entry without key attribute")
        protokoll = entry.find("dbtplenarprotokoll")
        if protokoll is None:
            raise RemoteFormatError(f"entry {key!r} does not wrap a dbtplenarprotokoll document")
        docs.append(
            RawSessionDoc(
                schema=SourceSchema.BUNDESTAG,
                xml_bytes=ET.tostring(protokoll, encoding="utf-8"),
                source_uri=f"{cursor.endpoint_url}#{key}",
            )
        )
        last_key = key

    if last_key is None:
        return [], cursor
    return docs, replace(cursor, last_session_key=last_key)
