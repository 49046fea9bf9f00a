/** Wire types of the corpus service API. */

export type Operator = "AND" | "OR" | "NOT";

export type SortMode = "relevance" | "date_asc" | "date_desc";

export interface QueryClause {
  op: Operator;
  field: string;
  value: string;
}

export interface Query {
  clauses: QueryClause[];
  sort: SortMode;
  page: number;
  page_size: number;
}

export interface Snippet {
  text: string;
  highlights: [number, number][];
}

export interface SearchHit {
  id: string;
  score: number;
  date: string;
  speaker: string;
  party: string;
  role: string;
  topic: string | null;
  snippet: Snippet;
}

export interface SearchResponse {
  total: number;
  page: number;
  page_size: number;
  hits: SearchHit[];
}

export interface RecordAnnotation {
  kind: "interjection" | "call_to_order" | "ner_entity" | "party_mention";
  start: number;
  end: number;
  label: string;
  annotator: string;
}

export interface RecordSentence {
  index: number;
  start: number;
  end: number;
}

export interface SpeakerPayload {
  raw_name: string;
  first_name: string;
  surname: string;
  resolved_mp_id?: string;
  ambiguous: boolean;
  party: { raw: string; canonical?: string };
}

export interface SpeechRecord {
  id: string;
  legislative_period: number;
  session_number: number;
  agenda_number: number;
  agenda_type: string;
  agenda_description: string;
  date: string;
  speaker: SpeakerPayload;
  role: string;
  topic?: { label: string; confidence: number };
  source_uri: string;
  text: string;
  sentences: RecordSentence[];
  annotations: RecordAnnotation[];
}

export interface SpeechDetail {
  record: SpeechRecord;
  annotators: string[];
}

export interface TopTermsResponse {
  terms: { term: string; frequency: number }[];
}
