/** Wire types for the linking service; field names match the JSON. */

export interface ConfigResponse {
  span_models: string[];
  embeddings: string[];
  modes: string[];
  sample_questions: string[];
}

export interface EntityRow {
  uri: string;
  label: string;
  type: string;
  /** Six-decimal string; displayed verbatim, never re-formatted. */
  distance: string;
  url: string;
}

export interface SpanBlock {
  text: string;
  type: string;
  disambiguation_ran: boolean;
  distance_kind: string;
  error: string | null;
  entities: EntityRow[];
}

export interface LinkResponse {
  question: string;
  span_model: string;
  mode: string;
  embedding: string | null;
  spans: SpanBlock[];
}

/** Error payload the service returns with 4xx/5xx statuses. */
export interface ErrorBody {
  code: string;
  message: string;
}

/** One detector/mode/embedding pick; embedding is null for label sorting. */
export interface ComboSelection {
  span_model: string;
  mode: string;
  embedding: string | null;
}

export interface LinkRequestBody {
  question: string;
  span_model: string;
  mode: string;
  embedding?: string;
  k?: number;
}
