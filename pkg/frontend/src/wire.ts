/* GENERATED FILE - do not edit by hand.
 * Source: schemas/wire.schema.json  (npm run gen)
 */

export type Kind = "title" | "genre" | "person";
export type Label = "pos" | "neg";
export type Phase = "elicit" | "recommend" | "reengage" | "social" | "closing";
export type Side = "user" | "system";
export type RecommendationStatus = "offered" | "accepted" | "rejected";
export type PlaceholderToken = string;

export interface Wire {
  kind: Kind;
  label: Label;
  phase: Phase;
  side: Side;
  recommendationStatus: RecommendationStatus;
  placeholderToken: PlaceholderToken;
  attribute: Attribute;
  trackingEntry: TrackingEntry;
  tracking: Tracking;
  placeholderEntry: PlaceholderEntry;
  placeholderMapRow: PlaceholderMapRow;
  deltaEntry: DeltaEntry;
  mention: Mention;
  turn: Turn;
  recommendationRow: RecommendationRow;
  rationaleRow: RationaleRow;
  sessionSnapshot: SessionSnapshot;
  createSessionRequest: CreateSessionRequest;
  createSessionResponse: CreateSessionResponse;
  messageRequest: MessageRequest;
  messageResponse: MessageResponse;
  errorResponse: ErrorResponse;
  predictorRequest: PredictorRequest;
  predictorResponse: PredictorResponse;
  recommenderRequest: RecommenderRequest;
  recommenderResponse: RecommenderResponse;
  generatorRequest: GeneratorRequest;
  generatorResponse: GeneratorResponse;
}
export interface Attribute {
  kind: Kind;
  id: string;
  display: string;
}
export interface TrackingEntry {
  kind: Kind;
  id: string;
  label: Label;
}
export interface Tracking {
  side: Side;
  turn: number;
  entries: TrackingEntry[];
}
export interface PlaceholderEntry {
  placeholder: PlaceholderToken;
  label: Label;
}
export interface PlaceholderMapRow {
  placeholder: PlaceholderToken;
  kind: Kind;
  id: string;
  display: string;
}
export interface DeltaEntry {
  kind: Kind;
  id: string;
  display: string;
  label: Label;
}
export interface Mention {
  kind: Kind;
  id: string;
  display: string;
  start: number;
  end: number;
}
export interface Turn {
  speaker: Side;
  text: string;
  mentions: Mention[];
}
export interface RecommendationRow {
  turn: number;
  kind: Kind;
  id: string;
  display: string;
  status: RecommendationStatus;
}
export interface RationaleRow {
  side: Side;
  kind: Kind;
  id: string;
  label: Label;
  rationale: string;
}
export interface SessionSnapshot {
  id: string;
  closed: boolean;
  reengaged: boolean;
  turns: Turn[];
  trackings: {
    turn: number;
    user: Tracking;
    system: Tracking;
  }[];
  placeholder_map: PlaceholderMapRow[];
  predictions: {
    turn: number;
    entries: PlaceholderEntry[];
  }[];
  predicted_trackings: {
    turn: number;
    tracking: Tracking;
  }[];
  deltas: {
    turn: number;
    entries: DeltaEntry[];
  }[];
  phases: {
    turn: number;
    phase: Phase;
  }[];
  recommendations: RecommendationRow[];
  rationales: {
    turn: number;
    entries: RationaleRow[];
  }[];
  template_usage: {
    [k: string]: number;
  };
}
export interface CreateSessionRequest {
  config?: {
    template_seed?: number;
    max_history_tokens?: number;
    labeler_context_tokens?: number;
  };
  snapshot?: SessionSnapshot;
}
export interface CreateSessionResponse {
  session_id: string;
  state: SessionSnapshot;
}
export interface MessageRequest {
  text: string;
}
export interface MessageResponse {
  session_id: string;
  turn: number;
  response: {
    text: string;
    template_key?: string | null;
  };
  phase: Phase;
  trackings: {
    user: Tracking;
    system: Tracking;
  };
  prediction: PlaceholderEntry[];
  predicted_tracking: Tracking;
  delta: DeltaEntry[];
  recommendations: RecommendationRow[];
  rationales: RationaleRow[];
  placeholder_map: PlaceholderMapRow[];
}
export interface ErrorResponse {
  detail: unknown;
}
export interface PredictorRequest {
  context: string;
  positive_placeholders: PlaceholderToken[];
}
export interface PredictorResponse {
  entries: PlaceholderEntry[];
}
export interface RecommenderRequest {
  positives: Attribute[];
  negatives: Attribute[];
  target_kind: Kind;
  exclude: Attribute[];
  k: number;
}
export interface RecommenderResponse {
  candidates: {
    attribute: Attribute;
    score: number;
  }[];
}
export interface GeneratorRequest {
  context: string;
  delta: PlaceholderEntry[];
  phase: Phase;
}
export interface GeneratorResponse {
  text: string;
}
