// Pure view-state logic. Everything here is computed from wire payloads;
// the UI never re-derives tracking, prediction, or delta content on its own.

import type {
  Kind,
  Label,
  MessageResponse,
  Phase,
  PlaceholderEntry,
  PlaceholderMapRow,
  RationaleRow,
  RecommendationRow,
  SessionSnapshot,
  Side,
  Tracking,
  TrackingEntry,
} from "./wire.js";

export interface Chip {
  kind: Kind;
  id: string;
  display: string;
  label: Label;
  rationale?: string;
}

export interface PredictionView {
  placeholder: string;
  label: Label;
  isNew: boolean;
  /** Display of the attribute this placeholder resolved to, when known. */
  resolved?: string;
}

export interface TurnCard {
  turn: number;
  userText: string;
  responseText: string;
  phase: Phase;
  user: Chip[];
  system: Chip[];
  prediction: PredictionView[];
  delta: Chip[];
  /** True when the turn introduced no new attribute pairs. */
  socialTurn: boolean;
}

export interface Bubble {
  who: "you" | "bot";
  text: string;
}

export interface AppState {
  sessionId: string | null;
  pending: boolean;
  /** Message text to offer again from the retry banner, if the last send failed. */
  failedText: string | null;
  error: string | null;
  transcript: Bubble[];
  cards: TurnCard[];
  latestUser: Chip[];
  latestSystem: Chip[];
  recommendations: RecommendationRow[];
}

export function initialState(): AppState {
  return {
    sessionId: null,
    pending: false,
    failedText: null,
    error: null,
    transcript: [],
    cards: [],
    latestUser: [],
    latestSystem: [],
    recommendations: [],
  };
}

export function canSend(state: AppState, draft: string): boolean {
  return state.sessionId !== null && !state.pending && draft.trim().length > 0;
}

export function sessionCreated(state: AppState, sessionId: string): AppState {
  return { ...initialState(), sessionId };
}

export function messageSent(state: AppState, text: string): AppState {
  return {
    ...state,
    pending: true,
    error: null,
    failedText: null,
    transcript: [...state.transcript, { who: "you", text }],
  };
}

export function messageFailed(state: AppState, text: string, reason: string): AppState {
  return {
    ...state,
    pending: false,
    failedText: text,
    error: reason,
    // drop the optimistic bubble so a retry does not duplicate it
    transcript: state.transcript.slice(0, -1),
  };
}

export type Registry = Map<string, { display: string; kind: Kind }>;

const attrKey = (kind: string, id: string) => `${kind} ${id}`;

/**
 * Display strings for every attribute the payload names anywhere. Tracking
 * entries carry no display of their own, and the placeholder map lags one
 * turn behind for attributes the response itself introduces, so the delta
 * and recommendation rows fill that gap.
 */
export function displayIndex(payload: MessageResponse): Registry {
  const registry: Registry = new Map();
  const put = (kind: Kind, id: string, display: string) => {
    registry.set(attrKey(kind, id), { display, kind });
  };
  for (const row of payload.placeholder_map) put(row.kind, row.id, row.display);
  for (const row of payload.delta) put(row.kind, row.id, row.display);
  for (const row of payload.recommendations) put(row.kind, row.id, row.display);
  return registry;
}

function chip(entry: TrackingEntry, registry: Registry, rationale?: string): Chip {
  const known = registry.get(attrKey(entry.kind, entry.id));
  return {
    kind: entry.kind,
    id: entry.id,
    display: known ? known.display : entry.id,
    label: entry.label,
    ...(rationale !== undefined ? { rationale } : {}),
  };
}

function chipsFrom(tracking: Tracking, registry: Registry, rationales: RationaleRow[], side: Side): Chip[] {
  const notes = new Map<string, string>();
  for (const row of rationales) {
    if (row.side === side) notes.set(attrKey(row.kind, row.id), row.rationale);
  }
  return tracking.entries.map((entry) => chip(entry, registry, notes.get(attrKey(entry.kind, entry.id))));
}

const NEW_TOKEN_KINDS: Record<string, Kind> = {
  MOVIE: "title",
  GENRE: "genre",
  PERSON: "person",
};

function newTokenKind(placeholder: string): Kind | null {
  const match = /^\[NEW_([A-Z]+)\]$/.exec(placeholder);
  const name = match?.[1];
  if (name === undefined) return null;
  return NEW_TOKEN_KINDS[name] ?? null;
}

/**
 * Pair each predicted placeholder with the attribute it resolved to.
 * Indexed placeholders resolve through the placeholder map; NEW placeholders
 * take the predicted-tracking entries left over after indexed resolution,
 * matched by kind in served order.
 */
export function resolvePrediction(
  prediction: PlaceholderEntry[],
  predicted: Tracking,
  placeholderMap: PlaceholderMapRow[],
  displays: Registry = new Map(),
): PredictionView[] {
  const byToken = new Map<string, PlaceholderMapRow>();
  for (const row of placeholderMap) byToken.set(row.placeholder, row);

  const taken = new Set<string>();
  for (const entry of prediction) {
    const row = byToken.get(entry.placeholder);
    if (row) taken.add(attrKey(row.kind, row.id));
  }
  const leftovers = predicted.entries.filter((e) => !taken.has(attrKey(e.kind, e.id)));

  return prediction.map((entry) => {
    const kind = newTokenKind(entry.placeholder);
    if (kind === null) {
      const row = byToken.get(entry.placeholder);
      return {
        placeholder: entry.placeholder,
        label: entry.label,
        isNew: false,
        ...(row ? { resolved: row.display } : {}),
      };
    }
    const index = leftovers.findIndex((e) => e.kind === kind);
    const fill = index >= 0 ? leftovers.splice(index, 1)[0] : undefined;
    let resolved: string | undefined;
    if (fill) {
      const known = displays.get(attrKey(fill.kind, fill.id));
      resolved = known ? known.display : fill.id;
    }
    return {
      placeholder: entry.placeholder,
      label: entry.label,
      isNew: true,
      ...(resolved !== undefined ? { resolved } : {}),
    };
  });
}

export function messageReceived(state: AppState, text: string, payload: MessageResponse): AppState {
  const registry = displayIndex(payload);
  const user = chipsFrom(payload.trackings.user, registry, payload.rationales, "user");
  const system = chipsFrom(payload.trackings.system, registry, payload.rationales, "system");
  const card: TurnCard = {
    turn: payload.turn,
    userText: text,
    responseText: payload.response.text,
    phase: payload.phase,
    user,
    system,
    prediction: resolvePrediction(payload.prediction, payload.predicted_tracking, payload.placeholder_map, registry),
    delta: payload.delta.map((d) => ({ kind: d.kind, id: d.id, display: d.display, label: d.label })),
    socialTurn: payload.delta.length === 0,
  };
  return {
    ...state,
    pending: false,
    error: null,
    failedText: null,
    transcript: [...state.transcript, { who: "bot", text: payload.response.text }],
    cards: [...state.cards, card],
    latestUser: user,
    latestSystem: system,
    recommendations: payload.recommendations,
  };
}

/**
 * The latest per-side tracking entries of a state snapshot, as served by
 * GET /state. Used to check the payload-echo property: what the inspector
 * renders must equal this, entry for entry.
 */
export function latestTrackingFromState(
  snapshot: SessionSnapshot,
): { user: TrackingEntry[]; system: TrackingEntry[] } {
  if (snapshot.trackings.length === 0) return { user: [], system: [] };
  const latest = snapshot.trackings.reduce((a, b) => (b.turn > a.turn ? b : a));
  return { user: [...latest.user.entries], system: [...latest.system.entries] };
}

/** The (kind, id, label) triples a chip list renders, for echo comparisons. */
export function chipTriples(chips: Chip[]): TrackingEntry[] {
  return chips.map(({ kind, id, label }) => ({ kind, id, label }));
}
