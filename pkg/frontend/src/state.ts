// Editor state and the transitions around it. State is a plain immutable
// value; every transition returns a new state, which keeps the random
// interaction tests simple. Pending edits are validated on entry, so the
// serialized EditScript is valid by construction whenever a commit fires.

import type { ApiClient } from "./api.js";
import { asEditScript, validateEditOp } from "./schema.js";
import type {
  EditOpJson,
  PhoneRange,
  ProsodyPhone,
  SessionBody,
} from "./types.js";

export type PlaybackStatus = "idle" | "loading" | "playing";

export interface EditorState {
  sessionId: string | null;
  phones: ProsodyPhone[];
  revision: number;
  selection: PhoneRange | null;
  pending: EditOpJson[];
  donorSessionId: string | null;
  splicedRegion: PhoneRange | null;
  playback: PlaybackStatus;
  conflict: boolean;
  error: string | null;
}

export function initialState(): EditorState {
  return {
    sessionId: null,
    phones: [],
    revision: 0,
    selection: null,
    pending: [],
    donorSessionId: null,
    splicedRegion: null,
    playback: "idle",
    conflict: false,
    error: null,
  };
}

export function loadSession(state: EditorState, body: SessionBody): EditorState {
  return {
    ...state,
    sessionId: body.id,
    phones: body.prosody.phones,
    revision: body.revision,
    selection: null,
    pending: [],
    splicedRegion: null,
    conflict: false,
    error: null,
  };
}

export function setDonor(state: EditorState, donorId: string): EditorState {
  return { ...state, donorSessionId: donorId };
}

export function select(state: EditorState, range: PhoneRange | null): EditorState {
  if (range && (range.start < 0 || range.end >= state.phones.length
      || range.start > range.end)) {
    return { ...state, error: "selection outside phone bounds" };
  }
  return { ...state, selection: range, error: null };
}

/** Queue an edit; invalid ops are refused and surface as state.error. */
export function queueEdit(state: EditorState, op: EditOpJson): EditorState {
  const result = validateEditOp(op, state.phones.length);
  if (!result.ok) {
    return { ...state, error: result.errors.join("; ") };
  }
  return { ...state, pending: [...state.pending, op], error: null };
}

export function discardPending(state: EditorState): EditorState {
  return { ...state, pending: [], conflict: false, error: null };
}

export function canCommit(state: EditorState): boolean {
  return state.sessionId !== null && state.pending.length > 0;
}

/** Phones touched by pending edits, for visual flagging. */
export function editedPhones(state: EditorState): Set<number> {
  return new Set(state.pending.map((op) => op.phone));
}

export async function commitEdits(
  state: EditorState,
  api: ApiClient,
): Promise<EditorState> {
  if (!canCommit(state) || state.sessionId === null) {
    return { ...state, error: "nothing to commit" };
  }
  const script = asEditScript(state.pending, state.phones.length);
  const result = await api.patchProsody(state.sessionId, script,
    state.revision);
  if (result.kind === "ok") {
    return {
      ...loadSession(state, result.body),
      donorSessionId: state.donorSessionId,
      playback: state.playback,
    };
  }
  if (result.kind === "conflict") {
    // another editor moved the session on; keep the pending edits so the
    // user can reload and replay them
    return { ...state, conflict: true, error: "revision conflict" };
  }
  return { ...state, error: result.detail };
}

export async function applySplice(
  state: EditorState,
  api: ApiClient,
  region: PhoneRange,
): Promise<EditorState> {
  if (state.sessionId === null || state.donorSessionId === null) {
    return { ...state, error: "load a donor session first" };
  }
  if (region.start < 0 || region.end >= state.phones.length
      || region.start > region.end) {
    return { ...state, error: "splice region outside phone bounds" };
  }
  const result = await api.splice(state.sessionId, state.donorSessionId,
    region, state.revision);
  if (result.kind === "ok") {
    return {
      ...loadSession(state, result.body),
      donorSessionId: state.donorSessionId,
      splicedRegion: region,
      playback: state.playback,
    };
  }
  if (result.kind === "conflict") {
    return { ...state, conflict: true, error: "revision conflict" };
  }
  return { ...state, error: result.detail };
}

export async function reloadAndReplay(
  state: EditorState,
  api: ApiClient,
): Promise<EditorState> {
  if (state.sessionId === null) {
    return state;
  }
  const body = await api.getProsody(state.sessionId);
  const pending = state.pending;
  const reloaded = loadSession(state, body);
  return {
    ...reloaded,
    donorSessionId: state.donorSessionId,
    pending: pending.filter(
      (op) => validateEditOp(op, reloaded.phones.length).ok,
    ),
  };
}
