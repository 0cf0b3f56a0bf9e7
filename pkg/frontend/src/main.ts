// Page wiring: upload two renditions, edit per-phone values, splice a
// region from the donor, commit with optimistic locking, listen A/B.

import { ApiClient } from "./api.js";
import { Auditioner } from "./audition.js";
import { renderProsodyPanel } from "./panel.js";
import {
  applySplice,
  canCommit,
  commitEdits,
  discardPending,
  initialState,
  loadSession,
  queueEdit,
  reloadAndReplay,
  select,
  setDonor,
  type EditorState,
} from "./state.js";
import type { EditOpKind } from "./types.js";

const api = new ApiClient("");
const auditioner = new Auditioner(api);

let state: EditorState = initialState();

function byId<T extends HTMLElement>(id: string): T {
  const element = document.getElementById(id);
  if (!element) {
    throw new Error(`missing element #${id}`);
  }
  return element as T;
}

function update(next: EditorState): void {
  state = next;
  renderProsodyPanel(state, byId("panel"), {
    onSelect: (index) => update(select(state, { start: index, end: index })),
  });
  byId<HTMLButtonElement>("commit").disabled = !canCommit(state);
  byId<HTMLButtonElement>("discard").disabled = state.pending.length === 0;
  byId("status").textContent = state.sessionId
    ? `session ${state.sessionId.slice(0, 8)} rev ${state.revision}`
      + (state.pending.length ? `, ${state.pending.length} pending` : "")
      + (state.conflict ? " [conflict: reload & replay?]" : "")
    : "no session";
  byId<HTMLButtonElement>("replay").hidden = !state.conflict;
}

async function upload(into: "context" | "donor"): Promise<void> {
  const audio = byId<HTMLInputElement>("audio-file").files?.[0];
  const alignment = byId<HTMLInputElement>("align-file").files?.[0];
  if (!audio || !alignment) {
    update({ ...state, error: "choose an audio file and an alignment" });
    return;
  }
  try {
    const body = await api.createSession(audio, alignment);
    if (into === "context") {
      update(loadSession(state, body));
    } else {
      update(setDonor(state, body.id));
    }
  } catch (error) {
    update({ ...state, error: String(error) });
  }
}

function queueFromForm(): void {
  const kind = byId<HTMLSelectElement>("edit-op").value as EditOpKind;
  const phone = Number(byId<HTMLInputElement>("edit-phone").value);
  const value = Number(byId<HTMLInputElement>("edit-value").value);
  update(queueEdit(state, { op: kind, phone, value }));
}

async function spliceFromForm(): Promise<void> {
  const start = Number(byId<HTMLInputElement>("splice-start").value);
  const end = Number(byId<HTMLInputElement>("splice-end").value);
  update(await applySplice(state, api, { start, end }));
}

async function listen(source: "base" | "current"): Promise<void> {
  if (!state.sessionId) {
    return;
  }
  update({ ...state, playback: "loading" });
  try {
    await auditioner.audition(state.sessionId, state.revision, source);
    update({ ...state, playback: "idle" });
  } catch (error) {
    update({ ...state, playback: "idle", error: String(error) });
  }
}

function wire(): void {
  byId("upload-context").addEventListener("click", () => upload("context"));
  byId("upload-donor").addEventListener("click", () => upload("donor"));
  byId("queue-edit").addEventListener("click", queueFromForm);
  byId("commit").addEventListener("click", async () =>
    update(await commitEdits(state, api)));
  byId("discard").addEventListener("click", () =>
    update(discardPending(state)));
  byId("replay").addEventListener("click", async () =>
    update(await reloadAndReplay(state, api)));
  byId("do-splice").addEventListener("click", spliceFromForm);
  byId("listen-base").addEventListener("click", () => listen("base"));
  byId("listen-current").addEventListener("click", () => listen("current"));
  update(state);
}

document.addEventListener("DOMContentLoaded", wire);
