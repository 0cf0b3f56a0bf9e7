// Acceptance property: 500 random UI interactions never produce an invalid
// EditScript, never regress the revision, and always keep pending edits
// across a 409.

import { describe, expect, it } from "vitest";
import { validateEditScript } from "../src/schema.js";
import {
  canCommit,
  commitEdits,
  initialState,
  loadSession,
  queueEdit,
  type EditorState,
} from "../src/state.js";
import type { EditOpKind } from "../src/types.js";
import { makeMockServer, makeRng } from "./helpers.js";

const OP_KINDS: EditOpKind[] = [
  "set_f0", "set_energy", "set_duration",
  "scale_f0", "scale_energy", "scale_duration",
];

describe("ui schema safety under random interaction", () => {
  it("500 interactions: scripts valid, revision monotone, 409 keeps pending",
    async () => {
      const rng = makeRng(0xC0FFEE);
      const server = makeMockServer("session0", 8);
      let state: EditorState = initialState();
      state = loadSession(state, {
        id: "session0",
        revision: server.state.revision,
        prosody: {
          normalized: false,
          f0_ref_mean: null,
          energy_ref_mean: null,
          phones: server.state.phones,
        },
      });

      let commits = 0;
      let conflicts = 0;
      for (let step = 0; step < 500; step += 1) {
        const revisionBefore = state.revision;
        const action = rng();
        if (action < 0.72) {
          // queue a random edit; sometimes deliberately out of range or
          // negative, which the client-side schema must refuse
          const kind = OP_KINDS[Math.floor(rng() * OP_KINDS.length)];
          const phone = rng() < 0.1
            ? Math.floor(rng() * 20) - 5
            : Math.floor(rng() * state.phones.length);
          const value = rng() < 0.1
            ? -rng() * 2
            : 0.2 + rng() * 2;
          const before = state.pending.length;
          state = queueEdit(state, { op: kind, phone, value });
          const queued = state.pending.length > before;
          if (queued) {
            const script = { ops: state.pending };
            expect(validateEditScript(script, state.phones.length).ok)
              .toBe(true);
          }
        } else if (action < 0.92) {
          if (canCommit(state)) {
            const pendingBefore = [...state.pending];
            const forced = rng() < 0.25;
            if (forced) {
              server.forceConflicts(1);
            }
            state = await commitEdits(state, server.api);
            commits += 1;
            if (state.conflict) {
              conflicts += 1;
              expect(state.pending).toEqual(pendingBefore);
            } else {
              expect(state.pending).toEqual([]);
            }
          }
        } else if (canCommit(state) && rng() < 0.5) {
          // double-submit race: the second commit sees a stale revision
          const pendingBefore = [...state.pending];
          server.forceConflicts(1);
          state = await commitEdits(state, server.api);
          conflicts += 1;
          expect(state.conflict).toBe(true);
          expect(state.pending).toEqual(pendingBefore);
        }
        expect(state.revision).toBeGreaterThanOrEqual(revisionBefore);
      }

      // every script the client sent over the wire was schema-valid
      for (const script of server.receivedScripts) {
        expect(validateEditScript(script, 8).ok).toBe(true);
      }
      expect(commits).toBeGreaterThan(20);
      expect(conflicts).toBeGreaterThan(3);
    });
});
