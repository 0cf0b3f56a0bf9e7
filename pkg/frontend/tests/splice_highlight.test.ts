// Acceptance: for random splice regions the rendered panel highlights
// exactly the phones inside the region.

import { describe, expect, it } from "vitest";
import { renderProsodyPanel } from "../src/panel.js";
import { initialState, loadSession, type EditorState } from "../src/state.js";
import { makePhones, makeRng } from "./helpers.js";

function stateWithPhones(n: number): EditorState {
  return loadSession(initialState(), {
    id: "s",
    revision: 1,
    prosody: {
      normalized: false,
      f0_ref_mean: null,
      energy_ref_mean: null,
      phones: makePhones(n),
    },
  });
}

describe("splice region highlighting", () => {
  it("highlighted phone count equals region size for random regions", () => {
    const rng = makeRng(42);
    for (let trial = 0; trial < 100; trial += 1) {
      const n = 2 + Math.floor(rng() * 14);
      const start = Math.floor(rng() * n);
      const end = start + Math.floor(rng() * (n - start));
      const state = {
        ...stateWithPhones(n),
        splicedRegion: { start, end },
      };
      const container = document.createElement("div");
      renderProsodyPanel(state, container);
      expect(container.querySelectorAll(".phone-group").length).toBe(n);
      expect(container.querySelectorAll(".phone-group.spliced").length)
        .toBe(end - start + 1);
    }
  });

  it("no region highlights nothing", () => {
    const container = document.createElement("div");
    renderProsodyPanel(stateWithPhones(6), container);
    expect(container.querySelectorAll(".spliced").length).toBe(0);
    expect(container.querySelectorAll(".edited").length).toBe(0);
  });

  it("renders an error banner instead of a blank panel", () => {
    const state = { ...stateWithPhones(4), error: "fetch failed" };
    const container = document.createElement("div");
    renderProsodyPanel(state, container);
    const banner = container.querySelector(".error-banner");
    expect(banner).not.toBeNull();
    expect(banner!.textContent).toContain("fetch failed");
    expect(container.querySelectorAll(".phone-group").length).toBe(4);
  });

  it("pending edits flag exactly the touched phones", () => {
    const state = {
      ...stateWithPhones(5),
      pending: [
        { op: "scale_f0" as const, phone: 1, value: 1.2 },
        { op: "set_energy" as const, phone: 3, value: 0.5 },
        { op: "scale_f0" as const, phone: 1, value: 0.9 },
      ],
    };
    const container = document.createElement("div");
    renderProsodyPanel(state, container);
    const flagged = [...container.querySelectorAll(".phone-group.edited")]
      .map((el) => (el as HTMLElement).dataset.phone);
    expect(flagged).toEqual(["1", "3"]);
  });
});
