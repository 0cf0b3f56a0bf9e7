// Per-phone prosody panel: one bar group per phone (duration, F0, energy)
// with edited phones flagged and the spliced region color-coded. Values on
// screen are formatted from the raw JSON numbers at render time only, so
// what is shown always round-trips to what the server sent.

import { editedPhones, type EditorState } from "./state.js";
import type { ProsodyPhone } from "./types.js";

export interface PanelCallbacks {
  onSelect?: (phoneIndex: number) => void;
  onDrag?: (phoneIndex: number, field: "f0" | "energy" | "duration_s",
            factor: number) => void;
}

function meanNonzeroEnergy(phones: ProsodyPhone[]): number {
  const nonzero = phones.filter((p) => p.energy > 0).map((p) => p.energy);
  if (nonzero.length === 0) {
    return 1;
  }
  return nonzero.reduce((a, b) => a + b, 0) / nonzero.length;
}

export function formatF0(f0: number): string {
  return f0 === 0 ? "unvoiced" : `${f0.toFixed(1)} Hz`;
}

export function formatDuration(durationS: number): string {
  return `${(durationS * 1000).toFixed(0)} ms`;
}

export function formatEnergyDb(energy: number, utteranceMean: number): string {
  if (energy === 0) {
    return "silent";
  }
  const db = 20 * Math.log10(energy / utteranceMean);
  return `${db >= 0 ? "+" : ""}${db.toFixed(1)} dB`;
}

function bar(kind: string, fraction: number, text: string): HTMLElement {
  const row = document.createElement("div");
  row.className = `bar ${kind}`;
  const fill = document.createElement("div");
  fill.className = "bar-fill";
  fill.style.width = `${Math.round(Math.min(1, Math.max(0, fraction)) * 100)}%`;
  const label = document.createElement("span");
  label.className = "bar-text";
  label.textContent = text;
  row.append(fill, label);
  return row;
}

export function renderProsodyPanel(
  state: EditorState,
  container: HTMLElement,
  callbacks: PanelCallbacks = {},
): void {
  container.textContent = "";
  if (state.error) {
    const banner = document.createElement("div");
    banner.className = "error-banner";
    banner.setAttribute("role", "alert");
    banner.textContent = state.error;
    container.appendChild(banner);
  }
  const list = document.createElement("div");
  list.className = "phone-list";
  container.appendChild(list);

  const phones = state.phones;
  const flagged = editedPhones(state);
  const maxF0 = Math.max(1, ...phones.map((p) => p.f0));
  const maxEnergy = Math.max(1e-9, ...phones.map((p) => p.energy));
  const maxDuration = Math.max(1e-9, ...phones.map((p) => p.duration_s));
  const energyMean = meanNonzeroEnergy(phones);

  phones.forEach((phone, index) => {
    const group = document.createElement("div");
    group.className = "phone-group";
    group.dataset.phone = String(index);
    if (flagged.has(index)) {
      group.classList.add("edited");
    }
    if (state.splicedRegion
        && index >= state.splicedRegion.start
        && index <= state.splicedRegion.end) {
      group.classList.add("spliced");
    }
    if (state.selection
        && index >= state.selection.start
        && index <= state.selection.end) {
      group.classList.add("selected");
    }
    const title = document.createElement("div");
    title.className = "phone-label";
    title.textContent = phone.label;
    group.appendChild(title);
    group.appendChild(bar("duration", phone.duration_s / maxDuration,
      formatDuration(phone.duration_s)));
    group.appendChild(bar("f0", phone.f0 / maxF0, formatF0(phone.f0)));
    group.appendChild(bar("energy", phone.energy / maxEnergy,
      formatEnergyDb(phone.energy, energyMean)));
    if (callbacks.onSelect) {
      group.addEventListener("click", () => callbacks.onSelect?.(index));
    }
    list.appendChild(group);
  });
}
