// Shared test scaffolding: a deterministic RNG and a mock session server
// that speaks the same revisioned protocol as the real service.

import { ApiClient } from "../src/api.js";
import { validateEditScript } from "../src/schema.js";
import type {
  EditScriptJson,
  ProsodyPhone,
  SessionBody,
} from "../src/types.js";

/** mulberry32: tiny deterministic PRNG for reproducible property tests. */
export function makeRng(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function makePhones(n: number): ProsodyPhone[] {
  const phones: ProsodyPhone[] = [];
  for (let k = 0; k < n; k += 1) {
    const voiced = k % 3 !== 2;
    phones.push({
      label: voiced ? `v${k}` : "sil",
      duration_s: 0.05 + 0.02 * k,
      f0: voiced ? 150 + 10 * k : 0,
      energy: voiced ? 0.2 + 0.01 * k : 0.01,
      voiced_fraction: voiced ? 0.9 : 0,
    });
  }
  return phones;
}

export interface MockServer {
  api: ApiClient;
  state: { revision: number; phones: ProsodyPhone[] };
  receivedScripts: EditScriptJson[];
  /** next N mutation requests answer 409 regardless of revision */
  forceConflicts: (n: number) => void;
}

export function makeMockServer(sessionId = "abc123", nPhones = 8): MockServer {
  const server = {
    revision: 1,
    phones: makePhones(nPhones),
  };
  const receivedScripts: EditScriptJson[] = [];
  let conflictBudget = 0;

  const body = (): SessionBody => ({
    id: sessionId,
    revision: server.revision,
    prosody: {
      normalized: false,
      f0_ref_mean: null,
      energy_ref_mean: null,
      phones: server.phones,
    },
  });

  const fetchFn: typeof fetch = async (input, init) => {
    const url = String(input);
    const method = init?.method ?? "GET";
    if (url.endsWith("/prosody") && method === "GET") {
      return new Response(JSON.stringify(body()), { status: 200 });
    }
    if (url.endsWith("/prosody") && method === "PATCH") {
      const headers = new Headers(init?.headers);
      const ifMatch = Number(headers.get("If-Match"));
      const script = JSON.parse(String(init?.body)) as EditScriptJson;
      receivedScripts.push(script);
      const check = validateEditScript(script, server.phones.length);
      if (!check.ok) {
        return new Response(JSON.stringify({ error: "InvalidValueError" }),
          { status: 422 });
      }
      if (conflictBudget > 0 || ifMatch !== server.revision) {
        conflictBudget = Math.max(0, conflictBudget - 1);
        return new Response(
          JSON.stringify({ error: "RevisionConflict",
            revision: server.revision }),
          { status: 409 });
      }
      for (const op of script.ops) {
        const phone = { ...server.phones[op.phone] };
        if (op.op === "set_f0") {
          phone.f0 = op.value;
          phone.voiced_fraction = op.value === 0 ? 0
            : phone.voiced_fraction || 1;
        } else if (op.op === "scale_f0") {
          phone.f0 *= op.value;
        } else if (op.op === "set_energy") {
          phone.energy = op.value;
        } else if (op.op === "scale_energy") {
          phone.energy *= op.value;
        } else if (op.op === "set_duration") {
          phone.duration_s = op.value;
        } else {
          phone.duration_s *= op.value;
        }
        server.phones[op.phone] = phone;
      }
      server.revision += 1;
      return new Response(JSON.stringify(body()), { status: 200 });
    }
    return new Response(JSON.stringify({ error: "NotFound" }),
      { status: 404 });
  };

  return {
    api: new ApiClient("", fetchFn),
    state: server,
    receivedScripts,
    forceConflicts: (n) => {
      conflictBudget = n;
    },
  };
}
