// Client-side mirror of the EditScript JSON schema. The UI must never be
// able to submit a script the core parser would reject, so every pending
// edit passes through here before it is queued or sent.

import type { EditOpJson, EditScriptJson } from "./types.js";

export const EDIT_OPS = [
  "set_f0",
  "set_energy",
  "set_duration",
  "scale_f0",
  "scale_energy",
  "scale_duration",
] as const;

export interface ValidationResult {
  ok: boolean;
  errors: string[];
}

export function validateEditOp(
  op: unknown,
  phoneCount?: number,
): ValidationResult {
  const errors: string[] = [];
  if (typeof op !== "object" || op === null) {
    return { ok: false, errors: ["op entry is not an object"] };
  }
  const entry = op as Record<string, unknown>;
  const kind = entry.op;
  if (typeof kind !== "string" || !EDIT_OPS.includes(kind as never)) {
    errors.push(`unknown op ${String(kind)}`);
  }
  const phone = entry.phone;
  if (typeof phone !== "number" || !Number.isInteger(phone) || phone < 0) {
    errors.push(`phone must be a non-negative integer, got ${String(phone)}`);
  } else if (phoneCount !== undefined && phone >= phoneCount) {
    errors.push(`phone ${phone} outside [0, ${phoneCount})`);
  }
  const value = entry.value;
  if (typeof value !== "number" || !Number.isFinite(value)) {
    errors.push(`value must be a finite number, got ${String(value)}`);
  } else if (typeof kind === "string") {
    if (kind.startsWith("scale_") && value <= 0) {
      errors.push(`${kind}: factor must be > 0`);
    }
    if (kind === "set_duration" && value <= 0) {
      errors.push("set_duration: value must be > 0");
    }
    if (kind.startsWith("set_") && value < 0) {
      errors.push(`${kind}: value must be >= 0`);
    }
  }
  return { ok: errors.length === 0, errors };
}

export function validateEditScript(
  script: unknown,
  phoneCount?: number,
): ValidationResult {
  if (typeof script !== "object" || script === null) {
    return { ok: false, errors: ["script is not an object"] };
  }
  const ops = (script as Record<string, unknown>).ops;
  if (!Array.isArray(ops)) {
    return { ok: false, errors: ["ops is not an array"] };
  }
  const errors: string[] = [];
  ops.forEach((op, index) => {
    const result = validateEditOp(op, phoneCount);
    errors.push(...result.errors.map((e) => `ops[${index}]: ${e}`));
  });
  return { ok: errors.length === 0, errors };
}

export function asEditScript(
  ops: EditOpJson[],
  phoneCount?: number,
): EditScriptJson {
  const script = { ops };
  const result = validateEditScript(script, phoneCount);
  if (!result.ok) {
    throw new Error(`invalid edit script: ${result.errors.join("; ")}`);
  }
  return script;
}
