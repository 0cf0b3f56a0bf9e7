// JSON contracts shared with the session service.

export interface ProsodyPhone {
  label: string;
  duration_s: number;
  f0: number;
  energy: number;
  voiced_fraction: number;
}

export interface ProsodyTrackJson {
  normalized: boolean;
  f0_ref_mean: number | null;
  energy_ref_mean: number | null;
  phones: ProsodyPhone[];
}

export type EditOpKind =
  | "set_f0"
  | "set_energy"
  | "set_duration"
  | "scale_f0"
  | "scale_energy"
  | "scale_duration";

export interface EditOpJson {
  op: EditOpKind;
  phone: number;
  value: number;
}

export interface EditScriptJson {
  ops: EditOpJson[];
}

export interface SessionBody {
  id: string;
  revision: number;
  prosody: ProsodyTrackJson;
}

export interface MetricReportJson {
  msd: number | null;
  ffe: number;
  n_frames_ref: number;
  n_frames_test: number;
  n_voicing_errors: number;
  n_f0_deviation_errors: number;
}

export interface PhoneRange {
  start: number;
  end: number; // inclusive
}
