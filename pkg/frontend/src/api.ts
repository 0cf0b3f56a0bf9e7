// Thin REST client for the session service. Every mutation carries the
// revision the client last saw in If-Match; a 409 comes back as a typed
// conflict instead of an exception so callers can offer reload-and-replay.

import type {
  EditScriptJson,
  MetricReportJson,
  PhoneRange,
  SessionBody,
} from "./types.js";

export type MutationResult =
  | { kind: "ok"; body: SessionBody }
  | { kind: "conflict"; serverRevision: number }
  | { kind: "error"; detail: string };

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: typeof fetch = fetch.bind(globalThis),
  ) {}

  async createSession(audio: Blob, alignment: Blob): Promise<SessionBody> {
    const form = new FormData();
    form.append("audio", audio, "audio.wav");
    form.append("alignment", alignment, "alignment.lab");
    const response = await this.fetchFn(`${this.baseUrl}/sessions`, {
      method: "POST",
      body: form,
    });
    if (!response.ok) {
      throw new Error(`upload failed: ${response.status}`);
    }
    return (await response.json()) as SessionBody;
  }

  async getProsody(sessionId: string): Promise<SessionBody> {
    const response = await this.fetchFn(
      `${this.baseUrl}/sessions/${sessionId}/prosody`,
    );
    if (!response.ok) {
      throw new Error(`fetch failed: ${response.status}`);
    }
    return (await response.json()) as SessionBody;
  }

  async patchProsody(
    sessionId: string,
    script: EditScriptJson,
    revision: number,
  ): Promise<MutationResult> {
    return this.mutate(
      `${this.baseUrl}/sessions/${sessionId}/prosody`,
      "PATCH",
      script,
      revision,
    );
  }

  async splice(
    sessionId: string,
    donorId: string,
    region: PhoneRange,
    revision: number,
  ): Promise<MutationResult> {
    return this.mutate(
      `${this.baseUrl}/sessions/${sessionId}/splice`,
      "POST",
      { donor: donorId, start_phone: region.start, end_phone: region.end },
      revision,
    );
  }

  private async mutate(
    url: string,
    method: string,
    payload: unknown,
    revision: number,
  ): Promise<MutationResult> {
    let response: Response;
    try {
      response = await this.fetchFn(url, {
        method,
        headers: {
          "Content-Type": "application/json",
          "If-Match": String(revision),
        },
        body: JSON.stringify(payload),
      });
    } catch (error) {
      return { kind: "error", detail: String(error) };
    }
    if (response.status === 409) {
      const body = (await response.json()) as { revision?: number };
      return {
        kind: "conflict",
        serverRevision: body.revision ?? revision,
      };
    }
    if (!response.ok) {
      return { kind: "error", detail: `HTTP ${response.status}` };
    }
    return { kind: "ok", body: (await response.json()) as SessionBody };
  }

  async resynthesize(sessionId: string): Promise<Blob> {
    const response = await this.fetchFn(
      `${this.baseUrl}/sessions/${sessionId}/resynthesize`,
      { method: "POST" },
    );
    if (!response.ok) {
      throw new Error(`resynthesis failed: ${response.status}`);
    }
    return await response.blob();
  }

  async metrics(
    sessionId: string,
    againstId: string,
  ): Promise<MetricReportJson> {
    const response = await this.fetchFn(
      `${this.baseUrl}/sessions/${sessionId}/metrics?against=${againstId}`,
    );
    if (!response.ok) {
      throw new Error(`metrics failed: ${response.status}`);
    }
    return (await response.json()) as MetricReportJson;
  }

  baseAudioUrl(sessionId: string): string {
    return `${this.baseUrl}/sessions/${sessionId}/audio`;
  }

  async baseAudio(sessionId: string): Promise<Blob> {
    const response = await this.fetchFn(this.baseAudioUrl(sessionId));
    if (!response.ok) {
      throw new Error(`audio fetch failed: ${response.status}`);
    }
    return await response.blob();
  }
}
