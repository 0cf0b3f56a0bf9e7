// Fetch-and-play for the listening end of the loop. Requests are keyed by
// (session, revision, source) so an A/B toggle can never mix revisions,
// and an in-flight request is reused instead of duplicated when the user
// spams the button.

import type { ApiClient } from "./api.js";

export type AuditionSource = "base" | "current";

export type PlayFn = (audio: Blob, key: string) => Promise<void> | void;

function defaultPlay(audio: Blob): Promise<void> {
  const url = URL.createObjectURL(audio);
  const element = new Audio(url);
  return element.play().finally(() => URL.revokeObjectURL(url));
}

export class Auditioner {
  private inFlight = new Map<string, Promise<Blob>>();
  private cache = new Map<string, Blob>();
  requestCount = 0;

  constructor(
    private readonly api: ApiClient,
    private readonly play: PlayFn = defaultPlay,
  ) {}

  key(sessionId: string, revision: number, source: AuditionSource): string {
    return `${sessionId}@${revision}:${source}`;
  }

  /** Fetch (deduplicated, cached per revision) and play. */
  async audition(
    sessionId: string,
    revision: number,
    source: AuditionSource = "current",
  ): Promise<void> {
    const key = this.key(sessionId, revision, source);
    const cached = this.cache.get(key);
    if (cached !== undefined) {
      await this.play(cached, key);
      return;
    }
    let pending = this.inFlight.get(key);
    if (pending === undefined) {
      this.requestCount += 1;
      pending = this.fetchAudio(sessionId, source);
      this.inFlight.set(key, pending);
    }
    try {
      const audio = await pending;
      this.cache.set(key, audio);
      await this.play(audio, key);
    } finally {
      this.inFlight.delete(key);
    }
  }

  private async fetchAudio(
    sessionId: string,
    source: AuditionSource,
  ): Promise<Blob> {
    if (source === "base") {
      return await this.api.baseAudio(sessionId);
    }
    return await this.api.resynthesize(sessionId);
  }
}
