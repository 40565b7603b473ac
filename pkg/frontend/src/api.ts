/** Typed client for the synthesis service. */
import type {
  EntryState,
  HealthInfo,
  MatchResult,
  ParseResult,
  SentenceJson,
  SpecModeName,
  SynthesisReport,
  TraceEvent,
} from "./types";
import { specToJson } from "./spec";

export class ApiError extends Error {
  location: unknown;

  constructor(message: string, location?: unknown) {
    super(message);
    this.location = location;
  }
}

async function readError(response: Response): Promise<never> {
  let message = `${response.status} ${response.statusText}`;
  let location: unknown;
  try {
    const payload = await response.json();
    if (payload && payload.error) {
      message = payload.error;
      location = payload.location;
    }
  } catch {
    // non-JSON error body; keep the status line
  }
  throw new ApiError(message, location);
}

export class Client {
  constructor(private base: string = "") {}

  private url(path: string): string {
    return this.base + path;
  }

  async health(): Promise<HealthInfo> {
    const response = await fetch(this.url("/api/health"));
    if (!response.ok) await readError(response);
    return response.json();
  }

  async searchCorpus(query: string, limit = 20): Promise<SentenceJson[]> {
    const q = encodeURIComponent(query);
    const response = await fetch(this.url(`/api/corpus?q=${q}&limit=${limit}`));
    if (!response.ok) await readError(response);
    const payload = await response.json();
    return payload.sentences;
  }

  async parseRule(rule: string): Promise<ParseResult> {
    const response = await fetch(this.url("/api/parse"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ rule }),
    });
    if (!response.ok) await readError(response);
    return response.json();
  }

  async match(rule: string, sentences: (SentenceJson | string)[]): Promise<MatchResult[]> {
    const response = await fetch(this.url("/api/match"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ rule, sentences }),
    });
    if (!response.ok) await readError(response);
    return (await response.json()).matches;
  }

  async linearize(
    sentence: SentenceJson | { ref: string },
    a: [number, number],
    b: [number, number],
  ): Promise<{ sentence: SentenceJson; selection: [number, number] }> {
    const response = await fetch(this.url("/api/linearize"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ sentence, a, b }),
    });
    if (!response.ok) await readError(response);
    return response.json();
  }

  /** Run synthesis with streaming trace events; resolves with the final
   * report. The signal aborts the stream client-side (the server job runs
   * to its budget; its result is discarded). */
  async synthesize(
    entries: EntryState[],
    mode: SpecModeName,
    options: {
      scorer?: string;
      maxStates?: number;
      reject?: string[];
      onTrace?: (event: TraceEvent) => void;
      signal?: AbortSignal;
    } = {},
  ): Promise<SynthesisReport> {
    const body = {
      spec: specToJson(entries, mode),
      scorer: options.scorer ?? "augmented",
      maxStates: options.maxStates ?? 1000,
      trace: Boolean(options.onTrace),
      reject: options.reject ?? [],
    };
    const response = await fetch(this.url("/api/synthesize"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
      signal: options.signal,
    });
    if (!response.ok) await readError(response);
    if (!body.trace || !response.body) {
      return response.json();
    }
    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    let buffered = "";
    let report: SynthesisReport | null = null;
    for (;;) {
      const { done, value } = await reader.read();
      if (value) buffered += decoder.decode(value, { stream: true });
      let newline = buffered.indexOf("\n");
      while (newline >= 0) {
        const line = buffered.slice(0, newline).trim();
        buffered = buffered.slice(newline + 1);
        newline = buffered.indexOf("\n");
        if (!line) continue;
        const payload = JSON.parse(line);
        if (payload.done) {
          report = payload as SynthesisReport;
        } else if (options.onTrace) {
          options.onTrace(payload as TraceEvent);
        }
      }
      if (done) break;
    }
    if (!report) throw new ApiError("stream ended without a final report");
    return report;
  }
}
