/** Wire types shared with the synthesis service. */

export interface TokenJson {
  word: string;
  lemma: string;
  tag: string;
  entity: string;
}

export interface SentenceJson {
  id: string;
  tokens: TokenJson[];
  deps: [number, number, string][];
}

export type Selection = [number, number];

export interface EntryState {
  sentence: SentenceJson;
  selections: Selection[];
  /** zero selections means the rule must match nothing here */
  counterExample: boolean;
}

export type SpecModeName = "surface" | "path";

export interface MatchResult {
  id: string;
  spans: Selection[];
}

export interface SynthesisReport {
  found: boolean;
  rule: string | null;
  statesExplored: number;
  statesPruned: number;
  queuePeak: number;
  matches?: MatchResult[];
  chips?: string[];
  done?: boolean;
}

export interface TraceEvent {
  step: number;
  state: string;
  score: number;
}

export interface ParseResult {
  ok: boolean;
  printed: string;
  complete: boolean;
  chips: string[];
}

export interface HealthInfo {
  status: string;
  modelLoaded: boolean;
  corpusSize: number;
}
