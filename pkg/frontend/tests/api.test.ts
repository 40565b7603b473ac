import { beforeEach, describe, expect, it } from "vitest";

import { ApiError, Client } from "../src/api";
import type { SentenceJson } from "../src/types";
import { MockServer } from "./mock_server";

const sentence: SentenceJson = {
  id: "s1",
  tokens: [
    { word: "the", lemma: "the", tag: "dt", entity: "o" },
    { word: "dog", lemma: "dog", tag: "nn", entity: "o" },
  ],
  deps: [[1, 0, "det"]],
};

describe("client", () => {
  let server: MockServer;
  const client = new Client();

  beforeEach(() => {
    server = new MockServer([sentence]);
    server.install();
  });

  it("streams trace events then resolves with the report", async () => {
    server.synthesisQueue.push({
      rule: "[word=dog]",
      statesExplored: 3,
      matches: [{ id: "s1", spans: [[1, 2]] }],
      trace: [
        { step: 1, state: "HOLE", score: 0 },
        { step: 2, state: "[HOLE]", score: -2 },
        { step: 3, state: "[word=dog]", score: -2 },
      ],
    });
    const seen: number[] = [];
    const report = await client.synthesize(
      [{ sentence, selections: [[1, 2]], counterExample: false }],
      "surface",
      { onTrace: (event) => seen.push(event.step) },
    );
    expect(seen).toEqual([1, 2, 3]);
    expect(report.found).toBe(true);
    expect(report.rule).toBe("[word=dog]");
  });

  it("turns error payloads into ApiError", async () => {
    await expect(client.synthesize([], "surface")).rejects.toBeInstanceOf(ApiError);
  });

  it("sends match requests with inline sentences or refs", async () => {
    server.matchSpans.set("s1", [[1, 2]]);
    const results = await client.match("[word=dog]", [sentence, "s1"]);
    expect(results).toEqual([
      { id: "s1", spans: [[1, 2]] },
      { id: "s1", spans: [[1, 2]] },
    ]);
  });
});
