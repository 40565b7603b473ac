/** Specification state and its canonical serialization.
 *
 * The exported bytes must be exactly what the CLI and service write: compact
 * JSON with a fixed key order and a trailing newline. Key order is carried
 * by object insertion order, so every object below is built field by field.
 */
import type { EntryState, Selection, SentenceJson, SpecModeName } from "./types";

export function sortedSelections(selections: Selection[]): Selection[] {
  return [...selections].sort((a, b) => (a[0] - b[0]) || (a[1] - b[1]));
}

function canonicalSentence(sentence: SentenceJson) {
  return {
    id: sentence.id,
    tokens: sentence.tokens.map((t) => ({
      word: t.word,
      lemma: t.lemma,
      tag: t.tag,
      entity: t.entity,
    })),
    deps: sentence.deps.map(([h, d, l]) => [h, d, l]),
  };
}

export function specToJson(entries: EntryState[], mode: SpecModeName) {
  return {
    mode,
    entries: entries.map((entry) => ({
      sentence: canonicalSentence(entry.sentence),
      selections: sortedSelections(entry.selections),
    })),
  };
}

/** Byte-identical to the canonical writer on the Python side. */
export function serializeSpec(entries: EntryState[], mode: SpecModeName): string {
  return JSON.stringify(specToJson(entries, mode)) + "\n";
}

export function overlaps(a: Selection, b: Selection): boolean {
  return a[0] < b[1] && b[0] < a[1];
}

/** Toggle a selection: an identical span is removed, an overlapping span is
 * replaced, anything else is added. */
export function toggleSelection(selections: Selection[], span: Selection): Selection[] {
  const same = selections.find((s) => s[0] === span[0] && s[1] === span[1]);
  if (same) {
    return selections.filter((s) => s !== same);
  }
  return [...selections.filter((s) => !overlaps(s, span)), span];
}

/** Build an annotated sentence from pasted plain text. Whitespace splits
 * tokens; annotations default (lemma = word, tag "x", no entity) since the
 * workbench never computes linguistic analyses itself. */
export function sentenceFromText(id: string, text: string): SentenceJson {
  const words = text
    .trim()
    .split(/\s+/)
    .filter((w) => w.length > 0)
    .map((w) => w.toLowerCase());
  return {
    id,
    tokens: words.map((w) => ({ word: w, lemma: w, tag: "x", entity: "o" })),
    deps: [],
  };
}
