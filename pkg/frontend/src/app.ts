/** The workbench page: build a specification by highlighting tokens, run
 * synthesis with live progress, inspect the rule and its matches, refine,
 * and test the rule on unseen text.
 *
 * The page never builds rule structure itself; every rule string it shows
 * went through the server's parse endpoint, so there is no client-side
 * grammar to drift.
 */
import { Client } from "./api";
import { serializeSpec, sentenceFromText, sortedSelections, toggleSelection } from "./spec";
import type { EntryState, Selection, SentenceJson, SpecModeName, SynthesisReport } from "./types";

interface PathView {
  sentence: SentenceJson;
  selection: Selection;
}

export class App {
  client: Client;
  root: HTMLElement;
  entries: EntryState[] = [];
  mode: SpecModeName = "surface";
  pathViews: (PathView | null)[] = [];
  lastReport: SynthesisReport | null = null;
  rejected: string[] = [];
  running: AbortController | null = null;
  pasteCount = 0;

  private els!: {
    search: HTMLInputElement;
    results: HTMLElement;
    entries: HTMLElement;
    scorer: HTMLSelectElement;
    budget: HTMLInputElement;
    modeSurface: HTMLInputElement;
    modePath: HTMLInputElement;
    synthesize: HTMLButtonElement;
    another: HTMLButtonElement;
    cancel: HTMLButtonElement;
    exportSpec: HTMLButtonElement;
    progress: HTMLElement;
    progressBar: HTMLElement;
    rule: HTMLElement;
    chips: HTMLElement;
    stats: HTMLElement;
    paste: HTMLTextAreaElement;
    addPaste: HTMLButtonElement;
    testInput: HTMLTextAreaElement;
    runTest: HTMLButtonElement;
    testOut: HTMLElement;
    status: HTMLElement;
  };

  constructor(root: HTMLElement, client: Client) {
    this.root = root;
    this.client = client;
    this.render();
  }

  // ------------------------------------------------------------------
  render(): void {
    this.root.innerHTML = `
      <header><h1>ruleforge</h1><span id="health"></span></header>
      <main>
        <section class="pane corpus-pane">
          <h2>Corpus</h2>
          <input id="search" placeholder="search sentences" />
          <div id="results"></div>
          <h2>Add your own</h2>
          <textarea id="paste" rows="2" placeholder="paste a sentence (whitespace tokens)"></textarea>
          <button id="add-paste">add sentence</button>
        </section>
        <section class="pane spec-pane">
          <h2>Specification</h2>
          <div class="mode-toggle">
            <label><input type="radio" name="mode" id="mode-surface" checked /> surface</label>
            <label><input type="radio" name="mode" id="mode-path" /> simplified syntax</label>
          </div>
          <div id="entries"></div>
          <button id="export-spec">export spec file</button>
        </section>
        <section class="pane synth-pane">
          <h2>Synthesis</h2>
          <div class="controls">
            <label>scorer
              <select id="scorer">
                <option value="augmented">augmented</option>
                <option value="static">static</option>
                <option value="contextual">contextual</option>
              </select>
            </label>
            <label>budget <input id="budget" type="number" value="1000" min="1" /></label>
            <button id="synthesize">synthesize</button>
            <button id="another" disabled>try another rule</button>
            <button id="cancel" disabled>cancel</button>
          </div>
          <div id="progress"><div id="progress-bar"></div></div>
          <div id="status"></div>
          <div id="rule" class="rule"></div>
          <div id="chips"></div>
          <div id="stats"></div>
          <h2>Test pane</h2>
          <textarea id="test-input" rows="2" placeholder="paste an unseen sentence"></textarea>
          <button id="run-test" disabled>run rule</button>
          <div id="test-out"></div>
        </section>
      </main>`;

    this.els = {
      search: this.q("#search"),
      results: this.q("#results"),
      entries: this.q("#entries"),
      scorer: this.q("#scorer"),
      budget: this.q("#budget"),
      modeSurface: this.q("#mode-surface"),
      modePath: this.q("#mode-path"),
      synthesize: this.q("#synthesize"),
      another: this.q("#another"),
      cancel: this.q("#cancel"),
      exportSpec: this.q("#export-spec"),
      progress: this.q("#progress"),
      progressBar: this.q("#progress-bar"),
      rule: this.q("#rule"),
      chips: this.q("#chips"),
      stats: this.q("#stats"),
      paste: this.q("#paste"),
      addPaste: this.q("#add-paste"),
      testInput: this.q("#test-input"),
      runTest: this.q("#run-test"),
      testOut: this.q("#test-out"),
      status: this.q("#status"),
    };

    this.els.search.addEventListener("input", () => void this.search());
    this.els.addPaste.addEventListener("click", () => this.addPasted());
    this.els.synthesize.addEventListener("click", () => void this.synthesize());
    this.els.another.addEventListener("click", () => void this.tryAnother());
    this.els.cancel.addEventListener("click", () => this.cancel());
    this.els.exportSpec.addEventListener("click", () => this.exportSpec());
    this.els.runTest.addEventListener("click", () => void this.runTest());
    this.els.modeSurface.addEventListener("change", () => void this.setMode("surface"));
    this.els.modePath.addEventListener("change", () => void this.setMode("path"));

    void this.client
      .health()
      .then((h) => {
        this.q("#health").textContent = `corpus: ${h.corpusSize} sentences, model ${h.modelLoaded ? "loaded" : "absent"}`;
      })
      .catch(() => {
        this.q("#health").textContent = "service unreachable";
      });
  }

  private q<T extends HTMLElement = HTMLElement>(selector: string): T {
    return this.root.querySelector(selector) as T;
  }

  // ------------------------------------------------------------------
  async search(): Promise<void> {
    const sentences = await this.client.searchCorpus(this.els.search.value);
    this.els.results.innerHTML = "";
    for (const sentence of sentences) {
      const row = document.createElement("div");
      row.className = "result";
      row.textContent = sentence.tokens.map((t) => t.word).join(" ");
      row.dataset.id = sentence.id;
      row.addEventListener("click", () => this.addEntry(sentence));
      this.els.results.appendChild(row);
    }
  }

  addEntry(sentence: SentenceJson): void {
    this.entries.push({ sentence, selections: [], counterExample: false });
    this.pathViews.push(null);
    this.renderEntries();
  }

  addPasted(): void {
    const text = this.els.paste.value;
    if (!text.trim()) return;
    this.pasteCount += 1;
    this.addEntry(sentenceFromText(`pasted-${this.pasteCount}`, text));
    this.els.paste.value = "";
  }

  removeEntry(index: number): void {
    this.entries.splice(index, 1);
    this.pathViews.splice(index, 1);
    this.renderEntries();
  }

  // ------------------------------------------------------------------
  renderEntries(matches?: Map<string, Selection[]>): void {
    this.els.entries.innerHTML = "";
    this.entries.forEach((entry, index) => {
      const view = this.mode === "path" ? this.pathViews[index] : null;
      const sentence = view ? view.sentence : entry.sentence;
      const selections = view ? [view.selection] : entry.selections;
      const card = document.createElement("div");
      card.className = "entry" + (entry.selections.length === 0 && !view ? " counter" : "");
      card.dataset.index = String(index);

      const tokens = document.createElement("div");
      tokens.className = "tokens";
      const matched = matches?.get(sentence.id) ?? [];
      sentence.tokens.forEach((token, position) => {
        const el = document.createElement("span");
        el.className = "token";
        el.textContent = token.word;
        el.dataset.pos = String(position);
        if (selections.some(([s, e]) => position >= s && position < e)) el.classList.add("selected");
        if (matched.some(([s, e]) => position >= s && position < e)) el.classList.add("matched");
        if (!view) {
          el.addEventListener("mousedown", (event) => this.beginDrag(index, position, event));
          el.addEventListener("mouseenter", () => this.extendDrag(position));
          el.addEventListener("mouseup", () => this.endDrag(index));
        }
        tokens.appendChild(el);
      });
      card.appendChild(tokens);

      const meta = document.createElement("div");
      meta.className = "entry-meta";
      meta.textContent =
        entry.selections.length === 0 && !view
          ? "counter-example: the rule must match nothing here"
          : view
            ? "dependency-path view (whole path highlighted)"
            : sortedSelections(entry.selections)
                .map(([s, e]) => `[${s},${e})`)
                .join(" ");
      const remove = document.createElement("button");
      remove.className = "remove";
      remove.textContent = "remove";
      remove.addEventListener("click", () => this.removeEntry(index));
      meta.appendChild(remove);
      card.appendChild(meta);
      this.els.entries.appendChild(card);
    });
  }

  private drag: { entry: number; anchor: number; current: number } | null = null;

  beginDrag(entry: number, position: number, event: Event): void {
    event.preventDefault();
    this.drag = { entry, anchor: position, current: position };
  }

  extendDrag(position: number): void {
    if (this.drag) this.drag.current = position;
  }

  endDrag(entry: number): void {
    if (!this.drag || this.drag.entry !== entry) {
      this.drag = null;
      return;
    }
    const start = Math.min(this.drag.anchor, this.drag.current);
    const end = Math.max(this.drag.anchor, this.drag.current) + 1;
    const target = this.entries[entry];
    target.selections = toggleSelection(target.selections, [start, end]);
    target.counterExample = target.selections.length === 0;
    this.drag = null;
    this.renderEntries();
  }

  // ------------------------------------------------------------------
  async setMode(mode: SpecModeName): Promise<void> {
    this.mode = mode;
    if (mode === "path") {
      this.pathViews = await Promise.all(
        this.entries.map(async (entry) => {
          const spans = sortedSelections(entry.selections);
          if (spans.length < 2) return null; // path mode needs two endpoints
          try {
            const result = await this.client.linearize(
              entry.sentence,
              spans[0],
              spans[spans.length - 1],
            );
            return { sentence: result.sentence, selection: result.selection };
          } catch {
            return null;
          }
        }),
      );
    } else {
      this.pathViews = this.entries.map(() => null);
    }
    this.renderEntries();
  }

  /** Entries as the server should see them for the active mode. */
  effectiveEntries(): EntryState[] {
    if (this.mode === "surface") return this.entries;
    return this.entries.map((entry, index) => {
      const view = this.pathViews[index];
      if (!view) return entry;
      return {
        sentence: view.sentence,
        selections: [view.selection],
        counterExample: false,
      };
    });
  }

  // ------------------------------------------------------------------
  async synthesize(reject: string[] = []): Promise<void> {
    if (this.entries.length === 0) {
      this.els.status.textContent = "add at least one sentence first";
      return;
    }
    const budget = Number(this.els.budget.value) || 1000;
    this.running = new AbortController();
    this.els.synthesize.disabled = true;
    this.els.cancel.disabled = false;
    this.els.status.textContent = "searching...";
    try {
      const report = await this.client.synthesize(this.effectiveEntries(), this.mode, {
        scorer: this.els.scorer.value,
        maxStates: budget,
        reject,
        signal: this.running.signal,
        onTrace: (event) => {
          const percent = Math.min(100, (event.step / budget) * 100);
          this.els.progressBar.style.width = `${percent}%`;
          this.els.status.textContent = `explored ${event.step}/${budget}: ${event.state}`;
        },
      });
      await this.showReport(report);
    } catch (error) {
      if ((error as Error).name !== "AbortError") {
        this.els.status.textContent = `error: ${(error as Error).message}`;
      }
    } finally {
      this.running = null;
      this.els.synthesize.disabled = false;
      this.els.cancel.disabled = true;
    }
  }

  async showReport(report: SynthesisReport): Promise<void> {
    this.lastReport = report;
    if (!report.found || !report.rule) {
      this.els.rule.textContent = "";
      this.els.chips.innerHTML = "";
      this.els.status.textContent = `no rule found (${report.statesExplored} states explored)`;
      this.els.another.disabled = true;
      this.els.runTest.disabled = true;
      this.renderEntries();
      return;
    }
    // round-trip the rule through the server's parser before displaying
    const parsed = await this.client.parseRule(report.rule);
    this.els.rule.textContent = parsed.printed;
    this.els.chips.innerHTML = "";
    for (const chip of parsed.chips) {
      const el = document.createElement("span");
      el.className = "chip";
      el.textContent = chip;
      this.els.chips.appendChild(el);
    }
    this.els.stats.textContent =
      `explored ${report.statesExplored}, pruned ${report.statesPruned}, queue peak ${report.queuePeak}`;
    this.els.status.textContent = "rule found";
    this.els.another.disabled = false;
    this.els.runTest.disabled = false;

    const matches = new Map<string, Selection[]>();
    const sentences = this.effectiveEntries().map((e) => e.sentence);
    for (const result of await this.client.match(parsed.printed, sentences)) {
      matches.set(result.id, result.spans);
    }
    this.renderEntries(matches);
  }

  /** Re-run with the current rule rejected and a doubled budget; the server
   * skips rejected rule texts as solutions, the client also filters. */
  async tryAnother(): Promise<void> {
    if (!this.lastReport?.rule) return;
    this.rejected.push(this.lastReport.rule);
    this.els.budget.value = String((Number(this.els.budget.value) || 1000) * 2);
    await this.synthesize([...this.rejected]);
    if (this.lastReport?.rule && this.rejected.includes(this.lastReport.rule)) {
      this.els.status.textContent = "no alternative rule found";
    }
  }

  cancel(): void {
    this.running?.abort();
    this.els.status.textContent = "cancelled";
  }

  // ------------------------------------------------------------------
  async runTest(): Promise<void> {
    if (!this.lastReport?.rule) return;
    const text = this.els.testInput.value;
    if (!text.trim()) return;
    const sentence = sentenceFromText("test", text);
    const [result] = await this.client.match(this.lastReport.rule, [sentence]);
    this.els.testOut.innerHTML = "";
    sentence.tokens.forEach((token, position) => {
      const el = document.createElement("span");
      el.className = "token";
      el.textContent = token.word;
      if (result.spans.some(([s, e]) => position >= s && position < e)) el.classList.add("matched");
      this.els.testOut.appendChild(el);
    });
  }

  exportedSpecText(): string {
    return serializeSpec(this.effectiveEntries(), this.mode);
  }

  exportSpec(): void {
    const blob = new Blob([this.exportedSpecText()], { type: "application/json" });
    const link = document.createElement("a");
    link.href = URL.createObjectURL(blob);
    link.download = "spec.json";
    link.click();
    URL.revokeObjectURL(link.href);
  }
}

export function mount(root: HTMLElement, base = ""): App {
  return new App(root, new Client(base));
}
