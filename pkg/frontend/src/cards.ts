// Pairwise comparison cards and measurement inputs.
//
// Answers are only STAGED locally; "Submit all" posts the staged batch
// in one request. A staged card shows its selection and can be restaged
// until submission; once the service accepts the batch the queries leave
// the open set on the next refresh, so a card never accepts input for an
// already-answered query.

import { el, fmt, fmtVector } from "./format.js";
import type {
  Choice,
  ComparisonQueryView,
  ObservationQueryView,
  SessionConfigView,
  SessionState,
} from "./types.js";

export interface Staging {
  observations: Map<string, number>;
  comparisons: Map<string, Choice>;
}

export function emptyStaging(): Staging {
  return { observations: new Map(), comparisons: new Map() };
}

export function stagedCount(staging: Staging): number {
  return staging.observations.size + staging.comparisons.size;
}

function designGlyphs(x: number[], config: SessionConfigView): HTMLElement {
  // per-dimension bar glyphs: presentation scaling by the configured
  // bounds, the numeric values stay primary
  const wrap = el("div", "glyphs");
  x.forEach((v, i) => {
    const [lo, hi] = config.bounds[i] ?? [0, 1];
    const frac = hi > lo ? Math.min(1, Math.max(0, (v - lo) / (hi - lo))) : 0.5;
    const bar = el("div", "glyph");
    const fill = el("div", "glyph-fill");
    fill.style.width = `${(frac * 100).toFixed(1)}%`;
    bar.appendChild(fill);
    bar.title = `x${i + 1} = ${fmt(v)}`;
    wrap.appendChild(bar);
  });
  return wrap;
}

function designPanel(label: string, x: number[], config: SessionConfigView): HTMLElement {
  const panel = el("div", "design");
  panel.appendChild(el("div", "design-label", label));
  panel.appendChild(el("div", "design-values", fmtVector(x)));
  panel.appendChild(designGlyphs(x, config));
  return panel;
}

export function renderObservationInputs(
  container: HTMLElement,
  queries: ObservationQueryView[],
  config: SessionConfigView,
  staging: Staging,
): void {
  container.replaceChildren();
  if (queries.length === 0) return;
  container.appendChild(el("h3", undefined, "Measure these designs"));
  for (const q of queries) {
    const row = el("div", "obs-row");
    row.dataset.queryId = q.id;
    row.appendChild(designPanel(`design #${q.eval_index + 1}`, q.x, config));
    const input = el("input", "obs-input");
    input.type = "number";
    input.step = "any";
    input.placeholder = "measured objective";
    const staged = staging.observations.get(q.id);
    if (staged !== undefined) input.value = String(staged);
    input.addEventListener("input", () => {
      const value = parseFloat(input.value);
      if (Number.isFinite(value)) staging.observations.set(q.id, value);
      else staging.observations.delete(q.id);
    });
    row.appendChild(input);
    container.appendChild(row);
  }
}

const CHOICES: { choice: Choice; label: string }[] = [
  { choice: "left", label: "left is better" },
  { choice: "skip", label: "cannot judge" },
  { choice: "right", label: "right is better" },
];

export function renderComparisonCards(
  container: HTMLElement,
  queries: ComparisonQueryView[],
  config: SessionConfigView,
  staging: Staging,
): void {
  container.replaceChildren();
  if (queries.length === 0) return;
  const byProperty = new Map<string, ComparisonQueryView[]>();
  for (const q of queries) {
    const list = byProperty.get(q.property_name) ?? [];
    list.push(q);
    byProperty.set(q.property_name, list);
  }
  container.appendChild(el("h3", undefined, "Which design is better?"));
  for (const [property, group] of byProperty) {
    const section = el("section", "property-group");
    section.appendChild(el("h4", undefined, `${property} (${group.length} pairs)`));
    for (const q of group) {
      const card = el("div", "card");
      card.dataset.queryId = q.id;
      const pair = el("div", "pair");
      pair.appendChild(designPanel(`design #${q.left_index + 1}`, q.left_x, config));
      pair.appendChild(el("div", "vs", "vs"));
      pair.appendChild(designPanel(`design #${q.right_index + 1}`, q.right_x, config));
      card.appendChild(pair);
      const buttons = el("div", "choices");
      for (const { choice, label } of CHOICES) {
        const btn = el("button", "choice", label);
        btn.type = "button";
        btn.dataset.choice = choice;
        if (staging.comparisons.get(q.id) === choice) btn.classList.add("selected");
        btn.addEventListener("click", () => {
          staging.comparisons.set(q.id, choice);
          for (const other of buttons.querySelectorAll("button")) {
            other.classList.toggle("selected", other === btn);
          }
          card.classList.add("staged");
        });
        buttons.appendChild(btn);
      }
      if (staging.comparisons.has(q.id)) card.classList.add("staged");
      card.appendChild(buttons);
      section.appendChild(card);
    }
    container.appendChild(section);
  }
}

export function buildBatch(staging: Staging) {
  return {
    observations: [...staging.observations.entries()].map(([id, value]) => ({ id, value })),
    comparisons: [...staging.comparisons.entries()].map(([id, choice]) => ({ id, choice })),
  };
}

export function renderQueryPanel(
  container: HTMLElement,
  state: SessionState,
  staging: Staging,
  onSubmit: () => void,
): void {
  container.replaceChildren();
  const obsBox = el("div", "obs-box");
  const cmpBox = el("div", "cmp-box");
  renderObservationInputs(obsBox, state.open_queries.observations, state.config, staging);
  renderComparisonCards(cmpBox, state.open_queries.comparisons, state.config, staging);
  container.appendChild(obsBox);
  container.appendChild(cmpBox);
  const open =
    state.open_queries.observations.length + state.open_queries.comparisons.length;
  if (open === 0) {
    container.appendChild(
      el(
        "p",
        "empty-state",
        state.phase === "finished" ? "Run complete." : "No open queries.",
      ),
    );
    return;
  }
  const bar = el("div", "submit-bar");
  const btn = el("button", "submit-all", "Submit all staged answers");
  btn.type = "button";
  btn.addEventListener("click", onSubmit);
  bar.appendChild(btn);
  bar.appendChild(el("span", "staged-note", `${open} open quer${open === 1 ? "y" : "ies"}`));
  container.appendChild(bar);
}
