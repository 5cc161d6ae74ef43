// Run dashboard: incumbent/regret charts, arm-selection strip, the
// pending suggestion panel, and the raw trace table. Everything shown is
// a value from a service response.

import { armStrip, lineChart } from "./charts.js";
import { el, fmt, fmtVector } from "./format.js";
import type { SessionState, TraceRecord } from "./types.js";

function progressRecords(state: SessionState): TraceRecord[] {
  return state.trace.filter((r) => r.type === "init" || r.type === "step");
}

export function renderDashboard(
  container: HTMLElement,
  state: SessionState,
  traceUrl: string | null,
): void {
  container.replaceChildren();
  const records = progressRecords(state);
  const incumbent = records
    .filter((r) => r.incumbent_y !== undefined && r.t !== undefined)
    .map((r) => ({ t: r.t as number, v: r.incumbent_y as number }));
  container.appendChild(
    lineChart(incumbent, { label: "incumbent objective vs iteration" }),
  );
  const regret = records
    .filter((r) => r.regret !== null && r.regret !== undefined && r.t !== undefined)
    .map((r) => ({ t: r.t as number, v: r.regret as number }));
  if (regret.length > 0) {
    container.appendChild(lineChart(regret, { label: "simple regret vs iteration" }));
  }
  const arms = state.trace
    .filter((r) => r.type === "step" && (r.arm === "human" || r.arm === "control"))
    .map((r) => r.arm as "human" | "control");
  container.appendChild(armStrip(arms));

  const panel = el("div", "suggestion-panel");
  panel.appendChild(el("h3", undefined, "Suggested designs awaiting measurement"));
  if (state.open_queries.observations.length === 0) {
    panel.appendChild(el("p", "empty-state", "none"));
  } else {
    for (const q of state.open_queries.observations) {
      const row = el("div", "suggestion");
      row.appendChild(el("span", "suggestion-id", `#${q.eval_index + 1}`));
      row.appendChild(el("span", "suggestion-x", fmtVector(q.x, 6)));
      panel.appendChild(row);
    }
  }
  container.appendChild(panel);

  const table = el("table", "trace-table");
  const head = el("tr");
  for (const col of ["t", "arm", "design", "observed y", "incumbent", "regret"]) {
    head.appendChild(el("th", undefined, col));
  }
  table.appendChild(head);
  for (const r of records) {
    const row = el("tr", r.type === "init" ? "trace-init" : undefined);
    row.appendChild(el("td", undefined, r.t === undefined ? "–" : String(r.t)));
    row.appendChild(el("td", undefined, r.type === "init" ? "init" : (r.arm ?? "–")));
    row.appendChild(el("td", undefined, r.type === "init" ? "initial batch" : fmtVector(r.x)));
    row.appendChild(el("td", undefined, r.type === "init" ? "–" : fmt(r.y)));
    row.appendChild(el("td", undefined, fmt(r.incumbent_y)));
    row.appendChild(
      el("td", undefined, r.regret === null || r.regret === undefined ? "–" : fmt(r.regret)),
    );
    table.appendChild(row);
  }
  const traceBox = el("div", "trace-box");
  traceBox.appendChild(el("h3", undefined, "Trace"));
  traceBox.appendChild(table);
  if (traceUrl) {
    const link = el("a", "trace-download", "download trace (JSONL)");
    link.setAttribute("href", traceUrl);
    link.setAttribute("download", `${state.session_id}.jsonl`);
    traceBox.appendChild(link);
  }
  container.appendChild(traceBox);
}
