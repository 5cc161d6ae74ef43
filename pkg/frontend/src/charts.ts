// Minimal dependency-free SVG charts. Every plotted number comes
// straight from trace records; the chart only scales for display.

import { el, fmt } from "./format.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export interface SeriesPoint {
  t: number;
  v: number;
}

export function lineChart(
  points: SeriesPoint[],
  opts: { width?: number; height?: number; label: string; cssClass?: string },
): HTMLElement {
  const width = opts.width ?? 420;
  const height = opts.height ?? 140;
  const pad = 34;
  const wrap = el("div", `chart ${opts.cssClass ?? ""}`);
  wrap.appendChild(el("div", "chart-label", opts.label));
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("width", String(width));
  svg.setAttribute("height", String(height));
  if (points.length === 0) {
    wrap.appendChild(el("div", "chart-empty", "no data yet"));
    return wrap;
  }
  const ts = points.map((p) => p.t);
  const vs = points.map((p) => p.v);
  const tMin = Math.min(...ts);
  const tMax = Math.max(...ts);
  const vMin = Math.min(...vs);
  const vMax = Math.max(...vs);
  const sx = (t: number) =>
    pad + (tMax > tMin ? ((t - tMin) / (tMax - tMin)) * (width - pad - 8) : 0);
  const sy = (v: number) =>
    height - 18 - (vMax > vMin ? ((v - vMin) / (vMax - vMin)) * (height - 30) : 0);
  const poly = document.createElementNS(SVG_NS, "polyline");
  poly.setAttribute("points", points.map((p) => `${sx(p.t)},${sy(p.v)}`).join(" "));
  poly.setAttribute("fill", "none");
  poly.setAttribute("class", "chart-line");
  svg.appendChild(poly);
  for (const p of points) {
    const dot = document.createElementNS(SVG_NS, "circle");
    dot.setAttribute("cx", String(sx(p.t)));
    dot.setAttribute("cy", String(sy(p.v)));
    dot.setAttribute("r", "2.5");
    dot.setAttribute("class", "chart-dot");
    const title = document.createElementNS(SVG_NS, "title");
    title.textContent = `t=${p.t}: ${fmt(p.v, 6)}`;
    dot.appendChild(title);
    svg.appendChild(dot);
  }
  const axisMax = document.createElementNS(SVG_NS, "text");
  axisMax.setAttribute("x", "2");
  axisMax.setAttribute("y", "12");
  axisMax.setAttribute("class", "chart-axis");
  axisMax.textContent = fmt(vMax);
  const axisMin = document.createElementNS(SVG_NS, "text");
  axisMin.setAttribute("x", "2");
  axisMin.setAttribute("y", String(height - 20));
  axisMin.setAttribute("class", "chart-axis");
  axisMin.textContent = fmt(vMin);
  svg.appendChild(axisMax);
  svg.appendChild(axisMin);
  wrap.appendChild(svg);
  return wrap;
}

export function armStrip(arms: ("human" | "control")[]): HTMLElement {
  const wrap = el("div", "arm-strip");
  wrap.appendChild(el("div", "chart-label", "arm chosen per iteration"));
  const row = el("div", "arm-cells");
  for (const arm of arms) {
    const cell = el("div", `arm-cell arm-${arm}`);
    cell.title = arm;
    row.appendChild(cell);
  }
  if (arms.length === 0) row.appendChild(el("span", "chart-empty", "no steps yet"));
  wrap.appendChild(row);
  const legend = el("div", "arm-legend");
  legend.appendChild(el("span", "arm-key arm-human", " "));
  legend.appendChild(el("span", undefined, "human (augmented)"));
  legend.appendChild(el("span", "arm-key arm-control", " "));
  legend.appendChild(el("span", undefined, "control (raw)"));
  wrap.appendChild(legend);
  return wrap;
}
