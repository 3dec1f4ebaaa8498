/** Four-panel performance figure from curves.csv: trial-mean lines with
 *  confidence bands per learning mode, and a dashed change-point marker.
 *  Statistics come straight from the harness file; nothing is recomputed
 *  or re-smoothed here. */

import { readCsv, num, Row } from "./csv.js";
import * as svg from "./svg.js";

const PANELS: [string, string][] = [
  ["total_reward", "Total reward over time"],
  ["cum_reward", "Cumulative total reward"],
  ["cum_regret", "Cumulative regret over time"],
  ["fraction_optimal", "Fraction of agents on the optimal action"],
];

interface Series {
  steps: number[];
  mean: number[];
  ci: number[];
}

function groupCurves(rows: Row[]): Map<string, Map<string, Series>> {
  const byMetric = new Map<string, Map<string, Series>>();
  for (const row of rows) {
    const metric = row["metric"];
    const mode = row["mode"];
    if (!metric || !mode) continue;
    let modes = byMetric.get(metric);
    if (!modes) byMetric.set(metric, (modes = new Map()));
    let s = modes.get(mode);
    if (!s) modes.set(mode, (s = { steps: [], mean: [], ci: [] }));
    s.steps.push(num(row, "step"));
    s.mean.push(num(row, "mean"));
    s.ci.push(num(row, "ci"));
  }
  return byMetric;
}

export function renderPerformance(curvesPath: string, tV: number): string {
  const rows = readCsv(curvesPath);
  if (rows.length === 0) throw new Error(`no rows in ${curvesPath}`);
  for (const col of ["step", "mode", "metric", "mean", "ci"]) {
    if (!(col in rows[0])) throw new Error(`curves.csv misses column ${col}`);
  }
  const byMetric = groupCurves(rows);
  const width = 900, height = 640;
  const boxes = svg.panelGrid(width, height, 2, 2);
  const modes = [...new Set(rows.map((r) => r["mode"]))];
  const colors = new Map(modes.map((m, i) =>
    [m, svg.PALETTE[i % svg.PALETTE.length]] as [string, string]));
  const body: string[] = [];
  PANELS.forEach(([metric, title], idx) => {
    const box = boxes[idx];
    const series = byMetric.get(metric);
    if (!series) throw new Error(`curves.csv misses metric ${metric}`);
    const allX: number[] = [];
    const allY: number[] = [];
    for (const s of series.values()) {
      allX.push(...s.steps);
      s.mean.forEach((m, i) => {
        allY.push(m - s.ci[i], m + s.ci[i]);
      });
    }
    const sx = svg.linearScale(svg.extent(allX), [box.x, box.x + box.width]);
    const sy = svg.linearScale(svg.extent(allY), [box.y + box.height, box.y]);
    body.push(svg.axes(box, sx, sy, title, "step", metric));
    for (const [mode, s] of series) {
      const color = colors.get(mode)!;
      const lo = s.mean.map((m, i) => m - s.ci[i]);
      const hi = s.mean.map((m, i) => m + s.ci[i]);
      body.push(svg.band(s.steps, lo, hi, sx, sy, color));
      body.push(svg.polyline(s.steps, s.mean, sx, sy, color));
    }
    body.push(svg.dashedVertical(tV, sx, sy, idx === 0 ? `t=${tV}` : undefined));
  });
  body.push(svg.legend(width - 210, 16, modes.map((m) =>
    [m, colors.get(m)!] as [string, string])));
  return svg.document(width, height, body.join("\n"));
}
