/** Evidence-threshold trade-off figure: epistemic recovery and durability
 *  intervals against the stopping margin, one line per mode.
 *
 *  Input is a sweep directory holding one run per threshold value
 *  (subdirectories eta_<value>/metrics.csv as produced by the harness
 *  sweep recipe).  Per-trial rows are averaged into mean and normal 95%
 *  interval for display; censored trials enter at their censored value
 *  (the remaining horizon), mirroring the harness reporting convention. */

import { readdirSync } from "node:fs";
import { join } from "node:path";
import { readCsv, num, Row } from "./csv.js";
import * as svg from "./svg.js";

interface Point {
  eta: number;
  mean: number;
  ci: number;
}

function aggregate(values: number[]): { mean: number; ci: number } {
  const n = values.length;
  const mean = values.reduce((a, b) => a + b, 0) / n;
  if (n < 2) return { mean, ci: 0 };
  const sd = Math.sqrt(values.reduce((a, b) => a + (b - mean) ** 2, 0) / (n - 1));
  return { mean, ci: (1.96 * sd) / Math.sqrt(n) };
}

export interface TradeoffData {
  recovery: Map<string, Point[]>;
  durability: Map<string, Point[]>;
}

export function collectSweep(dir: string): TradeoffData {
  const groups = readdirSync(dir, { withFileTypes: true })
    .filter((e) => e.isDirectory() && /^eta_[-0-9.]+$/.test(e.name))
    .map((e) => ({ eta: Number(e.name.slice(4)),
                   rows: readCsv(join(dir, e.name, "metrics.csv")) }))
    .sort((a, b) => a.eta - b.eta);
  if (groups.length === 0) {
    throw new Error(`no eta_<value> subdirectories with metrics.csv in ${dir}`);
  }
  const recovery = new Map<string, Point[]>();
  const durability = new Map<string, Point[]>();
  for (const { eta, rows } of groups) {
    const byMode = new Map<string, Row[]>();
    for (const row of rows) {
      const list = byMode.get(row["mode"]) ?? [];
      list.push(row);
      byMode.set(row["mode"], list);
    }
    for (const [mode, list] of byMode) {
      const rec = aggregate(list.map((r) => num(r, "dt_rec_epi")));
      const dur = aggregate(list.map((r) => num(r, "dt_dur_epi")));
      (recovery.get(mode) ?? recovery.set(mode, []).get(mode)!)
        .push({ eta, mean: rec.mean, ci: rec.ci });
      (durability.get(mode) ?? durability.set(mode, []).get(mode)!)
        .push({ eta, mean: dur.mean, ci: dur.ci });
    }
  }
  return { recovery, durability };
}

function drawPanel(box: svg.PanelBox, title: string, yLabel: string,
                   data: Map<string, Point[]>,
                   colors: Map<string, string>): string {
  const xs: number[] = [];
  const ys: number[] = [];
  for (const pts of data.values()) {
    for (const p of pts) {
      xs.push(p.eta);
      ys.push(p.mean - p.ci, p.mean + p.ci);
    }
  }
  const sx = svg.linearScale(svg.extent(xs), [box.x, box.x + box.width]);
  const sy = svg.linearScale(svg.extent(ys), [box.y + box.height, box.y]);
  const parts = [svg.axes(box, sx, sy, title, "evidence threshold", yLabel)];
  for (const [mode, pts] of data) {
    const color = colors.get(mode)!;
    const exs = pts.map((p) => p.eta);
    parts.push(svg.band(exs, pts.map((p) => p.mean - p.ci),
                        pts.map((p) => p.mean + p.ci), sx, sy, color));
    parts.push(svg.polyline(exs, pts.map((p) => p.mean), sx, sy, color, 2));
    for (const p of pts) {
      parts.push(`<circle cx="${sx(p.eta).toFixed(2)}" ` +
        `cy="${sy(p.mean).toFixed(2)}" r="2.5" fill="${color}"/>`);
    }
  }
  return parts.join("\n");
}

export function renderTradeoff(dir: string): string {
  const data = collectSweep(dir);
  const width = 900, height = 360;
  const [left, right] = svg.panelGrid(width, height, 1, 2);
  const modes = [...data.recovery.keys()];
  const colors = new Map(modes.map((m, i) =>
    [m, svg.PALETTE[i % svg.PALETTE.length]] as [string, string]));
  const body = [
    drawPanel(left, "Epistemic recovery time", "steps", data.recovery, colors),
    drawPanel(right, "Epistemic durability time", "steps", data.durability, colors),
    svg.legend(width - 200, 14, modes.map((m) =>
      [m, colors.get(m)!] as [string, string])),
  ];
  return svg.document(width, height, body.join("\n"));
}
