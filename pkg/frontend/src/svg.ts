/** Hand-rolled SVG plotting: linear scales, polylines, confidence bands,
 *  axes with ticks, dashed event markers, and a small panel-grid layout.
 *  No DOM dependency; panels are assembled as plain strings. */

export interface Scale {
  (x: number): number;
  domain: [number, number];
  range: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const fn = ((x: number) => r0 + ((x - d0) / span) * (r1 - r0)) as Scale;
  fn.domain = domain;
  fn.range = range;
  return fn;
}

export function ticks(domain: [number, number], count = 5): number[] {
  const [lo, hi] = domain;
  const span = hi - lo || 1;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const err = (span / count) / step;
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = step * mult;
  const start = Math.ceil(lo / s) * s;
  const out: number[] = [];
  for (let v = start; v <= hi + 1e-9; v += s) out.push(Number(v.toPrecision(12)));
  return out;
}

export const PALETTE = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
  "#8c564b", "#17becf", "#7f7f7f",
];

export function polyline(xs: number[], ys: number[], sx: Scale, sy: Scale,
                         color: string, width = 1.5): string {
  const pts = xs.map((x, i) => `${sx(x).toFixed(2)},${sy(ys[i]).toFixed(2)}`).join(" ");
  return `<polyline fill="none" stroke="${color}" stroke-width="${width}" points="${pts}"/>`;
}

export function band(xs: number[], lo: number[], hi: number[], sx: Scale,
                     sy: Scale, color: string, opacity = 0.18): string {
  const fwd = xs.map((x, i) => `${sx(x).toFixed(2)},${sy(hi[i]).toFixed(2)}`);
  const back = xs.map((x, i) => `${sx(x).toFixed(2)},${sy(lo[i]).toFixed(2)}`).reverse();
  return `<polygon fill="${color}" fill-opacity="${opacity}" stroke="none" ` +
    `points="${fwd.concat(back).join(" ")}"/>`;
}

export function dashedVertical(x: number, sx: Scale, sy: Scale,
                               label?: string): string {
  const px = sx(x).toFixed(2);
  const [y0, y1] = sy.range;
  let out = `<line class="changepoint" x1="${px}" y1="${y1}" x2="${px}" ` +
    `y2="${y0}" stroke="#333333" stroke-width="1" stroke-dasharray="5,4"/>`;
  if (label) {
    out += `<text x="${px}" y="${(Math.min(y0, y1) - 4).toFixed(2)}" ` +
      `font-size="9" text-anchor="middle" fill="#333333">${label}</text>`;
  }
  return out;
}

export interface PanelBox {
  x: number;
  y: number;
  width: number;
  height: number;
}

export function axes(box: PanelBox, sx: Scale, sy: Scale, title: string,
                     xLabel: string, yLabel: string): string {
  const parts: string[] = [];
  const x0 = box.x, x1 = box.x + box.width;
  const y0 = box.y + box.height, y1 = box.y;
  parts.push(`<rect x="${x0}" y="${y1}" width="${box.width}" height="${box.height}" ` +
    `fill="none" stroke="#888888" stroke-width="0.8"/>`);
  for (const t of ticks(sx.domain)) {
    const px = sx(t).toFixed(2);
    parts.push(`<line x1="${px}" y1="${y0}" x2="${px}" y2="${y0 + 4}" stroke="#888888"/>`);
    parts.push(`<text x="${px}" y="${y0 + 14}" font-size="8" text-anchor="middle">${t}</text>`);
  }
  for (const t of ticks(sy.domain)) {
    const py = sy(t).toFixed(2);
    parts.push(`<line x1="${x0 - 4}" y1="${py}" x2="${x0}" y2="${py}" stroke="#888888"/>`);
    parts.push(`<text x="${x0 - 6}" y="${py}" font-size="8" text-anchor="end" ` +
      `dominant-baseline="middle">${t}</text>`);
  }
  parts.push(`<text x="${(x0 + x1) / 2}" y="${y1 - 6}" font-size="10" ` +
    `text-anchor="middle" font-weight="bold">${title}</text>`);
  parts.push(`<text x="${(x0 + x1) / 2}" y="${y0 + 26}" font-size="9" ` +
    `text-anchor="middle">${xLabel}</text>`);
  parts.push(`<text x="${x0 - 34}" y="${(y0 + y1) / 2}" font-size="9" ` +
    `text-anchor="middle" transform="rotate(-90 ${x0 - 34} ${(y0 + y1) / 2})">` +
    `${yLabel}</text>`);
  return parts.join("\n");
}

export function legend(x: number, y: number, entries: [string, string][]): string {
  return entries.map(([name, color], i) => {
    const yy = y + i * 13;
    return `<line x1="${x}" y1="${yy}" x2="${x + 18}" y2="${yy}" ` +
      `stroke="${color}" stroke-width="2"/>` +
      `<text x="${x + 22}" y="${yy + 3}" font-size="9">${name}</text>`;
  }).join("\n");
}

export function document(width: number, height: number, body: string): string {
  return `<?xml version="1.0" encoding="UTF-8"?>\n` +
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">\n` +
    `<rect width="${width}" height="${height}" fill="white"/>\n${body}\n</svg>\n`;
}

export function panelGrid(width: number, height: number, rows: number,
                          cols: number, margin = 52, gap = 46): PanelBox[] {
  const w = (width - margin * 2 - gap * (cols - 1)) / cols;
  const h = (height - margin * 2 - gap * (rows - 1)) / rows;
  const boxes: PanelBox[] = [];
  for (let r = 0; r < rows; r++) {
    for (let c = 0; c < cols; c++) {
      boxes.push({ x: margin + c * (w + gap), y: margin + r * (h + gap),
                   width: w, height: h });
    }
  }
  return boxes;
}

export function extent(values: number[]): [number, number] {
  let lo = Infinity, hi = -Infinity;
  for (const v of values) {
    if (Number.isFinite(v)) {
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
  }
  if (!Number.isFinite(lo)) return [0, 1];
  if (lo === hi) return [lo - 0.5, hi + 0.5];
  const pad = (hi - lo) * 0.05;
  return [lo - pad, hi + pad];
}
