/** Minimal CSV reader for the harness outputs (plain comma separation,
 *  no quoting, first line is the header). */

import { readFileSync } from "node:fs";

export type Row = Record<string, string>;

export function parseCsv(text: string): Row[] {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) return [];
  const header = lines[0].split(",");
  return lines.slice(1).map((line) => {
    const cells = line.split(",");
    const row: Row = {};
    header.forEach((name, i) => {
      row[name] = cells[i] ?? "";
    });
    return row;
  });
}

export function readCsv(path: string): Row[] {
  return parseCsv(readFileSync(path, "utf8"));
}

export function num(row: Row, key: string): number {
  const v = row[key];
  if (v === "inf") return Infinity;
  const x = Number(v);
  if (Number.isNaN(x)) throw new Error(`not a number in column ${key}: ${v}`);
  return x;
}
