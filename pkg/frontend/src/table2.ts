/** Scalability summary as a markdown table: modes as rows, grouped by
 *  network size and topology; censored recovery values carry a ">="
 *  prefix. */

import { readCsv, num, Row } from "./csv.js";

function fmt(x: number, digits = 0): string {
  return Number.isInteger(x) && digits === 0 ? String(x) : x.toFixed(digits);
}

export function renderTable2(tablePath: string): string {
  const rows = readCsv(tablePath);
  if (rows.length === 0) throw new Error(`no rows in ${tablePath}`);
  for (const col of ["n", "topology", "mode", "recovery", "recovery_censored",
                     "reward_after", "msgs_total", "msgs_per_agent_step"]) {
    if (!(col in rows[0])) throw new Error(`table2.csv misses column ${col}`);
  }
  const groups = new Map<string, Row[]>();
  for (const row of rows) {
    const key = `${row["n"]}|${row["topology"]}`;
    (groups.get(key) ?? groups.set(key, []).get(key)!).push(row);
  }
  const out: string[] = [];
  out.push("| agents | topology | mode | total recovery | reward after | " +
    "messages | per agent-step |");
  out.push("| --- | --- | --- | --- | --- | --- | --- |");
  const keys = [...groups.keys()].sort((a, b) => {
    const [na, ta] = a.split("|");
    const [nb, tb] = b.split("|");
    return Number(na) - Number(nb) || ta.localeCompare(tb);
  });
  for (const key of keys) {
    for (const row of groups.get(key)!) {
      const censored = num(row, "recovery_censored") > 0;
      const rec = `${censored ? "≥" : ""}${fmt(num(row, "recovery"))}`;
      out.push(`| ${row["n"]} | ${row["topology"]} | ${row["mode"]} | ${rec} | ` +
        `${num(row, "reward_after").toFixed(3)} | ` +
        `${fmt(num(row, "msgs_total"))} | ` +
        `${num(row, "msgs_per_agent_step").toPrecision(3)} |`);
    }
  }
  return out.join("\n") + "\n";
}
