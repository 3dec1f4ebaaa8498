/** Command line entry point.
 *
 *    remas-plots performance --in DIR [--tv 1400] [--out DIR] [--format svg]
 *    remas-plots tradeoff    --in DIR [--out DIR] [--format svg]
 *    remas-plots table2      --in DIR [--out DIR]
 *
 *  --in is the harness output directory (curves.csv / table2.csv inside
 *  it; the tradeoff command expects eta_<value> subdirectories).  Figures
 *  are written as SVG; requesting png fails with a pointer to svg since
 *  no rasterizer is bundled. */

import { existsSync, mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import { renderPerformance } from "./performance.js";
import { renderTradeoff } from "./tradeoff.js";
import { renderTable2 } from "./table2.js";

interface Options {
  inDir: string;
  outDir: string;
  format: string;
  tV: number;
}

function parseArgs(argv: string[]): [string, Options] {
  const [command, ...rest] = argv;
  const opts: Options = { inDir: "", outDir: ".", format: "svg", tV: 1400 };
  for (let i = 0; i < rest.length; i += 2) {
    const key = rest[i];
    const value = rest[i + 1];
    if (value === undefined) throw new Error(`missing value for ${key}`);
    switch (key) {
      case "--in": opts.inDir = value; break;
      case "--out": opts.outDir = value; break;
      case "--format": opts.format = value; break;
      case "--tv": opts.tV = Number(value); break;
      default: throw new Error(`unknown option ${key}`);
    }
  }
  if (!command) throw new Error("usage: remas-plots performance|tradeoff|table2 --in DIR");
  if (!opts.inDir) throw new Error("--in DIR is required");
  return [command, opts];
}

export function main(argv: string[]): number {
  let command: string, opts: Options;
  try {
    [command, opts] = parseArgs(argv);
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 2;
  }
  try {
    if (opts.format !== "svg" && command !== "table2") {
      if (opts.format === "png") {
        console.error("png output needs an external rasterizer " +
          "(none bundled); render svg and convert, e.g. with rsvg-convert");
        return 2;
      }
      console.error(`unknown format ${opts.format}`);
      return 2;
    }
    if (!existsSync(opts.outDir)) mkdirSync(opts.outDir, { recursive: true });
    if (command === "performance") {
      const out = join(opts.outDir, "performance.svg");
      writeFileSync(out, renderPerformance(join(opts.inDir, "curves.csv"), opts.tV));
      console.log(`wrote ${out}`);
      return 0;
    }
    if (command === "tradeoff") {
      const out = join(opts.outDir, "tradeoff.svg");
      writeFileSync(out, renderTradeoff(opts.inDir));
      console.log(`wrote ${out}`);
      return 0;
    }
    if (command === "table2") {
      const out = join(opts.outDir, "table2.md");
      writeFileSync(out, renderTable2(join(opts.inDir, "table2.csv")));
      console.log(`wrote ${out}`);
      return 0;
    }
    console.error(`unknown command ${command}`);
    return 2;
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 1;
  }
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(main(process.argv.slice(2)));
}
