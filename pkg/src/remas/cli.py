"""Command line interface.

Subcommands::

    remas run   --config FILE [--set section.key=value]... [--out DIR] [--threads N]
    remas sweep --config FILE --sizes 10,150,300 --topologies ring,smallworld
                [--modes m1,m2] [--out DIR] [--threads N]
    remas check --trace FILE --spec FILE
    remas bench [--agents N] [--horizon T] [--mode M]

``check`` runs the resilience monitor standalone.  The spec file is an INI
with a [resilience] section (alpha1/beta1/alpha2/beta2).  The trace file is
JSON in one of two forms:

* timeline form: {"t_v": int, "mutual": [0,1,...], "optimal": [0,1,...]}
  with one entry per step, mutual being the mutual-knowledge predicate of
  the post-change condition and optimal the all-agents-optimal predicate;
* kripke form: {"t_v": int, "phi2": "<formula>", "agents": [1,2],
  "worlds": ["w0",...], "valuation": {"w0": ["atom",...]},
  "steps": [{"actual": "w0", "relations": {"1": [["w0","w1"],...]}}, ...],
  "opt_atom": "pi_opt"}; the timelines are then evaluated with the formula
  semantics over the per-step relations.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import sys

from . import harness, kripke, logic, resilience


def _cmd_run(opts) -> int:
    cfg = harness.load_config(opts.config, opts.set or ())
    for warning in cfg.validate():
        print(f"warning: {warning}", file=sys.stderr)
    out = opts.out or cfg.out_dir
    harness.run_experiment(cfg, threads=opts.threads, out_dir=out)
    print(f"wrote {out}/curves.csv and {out}/metrics.csv")
    return 0


def _cmd_sweep(opts) -> int:
    cfg = harness.load_config(opts.config, opts.set or ())
    sizes = [int(s) for s in opts.sizes.split(",") if s]
    topologies = [t.strip() for t in opts.topologies.split(",") if t.strip()]
    modes = None
    if opts.modes:
        modes = [m.strip() for m in opts.modes.split(",") if m.strip()]
    out = opts.out or cfg.out_dir
    harness.sweep(cfg, sizes, topologies, threads=opts.threads,
                  out_dir=out, modes=modes)
    print(f"wrote {out}/table2.csv")
    return 0


def load_trace_file(path: str) -> tuple[resilience.Timelines, int]:
    with open(path) as fh:
        doc = json.load(fh)
    t_v = int(doc["t_v"])
    if "mutual" in doc:
        tl = resilience.Timelines(
            tuple(bool(x) for x in doc["mutual"]),
            tuple(bool(x) for x in doc["optimal"]))
        return tl, t_v
    labels = list(doc["worlds"])
    worlds = [kripke.World(i, lab) for i, lab in enumerate(labels)]
    index = {lab: i for i, lab in enumerate(labels)}
    valuation = {index[lab]: frozenset(atoms)
                 for lab, atoms in doc["valuation"].items()}
    steps = []
    agents = [int(a) for a in doc["agents"]]
    for step in doc["steps"]:
        rels = {}
        for agent_str, pairs in step["relations"].items():
            rels[int(agent_str)] = kripke.relation_from_pairs(
                int(agent_str), len(worlds),
                [(index[a], index[b]) for a, b in pairs])
        steps.append((index[step["actual"]], rels))
    model = kripke.KripkeModel(worlds, valuation,
                               {a: steps[0][1][a] for a in agents},
                               conditions=())
    trace = kripke.KripkeTrace(model, steps)
    phi2 = logic.parse(doc["phi2"])
    tl = resilience.timelines_from_trace(trace, phi2, frozenset(agents),
                                         doc.get("opt_atom", "pi_opt"))
    return tl, t_v


def load_spec_file(path: str) -> resilience.ResilienceSpec:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    with open(path) as fh:
        parser.read_file(fh)
    section = parser["resilience"]
    return resilience.ResilienceSpec(
        alpha1=section.getint("alpha1"), beta1=section.getint("beta1"),
        alpha2=section.getint("alpha2"), beta2=section.getint("beta2"))


def _cmd_check(opts) -> int:
    tl, t_v = load_trace_file(opts.trace)
    spec = load_spec_file(opts.spec)
    verdict = resilience.check_resilience(tl, t_v, spec)
    metrics = resilience.measure(tl, t_v)
    if isinstance(verdict, resilience.Satisfied):
        print("verdict: satisfied")
    elif isinstance(verdict, resilience.ViolatedAt):
        print(f"verdict: violated at step {verdict.t}")
    else:
        print(f"verdict: censored ({verdict.reason})")

    def show(value):
        return "inf" if math.isinf(value) else f"{value:g}"

    print(f"t_v: {t_v}")
    print(f"dt_rec_epi: {show(metrics.dt_rec_epi)}")
    print(f"dt_dur_epi: {show(metrics.dt_dur_epi)}")
    print(f"dt_rec_act: {show(metrics.dt_rec_act)}")
    print(f"dt_dur_act: {show(metrics.dt_dur_act)}")
    return 0 if isinstance(verdict, resilience.Satisfied) else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="remas")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE")
    p_run.add_argument("--out")
    p_run.add_argument("--threads", type=int, default=1)
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="scalability sweep (table2.csv)")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--sizes", default="10,150,300")
    p_sweep.add_argument("--topologies", default="ring,smallworld")
    p_sweep.add_argument("--modes")
    p_sweep.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE")
    p_sweep.add_argument("--out")
    p_sweep.add_argument("--threads", type=int, default=1)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_check = sub.add_parser("check", help="standalone resilience monitor")
    p_check.add_argument("--trace", required=True)
    p_check.add_argument("--spec", required=True)
    p_check.set_defaults(func=_cmd_check)

    p_bench = sub.add_parser("bench", help="compare kernel backends")
    p_bench.add_argument("--agents", type=int, default=150)
    p_bench.add_argument("--horizon", type=int, default=2500)
    p_bench.add_argument("--mode", default="cooperative_kripke")
    p_bench.add_argument("--repeats", type=int, default=3)
    p_bench.set_defaults(func=None)

    opts = parser.parse_args(argv)
    if opts.command == "bench":
        from . import bench
        bench.main(["--agents", str(opts.agents), "--horizon", str(opts.horizon),
                    "--mode", opts.mode, "--repeats", str(opts.repeats)])
        return 0
    return opts.func(opts)


if __name__ == "__main__":
    sys.exit(main())
