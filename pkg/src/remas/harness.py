"""Experiment harness: configuration files, trial execution, metric
aggregation and CSV emission, plus the topology/size scalability sweep.

A configuration is one INI file (configparser syntax, flat key = value
lines grouped in sections); any key can be overridden on the command line
with ``--set section.key=value``.  A single experiment may run several
learning modes over the same paired random realisations: the environment
noise of a trial depends only on (base_seed, trial), never on the mode.

CSV schemas (stable column order, %.10g float formatting):

* curves.csv   step, mode, metric, mean, ci
* metrics.csv  mode, trial, t_v, t_det, dt_rec_epi, dt_dur_epi,
               dt_rec_act, dt_dur_act, cens_det, cens_rec_epi,
               cens_dur_epi, cens_rec_act, cens_dur_act, msgs_total
* table2.csv   n, topology, mode, recovery, recovery_censored,
               reward_after, msgs_total, msgs_per_agent_step

Censored quantities are reported as the remaining horizon with their
censored flag set.
"""

from __future__ import annotations

import configparser
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import env as envmod
from . import logic, net, resilience
from .engine import EngineParams, TrialEngine, TrialRecord
from .policies import MODES

Z_95 = 1.96

# two-sided 95% Student quantiles for small trial counts (df 1..30)
_T_95 = [12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262,
         2.228, 2.201, 2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101,
         2.093, 2.086, 2.080, 2.074, 2.069, 2.064, 2.060, 2.056, 2.052,
         2.048, 2.045, 2.042]


class ConfigError(Exception):
    pass


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    modes: tuple = MODES
    trials: int = 10
    base_seed: int = 1
    horizon: int = 2500

    n_arms: int = 16
    sigma: float = 1.0
    n_worlds: int = 2
    catalog_seed: int = 7
    per_trial_catalog: bool = True
    change_rule: str = "fresh"
    min_gap: float = 0.0
    min_drop: float = 0.0
    mean_low: float = envmod.MEAN_LOW
    mean_high: float = envmod.MEAN_HIGH
    changes: tuple = ((1400, 1),)

    topology: str = "ring"
    n_agents: int = 12
    mean_degree: int = 4
    rewire_prob: float = 0.1
    topology_seed: int = 3
    regenerate_topology: bool = True

    epsilon1: float = 1.6
    epsilon1_units: str = "sigma"   # "sigma": threshold = eps1 * noise scale
    window_len: int = 30
    exceed_threshold: int = 13

    eta_epi: float = 10.0
    include_current_world: bool = True
    evidence_rule: str = "round_robin"
    min_evidence_pulls: int = 4
    evidence_decay: float = 1.0
    evidence_drain: float = 0.99

    gamma: float = 0.998
    kripke_gamma: float = 1.0
    n0: int = 5
    ucb_sigma: float = -1.0         # exploration scale; <0 means use sigma

    alpha1: int = 550
    beta1: int = 600
    alpha2: int = 174
    beta2: int = 436
    phi2: str = ""                  # formula text; empty = post-world identity

    smoothing_window: int = 50
    ci: str = "normal"              # normal z=1.96 or student t
    recovery_tolerance: float = 0.02
    recovery_window: int = 25       # smoothing for the recovery detector only
    recovery_sustain: int = 100
    reward_after_window: int = 200
    out_dir: str = "out"

    def resilience_spec(self) -> resilience.ResilienceSpec:
        return resilience.ResilienceSpec(self.alpha1, self.beta1,
                                         self.alpha2, self.beta2)

    def resid_threshold(self) -> float:
        if self.epsilon1_units == "sigma":
            return self.epsilon1 * self.sigma
        if self.epsilon1_units == "reward":
            return self.epsilon1
        raise ConfigError(f"unknown epsilon1_units {self.epsilon1_units!r}")

    def schedule(self) -> envmod.Schedule:
        return envmod.Schedule(initial_world=0, changes=tuple(self.changes))

    def t_v(self) -> int | None:
        return self.changes[0][0] if self.changes else None

    def post_world(self) -> int | None:
        return self.changes[0][1] if self.changes else None

    def validate(self) -> list:
        """Config sanity plus the necessary time-budget check: with a known
        disturbance schedule, the inter-change gap must exceed both
        alpha1+beta1 and alpha1+alpha2+beta2."""
        warnings = []
        for name in ("trials", "horizon", "n_arms", "n_agents", "window_len",
                     "exceed_threshold", "n0", "alpha1", "beta1", "alpha2",
                     "beta2", "smoothing_window"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        for mode in self.modes:
            if mode not in MODES:
                raise ConfigError(f"unknown mode {mode!r}")
        for name in ("evidence_decay", "evidence_drain"):
            if not 0.0 < getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must lie in (0, 1]")
        if not 0.0 < self.recovery_tolerance < 1.0:
            raise ConfigError("recovery_tolerance must lie in (0, 1)")
        delta = self.schedule().delta()
        budget = max(self.alpha1 + self.beta1,
                     self.alpha1 + self.alpha2 + self.beta2)
        if delta <= budget:
            warnings.append(
                f"inter-disturbance gap {delta} does not exceed the "
                f"necessary time budget {budget}; the resilience "
                f"specification cannot be satisfiable")
        return warnings


_SECTIONS = {
    "experiment": {"name": str, "modes": "modes", "trials": int,
                   "base_seed": int, "horizon": int},
    "env": {"arms": ("n_arms", int), "sigma": float,
            "worlds": ("n_worlds", int), "catalog_seed": int,
            "per_trial_catalog": "bool", "change_rule": str,
            "min_gap": float, "min_drop": float, "mean_low": float,
            "mean_high": float, "changes": "changes"},
    "topology": {"kind": ("topology", str), "n": ("n_agents", int),
                 "mean_degree": int, "rewire_prob": float,
                 "topology_seed": int, "regenerate_per_trial":
                 ("regenerate_topology", "bool")},
    "detector": {"epsilon1": float, "epsilon1_units": str,
                 "window": ("window_len", int),
                 "exceed_threshold": int},
    "evidence": {"eta_epi": float, "include_current_world": "bool",
                 "arm_rule": ("evidence_rule", str),
                 "min_evidence_pulls": int, "decay": ("evidence_decay", float),
                 "drain": ("evidence_drain", float)},
    "policy": {"gamma": float, "kripke_gamma": float, "n0": int,
               "ucb_sigma": float},
    "resilience": {"alpha1": int, "beta1": int, "alpha2": int, "beta2": int,
                   "phi2": str},
    "output": {"smoothing_window": int, "ci": str,
               "recovery_tolerance": float, "recovery_window": int,
               "recovery_sustain": int, "reward_after_window": int,
               "dir": ("out_dir", str)},
}


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _parse_changes(text: str) -> tuple:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        t, _, w = part.partition(":")
        out.append((int(t), int(w)))
    return tuple(out)


def _parse_modes(text: str) -> tuple:
    text = text.strip()
    if text == "all":
        return MODES
    return tuple(m.strip() for m in text.split(",") if m.strip())


def _apply_key(cfg_kwargs: dict, section: str, key: str, value: str) -> None:
    spec = _SECTIONS.get(section, {}).get(key)
    if spec is None:
        raise ConfigError(f"unknown config key [{section}] {key}")
    attr = key
    conv = spec
    if isinstance(spec, tuple):
        attr, conv = spec
    if conv == "bool":
        cfg_kwargs[attr] = _parse_bool(value)
    elif conv == "changes":
        cfg_kwargs[attr] = _parse_changes(value)
    elif conv == "modes":
        cfg_kwargs[attr] = _parse_modes(value)
    else:
        cfg_kwargs[attr] = conv(value)


def load_config(path: str, overrides=()) -> ExperimentConfig:
    """Parse an INI experiment file and apply --set section.key=value
    overrides in order."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    with open(path) as fh:
        parser.read_file(fh)
    kwargs: dict = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section [{section}]")
        for key, value in parser.items(section):
            _apply_key(kwargs, section, key, value)
    cfg = ExperimentConfig(**kwargs)
    for text in overrides:
        target, sep, value = text.partition("=")
        if not sep or not value:
            raise ConfigError(f"override must look like section.key=value: {text!r}")
        section, _, key = target.partition(".")
        kwargs2: dict = {}
        _apply_key(kwargs2, section.strip(), key.strip(), value.strip())
        cfg = replace(cfg, **kwargs2)
    return cfg


# ---------------------------------------------------------------------------
# Trial execution


@dataclass
class TrialResult:
    mode: str
    trial: int
    t_v: int | None
    horizon: int
    n_agents: int
    total_reward: np.ndarray
    cum_reward: np.ndarray
    cum_regret: np.ndarray
    regret_step: np.ndarray
    fraction_optimal: np.ndarray
    reward_mean: np.ndarray
    metrics: resilience.MetricsRecord | None
    msgs_total: int
    msgs_flood: int
    optimal_mean_post: float
    record: TrialRecord = field(repr=False, default=None)


def _mutual_timeline(cfg: ExperimentConfig, record: TrialRecord,
                     catalog: envmod.WorldCatalog) -> tuple:
    """Per-step mutual knowledge of the post-change condition.

    The condition defaults to the post-change world's identity formula; a
    formula string in the config (e.g. a disjunction of per-arm atoms) is
    evaluated world by world against the catalog vocabulary instead.  An
    agent knows the condition when every world it considers possible
    satisfies it; committed belief states are singletons, so this reduces
    to a truth lookup on the believed world."""
    post = cfg.post_world() or 0
    if not cfg.phi2:
        return tuple(bool(x) for x in record.mutual_knowledge_of(post))
    vocab = envmod.build_atoms_and_formulas(catalog)
    formula = logic.parse(cfg.phi2)

    class _OneWorld:
        length = 1

        def __init__(self, w):
            self.w = w

        def actual_world(self, t):
            return self.w

        def atoms_of(self, w):
            return vocab.valuation[w]

        def accessible(self, agent, w, t):
            return ()

        def has_atom(self, name):
            return name in vocab.atoms

        def has_agent(self, agent):
            return False

    true_in = np.array([
        logic.eval_formula(logic.EvalPoint(_OneWorld(w), 0), formula)
        for w in range(catalog.n_worlds)])
    return tuple(bool(x) for x in true_in[record.believed].all(axis=1))


def _trial_catalog(cfg: ExperimentConfig, trial: int) -> envmod.WorldCatalog:
    seed = (cfg.catalog_seed, trial) if cfg.per_trial_catalog else cfg.catalog_seed
    return envmod.make_catalog(seed, cfg.n_arms, cfg.n_worlds,
                               change_rule=cfg.change_rule,
                               min_gap=cfg.min_gap, min_drop=cfg.min_drop,
                               low=cfg.mean_low, high=cfg.mean_high)


def _trial_graph(cfg: ExperimentConfig, trial: int) -> net.Graph:
    if cfg.topology == "ring":
        return net.ring(cfg.n_agents)
    if cfg.topology == "smallworld":
        seed = (cfg.topology_seed, trial) if cfg.regenerate_topology \
            else cfg.topology_seed
        return net.small_world(cfg.n_agents, cfg.mean_degree,
                               cfg.rewire_prob, seed)
    raise ConfigError(f"unknown topology {cfg.topology!r}")


def run_trial(cfg: ExperimentConfig, mode: str, trial: int,
              keep_record: bool = False) -> TrialResult:
    """One deterministic trial: bit-identical output for identical inputs."""
    catalog = _trial_catalog(cfg, trial)
    graph = None if mode == "independent_ducb" else _trial_graph(cfg, trial)
    sampler = envmod.RewardSampler(cfg.sigma, (cfg.base_seed, trial),
                                   n_agents=cfg.n_agents)
    noise = sampler.noise_matrix(cfg.horizon, cfg.n_agents)
    params = EngineParams(
        mode=mode, n_agents=cfg.n_agents, n_arms=cfg.n_arms,
        horizon=cfg.horizon, sigma=cfg.sigma, gamma=cfg.gamma,
        kripke_gamma=cfg.kripke_gamma, resid_threshold=cfg.resid_threshold(),
        window_len=cfg.window_len, exceed_threshold=cfg.exceed_threshold,
        eta_epi=cfg.eta_epi, n0=cfg.n0,
        ucb_sigma=None if cfg.ucb_sigma < 0 else cfg.ucb_sigma,
        evidence_rule=cfg.evidence_rule,
        include_current_world=cfg.include_current_world,
        min_evidence_pulls=cfg.min_evidence_pulls,
        evidence_decay=cfg.evidence_decay,
        evidence_drain=cfg.evidence_drain)
    record = TrialEngine(params, catalog, cfg.schedule(), noise, graph).run()

    reward_mean = record.reward_mean()
    total_reward = reward_mean * cfg.n_agents
    fraction = record.fraction_optimal()
    t_v = cfg.t_v()
    metrics = None
    optimal_mean_post = catalog.optimal_mean(cfg.post_world() or 0)
    if t_v is not None:
        tl = resilience.Timelines(
            _mutual_timeline(cfg, record, catalog),
            tuple(bool(x) for x in record.group_optimal()))
        t_det = resilience.INFINITE
        for (t, _agent) in record.detections:
            if t >= t_v:
                t_det = t
                break
        metrics = resilience.measure(tl, t_v, t_det)
    return TrialResult(
        mode=mode, trial=trial, t_v=t_v, horizon=cfg.horizon,
        n_agents=cfg.n_agents, total_reward=total_reward,
        cum_reward=np.cumsum(total_reward),
        cum_regret=np.cumsum(record.regret_step),
        regret_step=record.regret_step,
        fraction_optimal=fraction, reward_mean=reward_mean, metrics=metrics,
        msgs_total=record.msgs_total, msgs_flood=record.msgs_flood,
        optimal_mean_post=optimal_mean_post,
        record=record if keep_record else None)


def _run_trial_args(args):
    cfg, mode, trial = args
    return run_trial(cfg, mode, trial)


def run_trials(cfg: ExperimentConfig, mode: str, threads: int = 1) -> list:
    """All trials of one mode, in trial order regardless of scheduling."""
    jobs = [(cfg, mode, k) for k in range(cfg.trials)]
    if threads <= 1:
        return [run_trial(cfg, mode, k) for k in range(cfg.trials)]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_run_trial_args, jobs))


# ---------------------------------------------------------------------------
# Aggregation


def moving_average(x: np.ndarray, window: int) -> np.ndarray:
    """Trailing moving average with a ramp-up at the start (window clipped
    to the available prefix); same length as the input."""
    if window <= 1:
        return np.asarray(x, dtype=float)
    c = np.cumsum(np.insert(np.asarray(x, dtype=float), 0, 0.0))
    t = np.arange(1, len(x) + 1)
    lo = np.maximum(t - window, 0)
    return (c[t] - c[lo]) / (t - lo)


def _ci_factor(cfg: ExperimentConfig, trials: int) -> float:
    if cfg.ci == "normal":
        return Z_95
    if cfg.ci == "student":
        df = max(trials - 1, 1)
        return _T_95[df - 1] if df <= len(_T_95) else Z_95
    raise ConfigError(f"unknown ci kind {cfg.ci!r}")


@dataclass
class AggregateCurves:
    """Per-step mean and CI half-width across smoothed per-trial series."""

    mode: str
    metric: str
    mean: np.ndarray
    ci: np.ndarray


CURVE_METRICS = ("total_reward", "cum_reward", "cum_regret", "fraction_optimal")


def aggregate_curves(cfg: ExperimentConfig, results: list) -> list:
    out = []
    factor = _ci_factor(cfg, len(results))
    for metric in CURVE_METRICS:
        series = np.stack([
            moving_average(getattr(r, metric), cfg.smoothing_window)
            for r in results])
        mean = series.mean(axis=0)
        if len(results) > 1:
            sd = series.std(axis=0, ddof=1)
            ci = factor * sd / math.sqrt(len(results))
        else:
            ci = np.zeros_like(mean)
        out.append(AggregateCurves(results[0].mode, metric, mean, ci))
    return out


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isinf(x):
            return "inf"
        return f"{x:.10g}"
    return str(x)


def write_csv(path: str, header: list, rows: list) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def metrics_rows(cfg: ExperimentConfig, results: list) -> list:
    """metrics.csv rows; censored values carry the remaining horizon and a
    raised flag."""
    rows = []
    for r in results:
        m = r.metrics
        if m is None:
            continue
        horizon = r.horizon
        remaining = horizon - m.t_v
        t_det, c_det = (m.t_det, 0) if math.isfinite(m.t_det) else (horizon, 1)
        if math.isfinite(m.dt_rec_epi):
            rec_e, c_re = m.dt_rec_epi, 0
            if math.isfinite(m.dt_dur_epi):
                dur_e, c_de = m.dt_dur_epi, 0
            else:
                dur_e, c_de = horizon - m.t_rec_epi, 1
            if math.isfinite(m.dt_rec_act):
                rec_a, c_ra = m.dt_rec_act, 0
                if math.isfinite(m.dt_dur_act):
                    dur_a, c_da = m.dt_dur_act, 0
                else:
                    dur_a, c_da = horizon - m.t_rec_act, 1
            else:
                rec_a, c_ra = horizon - m.t_rec_epi, 1
                dur_a, c_da = 0, 1
        else:
            rec_e, c_re = remaining, 1
            dur_e, c_de = 0, 1
            rec_a, c_ra = 0, 1
            dur_a, c_da = 0, 1
        rows.append([r.mode, r.trial, m.t_v, t_det, rec_e, dur_e, rec_a,
                     dur_a, c_det, c_re, c_de, c_ra, c_da, r.msgs_total])
    return rows


METRICS_HEADER = ["mode", "trial", "t_v", "t_det", "dt_rec_epi", "dt_dur_epi",
                  "dt_rec_act", "dt_dur_act", "cens_det", "cens_rec_epi",
                  "cens_dur_epi", "cens_rec_act", "cens_dur_act", "msgs_total"]


def run_experiment(cfg: ExperimentConfig, threads: int = 1,
                   out_dir: str | None = None) -> dict:
    """Run every configured mode, aggregate, and write curves.csv and
    metrics.csv.  Returns {mode: [TrialResult]} for further analysis."""
    for warning in cfg.validate():
        logging.getLogger(__name__).warning(warning)
    out_dir = out_dir or cfg.out_dir
    all_results = {}
    curve_rows = []
    metric_rows_all = []
    for mode in cfg.modes:
        results = run_trials(cfg, mode, threads)
        all_results[mode] = results
        for agg in aggregate_curves(cfg, results):
            for t in range(cfg.horizon):
                curve_rows.append([t, mode, agg.metric,
                                   float(agg.mean[t]), float(agg.ci[t])])
        metric_rows_all.extend(metrics_rows(cfg, results))
    write_csv(os.path.join(out_dir, "curves.csv"),
              ["step", "mode", "metric", "mean", "ci"], curve_rows)
    write_csv(os.path.join(out_dir, "metrics.csv"),
              METRICS_HEADER, metric_rows_all)
    return all_results


# ---------------------------------------------------------------------------
# Reward-based total recovery (scalability table)


def total_recovery(result: TrialResult, cfg: ExperimentConfig) -> tuple[float, bool]:
    """First time after the change at which the smoothed per-agent expected
    reward returns to the post-change steady-state optimum within the
    relative tolerance, sustained for the configured number of steps.
    Returns (steps after t_v, censored flag).

    The detector reads the expected reward of the pulled arms (optimal mean
    minus per-agent regret), so observation noise cannot fake or mask a
    comeback; only the policies' actual arm choices matter."""
    t_v = result.t_v
    if t_v is None:
        raise ConfigError("total recovery needs a disturbance schedule")
    target = (1.0 - cfg.recovery_tolerance) * result.optimal_mean_post
    horizon = result.horizon
    expected = result.optimal_mean_post - result.regret_step / result.n_agents
    # smooth the post-change segment only, so lingering pre-change reward
    # cannot satisfy the comeback condition
    ok = np.zeros(horizon, dtype=bool)
    post = moving_average(expected[t_v + 1:], cfg.recovery_window)
    ok[t_v + 1:] = post >= target
    sustain = cfg.recovery_sustain
    run = 0
    start = None
    for t in range(t_v + 1, horizon):
        if ok[t]:
            if start is None:
                start = t
            run += 1
            if run >= sustain:
                return float(start - t_v), False
        else:
            start, run = None, 0
    if start is not None:
        # held through the end of the horizon, shorter than the sustain window
        return float(start - t_v), False
    return float(horizon - t_v), True


def fraction_optimal_crossing(result: TrialResult, cfg: ExperimentConfig,
                              level: float = 0.9) -> float:
    """First post-change step at which the smoothed fraction-optimal curve
    exceeds the level; horizon when it never does.  Smoothing restarts at
    the change point so pre-change optimality cannot leak across."""
    t_v = result.t_v
    if t_v is None:
        raise ConfigError("crossing needs a disturbance schedule")
    sm = moving_average(result.fraction_optimal[t_v + 1:], cfg.smoothing_window)
    for i, value in enumerate(sm):
        if value > level:
            return float(t_v + 1 + i)
    return float(result.horizon)


def sweep(cfg: ExperimentConfig, sizes, topologies, threads: int = 1,
          out_dir: str | None = None, modes=None) -> list:
    """Scalability sweep across network sizes and topologies; writes
    table2.csv and returns its rows."""
    out_dir = out_dir or cfg.out_dir
    modes = tuple(modes) if modes else cfg.modes
    rows = []
    for n in sizes:
        for topology in topologies:
            cell_cfg = replace(cfg, n_agents=n, topology=topology)
            for mode in modes:
                results = run_trials(cell_cfg, mode, threads)
                recs = [total_recovery(r, cell_cfg) for r in results]
                rec_mean = float(np.mean([v for v, _ in recs]))
                censored = int(any(c for _, c in recs))
                after = float(np.mean([
                    r.reward_mean[-cfg.reward_after_window:].mean()
                    for r in results]))
                msgs = float(np.mean([r.msgs_total for r in results]))
                per_step = msgs / (n * cfg.horizon)
                rows.append([n, topology, mode, rec_mean, censored,
                             after, msgs, per_step])
    write_csv(os.path.join(out_dir, "table2.csv"),
              ["n", "topology", "mode", "recovery", "recovery_censored",
               "reward_after", "msgs_total", "msgs_per_agent_step"], rows)
    return rows
