"""Backend benchmark: run the same trial on the compiled kernels and on
the numpy reference, report wall times and the speedup."""

from __future__ import annotations

import time

from . import _kernels
from . import harness


def bench_trial(n_agents: int = 150, horizon: int = 2500,
                mode: str = "cooperative_kripke", repeats: int = 3) -> dict:
    cfg = harness.ExperimentConfig(
        modes=(mode,), trials=1, n_agents=n_agents, horizon=horizon,
        changes=((horizon // 2, 1),), change_rule="tiered", min_gap=0.24,
        min_drop=1.0, n0=85, ucb_sigma=0.35)
    timings = {}
    for name in ("cython", "python"):
        impl = _load_backend(name)
        if impl is None:
            timings[name] = None
            continue
        _swap_backend(impl)
        best = float("inf")
        for _ in range(repeats):
            start = time.perf_counter()
            harness.run_trial(cfg, mode, 0)
            best = min(best, time.perf_counter() - start)
        timings[name] = best
    _restore_backend()
    return timings


def _load_backend(name: str):
    if name == "python":
        from ._kernels import pyref
        return pyref
    try:
        from ._kernels import _core
        return _core
    except ImportError:
        return None


_ORIGINALS = {}


def _swap_backend(impl) -> None:
    if not _ORIGINALS:
        for fn in ("ucb_select_batch", "discounted_update_batch",
                   "window_update_batch", "ledger_update_batch",
                   "maximin_batch", "mix_batch"):
            _ORIGINALS[fn] = getattr(_kernels, fn)
    for fn in _ORIGINALS:
        setattr(_kernels, fn, getattr(impl, fn))


def _restore_backend() -> None:
    for fn, orig in _ORIGINALS.items():
        setattr(_kernels, fn, orig)


def main(args=None) -> None:
    import argparse
    parser = argparse.ArgumentParser(description="compare kernel backends")
    parser.add_argument("--agents", type=int, default=150)
    parser.add_argument("--horizon", type=int, default=2500)
    parser.add_argument("--mode", default="cooperative_kripke")
    parser.add_argument("--repeats", type=int, default=3)
    opts = parser.parse_args(args)
    timings = bench_trial(opts.agents, opts.horizon, opts.mode, opts.repeats)
    py = timings.get("python")
    cy = timings.get("cython")
    print(f"backend active at import: {_kernels.BACKEND}")
    if py is not None:
        print(f"python backend:  {py:.3f} s/trial")
    if cy is not None:
        print(f"cython backend:  {cy:.3f} s/trial")
    if py and cy:
        print(f"speedup: {py / cy:.2f}x")
    elif cy is None:
        print("compiled extension not available; only the fallback was timed")


if __name__ == "__main__":
    main()
