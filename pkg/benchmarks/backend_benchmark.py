#!/usr/bin/env python3
"""Time the compiled kernels against the NumPy fallback.

Runs the three hot kernels (simulation recursion, truncated variance
filter, filter with parameter derivatives) and one full QML fit under each
backend and prints a comparison table.

Usage: python benchmarks/backend_benchmark.py [--t 6000] [--reps 20]
"""

import argparse
import importlib
import os
import sys
import time

import numpy as np


def _load(backend):
    os.environ["ATVGARCH_BACKEND"] = backend
    for name in [m for m in list(sys.modules) if m.startswith("atvgarch")]:
        del sys.modules[name]
    return importlib.import_module("atvgarch")


def _time(fn, reps):
    fn()  # warm up
    t0 = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - t0) / reps


def bench(backend, n_obs, reps):
    ag = _load(backend)
    from atvgarch.estimate import FitOptions, fit
    from atvgarch.likelihood import LikelihoodConfig, loglik_and_score, truncated_variance
    from atvgarch.montecarlo import dgp_theta
    from atvgarch.simulate import SimConfig, simulate

    assert ag.BACKEND == backend, f"wanted {backend}, got {ag.BACKEND}"
    theta = dgp_theta(18.0)
    cfg = SimConfig(theta=theta, n_obs=n_obs, seed=123)
    frame = simulate(cfg)
    x2 = frame.x**2
    lcfg = LikelihoodConfig()

    results = {}
    results["simulate"] = _time(lambda: simulate(cfg), reps)
    results["variance filter"] = _time(
        lambda: truncated_variance(theta, x2, frame.times, lcfg), reps
    )
    results["filter + score"] = _time(
        lambda: loglik_and_score(theta, frame, lcfg), reps
    )
    results["full fit"] = _time(
        lambda: fit(frame, theta.spec(), FitOptions(start=theta, compute_covariance=False)),
        max(1, reps // 10),
    )
    return results


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--t", type=int, default=6000, help="series length")
    parser.add_argument("--reps", type=int, default=20, help="timing repetitions")
    args = parser.parse_args()

    all_results = {}
    for backend in ("python", "cython"):
        try:
            all_results[backend] = bench(backend, args.t, args.reps)
        except ImportError as exc:
            print(f"backend {backend} unavailable: {exc}")

    if len(all_results) < 2:
        for backend, res in all_results.items():
            for name, sec in res.items():
                print(f"{backend:>8} {name:<18} {sec * 1e3:9.3f} ms")
        return

    print(f"T = {args.t}, truncation lag = 200, averaged over {args.reps} runs\n")
    print(f"{'kernel':<18} {'python (ms)':>12} {'cython (ms)':>12} {'speedup':>9}")
    for name in all_results["python"]:
        py = all_results["python"][name] * 1e3
        cy = all_results["cython"][name] * 1e3
        print(f"{name:<18} {py:>12.3f} {cy:>12.3f} {py / cy:>8.1f}x")


if __name__ == "__main__":
    main()
