"""Compare the numba and pure-numpy kernel paths.

    python benchmarks/bench_kernels.py [--points 16384] [--repeat 5]

Times the two pointwise kernels on random data and a short split-operator run
on the Fig.-2 grid with each backend, and checks that both paths agree.
Setting GAUGECAVITY_NO_NUMBA only changes the default backend; this script
switches explicitly.
"""
import argparse
import math
import timeit

import numpy as np

from gaugecavity import _kernels
from gaugecavity.config import RunConfig
from gaugecavity.field import initial_state
from gaugecavity.propagator import propagate_state


def best_of(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def bench_kernels(npts, repeat):
    rng = np.random.default_rng(0)
    rows = []
    for d in (2, 3):
        u = rng.normal(size=(d, d, npts)) + 1j * rng.normal(size=(d, d, npts))
        psi = rng.normal(size=(d, npts)) + 1j * rng.normal(size=(d, npts))
        t_np = best_of(lambda: _kernels.apply_pointwise_numpy(u, psi.copy()), repeat, 20)
        row = [f"apply_pointwise d={d}", t_np]
        if _kernels.HAVE_NUMBA:
            _kernels.apply_pointwise_numba(u, psi.copy())  # compile
            t_nb = best_of(lambda: _kernels.apply_pointwise_numba(u, psi.copy()), repeat, 20)
            err = np.abs(_kernels.apply_pointwise_numpy(u, psi.copy())
                         - _kernels.apply_pointwise_numba(u, psi.copy())).max()
            row += [t_nb, err]
        rows.append(row)
    m = rng.normal(size=(2, 2, npts)) + 1j * rng.normal(size=(2, 2, npts))
    m = 0.5 * (m + np.conj(np.swapaxes(m, 0, 1)))
    t_np = best_of(lambda: _kernels.expm2_numpy(m, -0.01j), repeat, 20)
    row = ["expm2", t_np]
    if _kernels.HAVE_NUMBA:
        _kernels.expm2_numba(m, -0.01j)
        t_nb = best_of(lambda: _kernels.expm2_numba(m, -0.01j), repeat, 20)
        row += [t_nb, np.abs(_kernels.expm2_numpy(m, -0.01j) - _kernels.expm2_numba(m, -0.01j)).max()]
    rows.append(row)
    return rows


def bench_propagation(n_steps, repeat):
    cfg = RunConfig.load("fig2_cw")
    spec = cfg.model_spec()
    grid = cfg.grid(2)
    state = initial_state(spec, grid, np.array([-1.0, 1.0]) / math.sqrt(2.0), cfg.centers(2))
    dt = cfg.get("time.dt_ns")
    results, finals = {}, {}
    saved = _kernels.USE_NUMBA
    try:
        for name, flag in (("numpy", False), ("numba", True)):
            if flag and not _kernels.HAVE_NUMBA:
                continue
            _kernels.USE_NUMBA = flag
            finals[name] = propagate_state(state, spec, dt, dt * n_steps)  # warm-up and compile
            results[name] = best_of(lambda: propagate_state(state, spec, dt, dt * n_steps), repeat, 1) / n_steps
    finally:
        _kernels.USE_NUMBA = saved
    err = None
    if len(finals) == 2:
        err = np.abs(finals["numpy"].amplitudes - finals["numba"].amplitudes).max()
    return grid.n, results, err


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--points", type=int, default=128 * 128)
    parser.add_argument("--steps", type=int, default=200)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    print(f"numba available: {_kernels.HAVE_NUMBA}, default backend: {_kernels.backend()}")
    print(f"\npointwise kernels, {args.points} points (seconds per call)")
    print(f"{'kernel':24s} {'numpy':>11s} {'numba':>11s} {'speedup':>8s} {'max diff':>10s}")
    for row in bench_kernels(args.points, args.repeat):
        if len(row) == 4:
            name, t_np, t_nb, err = row
            print(f"{name:24s} {t_np:11.3e} {t_nb:11.3e} {t_np / t_nb:8.2f} {err:10.1e}")
        else:
            print(f"{row[0]:24s} {row[1]:11.3e}")

    n, results, err = bench_propagation(args.steps, args.repeat)
    print(f"\nStrang step, Fig.-2 grid {n}x{n} (seconds per step)")
    for name, t in results.items():
        print(f"  {name:6s} {t:.3e}")
    if err is not None:
        print(f"  speedup {results['numpy'] / results['numba']:.2f}, final-state max diff {err:.1e}")


if __name__ == "__main__":
    main()
