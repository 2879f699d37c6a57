"""Self-checks of the grid engine against exact and analytic references.

Each check returns a ``Check`` row; ``run_suite`` collects them. The oracle
checks take their resolution (grid, dt, n_max) from the run configuration so
that a coarse configuration is caught; the analytic property checks use fixed
internal settings.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import oracle
from .errors import NumericalError, TruncationError
from .field import QuadratureGrid, coherent_amplitude, initial_state, overlap
from .model import ModelKind, ModelSpec, SIGMA_Y, SIGMA_X
from .propagator import PropagatorConfig, evolve, propagate_state

FIDELITY_TOL = 1e-4
INVERSION_TOL = 1e-8
ROTATION_TOL = 1e-6
KAPPA_TOL = 1e-6
GAMMA_TOL = 1e-9
STRANG_RANGE = (3.5, 4.5)
COVARIANCE_TOL = 1e-10
NORM_TOL = 1e-9


@dataclass
class Check:
    name: str
    value: float
    tolerance: str
    passed: bool
    seconds: float = 0.0
    detail: str = ""


def _timed(fn):
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        try:
            out = fn(*args, **kwargs)
        except (TruncationError, NumericalError, ValueError) as exc:
            name = fn.__name__.removeprefix("check_")
            out = [Check(name, math.nan, "-", False, detail=f"{type(exc).__name__}: {exc}")]
        if isinstance(out, Check):
            out = [out]
        elapsed = time.perf_counter() - start
        for c in out:
            c.seconds = elapsed / len(out)
        return out

    wrapper.__name__ = fn.__name__
    return wrapper


@_timed
def check_oracle(spec, grid, centers, atom, dt, t_final, fock_cfg, stride_ns=0.5):
    """Grid run against the Fock oracle: final-state fidelity and inversion at each snapshot."""
    n = fock_cfg.n_max
    psi0 = oracle.product_state(atom, [oracle.fock_coherent(coherent_amplitude(x, p), n) for x, p in centers])
    state = initial_state(spec, grid, atom, centers)
    stride = max(1, round(stride_ns / dt))
    rec = evolve(state, spec, PropagatorConfig(dt, t_final, snapshot_stride=stride))
    h = oracle.build_hamiltonian(spec, fock_cfg)
    w_ref, prev, psi = [], 0.0, psi0
    for t in rec.times:
        psi = oracle.propagate(psi, h, t - prev, fock_cfg, spec=spec, checkpoints=1) if t > prev else psi
        prev = t
        pops = oracle.fock_observables(psi, spec, n)[1]
        w_ref.append(pops[1] - pops[0])
    ref_state = oracle.fock_to_grid(psi, grid, spec, n)
    infidelity = 1.0 - abs(overlap(ref_state, rec.final_state)) ** 2
    werr = float(np.abs(np.array(w_ref) - rec.inversion).max())
    return [
        Check("oracle_fidelity", infidelity, f"1-F < {FIDELITY_TOL:g}", infidelity < FIDELITY_TOL),
        Check("inversion_accuracy", werr, f"< {INVERSION_TOL:g}", werr < INVERSION_TOL),
    ]


@_timed
def check_free_rotation(omega=1.0, dt=1e-4):
    """g = 0: <X>, <P> rotate rigidly, X(t) = x0 cos wt + p0 sin wt."""
    spec = ModelSpec(ModelKind.RABI, omega, 0.0, atom_splitting=1.2)
    grid = QuadratureGrid(1, 256, (10.0,))
    x0, p0 = 1.0, 2.0
    state = initial_state(spec, grid, [1.0, 0.0], [(x0, p0)])
    period = 2.0 * math.pi / omega
    rec = evolve(state, spec, PropagatorConfig(dt, period, snapshot_stride=max(1, round(0.05 * period / dt))))
    wt = omega * rec.times
    ex = np.abs(rec.x_mean[:, 0] - (x0 * np.cos(wt) + p0 * np.sin(wt))).max()
    ep = np.abs(rec.p_mean[:, 0] - (p0 * np.cos(wt) - x0 * np.sin(wt))).max()
    err = float(max(ex, ep))
    return Check("free_rotation", err, f"< {ROTATION_TOL:g}", err < ROTATION_TOL)


@_timed
def check_decay_laws(kappa=0.05, gamma=0.05, dt=1e-3, t_final=5.0):
    grid = QuadratureGrid(1, 128, (10.0,))
    x0, p0 = 1.0, 2.0
    stride = max(1, round(0.25 / dt))
    spec = ModelSpec(ModelKind.RABI, 1.0, 0.0, atom_splitting=1.2, kappa=kappa)
    rec = evolve(initial_state(spec, grid, [1.0, 0.0], [(x0, p0)]), spec,
                 PropagatorConfig(dt, t_final, stride, losses_enabled=True))
    n_mean = abs(coherent_amplitude(x0, p0)) ** 2
    ek = float(np.abs(rec.norm2 - np.exp(n_mean * (np.exp(-2.0 * kappa * rec.times) - 1.0))).max())
    spec = ModelSpec(ModelKind.RABI, 1.0, 0.0, atom_splitting=1.2, gamma=gamma)
    rec = evolve(initial_state(spec, grid, [0.0, 1.0], [(x0, p0)]), spec,
                 PropagatorConfig(dt, t_final, stride, losses_enabled=True))
    eg = float(np.abs(rec.norm2 - np.exp(-2.0 * gamma * rec.times)).max())
    return [
        Check("decay_kappa", ek, f"< {KAPPA_TOL:g}", ek < KAPPA_TOL),
        Check("decay_gamma", eg, f"< {GAMMA_TOL:g}", eg < GAMMA_TOL),
    ]


def strang_errors(spec, grid, state, t_final, dt, refine=16):
    """|W(dt) - W_ref| and |W(dt/2) - W_ref| at t_final, W_ref from dt/refine."""
    def final_w(step):
        rec = evolve(state, spec, PropagatorConfig(step, t_final, snapshot_stride=10**9))
        return rec.inversion[-1]

    ref = final_w(dt / refine)
    return abs(final_w(dt) - ref), abs(final_w(0.5 * dt) - ref)


@_timed
def check_strang_order(dt=0.02, t_final=2.0):
    spec = ModelSpec(ModelKind.RABI, 1.0, 0.3, atom_splitting=1.2)
    grid = QuadratureGrid(1, 128, (10.0,))
    state = initial_state(spec, grid, np.array([-1.0, 1.0]) / math.sqrt(2.0), [(0.0, 2.0)])
    e1, e2 = strang_errors(spec, grid, state, t_final, dt)
    ratio = e1 / e2
    lo, hi = STRANG_RANGE
    return Check("strang_order", ratio, f"in [{lo}, {hi}]", lo <= ratio <= hi,
                 detail=f"errors {e1:.3e}, {e2:.3e}")


def _frame_unitary(theta=0.7, phi=0.3):
    # exp(-i theta sigma_y) exp(-i phi sigma_x), an arbitrary fixed SU(2) element
    ry = math.cos(theta) * np.eye(2) - 1j * math.sin(theta) * SIGMA_Y
    rx = math.cos(phi) * np.eye(2) - 1j * math.sin(phi) * SIGMA_X
    return ry @ rx


@_timed
def check_gauge_covariance(dt=1e-3, t_final=2.0):
    """Propagating in a rotated internal frame and rotating back gives the same state."""
    spec = ModelSpec(ModelKind.RABI, 1.0, 0.3, atom_splitting=1.2, gamma=0.05)
    grid = QuadratureGrid(1, 128, (10.0,))
    state = initial_state(spec, grid, np.array([-1.0, 1.0]) / math.sqrt(2.0), [(0.0, 2.0)])
    u = _frame_unitary()
    direct = propagate_state(state, spec, dt, t_final, losses=True)
    rotated = state.copy()
    rotated.amplitudes = np.tensordot(u.conj().T, state.amplitudes, axes=1)
    moved = propagate_state(rotated, spec.with_frame(u), dt, t_final, losses=True)
    back = np.tensordot(u, moved.amplitudes, axes=1)
    err = float(np.abs(back - direct.amplitudes).max())
    return Check("gauge_covariance", err, f"< {COVARIANCE_TOL:g}", err < COVARIANCE_TOL)


@_timed
def check_norm_conservation(n_steps=10_000, dt=1e-3):
    spec = ModelSpec(ModelKind.RABI, 1.0, 0.3, atom_splitting=1.2)
    grid = QuadratureGrid(1, 128, (10.0,))
    state = initial_state(spec, grid, np.array([-1.0, 1.0]) / math.sqrt(2.0), [(0.0, 2.0)])
    rec = evolve(state, spec, PropagatorConfig(dt, n_steps * dt, snapshot_stride=500))
    err = float(np.abs(rec.norm2 - 1.0).max())
    return Check("norm_conservation", err, f"< {NORM_TOL:g}", err < NORM_TOL)


def run_suite(run_config):
    """All checks; the oracle pair uses the Rabi setup described by ``run_config``."""
    spec = run_config.model_spec()
    if spec.kind is not ModelKind.RABI:
        raise ValueError("the validation configuration must describe a Rabi model")
    checks = []
    checks += check_oracle(
        spec,
        run_config.grid(1),
        run_config.centers(1),
        run_config.atomic_amplitudes(2),
        run_config.get("time.dt_ns"),
        run_config.get("time.t_final_ns") or 10.0,
        run_config.fock_config(),
    )
    checks += check_free_rotation()
    checks += check_decay_laws()
    checks += check_strang_order()
    checks += check_gauge_covariance()
    checks += check_norm_conservation()
    return checks


def format_table(checks):
    lines = ["check,value,tolerance,status,seconds,detail"]
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        detail = c.detail.replace(",", ";")
        lines.append(f"{c.name},{c.value:.3e},{c.tolerance},{status},{c.seconds:.2f},{detail}")
    return "\n".join(lines) + "\n"
