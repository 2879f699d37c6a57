"""Exact propagation in a truncated Fock basis, used to validate the grid engine.

Basis ordering is (mode 1 Fock) x (mode 2 Fock) x (atom). P = i(a^dag - a)/sqrt(2),
consistent with [X, P] = i; in the momentum representation |n> is
(-i)^n h_n(P) with h_n the normalized Hermite functions.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import TruncationError
from .field import Representation, SpinorField
from .model import ModelKind, bare_atomic_matrix, _coupling_generators

MAX_DENSE_DIM = 20000
TAIL_TOL = 1e-6


class Integrator(str, enum.Enum):
    DENSE_EXP = "DenseExp"
    RK4 = "RK4"


@dataclass(frozen=True)
class FockConfig:
    n_max: int
    integrator: Integrator = Integrator.DENSE_EXP
    dt_oracle: float = 1e-3
    tail_tol: float = TAIL_TOL

    def __post_init__(self):
        object.__setattr__(self, "integrator", Integrator(self.integrator))
        if self.n_max < 4:
            raise ValueError("n_max must be >= 4")
        if not self.dt_oracle > 0:
            raise ValueError("dt_oracle must be > 0")


def annihilation(n_max):
    return np.diag(np.sqrt(np.arange(1, n_max)), k=1).astype(complex)


def _embed(op, mode, n_modes, n_max, dim):
    """op acting on one mode, identity elsewhere (atom last)."""
    factors = [np.eye(n_max)] * n_modes + [np.eye(dim)]
    factors[mode] = op
    out = factors[0]
    for f in factors[1:]:
        out = np.kron(out, f)
    return out


def _atomic(op, n_modes, n_max):
    return np.kron(np.eye(n_max**n_modes), op)


def quadrature_operators(n_max):
    a = annihilation(n_max)
    ad = a.conj().T
    return (a + ad) / math.sqrt(2.0), 1j * (ad - a) / math.sqrt(2.0)


def build_hamiltonian(spec, cfg, losses=False, lambda_excited_decay=False):
    """Dense H (or H_eff when ``losses``) on the truncated basis."""
    n, d, k = cfg.n_max, spec.internal_dim, spec.n_modes
    total = n**k * d
    if total > MAX_DENSE_DIM:
        raise ValueError(f"dense dimension {total} exceeds {MAX_DENSE_DIM}")
    a = annihilation(n)
    number = a.conj().T @ a
    _, p = quadrature_operators(n)
    h = _atomic(bare_atomic_matrix(spec), k, n)
    for mode in range(k):
        h = h + spec.omega * _embed(number + 0.5 * np.eye(n), mode, k, n, d)
    gens = _coupling_generators(spec)
    if spec.frame is not None:
        gens = [spec.frame.conj().T @ gmat @ spec.frame for gmat in gens]
    for mode, gen in enumerate(gens):
        h = h - spec.coupling_g * np.kron(_embed(p, mode, k, n, 1), gen)
    if losses:
        for mode in range(k):
            h = h - 1j * spec.kappa * _embed(number, mode, k, n, d)
        proj = np.zeros((d, d), dtype=complex)
        if spec.kind is ModelKind.BIMODAL_LAMBDA:
            if lambda_excited_decay:
                proj[2, 2] = 1.0
        else:
            proj[1, 1] = 1.0
        if spec.frame is not None:
            proj = spec.frame.conj().T @ proj @ spec.frame
        h = h - 1j * spec.gamma * _atomic(proj, k, n)
    return h


def fock_coherent(alpha, n_max):
    alpha = complex(alpha)
    r = abs(alpha)
    if not r * r + 5.0 * r + 10.0 < n_max:
        raise TruncationError(f"|alpha|={r:.3f} needs more than n_max={n_max} levels")
    n = np.arange(n_max)
    log_fact = np.array([math.lgamma(k + 1.0) for k in n])
    with np.errstate(divide="ignore"):
        log_mag = n * np.log(r) if r > 0 else np.where(n == 0, 0.0, -np.inf)
    c = np.exp(log_mag - 0.5 * log_fact - 0.5 * r * r) * np.exp(1j * n * np.angle(alpha))
    return c / np.linalg.norm(c)


def product_state(atomic, mode_vectors):
    out = np.array([1.0 + 0j])
    for v in mode_vectors:
        out = np.kron(out, v)
    return np.kron(out, np.asarray(atomic, dtype=complex))


def tail_population(state, spec, n_max, top=2):
    """Largest population, over modes, in the top ``top`` Fock levels."""
    k, d = spec.n_modes, spec.internal_dim
    probs = np.abs(state.reshape((n_max,) * k + (d,))) ** 2
    worst = 0.0
    for mode in range(k):
        axes = tuple(i for i in range(k + 1) if i != mode)
        per_level = probs.sum(axis=axes)
        worst = max(worst, float(per_level[n_max - top:].sum()))
    return worst


def _check_tail(state, spec, cfg, t):
    tail = tail_population(state, spec, cfg.n_max)
    if tail >= cfg.tail_tol:
        raise TruncationError(
            f"population {tail:.3e} in the top two Fock levels at t={t:.4g} ns (n_max={cfg.n_max})"
        )


def _rk4(h, psi, t, dt):
    n = max(1, math.ceil(t / dt - 1e-9))
    step = t / n
    m = -1j * h
    for _ in range(n):
        k1 = m @ psi
        k2 = m @ (psi + 0.5 * step * k1)
        k3 = m @ (psi + 0.5 * step * k2)
        k4 = m @ (psi + step * k3)
        psi = psi + step / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return psi


def propagate(state, h, t, cfg, spec=None, checkpoints=8):
    """Evolve ``state`` under ``h`` for time ``t``.

    When ``spec`` is given the truncation tail is checked at ``checkpoints``
    evenly spaced times and a TruncationError raised if it grows too large.
    RK4 runs at dt_oracle and dt_oracle/2; their difference must stay below
    1e-9 per unit time.
    """
    state = np.asarray(state, dtype=complex)
    if t == 0:
        return state.copy()
    times = np.linspace(0.0, t, checkpoints + 1)[1:] if spec is not None else np.array([t])
    if cfg.integrator is Integrator.DENSE_EXP:
        if np.abs(h - h.conj().T).max() < 1e-12:
            w, v = np.linalg.eigh(h)
            coeff = v.conj().T @ state
            evolve_to = lambda s: v @ (np.exp(-1j * w * s) * coeff)  # noqa: E731
        else:
            evolve_to = lambda s: scipy.linalg.expm(-1j * s * h) @ state  # noqa: E731
        out = state
        for s in times:
            out = evolve_to(s)
            if spec is not None:
                _check_tail(out, spec, cfg, s)
        return out
    out, prev_t = state, 0.0
    for s in times:
        coarse = _rk4(h, out, s - prev_t, cfg.dt_oracle)
        fine = _rk4(h, out, s - prev_t, 0.5 * cfg.dt_oracle)
        err = np.linalg.norm(fine - coarse) / (s - prev_t)
        if err > 1e-9:
            raise ValueError(f"RK4 step-halving error {err:.2e} per ns exceeds 1e-9; reduce dt_oracle")
        out, prev_t = fine, s
        if spec is not None:
            _check_tail(out, spec, cfg, s)
    return out


def hermite_functions(n_max, x):
    """Normalized Hermite functions h_0..h_{n_max-1} at x, via the three-term recurrence."""
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max,) + x.shape)
    out[0] = math.pi**-0.25 * np.exp(-0.5 * x * x)
    if n_max > 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for n in range(1, n_max - 1):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * x * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def _effective_cutoff(state, spec, n_max, tail=1e-10):
    """Highest Fock level that carries population above ``tail`` in any mode."""
    k, d = spec.n_modes, spec.internal_dim
    probs = np.abs(state.reshape((n_max,) * k + (d,))) ** 2
    top = 0
    for mode in range(k):
        axes = tuple(i for i in range(k + 1) if i != mode)
        per_level = probs.sum(axis=axes)
        tail_sums = np.cumsum(per_level[::-1])[::-1]
        occupied = np.nonzero(tail_sums > tail)[0]
        top = max(top, int(occupied[-1]) + 1 if occupied.size else 1)
    return top


def fock_to_grid(state, grid, spec, n_max, norm_tol=1e-8):
    """Expand a Fock-basis state on the momentum grid.

    Resolution is judged from the highest level that actually carries weight
    (tail above 1e-10): N >= 8 sqrt(n) is required up front, and the extent
    must be wide enough that the grid norm reproduces the Fock norm to
    ``norm_tol``.
    """
    n_eff = _effective_cutoff(state, spec, n_max)
    if grid.n < 8.0 * math.sqrt(n_eff):
        raise ValueError(f"grid with N={grid.n} cannot resolve Fock level {n_eff}")
    k, d = spec.n_modes, spec.internal_dim
    coeff = state.reshape((n_max,) * k + (d,))
    phases = (-1j) ** np.arange(n_max)
    basis = [phases[:, None] * hermite_functions(n_max, grid.p_axis(m)) for m in range(k)]
    if k == 1:
        amps = np.einsum("nj,np->jp", coeff, basis[0])
    else:
        amps = np.einsum("nmj,np,mq->jpq", coeff, basis[0], basis[1])
    out = SpinorField(grid, amps, Representation.P)
    expected = float(np.vdot(state, state).real)
    got = float(np.sum(np.abs(amps) ** 2) * grid.cell(Representation.P))
    if abs(got - expected) > norm_tol:
        raise ValueError(
            f"grid extents {grid.extents} do not hold Fock level {n_eff}: "
            f"norm {got:.12f} vs {expected:.12f}"
        )
    return out


def fock_observables(state, spec, n_max):
    """Norm, populations (renormalized) and <X_k>, <P_k> of a Fock-basis state."""
    k, d = spec.n_modes, spec.internal_dim
    nrm = float(np.vdot(state, state).real)
    probs = np.abs(state.reshape(-1, d)) ** 2
    pops = probs.sum(axis=0) / nrm
    x, p = quadrature_operators(n_max)
    xs, ps = [], []
    for mode in range(k):
        xs.append(float(np.vdot(state, _embed(x, mode, k, n_max, d) @ state).real / nrm))
        ps.append(float(np.vdot(state, _embed(p, mode, k, n_max, d) @ state).real / nrm))
    return nrm, pops, np.array(xs), np.array(ps)
