"""Strang split-operator propagation in the momentum representation.

One step of length dt is

    exp(-i dt/2 M(P)) . exp(-i dt W(X)) . exp(-i dt/2 M(P))

where M(P) is the pointwise internal matrix (coupling + omega sum P^2/2) and
W(X) = omega sum X^2/2. The coupling is diagonal in P, so the small matrix
exponentials live in the P half-steps and the X step is a phase applied after
an FFT.

Losses follow H_eff = H - i kappa sum_k a_k^dag a_k - i gamma |2><2|, with
a^dag a = (P^2 + X^2 - 1)/2 split as -i kappa (P^2 - 1)/2 into M and
-i kappa X^2/2 into W.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.fft as sfft
import scipy.linalg

from . import _kernels
from .errors import BoundaryEscapeError, NonFiniteError
from .field import Representation, SpinorField, norm2, to_representation
from .model import ModelKind, coupling_field
from .observables import edge_mass, inversion, populations, quadrature_expectations

log = logging.getLogger(__name__)

STABILITY_LIMIT = 0.5
STABILITY_WARN = 0.1
EIGVEC_COND_LIMIT = 1e8


@dataclass
class PropagatorConfig:
    dt: float
    t_final: float
    snapshot_stride: int = 1
    losses_enabled: bool = False
    renormalize_observables: bool = True
    # decay of the Lambda model's excited level |3>; off unless asked for
    lambda_excited_decay: bool = False
    boundary_tol: float = 1e-6
    workers: int | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not self.t_final >= self.dt:
            raise ValueError(f"t_final ({self.t_final}) must be >= dt ({self.dt})")
        if int(self.snapshot_stride) < 1:
            raise ValueError("snapshot_stride must be >= 1")
        self.snapshot_stride = int(self.snapshot_stride)

    @property
    def n_steps(self):
        return max(1, math.ceil(self.t_final / self.dt - 1e-9))

    @property
    def step(self):
        """Step actually used: t_final / n_steps, so the run ends exactly at t_final."""
        return self.t_final / self.n_steps


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    norm2: np.ndarray
    populations: np.ndarray
    inversion: np.ndarray
    x_mean: np.ndarray
    p_mean: np.ndarray
    final_state: SpinorField | None = dc_field(default=None, repr=False)

    def __len__(self):
        return len(self.times)


# --- matrix exponentials ----------------------------------------------------


def expm_internal(m, scale=1.0):
    """exp(scale * m) for a single 2x2 or 3x3 complex matrix.

    2x2 uses the closed Pauli form. 3x3 uses an eigendecomposition and falls
    back to scaling-and-squaring when the eigenvector matrix is ill-conditioned.
    """
    m = np.asarray(m, dtype=complex)
    d = m.shape[0]
    if m.shape not in ((2, 2), (3, 3)):
        raise ValueError(f"expected a 2x2 or 3x3 matrix, got {m.shape}")
    if d == 2:
        return _kernels.expm2_numpy(m[:, :, None], complex(scale))[:, :, 0]
    w, v = np.linalg.eig(m)
    if np.linalg.cond(v) > EIGVEC_COND_LIMIT:
        return scipy.linalg.expm(scale * m)
    return (v * np.exp(scale * w)) @ np.linalg.inv(v)


def expm_pointwise(m, scale):
    """exp(scale * m) for a planar stack m of shape (d, d, npts)."""
    d = m.shape[0]
    if d == 2:
        return _kernels.expm2(m, scale)
    stack = np.moveaxis(m, 2, 0)
    herm = np.abs(stack - np.conj(np.swapaxes(stack, 1, 2))).max() < 1e-14
    if herm and abs(complex(scale).real) == 0.0:
        w, v = np.linalg.eigh(stack)
        out = np.einsum("pij,pj,pkj->pik", v, np.exp(scale * w), v.conj())
    else:
        w, v = np.linalg.eig(stack)
        cond = np.linalg.cond(v)
        out = np.einsum("pij,pj,pjk->pik", v, np.exp(scale * w), np.linalg.inv(v))
        for p in np.nonzero(cond > EIGVEC_COND_LIMIT)[0]:
            out[p] = scipy.linalg.expm(scale * stack[p])
    return np.ascontiguousarray(np.moveaxis(out, 0, 2))


# --- step pieces ------------------------------------------------------------


def _loss_projector(spec, lambda_excited_decay):
    d = spec.internal_dim
    proj = np.zeros((d, d), dtype=complex)
    if spec.kind is ModelKind.BIMODAL_LAMBDA:
        if lambda_excited_decay:
            proj[2, 2] = 1.0
    else:
        proj[1, 1] = 1.0
    if spec.frame is not None:
        proj = spec.frame.conj().T @ proj @ spec.frame
    return proj


def p_generator(spec, grid, losses=False, lambda_excited_decay=False):
    """M(P) on the grid, planar shape (d, d, npts)."""
    mesh = grid.mesh(Representation.P)
    p2 = mesh[1] if len(mesh) > 1 else 0.0
    m = coupling_field(spec, mesh[0], p2)
    d = spec.internal_dim
    kinetic = 0.5 * sum(p**2 for p in mesh)
    diag = spec.omega * kinetic
    if losses:
        diag = diag - 0.5j * spec.kappa * sum(p**2 - 1.0 for p in mesh)
        m = m - 1j * spec.gamma * _loss_projector(spec, lambda_excited_decay).reshape(
            (d, d) + (1,) * grid.n_modes)
    for i in range(d):
        m[i, i] = m[i, i] + diag
    return np.ascontiguousarray(m.reshape(d, d, -1))


def x_phase(spec, grid, dt, losses=False):
    """exp(-i dt (omega - i kappa) sum X^2/2) on the conjugate grid."""
    mesh = grid.mesh(Representation.X)
    freq = spec.omega - 1j * spec.kappa if losses else spec.omega
    return np.exp(-1j * dt * freq * 0.5 * sum(x**2 for x in mesh))


def _check_p(field):
    if field.representation is not Representation.P:
        raise ValueError("this step acts on the momentum representation")


def p_half_step(field, spec, dt, losses=False, lambda_excited_decay=False):
    _check_p(field)
    u = expm_pointwise(p_generator(spec, field.grid, losses, lambda_excited_decay), -0.5j * dt)
    out = field.copy()
    _kernels.apply_pointwise(u, out.amplitudes.reshape(field.internal_dim, -1))
    return out


def x_full_step(field, spec, dt, losses=False, workers=None):
    x_field = to_representation(field, Representation.X, workers)
    x_field.amplitudes *= x_phase(spec, field.grid, dt, losses)
    back = to_representation(x_field, Representation.P, workers)
    if field.representation is Representation.X:
        return to_representation(back, Representation.X, workers)
    return back


def stability_number(spec, grid, dt):
    return dt * max(spec.energy_scale, spec.coupling_g * max(grid.extents))


def check_stability(spec, grid, dt):
    value = stability_number(spec, grid, dt)
    if value >= STABILITY_LIMIT:
        raise ValueError(f"dt too large: dt*max(Omega, omega, g L) = {value:.3g} >= {STABILITY_LIMIT}")
    if value > STABILITY_WARN:
        warnings.warn(f"dt*max(Omega, omega, g L) = {value:.3g} exceeds {STABILITY_WARN}", stacklevel=3)
    return value


# --- driver -------------------------------------------------------------------


class _Stepper:
    """Precomputed operators for fixed (spec, grid, dt).

    Works on chi = (-1)^j psi, for which the X step is fft(phase * ifft(chi)):
    the sign flips of the centred transform cancel between consecutive steps.
    """

    def __init__(self, spec, grid, dt, losses, lambda_excited_decay, workers):
        m = p_generator(spec, grid, losses, lambda_excited_decay)
        self.u_half = expm_pointwise(m, -0.5j * dt)
        self.u_full = expm_pointwise(m, -1j * dt)
        self.phase = x_phase(spec, grid, dt, losses)
        self.axes = grid.mode_axes
        self.signs = grid.signs()
        self.workers = workers

    def apply(self, u, chi):
        _kernels.apply_pointwise(u, chi.reshape(chi.shape[0], -1))

    def x_step(self, chi):
        tmp = sfft.ifftn(chi, axes=self.axes, workers=self.workers, overwrite_x=True)
        tmp *= self.phase
        return sfft.fftn(tmp, axes=self.axes, workers=self.workers, overwrite_x=True)


def evolve(state, spec, config, observer=None):
    """Propagate ``state`` to ``config.t_final`` and record snapshots.

    Snapshots are taken at t = 0, every ``snapshot_stride`` steps and at the
    final time. ``observer(t, field)`` is called with a copy at each snapshot.
    Raises BoundaryEscapeError when the edge mass exceeds ``boundary_tol`` and
    NonFiniteError on NaN/inf.
    """
    if state.representation is not Representation.P:
        raise ValueError("initial state must be in the momentum representation")
    grid = state.grid
    check_stability(spec, grid, config.dt)
    n_steps, dt = config.n_steps, config.step
    stepper = _Stepper(spec, grid, dt, config.losses_enabled, config.lambda_excited_decay, config.workers)
    chi = state.amplitudes * stepper.signs

    rows = []

    def snapshot(step):
        t = step * dt
        f = SpinorField(grid, chi * stepper.signs, Representation.P)
        nrm = norm2(f)
        if not math.isfinite(nrm):
            raise NonFiniteError(t)
        mass = edge_mass(f)
        if mass > config.boundary_tol:
            raise BoundaryEscapeError(t, mass, Representation.P.value)
        xf = to_representation(f, Representation.X, config.workers)
        mass = edge_mass(xf)
        if mass > config.boundary_tol:
            raise BoundaryEscapeError(t, mass, Representation.X.value)
        pops = populations(f, config.renormalize_observables)
        x_mean, p_mean = quadrature_expectations(f, config.workers)
        rows.append((t, nrm, pops, inversion(pops), x_mean, p_mean))
        if observer is not None:
            observer(t, f.copy())
        return f

    last = snapshot(0)
    stride = config.snapshot_stride
    stepper.apply(stepper.u_half, chi)
    for step in range(1, n_steps + 1):
        chi = stepper.x_step(chi)
        if step % stride == 0 or step == n_steps:
            stepper.apply(stepper.u_half, chi)
            last = snapshot(step)
            if step != n_steps:
                stepper.apply(stepper.u_half, chi)
        else:
            stepper.apply(stepper.u_full, chi)

    times, norms, pops, w, xm, pm = (np.array(col) for col in zip(*rows))
    log.debug("evolve: %d steps of %.3g ns, %d snapshots", n_steps, dt, len(times))
    return TrajectoryRecord(times, norms, pops, w, xm, pm, final_state=last)


def propagate_state(state, spec, dt, t_final, losses=False, workers=None):
    """Final state only, no observables; the cheap path used by validation."""
    grid = state.grid
    check_stability(spec, grid, dt)
    n_steps = max(1, math.ceil(t_final / dt - 1e-9))
    stepper = _Stepper(spec, grid, t_final / n_steps, losses, False, workers)
    chi = state.amplitudes * stepper.signs
    stepper.apply(stepper.u_half, chi)
    for step in range(1, n_steps + 1):
        chi = stepper.x_step(chi)
        stepper.apply(stepper.u_half if step == n_steps else stepper.u_full, chi)
    return SpinorField(grid, chi * stepper.signs, Representation.P)
