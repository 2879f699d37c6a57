"""Adiabatic frames over momentum space and their geometric phases.

Loops live in the (P1, P2) plane, where the surface intersections are.
Two loop quantities are provided:

``wilson_loop``
    Ordered product of frame overlap matrices, U = prod_i <n(theta_i)|m(theta_i+1)>
    restricted to a band subset. For a band subset this is the discrete
    non-Abelian holonomy. With every band selected the overlaps telescope,
    U = V(theta_0)^dag V(theta_0) = I, whatever the model.

``geometric_phase_matrix``
    Loop integral of the full connection, Gamma_nm = oint i<n|d m>, along a
    frame continued smoothly around the loop. Its off-diagonal entries measure
    how strongly the loop mixes surfaces; for a real Hamiltonian the diagonal
    is zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BandCrossingError, DegeneracyError
from .model import coupling_field, coupling_matrix

DEGENERACY_GAP = 1e-12
LOOP_GAP = 1e-6
_TIE = 1e-8


@dataclass(frozen=True)
class LoopSpec:
    center: tuple = (0.0, 0.0)
    radius: float = 1.0
    n_segments: int = 512
    bands: tuple | None = None  # None = all surfaces
    reverse: bool = False

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("loop radius must be > 0")
        if int(self.n_segments) < 8:
            raise ValueError("n_segments must be >= 8")
        object.__setattr__(self, "n_segments", int(self.n_segments))
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if self.bands is not None:
            object.__setattr__(self, "bands", tuple(sorted(int(b) for b in self.bands)))

    def angles(self, n=None):
        n = self.n_segments if n is None else n
        theta = 2.0 * math.pi * np.arange(n) / n
        return -theta if self.reverse else theta

    def points(self, n=None):
        theta = self.angles(n)
        return (self.center[0] + self.radius * np.cos(theta),
                self.center[1] + self.radius * np.sin(theta))


@dataclass
class WilsonLoopResult:
    holonomy: np.ndarray
    n_segments: int
    convergence_estimate: float
    coarse: np.ndarray

    @property
    def unitarity_residue(self):
        u = self.holonomy
        return float(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0]), 2))


def fix_gauge(vecs):
    """Make the largest-modulus component of each column real and positive.

    Near-ties (within a relative 1e-8) resolve to the lowest index so the
    choice is stable under rounding.
    """
    vecs = np.array(vecs, dtype=complex, copy=True)
    mags = np.abs(vecs)
    top = mags.max(axis=-2, keepdims=True)
    pick = np.argmax(mags >= top * (1.0 - _TIE), axis=-2)
    lead = np.take_along_axis(vecs, pick[..., None, :], axis=-2)
    return vecs * (np.abs(lead) / lead)


def _frames(spec, p1, p2):
    m = np.moveaxis(coupling_field(spec, p1, p2), (0, 1), (-2, -1))
    vals, vecs = np.linalg.eigh(m)
    return vals, fix_gauge(vecs)


def adiabatic_frame(spec, p1, p2=0.0):
    """Gauge-fixed eigenvector columns of the coupling matrix, sorted by energy."""
    vals, vecs = np.linalg.eigh(coupling_matrix(spec, p1, p2))
    gaps = np.diff(vals)
    k = int(np.argmin(gaps))
    if gaps[k] <= DEGENERACY_GAP:
        raise DegeneracyError((k, k + 1), float(gaps[k]), (float(p1), float(p2)))
    return fix_gauge(vecs)


def _loop_frames(spec, loop, n):
    p1, p2 = loop.points(n)
    vals, vecs = _frames(spec, p1, p2)
    bands = range(spec.internal_dim) if loop.bands is None else loop.bands
    watched = sorted({k for b in bands for k in (b - 1, b) if 0 <= k < spec.internal_dim - 1})
    theta = loop.angles(n)
    for k in watched:
        gap = vals[:, k + 1] - vals[:, k]
        i = int(np.argmin(gap))
        if gap[i] < LOOP_GAP:
            raise BandCrossingError(float(theta[i]), float(gap[i]), (k, k + 1))
    return vecs


def _holonomy(spec, loop, n):
    vecs = _loop_frames(spec, loop, n)
    if loop.bands is not None:
        vecs = vecs[:, :, list(loop.bands)]
    u = np.eye(vecs.shape[-1], dtype=complex)
    for i in range(n):
        u = u @ (vecs[i].conj().T @ vecs[(i + 1) % n])
    return u


def wilson_loop(spec, loop):
    """Discrete Wilson loop at n_segments and 2 n_segments; the finer one is returned."""
    coarse = _holonomy(spec, loop, loop.n_segments)
    fine = _holonomy(spec, loop, 2 * loop.n_segments)
    est = float(np.linalg.norm(fine - coarse, 2))
    return WilsonLoopResult(fine, 2 * loop.n_segments, est, coarse)


def _continued_frames(spec, loop, n):
    """Frames along the loop with phases chosen so neighbouring overlaps are real positive.

    Returns n + 1 frames; the last one sits at theta_0 again and may differ
    from the first by the per-band transport phase.
    """
    vecs = _loop_frames(spec, loop, n)
    out = np.empty((n + 1,) + vecs.shape[1:], dtype=complex)
    out[0] = vecs[0]
    for i in range(1, n + 1):
        nxt = vecs[i % n]
        ov = np.einsum("ij,ij->j", out[i - 1].conj(), nxt)
        out[i] = nxt * (np.abs(ov) / ov)
    return out


def _connection_integral(spec, loop, n):
    frames = _continued_frames(spec, loop, n)
    # spread each band's transport phase evenly so the gauge closes on itself
    berry = np.angle(np.einsum("ij,ij->j", frames[0].conj(), frames[n]))
    ramp = np.exp(-1j * np.outer(np.arange(n + 1) / n, berry))
    frames = frames * ramp[:, None, :]
    gamma = np.zeros((frames.shape[-1],) * 2, dtype=complex)
    for i in range(n):
        m = frames[i].conj().T @ frames[i + 1]
        gamma += 0.5j * (m - m.conj().T)
    return gamma


@dataclass
class GeometricPhaseResult:
    matrix: np.ndarray
    n_segments: int
    convergence_estimate: float


def geometric_phase_matrix(spec, loop):
    """Gamma_nm = oint i<n|d m> around the loop, at n and 2n segments (finer returned).

    Diagonal entries are the per-band Berry phases in (-pi, pi]; off-diagonal
    entries are the loop integrals of the inter-band connection.
    """
    coarse = _connection_integral(spec, loop, loop.n_segments)
    fine = _connection_integral(spec, loop, 2 * loop.n_segments)
    return GeometricPhaseResult(fine, 2 * loop.n_segments, float(np.abs(fine - coarse).max()))


def berry_connection(spec, p1, p2, dp=1e-5):
    """(A_1, A_2) with A_k[n, m] = <n|d_k m> by central differences, anti-Hermitian part.

    Uses the fixed gauge of ``adiabatic_frame`` at each displaced point.
    """
    v0 = adiabatic_frame(spec, p1, p2)
    out = []
    for k in range(2):
        step = np.array([dp, 0.0]) if k == 0 else np.array([0.0, dp])
        vp = adiabatic_frame(spec, p1 + step[0], p2 + step[1])
        vm = adiabatic_frame(spec, p1 - step[0], p2 - step[1])
        a = v0.conj().T @ (vp - vm) / (2.0 * dp)
        out.append(0.5 * (a - a.conj().T))
    return out
