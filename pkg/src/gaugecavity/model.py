"""Cavity QED Hamiltonians in field-quadrature form.

Conventions used throughout the package:

* hbar = 1; every energy and rate is an angular frequency in rad/ns.
* Atomic basis ordering is (|1>, |2>) or (|1>, |2>, |3>).
* sigma_z = |2><2| - |1><1|, so in that ordering sigma_z = diag(-1, +1).
* [X, P] = +i, with P acting as multiplication in the momentum representation.

Each model is harmonic in both quadratures, omega*(P^2 + X^2)/2 per mode,
plus an internal-space matrix that depends only on the momenta. That matrix
(``coupling_matrix``) is what the adiabatic surfaces, gauge potentials and
frames are built from.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

TWO_PI = 2.0 * math.pi

# Pauli matrices in the (|1>, |2>) basis
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, 1j], [-1j, 0]], dtype=complex)
SIGMA_Z = np.array([[-1, 0], [0, 1]], dtype=complex)

# Gell-Mann matrices used by the Lambda model, (|1>, |2>, |3>) basis
LAMBDA_2 = np.array([[0, -1j, 0], [1j, 0, 0], [0, 0, 0]], dtype=complex)
LAMBDA_4 = np.array([[0, 0, 1], [0, 0, 0], [1, 0, 0]], dtype=complex)
LAMBDA_6 = np.array([[0, 0, 0], [0, 0, 1], [0, 1, 0]], dtype=complex)
LAMBDA_8 = np.diag([1, 1, -2]).astype(complex) / math.sqrt(3.0)

HERMITIAN_TOL = 1e-12


class ModelKind(str, enum.Enum):
    RABI = "Rabi"
    BIMODAL_RABI = "BimodalRabi"
    BIMODAL_LAMBDA = "BimodalLambda"


_N_MODES = {ModelKind.RABI: 1, ModelKind.BIMODAL_RABI: 2, ModelKind.BIMODAL_LAMBDA: 2}
_DIM = {ModelKind.RABI: 2, ModelKind.BIMODAL_RABI: 2, ModelKind.BIMODAL_LAMBDA: 3}


def ghz_to_rad_ns(f_ghz):
    """Convert a frequency f (as in 'omega/2pi = f GHz') to rad/ns."""
    return TWO_PI * f_ghz


@dataclass(frozen=True)
class ModelSpec:
    """Model kind plus physical parameters, all in rad/ns.

    ``frame`` is an optional constant internal unitary u; when set, every
    internal-space operator O of the model is replaced by u^dag O u. This is
    how gauge-transformed copies of a model are propagated.
    """

    kind: ModelKind
    omega: float
    coupling_g: float
    atom_splitting: float = 0.0
    atomic_energies: tuple = (0.0, 0.0, 0.0)
    kappa: float = 0.0
    gamma: float = 0.0
    frame: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        object.__setattr__(self, "atomic_energies", tuple(float(e) for e in self.atomic_energies))
        if not self.omega > 0:
            raise ValueError(f"omega must be > 0, got {self.omega}")
        for name in ("coupling_g", "kappa", "gamma"):
            value = getattr(self, name)
            if not value >= 0:
                raise ValueError(f"{name} must be >= 0, got {value}")
        if len(self.atomic_energies) != 3:
            raise ValueError("atomic_energies needs exactly three entries")
        if self.frame is not None:
            u = np.asarray(self.frame, dtype=complex)
            check_unitary(u, self.internal_dim)
            object.__setattr__(self, "frame", u)

    @property
    def n_modes(self):
        return _N_MODES[self.kind]

    @property
    def internal_dim(self):
        return _DIM[self.kind]

    @property
    def energy_scale(self):
        """Largest internal energy scale, used for tolerances and step guards."""
        if self.kind is ModelKind.BIMODAL_LAMBDA:
            atomic = max(abs(e) for e in self.atomic_energies)
        else:
            atomic = abs(self.atom_splitting)
        return max(self.omega, atomic, self.coupling_g)

    def with_frame(self, u):
        """Copy of the model seen in the rotated internal basis u."""
        u = np.asarray(u, dtype=complex)
        if self.frame is not None:
            u = self.frame @ u
        return replace(self, frame=u)


def check_unitary(u, dim=None, tol=1e-12):
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {u.shape}")
    if dim is not None and u.shape[0] != dim:
        raise ValueError(f"expected a {dim}x{dim} matrix, got {u.shape}")
    residue = np.abs(u.conj().T @ u - np.eye(u.shape[0])).max()
    if residue >= tol:
        raise ValueError(f"matrix is not unitary (|u^dag u - I| = {residue:.3e})")
    return u


def is_hermitian(m, tol=HERMITIAN_TOL):
    m = np.asarray(m)
    return bool(np.abs(m - m.conj().T).max() < tol)


def commutator(a, b):
    return a @ b - b @ a


def _conjugate(spec, m):
    """Apply the model frame to a (d, d, ...) stack or a single d x d matrix."""
    if spec.frame is None:
        return m
    u = spec.frame
    return np.einsum("ki,kl...,lj->ij...", u.conj(), m, u)


def bare_atomic_matrix(spec):
    """Atomic energies: (Omega/2) sigma_z or diag(E1, E2, E3)."""
    if spec.kind is ModelKind.BIMODAL_LAMBDA:
        m = np.diag(spec.atomic_energies).astype(complex)
    else:
        m = 0.5 * spec.atom_splitting * SIGMA_Z
    return _conjugate(spec, m)


def _coupling_generators(spec):
    """Matrices G_k with coupling = atomic - g * sum_k p_k G_k."""
    if spec.kind is ModelKind.RABI:
        return [SIGMA_X]
    if spec.kind is ModelKind.BIMODAL_RABI:
        return [SIGMA_X, SIGMA_Y]
    return [LAMBDA_4, LAMBDA_6]


def coupling_field(spec, p1, p2=0.0):
    """Internal coupling matrix on arrays of momenta, shape (d, d) + broadcast shape.

    This is the momentum-diagonal part of H without the harmonic terms. ``p2``
    is ignored for the single-mode Rabi model.
    """
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    shape = np.broadcast_shapes(p1.shape, p2.shape)
    d = spec.internal_dim
    atomic = np.diag(spec.atomic_energies).astype(complex) if spec.kind is ModelKind.BIMODAL_LAMBDA \
        else 0.5 * spec.atom_splitting * SIGMA_Z
    m = np.zeros((d, d) + shape, dtype=complex)
    m += atomic.reshape((d, d) + (1,) * len(shape))
    gens = _coupling_generators(spec)
    momenta = [p1, p2][: len(gens)]
    for gen, p in zip(gens, momenta):
        m -= spec.coupling_g * gen.reshape((d, d) + (1,) * len(shape)) * np.broadcast_to(p, shape)
    return _conjugate(spec, m)


def coupling_matrix(spec, p1, p2=0.0):
    """Internal coupling matrix at a single momentum point (d x d, Hermitian)."""
    return coupling_field(spec, float(p1), float(p2))


def harmonic_energy(spec, p1, p2=0.0):
    """omega * sum_k p_k^2 / 2 (the momentum half of the field energy)."""
    p1 = np.asarray(p1, dtype=float)
    if spec.n_modes == 1:
        return 0.5 * spec.omega * p1**2
    return 0.5 * spec.omega * (p1**2 + np.asarray(p2, dtype=float) ** 2)


@dataclass(frozen=True)
class SurfacePoint:
    p1: float
    p2: float
    values: tuple


def surface_values(spec, p1, p2=0.0):
    """Sorted adiabatic surface energies on arrays of momenta, shape broadcast + (d,)."""
    m = coupling_field(spec, p1, p2)
    stack = np.moveaxis(m, (0, 1), (-2, -1))
    vals = np.linalg.eigvalsh(stack)
    return vals + np.asarray(harmonic_energy(spec, p1, p2))[..., None]


def adiabatic_surfaces(spec, p1, p2=0.0):
    vals = surface_values(spec, float(p1), float(p2))
    return SurfacePoint(float(p1), float(p2), tuple(float(v) for v in vals))


def bimodal_rabi_surfaces(spec, p1, p2):
    """Closed form omega r^2/2 -/+ sqrt(Omega^2/4 + g^2 r^2) for the bimodal Rabi model."""
    r2 = np.asarray(p1) ** 2 + np.asarray(p2) ** 2
    root = np.sqrt(0.25 * spec.atom_splitting**2 + spec.coupling_g**2 * r2)
    base = 0.5 * spec.omega * r2
    return base - root, base + root


# --- gauge structure -------------------------------------------------------


@dataclass
class GaugeData:
    vector_components: list
    scalar_potential: np.ndarray
    is_abelian: bool

    def commutators(self):
        """Pairwise commutators [A_i, A_j] for i < j, keyed by (i, j)."""
        comps = self.vector_components
        return {
            (i, j): commutator(comps[i], comps[j])
            for i in range(len(comps))
            for j in range(i + 1, len(comps))
        }


ABELIAN_TOL = 1e-12


def _abelian(components):
    for i in range(len(components)):
        for j in range(i + 1, len(components)):
            if np.abs(commutator(components[i], components[j])).max() >= ABELIAN_TOL:
                return False
    return True


def gauge_potentials(spec):
    """Vector potentials A_k = (g/omega) G_k and scalar potential Phi = -omega sum_k A_k^2 / 2.

    Phi completes the square, so omega sum_k (p_k - A_k)^2/2 + Phi reproduces the
    momentum-dependent part of the Hamiltonian exactly for every model. For the
    Lambda model the alternative printed expression is available from
    ``lambda_reference_scalar_potential``.
    """
    ratio = spec.coupling_g / spec.omega
    comps = [_conjugate(spec, ratio * gen) for gen in _coupling_generators(spec)]
    phi = -0.5 * spec.omega * sum(a @ a for a in comps)
    return GaugeData(comps, phi, _abelian(comps))


def lambda_reference_scalar_potential(spec):
    """(g^2 / 3 omega)(1 - (sqrt(3)/2) lambda_8), the literature form for the Lambda model.

    Kept for comparison only: it does not complete the square (see
    ``verify_gauge_decomposition``).
    """
    if spec.kind is not ModelKind.BIMODAL_LAMBDA:
        raise ValueError("reference scalar potential is defined for the Lambda model only")
    phi = spec.coupling_g**2 / (3.0 * spec.omega) * (np.eye(3) - 0.5 * math.sqrt(3.0) * LAMBDA_8)
    return _conjugate(spec, phi)


def verify_gauge_decomposition(spec, p1, p2=0.0, scalar_potential=None):
    """Max entrywise deviation between the gauge form and the direct Hamiltonian.

    Compares omega sum_k (p_k I - A_k)^2/2 + atomic + Phi with
    omega sum_k p_k^2/2 I + coupling_matrix(p). The X^2 terms are identical on
    both sides and are left out.
    """
    gauge = gauge_potentials(spec)
    phi = gauge.scalar_potential if scalar_potential is None else np.asarray(scalar_potential)
    d = spec.internal_dim
    eye = np.eye(d)
    momenta = [float(p1), float(p2)][: spec.n_modes]
    lhs = bare_atomic_matrix(spec) + phi
    for p, a in zip(momenta, gauge.vector_components):
        shifted = p * eye - a
        lhs = lhs + 0.5 * spec.omega * shifted @ shifted
    rhs = harmonic_energy(spec, p1, p2) * eye + coupling_matrix(spec, p1, p2)
    return float(np.abs(lhs - rhs).max())


def gauge_transform(spec, u):
    """Transform the gauge data of ``spec`` by a constant unitary u.

    A_k -> u^dag A_k u and Phi -> u^dag Phi u; the derivative terms of the
    general law vanish because u depends on neither X nor t.
    """
    u = check_unitary(u, spec.internal_dim)
    gauge = gauge_potentials(spec)
    ud = u.conj().T
    comps = [ud @ a @ u for a in gauge.vector_components]
    return GaugeData(comps, ud @ gauge.scalar_potential @ u, _abelian(comps))


# --- static surface analysis ----------------------------------------------


@dataclass(frozen=True)
class SombreroResult:
    has_sombrero: bool
    r_min: float
    depth: float
    r_min_closed_form: float | None
    derived_condition: bool  # g^2 > omega * Omega / 2
    literature_condition: bool  # g > sqrt(omega * Omega)


def _golden_section(f, a, b, tol):
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def sombrero_analysis(spec, tol=1e-10):
    """Locate the minimum of the lower bimodal-Rabi surface along the radius."""
    if spec.kind is not ModelKind.BIMODAL_RABI:
        raise ValueError("sombrero analysis applies to the BimodalRabi model")
    w, big, g = spec.omega, spec.atom_splitting, spec.coupling_g
    half = 0.5 * abs(big)

    def lowered(r):
        # V-(r) - V-(0), written without cancellation near r = 0
        r2 = r * r
        return 0.5 * w * r2 - g * g * r2 / (math.sqrt(half * half + g * g * r2) + half)

    r_min = 0.0 if g == 0 else _golden_section(lowered, 0.0, 2.0 * g / w + 1.0, tol)
    closed = None
    if g > 0:
        r2 = g * g / (w * w) - big * big / (4.0 * g * g)
        if r2 > 0:
            closed = math.sqrt(r2)
    return SombreroResult(
        has_sombrero=r_min > 1e-8,
        r_min=r_min,
        depth=max(0.0, -lowered(r_min)),
        r_min_closed_form=closed,
        derived_condition=g * g > 0.5 * w * abs(big),
        literature_condition=g > math.sqrt(w * abs(big)),
    )


class IntersectionKind(str, enum.Enum):
    CONICAL = "Conical"
    AVOIDED = "Avoided"
    RENNER_TELLER = "RennerTeller"
    SPLIT_CONICAL = "SplitConical"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class PairIntersection:
    """Classification of the touching between surfaces ``lower`` and ``lower + 1``."""

    lower: int
    kind: IntersectionKind
    locations: tuple
    min_gap: float
    fit: tuple | None = None  # (c0, c1, c2)

    @property
    def location(self):
        return self.locations[0]


@dataclass(frozen=True)
class IntersectionReport:
    pairs: tuple

    @property
    def kind(self):
        return self.pairs[0].kind

    @property
    def location(self):
        return self.pairs[0].location


def _pair_gap(spec, k):
    def gap(p):
        vals = np.linalg.eigvalsh(coupling_matrix(spec, p[0], p[1] if len(p) > 1 else 0.0))
        return float(vals[k + 1] - vals[k])

    return gap


def _gap_minima(spec, k, radius, n_coarse=61):
    """Refined local minima of one adjacent gap over the square |p_i| <= radius."""
    from scipy.optimize import minimize

    gap = _pair_gap(spec, k)
    axis = np.linspace(-radius, radius, n_coarse)
    if spec.n_modes == 1:
        p1, p2 = axis, np.zeros_like(axis)
    else:
        p1, p2 = np.meshgrid(axis, axis, indexing="ij")
    vals = surface_values(spec, p1, p2)
    gaps = vals[..., k + 1] - vals[..., k]
    seeds = []
    if spec.n_modes == 1:
        for i in range(n_coarse):
            lo, hi = max(i - 1, 0), min(i + 2, n_coarse)
            if gaps[i] <= gaps[lo:hi].min():
                seeds.append((axis[i],))
    else:
        for i in range(n_coarse):
            for j in range(n_coarse):
                block = gaps[max(i - 1, 0): i + 2, max(j - 1, 0): j + 2]
                if gaps[i, j] <= block.min():
                    seeds.append((p1[i, j], p2[i, j]))
    step = 2.0 * radius / (n_coarse - 1)
    found = []
    for seed in seeds:
        res = minimize(gap, np.array(seed), method="Nelder-Mead",
                       options={"xatol": 1e-11, "fatol": 1e-14, "maxiter": 4000,
                                "initial_simplex": _simplex(seed, step)})
        point = tuple(float(x) for x in res.x)
        value = float(res.fun)
        if any(np.linalg.norm(np.subtract(point, q[0])) < 1e-2 * step for q in found):
            continue
        found.append((point, value))
    found.sort(key=lambda item: item[1])
    return found


def _simplex(seed, step):
    seed = np.asarray(seed, dtype=float)
    simplex = [seed]
    for i in range(len(seed)):
        v = seed.copy()
        v[i] += 0.5 * step
        simplex.append(v)
    return np.array(simplex)


def classify_intersection(spec, window=0.1, n_samples=20):
    """Classify each adjacent pair of adiabatic surfaces.

    For every pair the point of minimal gap is located. If two separate
    degeneracies exist away from the origin the pair is SplitConical.
    Otherwise the gap along a ray from the minimum, gap(r) = c0 + c1 r + c2 r^2,
    is fitted on r in [0, window] and read off:

    * c0 > tol                      -> Avoided
    * c1 r_max dominates c2 r_max^2 -> Conical
    * otherwise                     -> RennerTeller

    with tol = 1e-8 * energy scale. The linear coefficient is judged relative to
    the quadratic one because higher-order terms leak into c1 at a level far
    above any absolute tolerance.
    """
    scale = spec.energy_scale
    tol = 1e-8 * scale
    g = max(spec.coupling_g, 1e-300)
    if spec.kind is ModelKind.BIMODAL_LAMBDA:
        spread = max(spec.atomic_energies) - min(spec.atomic_energies)
    else:
        spread = abs(spec.atom_splitting)
    radius = 2.0 * (1.0 + spread / g) if spec.coupling_g > 0 else 1.0
    pairs = []
    for k in range(spec.internal_dim - 1):
        gap = _pair_gap(spec, k)
        minima = _gap_minima(spec, k, radius)
        degenerate = [m for m in minima if m[1] < 1e-6 * scale]
        off_origin = [m for m in degenerate if np.linalg.norm(m[0]) > 1e-6]
        if len(off_origin) >= 2 and not any(np.linalg.norm(m[0]) <= 1e-6 for m in degenerate):
            locs = tuple(sorted(_pad(m[0]) for m in off_origin))
            pairs.append(PairIntersection(k, IntersectionKind.SPLIT_CONICAL, locs,
                                          min(m[1] for m in off_origin)))
            continue
        # prefer an exact symmetric point when the minimum sits at the origin
        best_point, best_gap = minima[0]
        origin = (0.0,) * len(best_point)
        if gap(origin) <= best_gap + tol:
            best_point, best_gap = origin, gap(origin)
        r = np.linspace(0.0, window, n_samples)
        direction = np.array([math.cos(0.3), math.sin(0.3)])[: len(best_point)]
        direction /= np.linalg.norm(direction)
        samples = np.array([gap(np.asarray(best_point) + ri * direction) for ri in r])
        if samples.max() < 1e-14:
            pairs.append(PairIntersection(k, IntersectionKind.DEGENERATE, (_pad(best_point),), 0.0))
            continue
        c0 = samples[0]
        design = np.column_stack([r[1:], r[1:] ** 2])
        (c1, c2), *_ = np.linalg.lstsq(design, samples[1:] - c0, rcond=None)
        if c0 > tol:
            kind = IntersectionKind.AVOIDED
        elif abs(c1) * window > 0.05 * abs(c2) * window**2 and c1 > tol:
            kind = IntersectionKind.CONICAL
        else:
            kind = IntersectionKind.RENNER_TELLER
        pairs.append(PairIntersection(k, kind, (_pad(best_point),), float(c0),
                                      (float(c0), float(c1), float(c2))))
    return IntersectionReport(tuple(pairs))


def _pad(point):
    point = tuple(float(x) for x in point)
    return point if len(point) == 2 else (point[0], 0.0)
