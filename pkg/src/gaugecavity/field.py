"""Quadrature grids, spinor wavefunctions and the P <-> X change of representation.

Momentum cells sit at p_j = -L + j dP with dP = 2L/N. The conjugate grid has
dX = pi/L and x_m = -N dX/2 + m dX. With [X, P] = i the transform P -> X uses
the kernel exp(+i X P)/sqrt(2 pi):

    phi(x_m) = dP/sqrt(2 pi) sum_j exp(i x_m p_j) psi(p_j)

which on these grids reduces to an inverse FFT sandwiched between (-1)^j and
(-1)^m sign flips. The map is exactly unitary between the Riemann-weighted
norms sum |psi|^2 dP and sum |phi|^2 dX.
"""
from __future__ import annotations

import enum
import math
import os
import tempfile
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft


class Representation(str, enum.Enum):
    P = "PSpace"
    X = "XSpace"


def _is_power_of_two(n):
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class QuadratureGrid:
    """Uniform symmetric grid, one axis per cavity mode.

    ``extents`` holds the half-width L of each momentum axis.
    """

    n_modes: int
    n: int
    extents: tuple

    def __post_init__(self):
        object.__setattr__(self, "extents", tuple(float(L) for L in self.extents))
        if self.n_modes not in (1, 2):
            raise ValueError("only one or two modes are supported")
        if not _is_power_of_two(self.n) or self.n < 16:
            raise ValueError(f"points per axis must be a power of two >= 16, got {self.n}")
        if len(self.extents) != self.n_modes:
            raise ValueError("need one extent per mode")
        if any(not L > 0 for L in self.extents):
            raise ValueError("extents must be positive")

    @classmethod
    def uniform(cls, n_modes, n, extent):
        return cls(n_modes, n, (extent,) * n_modes)

    def dp(self, mode=0):
        return 2.0 * self.extents[mode] / self.n

    def dx(self, mode=0):
        return math.pi / self.extents[mode]

    def x_extent(self, mode=0):
        return 0.5 * self.n * self.dx(mode)

    def p_axis(self, mode=0):
        return -self.extents[mode] + self.dp(mode) * np.arange(self.n)

    def x_axis(self, mode=0):
        return -self.x_extent(mode) + self.dx(mode) * np.arange(self.n)

    def axis(self, representation, mode=0):
        return self.p_axis(mode) if Representation(representation) is Representation.P else self.x_axis(mode)

    def cell(self, representation):
        rep = Representation(representation)
        step = self.dp if rep is Representation.P else self.dx
        return math.prod(step(k) for k in range(self.n_modes))

    def mesh(self, representation=Representation.P):
        """Coordinate arrays broadcastable against the field's spatial shape."""
        axes = [self.axis(representation, k) for k in range(self.n_modes)]
        if self.n_modes == 1:
            return (axes[0],)
        return tuple(np.meshgrid(*axes, indexing="ij"))

    @property
    def shape(self):
        return (self.n,) * self.n_modes

    @property
    def mode_axes(self):
        return tuple(range(1, self.n_modes + 1))

    def signs(self):
        """(-1)^j over the spatial shape; identical for both representations."""
        s = 1.0 - 2.0 * (np.arange(self.n) % 2)
        if self.n_modes == 1:
            return s
        return np.multiply.outer(s, s)


@dataclass
class SpinorField:
    """Complex amplitudes of shape (internal_dim, N[, N]) in one representation."""

    grid: QuadratureGrid
    amplitudes: np.ndarray
    representation: Representation = Representation.P

    def __post_init__(self):
        self.representation = Representation(self.representation)
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape[1:] != self.grid.shape:
            raise ValueError(
                f"amplitude shape {self.amplitudes.shape} does not match grid {self.grid.shape}"
            )

    @property
    def internal_dim(self):
        return self.amplitudes.shape[0]

    def copy(self):
        return SpinorField(self.grid, self.amplitudes.copy(), self.representation)


def _scale(grid):
    return math.prod(math.sqrt(grid.dp(k) / grid.dx(k)) for k in range(grid.n_modes))


def p_to_x(amplitudes, grid, workers=None):
    signs = grid.signs()
    out = sfft.ifftn(amplitudes * signs, axes=grid.mode_axes, norm="ortho", workers=workers)
    out *= signs * _scale(grid)
    return out


def x_to_p(amplitudes, grid, workers=None):
    signs = grid.signs()
    out = sfft.fftn(amplitudes * signs, axes=grid.mode_axes, norm="ortho", workers=workers)
    out *= signs / _scale(grid)
    return out


def to_representation(field, target, workers=None):
    target = Representation(target)
    if field.representation is target:
        return field.copy()
    convert = p_to_x if target is Representation.X else x_to_p
    return SpinorField(field.grid, convert(field.amplitudes, field.grid, workers), target)


def norm2(field):
    return float(np.sum(np.abs(field.amplitudes) ** 2) * field.grid.cell(field.representation))


def overlap(a, b):
    """<a|b>, conjugate-linear in ``a``."""
    if a.grid != b.grid:
        raise ValueError("overlap needs fields on the same grid")
    if a.representation is not b.representation:
        raise ValueError("overlap needs fields in the same representation")
    return complex(np.vdot(a.amplitudes, b.amplitudes) * a.grid.cell(a.representation))


def coherent_amplitude(x0, p0):
    """alpha = (x0 + i p0)/sqrt(2)."""
    return complex(x0, p0) / math.sqrt(2.0)


def coherent_state(grid, x0, p0, mode=0):
    """Single-mode coherent state in the momentum representation.

    psi(P) ~ exp(-i x0 P) exp(-(P - p0)^2/2), normalized on the grid, which is
    the state with <X> = x0, <P> = p0 and amplitude alpha = (x0 + i p0)/sqrt(2).
    """
    L = grid.extents[mode]
    if not abs(p0) + 3.0 < L:
        raise ValueError(f"packet centred at p0={p0} does not fit in [-{L}, {L})")
    if not abs(x0) + 3.0 < grid.x_extent(mode):
        raise ValueError(f"packet centred at x0={x0} does not fit the conjugate grid "
                         f"(|x| < {grid.x_extent(mode):.3f})")
    p = grid.p_axis(mode)
    psi = np.exp(-1j * x0 * p - 0.5 * (p - p0) ** 2)
    psi /= math.sqrt(np.sum(np.abs(psi) ** 2) * grid.dp(mode))
    return psi


def product_amplitudes(atomic, mode_states):
    out = np.asarray(atomic, dtype=complex)
    for psi in mode_states:
        out = np.multiply.outer(out, psi)
    return out


def initial_state(spec, grid, atomic_amplitudes, centers):
    """Atomic spinor times one coherent state per mode, in the P representation.

    ``centers`` is a sequence of (x0, p0) pairs, one per mode.
    """
    atomic = np.asarray(atomic_amplitudes, dtype=complex)
    if atomic.shape != (spec.internal_dim,):
        raise ValueError(f"{spec.kind.value} needs {spec.internal_dim} atomic amplitudes, got {atomic.shape}")
    weight = float(np.sum(np.abs(atomic) ** 2))
    if abs(weight - 1.0) > 1e-12:
        raise ValueError(f"atomic amplitudes must be normalized (sum |c|^2 = {weight!r})")
    if grid.n_modes != spec.n_modes or len(centers) != spec.n_modes:
        raise ValueError(f"{spec.kind.value} has {spec.n_modes} mode(s)")
    modes = [coherent_state(grid, x0, p0, mode=k) for k, (x0, p0) in enumerate(centers)]
    return SpinorField(grid, product_amplitudes(atomic, modes), Representation.P)


# --- grid dump --------------------------------------------------------------


def atomic_write_text(path, text):
    """Write ``text`` to ``path`` through a temporary file and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def grid_csv_text(field, comment=None):
    """CSV text with columns p1[,p2],re_c1,im_c1,... (x1[,x2] in X space)."""
    prefix = "p" if field.representation is Representation.P else "x"
    coords = [f"{prefix}{k + 1}" for k in range(field.grid.n_modes)]
    comps = []
    for j in range(field.internal_dim):
        comps += [f"re_c{j + 1}", f"im_c{j + 1}"]
    lines = []
    if comment:
        lines.append(f"# {comment}")
    lines.append(",".join(coords + comps))
    mesh = [m.ravel() for m in field.grid.mesh(field.representation)]
    flat = field.amplitudes.reshape(field.internal_dim, -1)
    for i in range(flat.shape[1]):
        row = [repr(float(m[i])) for m in mesh]
        for j in range(field.internal_dim):
            row += [repr(float(flat[j, i].real)), repr(float(flat[j, i].imag))]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def write_grid_csv(field, path, comment=None):
    atomic_write_text(path, grid_csv_text(field, comment))


def read_grid_csv(path, grid):
    """Inverse of ``write_grid_csv`` for a known grid."""
    with open(path, encoding="utf-8") as fh:
        rows = [line.strip() for line in fh if line.strip() and not line.startswith("#")]
    header = rows[0].split(",")
    rep = Representation.P if header[0].startswith("p") else Representation.X
    data = np.array([[float(v) for v in r.split(",")] for r in rows[1:]])
    values = data[:, grid.n_modes:]
    dim = values.shape[1] // 2
    amps = (values[:, 0::2] + 1j * values[:, 1::2]).T.reshape((dim,) + grid.shape)
    return SpinorField(grid, amps, rep)
