"""Populations, atomic inversion, quadrature moments and marginal densities."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .field import Representation, norm2, to_representation
from .model import coupling_field


@dataclass
class ObservableSet:
    norm2: float
    populations: np.ndarray
    inversion: float
    x_mean: np.ndarray
    p_mean: np.ndarray


def populations(field, renormalize=True):
    """Atomic level populations p_j, divided by the total norm unless ``renormalize`` is off."""
    cell = field.grid.cell(field.representation)
    axes = tuple(range(1, field.amplitudes.ndim))
    p = np.sum(np.abs(field.amplitudes) ** 2, axis=axes) * cell
    total = p.sum()
    if not total > 0:
        raise ValueError("populations of a zero-norm field are undefined")
    return p / total if renormalize else p


def inversion(pops):
    """W = p2 - p1. For the Lambda model this is the 2-1 inversion."""
    return float(pops[1] - pops[0])


def _weighted_means(field, density_rep, workers=None):
    f = field if field.representation is density_rep else to_representation(field, density_rep, workers)
    density = np.sum(np.abs(f.amplitudes) ** 2, axis=0)
    total = density.sum()
    means = []
    for coord in f.grid.mesh(density_rep):
        means.append(float(np.sum(density * coord) / total))
    return np.array(means), f


def quadrature_expectations(field, workers=None):
    """(<X_k>, <P_k>) for every mode, normalized by the current norm."""
    p_mean, _ = _weighted_means(field, Representation.P, workers)
    x_mean, _ = _weighted_means(field, Representation.X, workers)
    return x_mean, p_mean


def edge_mass(field, cells=2):
    """Probability within ``cells`` grid cells of any edge of the current representation."""
    density = np.sum(np.abs(field.amplitudes) ** 2, axis=0)
    mask = np.zeros(density.shape, dtype=bool)
    for axis in range(density.ndim):
        index = [slice(None)] * density.ndim
        index[axis] = slice(0, cells)
        mask[tuple(index)] = True
        index[axis] = slice(-cells, None)
        mask[tuple(index)] = True
    return float(density[mask].sum() * field.grid.cell(field.representation))


def adiabatic_frames_on_grid(spec, grid):
    """Eigenvectors of the coupling matrix at every momentum point, shape grid + (d, d)."""
    mesh = grid.mesh(Representation.P)
    p2 = mesh[1] if len(mesh) > 1 else 0.0
    m = np.moveaxis(coupling_field(spec, mesh[0], p2), (0, 1), (-2, -1))
    _, vecs = np.linalg.eigh(m)
    return vecs


def adiabatic_populations(field, spec, renormalize=True):
    """Weight of the state on each adiabatic surface, lowest surface first.

    Projection probabilities are independent of the eigenvector phases, so no
    gauge fixing is needed here.
    """
    if field.representation is not Representation.P:
        raise ValueError("adiabatic populations need the momentum representation")
    vecs = adiabatic_frames_on_grid(spec, field.grid)
    psi = np.moveaxis(field.amplitudes, 0, -1)
    proj = np.einsum("...ij,...i->...j", vecs.conj(), psi)
    axes = tuple(range(proj.ndim - 1))
    pops = np.sum(np.abs(proj) ** 2, axis=axes) * field.grid.cell(Representation.P)
    return pops / pops.sum() if renormalize else pops


def marginal_density(field, mode=0, representation=Representation.P, workers=None):
    """|psi|^2 summed over the atom and the other mode; integrates to norm2 with weight d(axis)."""
    rep = Representation(representation)
    f = field if field.representation is rep else to_representation(field, rep, workers)
    density = np.sum(np.abs(f.amplitudes) ** 2, axis=0)
    if f.grid.n_modes == 2:
        other = 1 - mode
        density = density.sum(axis=other) * (f.grid.dp(other) if rep is Representation.P else f.grid.dx(other))
    return density


def observable_set(field, renormalize=True, workers=None):
    pops = populations(field, renormalize)
    x_mean, p_mean = quadrature_expectations(field, workers)
    return ObservableSet(norm2(field), pops, inversion(pops), x_mean, p_mean)
