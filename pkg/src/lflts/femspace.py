"""Mass-lumped conforming P1/P2 finite elements on a :class:`Mesh1D`.

Fields are plain ``numpy`` vectors over the *active* degrees of freedom
(Dirichlet nodes removed).  Degrees of freedom are ordered by coordinate:
for P2, vertex ``i`` is full dof ``2i`` and the midpoint of element ``i``
is full dof ``2i + 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np
import scipy.sparse as sp

from .mesh import Mesh1D, etaWeights

BOUNDARY_CONDITIONS = ("dirichlet", "neumann")

# per-element lumped weights / h and stiffness * h, local order (left, [mid,] right)
_LUMP = {1: np.array([0.5, 0.5]), 2: np.array([1.0, 4.0, 1.0]) / 6.0}
_STIFF = {
    1: np.array([[1.0, -1.0], [-1.0, 1.0]]),
    2: np.array([[7.0, -8.0, 1.0], [-8.0, 16.0, -8.0], [1.0, -8.0, 7.0]]) / 3.0,
}


def _shape(degree, xi):
    """Local basis values and reference derivatives at ``xi`` in [0, 1]."""
    if degree == 1:
        phi = np.stack([1.0 - xi, xi])
        dphi = np.stack([-np.ones_like(xi), np.ones_like(xi)])
    else:
        phi = np.stack([(1.0 - xi) * (1.0 - 2.0 * xi), 4.0 * xi * (1.0 - xi), xi * (2.0 * xi - 1.0)])
        dphi = np.stack([4.0 * xi - 3.0, 4.0 - 8.0 * xi, 4.0 * xi - 1.0])
    return phi, dphi


class ErrorNorms(NamedTuple):
    l2: float
    h1: float
    l2_rel: float
    h1_rel: float


@dataclass(frozen=True)
class FeSpace:
    mesh: Mesh1D
    degree: int
    bc: str
    s: int
    c2: np.ndarray
    dof_coords: np.ndarray  # all dofs
    active: np.ndarray  # bool mask over all dofs
    elem_dofs: np.ndarray  # (n_el, degree + 1) full dof indices
    lumped_mass: np.ndarray  # active dofs
    stiffness: sp.csr_matrix  # active x active
    eta: np.ndarray  # active dofs
    n_quad: int = 8

    @property
    def n_dofs(self) -> int:
        return int(self.active.sum())

    @property
    def coords(self) -> np.ndarray:
        """Coordinates of the active dofs."""
        return self.dof_coords[self.active]

    def inner(self, u, v) -> float:
        """Mass-lumped scalar product."""
        return float(np.dot(self.lumped_mass * u, v))

    def norm(self, u) -> float:
        return float(np.sqrt(self.inner(u, u)))

    def interpolate(self, g: Callable) -> np.ndarray:
        """Nodal interpolant of ``g(x)`` (vectorised) on the active dofs."""
        return np.broadcast_to(np.asarray(g(self.coords), dtype=float), (self.n_dofs,)).copy()

    def expand(self, u) -> np.ndarray:
        full = np.zeros(len(self.dof_coords))
        full[self.active] = u
        return full

    def evaluate(self, u, x, derivative: bool = False) -> np.ndarray:
        """Point values (or x-derivatives) of the FE function ``u``."""
        x = np.asarray(x, dtype=float)
        verts = self.mesh.vertices
        e = np.clip(np.searchsorted(verts, x, side="right") - 1, 0, self.mesh.n_elements - 1)
        h = verts[e + 1] - verts[e]
        xi = (x - verts[e]) / h
        phi, dphi = _shape(self.degree, xi)
        coef = self.expand(u)[self.elem_dofs[e]].T
        if derivative:
            return np.sum(coef * dphi, axis=0) / h
        return np.sum(coef * phi, axis=0)

    def sampler(self, u):
        """Return ``(value, derivative)`` callables of the FE function ``u``."""
        u = np.array(u, dtype=float)
        return (lambda x: self.evaluate(u, x), lambda x: self.evaluate(u, x, derivative=True))

    def load_function(self, f: Callable) -> Callable[[float], np.ndarray]:
        """Wrap a source ``f(x, t)`` as ``t -> f_S(t)`` (see :func:`loadVector`)."""
        xq, B = self._load_operator()

        def f_S(t):
            vals = np.broadcast_to(np.asarray(f(xq, t), dtype=float), xq.shape)
            return B @ vals

        return f_S

    def _load_operator(self):
        cached = getattr(self, "_load_cache", None)
        if cached is not None:
            return cached
        gx, gw = np.polynomial.legendre.leggauss(self.n_quad)
        xi = 0.5 * (gx + 1.0)
        verts = self.mesh.vertices
        h = np.diff(verts)
        xq = (verts[:-1, None] + h[:, None] * xi[None, :]).ravel()
        phi, _ = _shape(self.degree, xi)  # (ndof_loc, nq)
        n_el, nq = len(h), len(xi)
        cols = (np.arange(n_el)[:, None, None] * nq + np.arange(nq)[None, None, :])
        cols = np.broadcast_to(cols, (n_el, self.degree + 1, nq)).ravel()
        vals = (0.5 * h[:, None, None] * phi[None, :, :] * gw[None, None, :]).ravel()
        rows = self.elem_dofs[:, :, None].repeat(nq, axis=2).ravel()
        B = sp.csr_matrix((vals, (rows, cols)), shape=(len(self.dof_coords), n_el * nq))
        B = sp.diags(1.0 / self.lumped_mass) @ B[self.active]
        cache = (xq, B.tocsr())
        object.__setattr__(self, "_load_cache", cache)
        return cache

    def to_csv_rows(self, u):
        """``(x, value)`` rows over the active dofs."""
        return list(zip(self.coords.tolist(), np.asarray(u).tolist()))


def assemble(mesh: Mesh1D, degree: int = 1, bc: str = "dirichlet",
             c2=1.0, s: int = 1, n_quad: int = 8) -> FeSpace:
    """Assemble lumped mass, stiffness and mapping weights on ``mesh``.

    ``c2`` is the squared wave speed, scalar or one value per element.
    ``s`` is the number of element layers of the coarse-to-fine transition;
    ``s = 1`` gives the abrupt projection onto the fine nodes.
    """
    if degree not in (1, 2):
        raise ValueError(f"degree must be 1 or 2, got {degree}")
    if bc not in BOUNDARY_CONDITIONS:
        raise ValueError(f"bc must be one of {BOUNDARY_CONDITIONS}, got {bc!r}")
    if s < 1:
        raise ValueError(f"s must be >= 1, got {s}")
    n_el = mesh.n_elements
    c2 = np.broadcast_to(np.asarray(c2, dtype=float), (n_el,)).copy()
    if np.any(c2 <= 0):
        raise ValueError("c2 must be positive on every element")

    verts = mesh.vertices
    h = np.diff(verts)
    if degree == 1:
        dof_coords = verts.copy()
        elem_dofs = mesh.elements.copy()
    else:
        dof_coords = np.empty(2 * len(verts) - 1)
        dof_coords[0::2] = verts
        dof_coords[1::2] = 0.5 * (verts[:-1] + verts[1:])
        i = np.arange(n_el)
        elem_dofs = np.column_stack([2 * i, 2 * i + 1, 2 * i + 2])
    n_full = len(dof_coords)

    mass = np.zeros(n_full)
    np.add.at(mass, elem_dofs, h[:, None] * _LUMP[degree][None, :])
    loc = _STIFF[degree]
    vals = (c2 / h)[:, None, None] * loc[None, :, :]
    rows = np.repeat(elem_dofs[:, :, None], degree + 1, axis=2)
    cols = np.repeat(elem_dofs[:, None, :], degree + 1, axis=1)
    K = sp.csr_matrix((vals.ravel(), (rows.ravel(), cols.ravel())), shape=(n_full, n_full))

    active = np.ones(n_full, dtype=bool)
    if bc == "dirichlet":
        active[[0, -1]] = False
    K = K[active][:, active].tocsr()
    K.sum_duplicates()

    eta_v = etaWeights(mesh, s)
    if degree == 1:
        eta = eta_v
    elif s == 1:
        # abrupt case: indicator of the nodes in the closure of the fine region
        eta = np.zeros(n_full)
        eta[0::2] = eta_v
        eta[1::2] = mesh.fine_flags.astype(float)
    else:
        eta = np.empty(n_full)
        eta[0::2] = eta_v
        eta[1::2] = 0.5 * (eta_v[:-1] + eta_v[1:])

    for arr in (dof_coords, active, elem_dofs):
        arr.flags.writeable = False
    return FeSpace(mesh=mesh, degree=degree, bc=bc, s=int(s), c2=c2,
                   dof_coords=dof_coords, active=active, elem_dofs=elem_dofs,
                   lumped_mass=mass[active], stiffness=K, eta=eta[active], n_quad=n_quad)


def applyA(space: FeSpace, u) -> np.ndarray:
    """Discrete operator: lumped-mass inverse times stiffness."""
    return (space.stiffness @ u) / space.lumped_mass


def loadVector(space: FeSpace, f: Callable, t: float) -> np.ndarray:
    """``f_S(t)`` with ``(f_S, b_z)`` lumped equal to ``int f(., t) b_z``."""
    return space.load_function(f)(t)


def mapFine(space: FeSpace, u) -> np.ndarray:
    return space.eta * u


def mapCoarse(space: FeSpace, u) -> np.ndarray:
    return u - space.eta * u


def errorNorms(space: FeSpace, u, exact: Callable, exact_dx: Callable,
               breakpoints: Optional[np.ndarray] = None, n_quad: int = 6) -> ErrorNorms:
    """L2 and full H1 errors of ``u`` against ``exact``.

    Integration runs over the union of the mesh vertices and the optional
    ``breakpoints`` (e.g. the vertices of a reference mesh), so piecewise
    polynomial references are integrated exactly.  Relative values fall
    back to absolute when the exact norm is below 1e-14.
    """
    pts = space.mesh.vertices
    if breakpoints is not None:
        pts = np.union1d(pts, np.asarray(breakpoints, dtype=float))
        pts = pts[(pts >= space.mesh.vertices[0]) & (pts <= space.mesh.vertices[-1])]
    h = np.diff(pts)
    gx, gw = np.polynomial.legendre.leggauss(n_quad)
    x = (pts[:-1, None] + 0.5 * h[:, None] * (gx[None, :] + 1.0)).ravel()
    w = (0.5 * h[:, None] * gw[None, :]).ravel()

    ue, due = exact(x), exact_dx(x)
    ue = np.broadcast_to(np.asarray(ue, dtype=float), x.shape)
    due = np.broadcast_to(np.asarray(due, dtype=float), x.shape)
    e0 = space.evaluate(u, x) - ue
    e1 = space.evaluate(u, x, derivative=True) - due
    l2 = float(np.sqrt(np.sum(w * e0**2)))
    h1 = float(np.sqrt(l2**2 + np.sum(w * e1**2)))
    n0 = float(np.sqrt(np.sum(w * ue**2)))
    n1 = float(np.sqrt(n0**2 + np.sum(w * due**2)))
    l2_rel = l2 / n0 if n0 >= 1e-14 else l2
    h1_rel = h1 / n1 if n1 >= 1e-14 else h1
    return ErrorNorms(l2, h1, l2_rel, h1_rel)
