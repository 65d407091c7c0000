"""Locally refined 1D meshes with graph distance to the fine region."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np


@dataclass(frozen=True)
class RegionSpec:
    """Geometry of a locally refined interval mesh.

    ``fine_interval`` is ``None`` for a uniform mesh.  Its endpoints must
    sit on the coarse grid ``a + j * h_coarse``; the fine part uses
    elements of size ``h_coarse / ratio``.
    """

    domain: Tuple[float, float]
    h_coarse: float
    fine_interval: Optional[Tuple[float, float]] = None
    ratio: int = 1


@dataclass(frozen=True)
class Mesh1D:
    vertices: np.ndarray
    elements: np.ndarray  # (n_el, 2) vertex indices
    fine_flags: np.ndarray  # bool per element
    h_coarse: float
    h_fine: float
    dist: np.ndarray  # graph distance per vertex, np.inf when no fine region

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.vertices)

    def summary(self, layers=(0, 1)) -> dict:
        """Counts and sizes as plain JSON-compatible values."""
        out = {
            "n_vertices": self.n_vertices,
            "n_elements": self.n_elements,
            "n_fine_elements": int(self.fine_flags.sum()),
            "h_coarse": self.h_coarse,
            "h_fine": self.h_fine,
            "domain": [float(self.vertices[0]), float(self.vertices[-1])],
        }
        for r in layers:
            out[f"layer_{r}_elements"] = int(fineLayers(self, r).sum())
        return out


def _snap(value: float, origin: float, h: float, what: str) -> int:
    j = (value - origin) / h
    jr = int(round(j))
    if abs(j - jr) > 0.5 + 1e-12:
        raise ValueError(f"{what}={value} is not on the coarse grid of size {h}")
    return jr


def buildLocallyRefined(spec: RegionSpec) -> Mesh1D:
    """Equidistant coarse mesh with an equidistant refined sub-interval.

    Elements are the intervals between consecutive vertices.  Distance to
    the fine region is the breadth-first graph distance along elements.
    """
    a, b = map(float, spec.domain)
    h = float(spec.h_coarse)
    if not (b > a and h > 0):
        raise ValueError("need a < b and h_coarse > 0")
    ratio = int(spec.ratio)
    if ratio < 1:
        raise ValueError(f"ratio must be >= 1, got {spec.ratio}")
    n_total = (b - a) / h
    if abs(n_total - round(n_total)) > 1e-8 * max(1.0, n_total):
        raise ValueError(f"domain length {b - a} is not a multiple of h_coarse={h}")
    n_total = int(round(n_total))

    if spec.fine_interval is None:
        vertices = a + h * np.arange(n_total + 1)
        vertices[-1] = b
        fine = np.zeros(n_total, dtype=bool)
        h_fine = h
    else:
        c, d = map(float, spec.fine_interval)
        if not (a <= c <= d <= b):
            raise ValueError(f"fine interval {spec.fine_interval} not inside {spec.domain}")
        jc = _snap(c, a, h, "fine start")
        jd = _snap(d, a, h, "fine end")
        if abs(a + jc * h - c) > 1e-9 * max(1.0, abs(c)) or abs(a + jd * h - d) > 1e-9 * max(1.0, abs(d)):
            raise ValueError(
                f"fine interval {spec.fine_interval} not commensurate with h_coarse={h}")
        left = a + h * np.arange(jc + 1)
        hf = h / ratio
        mid = left[-1] + hf * np.arange(1, (jd - jc) * ratio + 1)
        right = a + h * np.arange(jd + 1, n_total + 1)
        vertices = np.concatenate([left, mid, right])
        vertices[-1] = b
        n_el = len(vertices) - 1
        fine = np.zeros(n_el, dtype=bool)
        fine[jc:jc + (jd - jc) * ratio] = True
        h_fine = hf if fine.any() else h

    n_el = len(vertices) - 1
    elements = np.column_stack([np.arange(n_el), np.arange(1, n_el + 1)])
    dist = graph_distance(len(vertices), elements, fine)
    lengths = np.diff(vertices)
    h_c = float(lengths[~fine].max()) if (~fine).any() else h
    h_f = float(lengths[fine].max()) if fine.any() else h_fine
    for arr in (vertices, elements, fine, dist):
        arr.flags.writeable = False
    return Mesh1D(vertices=vertices, elements=elements, fine_flags=fine,
                  h_coarse=h_c, h_fine=min(h_f, h_c), dist=dist)


def graph_distance(n_vertices: int, elements: np.ndarray, fine_flags: np.ndarray) -> np.ndarray:
    """Breadth-first distance from the vertices of fine elements.

    Every vertex of a fine element is a source at distance zero.  Vertices
    not connected to any source (or all of them when there is no fine
    element) get ``np.inf``.
    """
    adjacency = [[] for _ in range(n_vertices)]
    for v0, v1 in elements:
        adjacency[v0].append(v1)
        adjacency[v1].append(v0)
    dist = np.full(n_vertices, np.inf)
    queue = deque()
    for v in np.unique(elements[fine_flags]):
        dist[v] = 0.0
        queue.append(v)
    while queue:
        v = queue.popleft()
        for w in adjacency[v]:
            if dist[w] == np.inf:
                dist[w] = dist[v] + 1.0
                queue.append(w)
    return dist


def etaWeights(mesh: Mesh1D, s: int) -> np.ndarray:
    """Discrete distance function ``max(0, 1 - dist/s)`` at the vertices."""
    if s < 1:
        raise ValueError(f"s must be >= 1, got {s}")
    with np.errstate(invalid="ignore"):
        eta = np.maximum(0.0, 1.0 - mesh.dist / s)
    return np.nan_to_num(eta, nan=0.0)


def fineLayers(mesh: Mesh1D, r: int) -> np.ndarray:
    """Boolean element mask of the fine region grown by ``r`` element layers.

    Layer ``r >= 1`` holds every element touching the closure of layer
    ``r - 1``, i.e. every element with a vertex at graph distance ``<= r - 1``.
    """
    if r < 0:
        raise ValueError(f"r must be >= 0, got {r}")
    if r == 0:
        return mesh.fine_flags.copy()
    return mesh.dist[mesh.elements].min(axis=1) <= r - 1
