"""Scenarios, reference solutions and convergence studies.

Three scenario families are provided: a narrow space-time Gaussian pulse on
``(0, 4)`` with P1 elements, the same pulse with P2 elements and a fine
region placed inside, across or outside the pulse, and a spatially constant
solution on ``(0, 1)`` with Neumann boundaries.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import erf, expit

from .femspace import FeSpace, assemble, errorNorms
from .integrators import IntegratorConfig, run, snap_steps
from .mesh import RegionSpec, buildLocallyRefined

logger = logging.getLogger(__name__)

DEFAULT_COURANT = {1: 1.0, 2: 0.35}
DEFAULT_C_S = 0.1


def _zero(x):
    return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class Scenario:
    name: str
    domain: Tuple[float, float]
    bc: str
    source: Callable  # f(x, t), vectorised in x
    T: float
    degree: int = 1
    p: int = 2
    nu: float = 0.01
    fine_interval: Optional[Tuple[float, float]] = None
    weighting: str = "abrupt"  # or "weighted"
    c_s: float = DEFAULT_C_S
    courant: Optional[float] = None
    u0: Callable = _zero
    v0: Callable = _zero
    exact: Optional[Callable] = None  # u(x, t)
    exact_dx: Optional[Callable] = None  # u_x(x, t)
    baseline: str = "exact"  # or "reference"
    reference_factor: int = 16

    def __post_init__(self):
        if self.weighting not in ("abrupt", "weighted"):
            raise ValueError(f"weighting must be 'abrupt' or 'weighted', got {self.weighting!r}")
        if (self.exact is None) != (self.exact_dx is None):
            raise ValueError("exact and exact_dx must be given together")
        if self.baseline not in ("exact", "reference"):
            raise ValueError(f"baseline must be 'exact' or 'reference', got {self.baseline!r}")
        if self.uses_reference and self.reference_factor < 2:
            raise ValueError("reference baseline needs reference_factor >= 2")

    @property
    def uses_reference(self) -> bool:
        return self.exact is None or self.baseline == "reference"

    @property
    def courant_factor(self) -> float:
        return self.courant if self.courant is not None else DEFAULT_COURANT[self.degree]

    def layers(self, h: float) -> int:
        """Number of transition layers ``s`` used on a mesh of coarse size ``h``."""
        if self.weighting == "abrupt":
            return 1
        return max(1, int(np.floor(self.c_s / h + 0.5)))

    def dt(self, h: float) -> float:
        return self.courant_factor * np.exp(-self.nu) * h


def gaussian_pulse(x, t):
    x = np.asarray(x, dtype=float)
    return 250.0 * np.exp(-400.0 * ((x - 2.0) ** 2 + (t - 0.1) ** 2))


_S_NODES, _S_WEIGHTS = np.polynomial.legendre.leggauss(24)
PULSE_T_MAX = 1.5


def _duhamel(x, t, kernel, chunk=4096):
    """``0.5 * int_0^t g(s) kernel(x, t - s) ds`` for the separable pulse source."""
    x = np.asarray(x, dtype=float)
    if t > PULSE_T_MAX:
        raise ValueError(f"closed-form pulse solution only valid for t <= {PULSE_T_MAX}")
    out = np.zeros(x.shape)
    if t <= 0:
        return out[()]
    panels = np.linspace(0.0, t, int(np.ceil(t / 0.01)) + 1)
    half = 0.5 * np.diff(panels)[:, None]
    s = (panels[:-1, None] + half * (_S_NODES + 1.0)).ravel()
    w = (half * _S_WEIGHTS).ravel() * 250.0 * np.exp(-400.0 * (s - 0.1) ** 2)
    # the response vanishes (below 1e-16) farther than t + 0.35 from the centre
    flat = x.ravel()
    hit = np.flatnonzero(np.abs(flat - 2.0) < t + 0.35)
    res = out.ravel()
    for start in range(0, len(hit), chunk):
        idx = hit[start:start + chunk]
        res[idx] = 0.5 * kernel(flat[idx, None], t - s[None, :]) @ w
    return res.reshape(x.shape)[()]


def pulse_exact(x, t):
    """Free-space solution for the pulse source with zero initial data (d'Alembert/Duhamel)."""
    def F(y):
        return np.sqrt(np.pi) / 40.0 * erf(20.0 * (y - 2.0))
    return _duhamel(x, t, lambda xx, r: F(xx + r) - F(xx - r))


def pulse_exact_dx(x, t):
    def k(xx, r):
        return np.exp(-400.0 * (xx + r - 2.0) ** 2) - np.exp(-400.0 * (xx - r - 2.0) ** 2)
    return _duhamel(x, t, k)


def scenarioGaussianPulse(**overrides) -> Scenario:
    """P1 pulse problem on (0, 4) with fine region [1.6, 2.4], p = 2.

    The waves stay far from the Dirichlet ends up to t = 1.5, so the
    free-space solution serves as exact solution.
    """
    sc = Scenario(name="gaussian-pulse", domain=(0.0, 4.0), bc="dirichlet",
                  source=gaussian_pulse, T=0.15, degree=1, p=2, nu=0.01,
                  fine_interval=(1.6, 2.4), exact=pulse_exact, exact_dx=pulse_exact_dx)
    return replace(sc, **overrides)


SHIFTED_FINE = {"inside": (1.6, 2.4), "across": (2.0, 2.4), "outside": (2.2, 2.4)}


def scenarioShiftedFine(which: str, **overrides) -> Scenario:
    """P2 pulse problem, p = 5, with the fine region inside/across/outside the pulse."""
    if which not in SHIFTED_FINE:
        raise ValueError(f"which must be one of {tuple(SHIFTED_FINE)}, got {which!r}")
    sc = Scenario(name=f"shifted-{which}", domain=(0.0, 4.0), bc="dirichlet",
                  source=gaussian_pulse, T=0.15, degree=2, p=5, nu=0.01,
                  fine_interval=SHIFTED_FINE[which], exact=pulse_exact, exact_dx=pulse_exact_dx)
    return replace(sc, **overrides)


# -- spatially constant solution ----------------------------------------------

def _g(t):
    return 0.8 * (1.0 / (t - 0.1) + 1.0 / (t - 0.9))


def constant_profile(t):
    """Smooth 0 -> 1 transition on (0.1, 0.9)."""
    t = np.asarray(t, dtype=float)
    out = np.where(t >= 0.9, 1.0, 0.0)
    inside = (t > 0.1) & (t < 0.9)
    ti = np.where(inside, t, 0.5)
    with np.errstate(over="ignore"):
        val = expit(-_g(ti))
    return np.where(inside, val, out)[()]


def constant_profile_dd(t):
    """Second time derivative of :func:`constant_profile`.

    With ``s = 1/(1 + e^g)``: ``s'' = s(1-s)((1-2s) g'^2 - g'')``.
    """
    t = np.asarray(t, dtype=float)
    inside = (t > 0.1) & (t < 0.9)
    ti = np.where(inside, t, 0.5)
    a, b = ti - 0.1, ti - 0.9
    g1 = -0.8 * (1.0 / a**2 + 1.0 / b**2)
    g2 = 1.6 * (1.0 / a**3 + 1.0 / b**3)
    with np.errstate(over="ignore"):
        s = expit(-_g(ti))
        s1m = expit(_g(ti))
    val = s * s1m * ((1.0 - 2.0 * s) * g1**2 - g2)
    return np.where(inside, val, 0.0)[()]


def scenarioConstantSolution(**overrides) -> Scenario:
    """Spatially constant solution on (0, 1), Neumann, fine region [0.5, 1], P2, p = 2."""
    sc = Scenario(
        name="constant-solution", domain=(0.0, 1.0), bc="neumann",
        source=lambda x, t: np.full(np.shape(x), float(constant_profile_dd(t))),
        T=0.29, degree=2, p=2, nu=0.01, fine_interval=(0.5, 1.0),
        exact=lambda x, t: np.full(np.shape(x), float(constant_profile(t))),
        exact_dx=lambda x, t: np.zeros(np.shape(x)))
    return replace(sc, **overrides)


SCENARIOS = {
    "gaussian-pulse": scenarioGaussianPulse,
    "shifted-inside": lambda **kw: scenarioShiftedFine("inside", **kw),
    "shifted-across": lambda **kw: scenarioShiftedFine("across", **kw),
    "shifted-outside": lambda **kw: scenarioShiftedFine("outside", **kw),
    "constant-solution": scenarioConstantSolution,
}


def get_scenario(name: str, **overrides) -> Scenario:
    try:
        factory = SCENARIOS[name]
    except KeyError:
        raise ValueError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}") from None
    return factory(**overrides)


# -- discretisation helpers ---------------------------------------------------

def build_space(sc: Scenario, h: float, s: Optional[int] = None) -> FeSpace:
    spec = RegionSpec(domain=sc.domain, h_coarse=h, fine_interval=sc.fine_interval, ratio=sc.p)
    mesh = buildLocallyRefined(spec)
    return assemble(mesh, sc.degree, sc.bc, s=sc.layers(h) if s is None else s)


@dataclass
class ReferenceSolution:
    """Dense uniform-mesh leapfrog solution sampled at one time."""

    space: FeSpace
    u: np.ndarray
    T: float
    dt: float

    def value(self, x):
        return self.space.evaluate(self.u, x)

    def dx(self, x):
        return self.space.evaluate(self.u, x, derivative=True)

    @property
    def breakpoints(self):
        return self.space.mesh.vertices


def referenceSolution(sc: Scenario, h: float, T: float,
                      refinementFactor: Optional[int] = None) -> ReferenceSolution:
    """Plain leapfrog on a uniform mesh of size ``h / refinementFactor``.

    The step is shrunk so that an integer number of steps ends exactly at ``T``.
    """
    factor = refinementFactor or sc.reference_factor
    h_ref = h / factor
    spec = RegionSpec(domain=sc.domain, h_coarse=h_ref)
    space = assemble(buildLocallyRefined(spec), sc.degree, sc.bc)
    n = max(1, int(np.ceil(T / sc.dt(h_ref) - 1e-9)))
    dt = T / n
    cfg = IntegratorConfig(dt=dt, variant="plain-lf")
    res = run(space, None, cfg, sc.u0, sc.v0, space.load_function(sc.source), n * dt)
    if res.blowup:
        raise FloatingPointError(f"reference solution blew up at step {res.blowup_step}")
    return ReferenceSolution(space=space, u=res.u, T=T, dt=dt)


# -- convergence studies -------------------------------------------------------

@dataclass
class ErrorRow:
    h: float
    dofs: int
    err_l2: float
    err_h1: float
    runtime: float
    T: float
    s: int
    blowup_step: Optional[int] = None


@dataclass
class ErrorReport:
    scenario: str
    variant: str
    weighting: str
    rows: List[ErrorRow] = field(default_factory=list)

    @property
    def h(self):
        return np.array([r.h for r in self.rows])

    @property
    def err_l2(self):
        return np.array([r.err_l2 for r in self.rows])

    @property
    def err_h1(self):
        return np.array([r.err_h1 for r in self.rows])

    @property
    def slope_l2(self) -> Optional[float]:
        return fit_slope(self.h, self.err_l2)

    @property
    def slope_h1(self) -> Optional[float]:
        return fit_slope(self.h, self.err_h1)

    def to_csv(self) -> str:
        lines = ["h,dofs,errL2rel,errH1rel,runtime_s"]
        for r in self.rows:
            lines.append(f"{r.h:.12g},{r.dofs},{r.err_l2:.12g},{r.err_h1:.12g},{r.runtime:.3f}")
        if len(self.rows) > 1:
            lines.append(f"# slope_L2={self.slope_l2:.12g} slope_H1={self.slope_h1:.12g}")
        return "\n".join(lines) + "\n"


def fit_slope(h, err) -> Optional[float]:
    """Least-squares slope of ``log(err)`` against ``log(h)``; None for < 2 points."""
    h, err = np.asarray(h, dtype=float), np.asarray(err, dtype=float)
    ok = np.isfinite(err) & (err > 0)
    if ok.sum() < 2:
        return None
    return float(np.polyfit(np.log(h[ok]), np.log(err[ok]), 1)[0])


def solve(sc: Scenario, h: float, variant: str = "lflts", s: Optional[int] = None,
          record_energy: bool = False):
    """Discretise and integrate one scenario; returns ``(space, RunResult)``."""
    space = build_space(sc, h, s=s)
    cfg = IntegratorConfig(dt=sc.dt(h), p=sc.p, nu=sc.nu, variant=variant)
    res = run(space, None, cfg, sc.u0, sc.v0, space.load_function(sc.source), sc.T,
              record_energy=record_energy)
    return space, res


def convergenceStudy(sc: Scenario, hList: Sequence[float], variant: str = "lflts",
                     weighting: Optional[str] = None, refinementFactor: Optional[int] = None
                     ) -> ErrorReport:
    """Relative L2/H1 errors at the final time for each coarse mesh size.

    With a reference baseline, every row is compared against a
    :func:`referenceSolution` computed on ``min(hList) / refinementFactor``
    at that row's (snapped) final time.
    """
    hList = [float(h) for h in hList]
    if any(b >= a for a, b in zip(hList, hList[1:])):
        raise ValueError("hList must be strictly decreasing")
    if weighting is not None:
        sc = replace(sc, weighting=weighting)
    report = ErrorReport(scenario=sc.name, variant=variant, weighting=sc.weighting)
    h_ref_base = min(hList)
    refs = {}
    for h in hList:
        t0 = time.perf_counter()
        space, res = solve(sc, h, variant=variant)
        T = res.T
        if res.blowup:
            report.rows.append(ErrorRow(h, space.n_dofs, np.nan, np.nan,
                                        time.perf_counter() - t0, T, space.s, res.blowup_step))
            continue
        if not sc.uses_reference:
            err = errorNorms(space, res.u, lambda x: sc.exact(x, T), lambda x: sc.exact_dx(x, T))
        else:
            key = round(T, 12)
            if key not in refs:
                refs[key] = referenceSolution(sc, h_ref_base, T, refinementFactor)
            ref = refs[key]
            err = errorNorms(space, res.u, ref.value, ref.dx, breakpoints=ref.breakpoints)
        elapsed = time.perf_counter() - t0
        logger.info("%s h=%g dofs=%d L2=%.3e H1=%.3e (%.2fs)", sc.name, h, space.n_dofs,
                    err.l2_rel, err.h1_rel, elapsed)
        report.rows.append(ErrorRow(h, space.n_dofs, err.l2_rel, err.h1_rel, elapsed, T, space.s))
    return report


__all__ = [
    "Scenario", "scenarioGaussianPulse", "scenarioShiftedFine", "scenarioConstantSolution",
    "get_scenario", "SCENARIOS", "gaussian_pulse", "pulse_exact", "pulse_exact_dx",
    "constant_profile", "constant_profile_dd",
    "build_space", "referenceSolution", "ReferenceSolution", "ErrorRow", "ErrorReport",
    "fit_slope", "solve", "convergenceStudy", "snap_steps",
]
