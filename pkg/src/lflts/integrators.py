"""Leapfrog time stepping with stabilized local time-stepping.

Three update rules share one state layout (previous and current field):

``lflts``
    the stabilized LF-LTS(nu) step with intermediate source sampling in
    the fine region;
``split-lfc``
    the same inner iteration, but the source is only sampled at the
    global time level;
``plain-lf``
    classical leapfrog with the global step.

:func:`twoStepOracle` computes the same update from the equivalent
two-step form ``u+ = 2u - u- + dt^2 (R - A_p u)``, applying the
stability and source polynomials to vectors through their own
recurrences.  It is kept separate from the stage iteration on purpose.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from .chebstab import ChebCoeffs, coefficients
from .femspace import FeSpace, applyA

logger = logging.getLogger(__name__)

VARIANTS = ("lflts", "split-lfc", "plain-lf")

Load = Optional[Callable[[float], np.ndarray]]


class BlowupError(FloatingPointError):
    """Raised when a step produces non-finite or runaway values."""

    def __init__(self, step: int, message: str = ""):
        super().__init__(message or f"numerical blowup at step {step}")
        self.step = step


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float
    p: int = 1
    nu: float = 0.01
    variant: str = "lflts"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.variant == "plain-lf":
            object.__setattr__(self, "p", 1)
        if int(self.p) < 1:
            raise ValueError(f"p must be >= 1, got {self.p}")

    @classmethod
    def from_mesh(cls, h_coarse: float, p: int = 1, nu: float = 0.01,
                  variant: str = "lflts", courant: float = 1.0) -> "IntegratorConfig":
        """Practical step rule ``dt = courant * exp(-nu) * h_coarse``."""
        return cls(dt=courant * np.exp(-nu) * h_coarse, p=p, nu=nu, variant=variant)

    def coefficients(self) -> ChebCoeffs:
        return coefficients(self.p, self.nu)


@dataclass
class LtsState:
    u_prev: np.ndarray
    u_curr: np.ndarray
    n: int
    dt: float

    @property
    def t(self) -> float:
        return self.n * self.dt


def _sample_time(n: int, k: int, dt: float, p: int) -> float:
    return n * dt + k * (dt / p)


def initialSteps(space: FeSpace, load: Load, u0: Callable, v0: Callable,
                 cfg: IntegratorConfig) -> LtsState:
    """Second-order Taylor start: returns the state holding ``u^(0), u^(1)``."""
    dt = cfg.dt
    U0 = space.interpolate(u0)
    V0 = space.interpolate(v0)
    acc = -applyA(space, U0)
    if load is not None:
        acc = acc + load(0.0)
    U1 = U0 + dt * V0 + 0.5 * dt**2 * acc
    return LtsState(u_prev=U0, u_curr=U1, n=1, dt=dt)


def lflts_stages(space: FeSpace, cheb: ChebCoeffs, state: LtsState, load: Load,
                 split: bool = False):
    """Run the inner iteration and return ``(u_next, [z_0, ..., z_p])``."""
    p, dt, n = cheb.p, state.dt, state.n
    eta = space.eta
    u = state.u_curr
    tau2 = (dt / p) ** 2
    c1 = 2.0 * p**2 / cheb.omega

    w = -applyA(space, u - eta * u)
    f0 = None
    if load is not None:
        f0 = load(_sample_time(n, 0, dt, p))
        w = w + (f0 if split else f0 - eta * f0)

    inner = c1 * cheb.beta(0, 0) * (w - applyA(space, eta * u))
    if f0 is not None and not split:
        inner = inner + cheb.gamma[0] * eta * f0
    zs = [u, u + 0.5 * tau2 * inner]
    for k in range(1, p):
        bm, b0 = cheb.beta(k, -1), cheb.beta(k, 0)
        z, z_old = zs[-1], zs[-2]
        inner = c1 * b0 * (w - applyA(space, eta * z))
        if load is not None and not split:
            fk = 0.5 * (load(_sample_time(n, k, dt, p)) + load(_sample_time(n, -k, dt, p)))
            inner = inner + cheb.gamma[k] * eta * fk
        zs.append((1.0 + bm) * z - bm * z_old + tau2 * inner)
    u_next = -state.u_prev + 2.0 * zs[-1]
    return u_next, zs


def _advance(state: LtsState, u_next: np.ndarray) -> LtsState:
    if not np.all(np.isfinite(u_next)):
        raise BlowupError(state.n + 1)
    return LtsState(u_prev=state.u_curr, u_curr=u_next, n=state.n + 1, dt=state.dt)


def stepLFLTS(space: FeSpace, cheb: ChebCoeffs, state: LtsState, load: Load,
              cfg: Optional[IntegratorConfig] = None) -> LtsState:
    u_next, _ = lflts_stages(space, cheb, state, load, split=False)
    return _advance(state, u_next)


def stepSplitLFC(space: FeSpace, cheb: ChebCoeffs, state: LtsState, load: Load,
                 cfg: Optional[IntegratorConfig] = None) -> LtsState:
    u_next, _ = lflts_stages(space, cheb, state, load, split=True)
    return _advance(state, u_next)


def stepPlainLF(space: FeSpace, cheb: Optional[ChebCoeffs], state: LtsState, load: Load,
                cfg: Optional[IntegratorConfig] = None) -> LtsState:
    acc = -applyA(space, state.u_curr)
    if load is not None:
        acc = acc + load(state.t)
    u_next = 2.0 * state.u_curr - state.u_prev + state.dt**2 * acc
    return _advance(state, u_next)


STEPPERS = {"lflts": stepLFLTS, "split-lfc": stepSplitLFC, "plain-lf": stepPlainLF}


# -- operator-polynomial oracle ------------------------------------------------

def _X(space, v):
    return applyA(space, space.eta * v)


def applyP(space: FeSpace, cheb: ChebCoeffs, dt: float, k: int, v) -> np.ndarray:
    """``P^{dt}_{p,nu,k}(A Pi_f) v`` via the polynomial recurrence."""
    prev = np.zeros_like(v)
    if k == 0:
        return prev
    cur = 2.0 / (cheb.delta * cheb.omega) * v
    s = dt**2 / cheb.omega
    for j in range(1, k):
        b0, bm = cheb.beta(j, 0), cheb.beta(j, -1)
        nxt = 2.0 * b0 * (cheb.delta * cur - s * _X(space, cur)) - bm * prev + 4.0 * b0 / cheb.omega * v
        prev, cur = cur, nxt
    return cur


def applyQ(space: FeSpace, cheb: ChebCoeffs, dt: float, r: int, k: int, v) -> np.ndarray:
    """``Q^{dt}_{p,nu,r,k}(A Pi_f) v`` via the polynomial recurrence."""
    prev = np.zeros_like(v)
    if k == r:
        return prev
    cur = cheb.gamma[r] / cheb.p**2 * v
    s = dt**2 / cheb.omega
    for j in range(r + 1, k):
        nxt = 2.0 * cheb.beta(j, 0) * (cheb.delta * cur - s * _X(space, cur)) - cheb.beta(j, -1) * prev
        prev, cur = cur, nxt
    return cur


def applyAp(space: FeSpace, cheb: ChebCoeffs, dt: float, u) -> np.ndarray:
    """Modified operator ``P^{dt}_{p,nu}(A Pi_f) A u`` of the two-step form."""
    return applyP(space, cheb, dt, cheb.p, applyA(space, u))


def sourceTerm(space: FeSpace, cheb: ChebCoeffs, dt: float, n: int, load: Load,
               split: bool = False) -> np.ndarray:
    """Right-hand side ``R_S(t_n)`` of the two-step form."""
    p = cheb.p
    if load is None:
        return np.zeros(space.n_dofs)
    eta = space.eta
    f0 = load(_sample_time(n, 0, dt, p))
    if split:
        return applyP(space, cheb, dt, p, f0)
    R = applyP(space, cheb, dt, p, f0 - eta * f0)
    R += applyQ(space, cheb, dt, 0, p, eta * f0)
    for r in range(1, p):
        fr = load(_sample_time(n, r, dt, p)) + load(_sample_time(n, -r, dt, p))
        R += applyQ(space, cheb, dt, r, p, eta * fr)
    return R


def twoStepOracle(space: FeSpace, cheb: ChebCoeffs, state: LtsState, load: Load,
                  cfg: Optional[IntegratorConfig] = None) -> np.ndarray:
    """Next field from the two-step operator form of the LTS scheme."""
    dt = state.dt
    split = cfg is not None and cfg.variant == "split-lfc"
    R = sourceTerm(space, cheb, dt, state.n, load, split=split)
    Au = applyAp(space, cheb, dt, state.u_curr)
    return 2.0 * state.u_curr - state.u_prev + dt**2 * (R - Au)


def explicitStage(space: FeSpace, cheb: ChebCoeffs, state: LtsState, load: Load, k: int) -> np.ndarray:
    """Closed-form representation of the inner stage ``z_k``.

    ``z_k = u - dt^2/2 P_k(X) A u + dt^2/2 (P_k(X) Pi_c f_0
    + sum_{|r|<k} Q_{|r|,k}(X) Pi_f f_r)`` with ``X = A Pi_f``.
    """
    p, dt, n = cheb.p, state.dt, state.n
    u = state.u_curr
    eta = space.eta
    z = u - 0.5 * dt**2 * applyP(space, cheb, dt, k, applyA(space, u))
    if load is None or k == 0:
        return z
    f0 = load(_sample_time(n, 0, dt, p))
    rhs = applyP(space, cheb, dt, k, f0 - eta * f0) + applyQ(space, cheb, dt, 0, k, eta * f0)
    for r in range(1, k):
        fr = load(_sample_time(n, r, dt, p)) + load(_sample_time(n, -r, dt, p))
        rhs += applyQ(space, cheb, dt, r, k, eta * fr)
    return z + 0.5 * dt**2 * rhs


# -- driver --------------------------------------------------------------------

def energy(space: FeSpace, cheb: ChebCoeffs, cfg: IntegratorConfig, u_old, u_new) -> float:
    """Modified leapfrog energy between two consecutive time levels."""
    dt = cfg.dt
    v = (u_new - u_old) / dt
    if cfg.variant == "plain-lf":
        Au = applyA(space, u_new)
    else:
        Au = applyAp(space, cheb, dt, u_new)
    return 0.5 * space.inner(v, v) + 0.5 * space.inner(Au, u_old)


@dataclass
class RunResult:
    state: LtsState
    n_steps: int
    T: float
    energies: np.ndarray = field(default_factory=lambda: np.zeros(0))
    blowup_step: Optional[int] = None
    snapshots: dict = field(default_factory=dict)

    @property
    def blowup(self) -> bool:
        return self.blowup_step is not None

    @property
    def u(self) -> np.ndarray:
        return self.state.u_curr


def snap_steps(T: float, dt: float) -> int:
    """Number of steps whose end time is nearest to ``T``."""
    return int(np.floor(T / dt + 0.5))


def run(space: FeSpace, cheb: Optional[ChebCoeffs], cfg: IntegratorConfig,
        u0: Callable, v0: Callable, load: Load, T: float,
        record_energy: bool = False, snapshot_steps: Sequence[int] = (),
        blowup_factor: float = 1e12) -> RunResult:
    """Integrate to the step nearest ``T`` with the configured variant.

    Blowup (non-finite values, or a lumped norm exceeding
    ``blowup_factor * (1 + ||u0||)``) stops the run and is recorded in the
    result rather than raised.
    """
    if cheb is None and cfg.variant != "plain-lf":
        cheb = cfg.coefficients()
    step = STEPPERS[cfg.variant]
    n_steps = snap_steps(T, cfg.dt)
    state = initialSteps(space, load, u0, v0, cfg)
    limit = blowup_factor * (1.0 + space.norm(state.u_prev))
    wanted = set(snapshot_steps)
    snaps = {}
    if 0 in wanted:
        snaps[0] = state.u_prev.copy()
    if n_steps == 0:
        state = LtsState(u_prev=state.u_prev, u_curr=state.u_prev, n=0, dt=cfg.dt)
        return RunResult(state=state, n_steps=0, T=0.0, snapshots=snaps)
    if 1 in wanted:
        snaps[1] = state.u_curr.copy()

    energies: List[float] = []
    if record_energy:
        energies.append(energy(space, cheb, cfg, state.u_prev, state.u_curr))
    blowup_step = None
    while state.n < n_steps:
        try:
            state = step(space, cheb, state, load, cfg)
        except BlowupError as err:
            blowup_step = err.step
            break
        if space.norm(state.u_curr) > limit:
            blowup_step = state.n
            break
        if record_energy:
            energies.append(energy(space, cheb, cfg, state.u_prev, state.u_curr))
        if state.n in wanted:
            snaps[state.n] = state.u_curr.copy()
    if blowup_step is not None:
        logger.info("blowup at step %d (dt=%g, variant=%s)", blowup_step, cfg.dt, cfg.variant)
    return RunResult(state=state, n_steps=n_steps, T=n_steps * cfg.dt,
                     energies=np.asarray(energies), blowup_step=blowup_step, snapshots=snaps)


def random_smooth_data(space: FeSpace, n_modes: int = 4, seed: int = 0) -> Callable:
    """Random combination of low sine modes vanishing at the domain ends."""
    rng = np.random.default_rng(seed)
    amps = rng.standard_normal(n_modes)
    a, b = space.mesh.vertices[0], space.mesh.vertices[-1]

    def u0(x):
        x = np.asarray(x, dtype=float)
        return sum(amp * np.sin((j + 1) * np.pi * (x - a) / (b - a)) for j, amp in enumerate(amps))

    return u0


def stabilityScan(space: FeSpace, dt_grid: Sequence[float], T: float, p: int,
                  nus: Sequence[float] = (0.0, 0.01), variant: str = "lflts",
                  seed: int = 0) -> List[dict]:
    """Run ``f = 0`` with random smooth data for every ``dt`` and ``nu``.

    Returns one row per ``dt``: ``{"dt": dt, nu: blowup step or None, ...}``.
    """
    dt_grid = np.asarray(dt_grid, dtype=float)
    if np.any(dt_grid <= 0) or np.any(np.diff(dt_grid) <= 0):
        raise ValueError("dt grid must be positive and strictly ascending")
    u0 = random_smooth_data(space, seed=seed)
    zero = lambda x: np.zeros_like(np.asarray(x, dtype=float))  # noqa: E731
    rows = []
    for dt in dt_grid:
        row = {"dt": float(dt)}
        for nu in nus:
            cfg = IntegratorConfig(dt=float(dt), p=p, nu=nu, variant=variant)
            res = run(space, None, cfg, u0, zero, None, T)
            row[nu] = res.blowup_step
        rows.append(row)
    return rows


__all__ = [
    "VARIANTS", "BlowupError", "IntegratorConfig", "LtsState", "RunResult",
    "initialSteps", "lflts_stages", "stepLFLTS", "stepSplitLFC", "stepPlainLF",
    "applyP", "applyQ", "applyAp", "sourceTerm", "twoStepOracle", "explicitStage",
    "energy", "run", "snap_steps", "stabilityScan", "random_smooth_data",
]
