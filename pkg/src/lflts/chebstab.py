"""Stabilized Chebyshev constants and polynomial families for LF-LTS(nu).

All evaluations use the three-term recurrences in double precision.  The
arguments that occur in practice lie in ``[-delta, delta]`` with
``delta = 1 + nu/p**2`` close to one, where the recurrences are well
conditioned for the moderate ``p`` used here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

P_MAX = 64
NU_MAX = 0.5


def chebT(n, x):
    """Chebyshev polynomial of the first kind ``T_n(x)``.

    ``n = -1`` returns zero (the convention used by the beta table).
    Works elementwise on arrays.
    """
    if n < -1:
        raise ValueError(f"chebT needs n >= -1, got {n}")
    x = np.asarray(x, dtype=float)
    if n == -1:
        return np.zeros_like(x)[()]
    t_prev, t = np.ones_like(x), x.copy()
    if n == 0:
        return t_prev[()]
    for _ in range(n - 1):
        t_prev, t = t, 2.0 * x * t - t_prev
    return t[()]


def chebU(n, x):
    """Chebyshev polynomial of the second kind ``U_n(x)``, with ``U_{-1} = 0``."""
    if n < -1:
        raise ValueError(f"chebU needs n >= -1, got {n}")
    x = np.asarray(x, dtype=float)
    u_prev, u = np.zeros_like(x), np.ones_like(x)
    if n == -1:
        return u_prev[()]
    for _ in range(n):
        u_prev, u = u, 2.0 * x * u - u_prev
    return u[()]


def chebU_derivatives(n, m, x):
    """Return ``[U_n(x), U_n'(x), ..., U_n^{(m)}(x)]``.

    Obtained by differentiating the recurrence ``U_{j+1} = 2x U_j - U_{j-1}``
    ``m`` times, which gives
    ``U_{j+1}^{(i)} = 2x U_j^{(i)} + 2i U_j^{(i-1)} - U_{j-1}^{(i)}``.
    """
    if n < 0 or m < 0:
        raise ValueError("need n >= 0 and m >= 0")
    prev = np.zeros(m + 1)
    cur = np.zeros(m + 1)
    cur[0] = 1.0
    for _ in range(n):
        nxt = 2.0 * x * cur - prev
        nxt[1:] += 2.0 * np.arange(1, m + 1) * cur[:-1]
        prev, cur = cur, nxt
    return cur


@dataclass(frozen=True)
class ChebCoeffs:
    """Constants of the stabilized LF-LTS scheme for one ``(p, nu)`` pair.

    ``beta_table[k, l + 1]`` holds ``beta^{(k, l)}`` for ``l = -1 .. p - k``;
    entries outside that range are NaN.  Use :meth:`beta` for lookups.
    """

    p: int
    nu: float
    delta: float
    omega: float
    beta_table: np.ndarray
    gamma: np.ndarray
    # T_k(delta) for k = 0..p and U_j(delta) for j = 0..p-1
    T_at_delta: np.ndarray
    U_at_delta: np.ndarray

    def beta(self, k: int, l: int) -> float:
        if not (0 <= k <= self.p - 1 and -1 <= l <= self.p - k):
            raise IndexError(f"beta({k}, {l}) undefined for p={self.p}")
        return float(self.beta_table[k, l + 1])

    def dT_at_delta(self, k: int) -> float:
        """``T_k'(delta) = k U_{k-1}(delta)``."""
        if k == 0:
            return 0.0
        return k * float(self.U_at_delta[k - 1])

    def rows(self):
        """Yield ``(kind, k, l, value)`` rows covering the full tables."""
        yield ("delta", "", "", self.delta)
        yield ("omega", "", "", self.omega)
        for k in range(self.p):
            for l in range(-1, self.p - k + 1):
                yield ("beta", k, l, self.beta(k, l))
        for k in range(self.p):
            yield ("gamma", k, "", float(self.gamma[k]))


def coefficients(p: int, nu: float) -> ChebCoeffs:
    """Build all stabilized Chebyshev constants for ratio ``p`` and damping ``nu``."""
    if not isinstance(p, (int, np.integer)) or p < 1 or p > P_MAX:
        raise ValueError(f"p must be an integer in [1, {P_MAX}], got {p!r}")
    if not (0.0 <= nu <= NU_MAX):
        raise ValueError(f"nu must lie in [0, {NU_MAX}], got {nu!r}")
    p = int(p)
    delta = 1.0 + nu / p**2

    T = np.empty(p + 1)
    T[0] = 1.0
    T[1] = delta
    for k in range(1, p):
        T[k + 1] = 2.0 * delta * T[k] - T[k - 1]
    U = np.empty(p)
    U[0] = 1.0
    if p > 1:
        U[1] = 2.0 * delta
    for j in range(1, p - 1):
        U[j + 1] = 2.0 * delta * U[j] - U[j - 1]

    def T_ext(n):
        return 0.0 if n == -1 else T[n]

    omega = 2.0 * p * U[p - 1] / T[p]

    beta = np.full((p, p + 2), np.nan)
    gamma = np.empty(p)
    for k in range(p):
        for l in range(-1, p - k + 1):
            beta[k, l + 1] = T_ext(k + l) / T[k + 1]
        gamma[k] = (p - k) * beta[k, p - k + 1] / U[p - 1 - k]

    for arr in (T, U, beta, gamma):
        arr.flags.writeable = False
    return ChebCoeffs(p=p, nu=float(nu), delta=delta, omega=omega,
                      beta_table=beta, gamma=gamma, T_at_delta=T, U_at_delta=U)


def evalPDeltaT(c: ChebCoeffs, k: int, dt: float, x):
    """Evaluate ``P_{p,nu,k}^{dt}(x) = P_{p,nu,k}(dt^2 x) / (dt^2 x)``.

    Uses the three-term recurrence, so ``x = 0`` needs no special casing.
    """
    if not 0 <= k <= c.p:
        raise ValueError(f"k must lie in [0, {c.p}], got {k}")
    x = np.asarray(x, dtype=float)
    arg = c.delta - dt**2 * x / c.omega
    prev = np.zeros_like(x)
    if k == 0:
        return prev[()]
    cur = np.full_like(x, 2.0 / (c.delta * c.omega))
    for j in range(1, k):
        b0, bm = c.beta(j, 0), c.beta(j, -1)
        prev, cur = cur, 2.0 * b0 * arg * cur - bm * prev + 4.0 * b0 / c.omega
    return cur[()]


def evalQDeltaT(c: ChebCoeffs, r: int, k: int, dt: float, x):
    """Evaluate ``Q_{p,nu,r,k}^{dt}(x)`` by its three-term recurrence in ``k``."""
    if not 0 <= r <= c.p - 1:
        raise ValueError(f"r must lie in [0, {c.p - 1}], got {r}")
    if not r <= k <= c.p:
        raise ValueError(f"need r <= k <= p, got r={r}, k={k}, p={c.p}")
    x = np.asarray(x, dtype=float)
    arg = c.delta - dt**2 * x / c.omega
    prev = np.zeros_like(x)
    if k == r:
        return prev[()]
    cur = np.full_like(x, c.gamma[r] / c.p**2)
    for j in range(r + 1, k):
        prev, cur = cur, 2.0 * c.beta(j, 0) * arg * cur - c.beta(j, -1) * prev
    return cur[()]


def PDeltaT_closed(c: ChebCoeffs, k: int, dt: float, x):
    """Closed form of ``P^{dt}_{p,nu,k}``; singular at ``x = 0``, for cross-checks."""
    y = dt**2 * np.asarray(x, dtype=float)
    return 2.0 * (1.0 - chebT(k, c.delta - y / c.omega) / c.T_at_delta[k]) / y


def QDeltaT_closed(c: ChebCoeffs, r: int, k: int, dt: float, x):
    """Closed form of ``Q^{dt}_{p,nu,r,k}``, for cross-checks."""
    p = c.p
    y = dt**2 * np.asarray(x, dtype=float)
    return ((p - r) / p**2 * c.T_at_delta[p] / c.T_at_delta[k]
            * chebU(k - 1 - r, c.delta - y / c.omega) / c.U_at_delta[p - 1 - r])


class DerivativeBounds(NamedTuple):
    lower: float
    upper: float
    value: float


def boundsLemmaA1(n: int, m: int, p: int, nu: float) -> DerivativeBounds:
    """Two-sided bound on ``U_n^{(m)}(delta_{p,nu})`` for ``0 <= m <= n <= p-1``.

    Raises ``AssertionError`` if the computed derivative leaves the bounds.
    """
    if not 0 <= m <= n:
        raise ValueError(f"need 0 <= m <= n, got m={m}, n={n}")
    if n > p - 1:
        raise ValueError(f"need n <= p - 1, got n={n}, p={p}")
    if not 0.0 <= nu <= NU_MAX:
        raise ValueError(f"nu must lie in [0, {NU_MAX}], got {nu!r}")
    delta = 1.0 + nu / p**2
    value = float(chebU_derivatives(n, m, delta)[m])
    lower = 2**m * math.factorial(m) * math.comb(n + m + 1, n - m) * (2.0 * nu / p**2) ** m
    double_fact = math.prod(range(1, 2 * m + 2, 2))
    upper = (n + 1) ** (2 * m + 1) * math.exp(nu / 2.0) / double_fact
    slack = 1e-12 * max(1.0, abs(value))
    if not (lower - slack <= value <= upper + slack):
        raise AssertionError(
            f"U_{n}^({m})(delta) = {value!r} outside [{lower!r}, {upper!r}]")
    return DerivativeBounds(lower, upper, value)
