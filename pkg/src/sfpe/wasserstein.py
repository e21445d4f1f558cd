"""Wasserstein-p distances between empirical laws on the real line.

On ``R`` the optimal coupling is the quantile coupling, so

    d_p(F, G)^p = int_0^1 |F^{-1}(u) - G^{-1}(u)|^p du

with ``F^{-1}(t) = inf{x : F(x) >= t}``.  For empirical laws both quantile
functions are step functions, and the integral is computed exactly.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

# above this many terms the p-th power sum is accumulated with math.fsum
COMPENSATED_THRESHOLD = 10**6


class EmpiricalDistribution:
    """Sorted finite sample viewed as a probability law.

    Construction sorts a copy of the input; the original array is untouched.
    """

    __slots__ = ("sorted_values",)

    def __init__(self, values, *, assume_sorted=False):
        arr = np.array(values, dtype=np.float64).ravel()
        if arr.size < 1:
            raise DomainError("an empirical distribution needs at least one value")
        if not np.all(np.isfinite(arr)):
            raise DomainError("empirical values must be finite")
        if not assume_sorted:
            arr.sort()
        arr.flags.writeable = False
        self.sorted_values = arr

    @property
    def n(self):
        return self.sorted_values.size

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"EmpiricalDistribution(n={self.n})"

    def cdf(self, x):
        """Right-continuous empirical CDF."""
        return np.searchsorted(self.sorted_values, x, side="right") / self.n

    def quantile(self, u):
        return quantile(self, u)

    def shifted(self, t):
        return EmpiricalDistribution(self.sorted_values + t, assume_sorted=True)

    def scaled(self, s):
        return EmpiricalDistribution(self.sorted_values * s, assume_sorted=s >= 0)


def _as_ed(x):
    return x if isinstance(x, EmpiricalDistribution) else EmpiricalDistribution(x)


def _ceil_index(u, n):
    # ceil(u n) - 1, snapping u n to an integer when it is within rounding of one
    un = np.asarray(u, dtype=np.float64) * n
    r = np.rint(un)
    k = np.where(np.abs(un - r) <= 1e-9 * np.maximum(1.0, un), r, np.ceil(un))
    return np.clip(k.astype(np.int64) - 1, 0, n - 1)


def quantile(ed: EmpiricalDistribution, u):
    """Generalized inverse ``inf{x : F(x) >= u}`` of the empirical CDF.

    Accepts a scalar or an array of levels in the open interval (0, 1).
    """
    ed = _as_ed(ed)
    ua = np.asarray(u, dtype=np.float64)
    if np.any(~((ua > 0) & (ua < 1))):
        raise DomainError("quantile level must lie in (0, 1)")
    out = ed.sorted_values[_ceil_index(ua, ed.n)]
    return float(out) if out.ndim == 0 else out


def _power_mean(diff, p, weights=None):
    terms = np.abs(diff) ** p
    if weights is not None:
        terms = terms * weights
    if terms.size >= COMPENSATED_THRESHOLD:
        total = math.fsum(terms)
    else:
        total = float(terms.sum())
    return total if weights is not None else total / diff.size


def wasserstein_pp_equal(a, b, p):
    """``d_p^p`` for equal sample sizes: mean of ``|a_(i) - b_(i)|^p``."""
    a, b = _as_ed(a), _as_ed(b)
    if a.n != b.n:
        raise DomainError("equal-size path needs equal sample sizes")
    return _power_mean(a.sorted_values - b.sorted_values, p)


def wasserstein_pp_merge(a, b, p):
    """``d_p^p`` by exact integration over the merged grid ``{i/n} U {j/m}``.

    Breakpoints are handled as integers in units of ``1/lcm(n, m)`` so the
    grid merge is exact.
    """
    a, b = _as_ed(a), _as_ed(b)
    n, m = a.n, b.n
    L = math.lcm(n, m)
    sa, sb = L // n, L // m
    ticks = np.union1d(np.arange(1, n + 1, dtype=np.int64) * sa,
                       np.arange(1, m + 1, dtype=np.int64) * sb)
    left = np.concatenate(([0], ticks[:-1]))
    # on (left, right] the quantile of a is its order statistic floor(left / sa)
    xa = a.sorted_values[left // sa]
    xb = b.sorted_values[left // sb]
    return _power_mean(xa - xb, p, weights=(ticks - left) / L)


def wasserstein_p(a, b, p: float = 1.0) -> float:
    """Wasserstein distance of order ``p >= 1`` between two empirical laws."""
    if not p >= 1:
        raise DomainError("p must be >= 1")
    a, b = _as_ed(a), _as_ed(b)
    pp = wasserstein_pp_equal(a, b, p) if a.n == b.n else wasserstein_pp_merge(a, b, p)
    return pp ** (1.0 / p)


def wasserstein_pp(a, b, p: float = 1.0) -> float:
    """``d_p^p``, avoiding the final root."""
    if not p >= 1:
        raise DomainError("p must be >= 1")
    a, b = _as_ed(a), _as_ed(b)
    return wasserstein_pp_equal(a, b, p) if a.n == b.n else wasserstein_pp_merge(a, b, p)


def riemann_pp(a, b, p, points=10**6):
    """Midpoint Riemann sum of the quantile integral (reference oracle)."""
    a, b = _as_ed(a), _as_ed(b)
    u = (np.arange(points) + 0.5) / points
    qa = a.sorted_values[_ceil_index(u, a.n)]
    qb = b.sorted_values[_ceil_index(u, b.n)]
    return float(np.mean(np.abs(qa - qb) ** p))


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------

@dataclass
class BoundReport:
    holds: bool
    min_slack: float
    violations: int
    pos_norm: float
    neg_norm: float


def quantile_tail_bound_check(ed, q: float, grid: int = 1000) -> BoundReport:
    """Check ``|G^{-1}(u)| <= ||X+||_q (1-u)^{-1/q} + ||X-||_q u^{-1/q}`` on a grid.

    The norms are those of the empirical law itself; levels are the grid
    midpoints ``(i - 1/2) / grid``.
    """
    if not q > 0:
        raise DomainError("q must be > 0")
    if grid < 1:
        raise DomainError("grid must be >= 1")
    ed = _as_ed(ed)
    x = ed.sorted_values
    pos = float(np.mean(np.maximum(x, 0.0) ** q) ** (1.0 / q))
    neg = float(np.mean(np.maximum(-x, 0.0) ** q) ** (1.0 / q))
    u = (np.arange(1, grid + 1) - 0.5) / grid
    lhs = np.abs(quantile(ed, u))
    rhs = pos * (1.0 - u) ** (-1.0 / q) + neg * u ** (-1.0 / q)
    slack = rhs - lhs
    tol = 1e-12 * np.maximum(1.0, rhs)
    violations = int(np.sum(slack < -tol))
    return BoundReport(violations == 0, float(slack.min()), violations, pos, neg)


@dataclass
class PropertyReport:
    holds: bool
    checked: int
    failures: list = field(default_factory=list)


def metric_axiom_suite(samples, p: float, q: float | None = None, rtol: float = 1e-10) -> PropertyReport:
    """Check symmetry, identity, triangle and ``d_p <= d_q`` over all tuples.

    ``q`` defaults to ``2 p``.
    """
    eds = [_as_ed(s) for s in samples]
    if len(eds) < 3:
        raise DomainError("need at least three distributions")
    q = 2.0 * p if q is None else q
    if q < p:
        raise DomainError("need q >= p for the monotonicity check")
    k = len(eds)
    d = np.zeros((k, k))
    failures = []
    checked = 0
    for i, j in itertools.product(range(k), repeat=2):
        d[i, j] = wasserstein_p(eds[i], eds[j], p)
    for i in range(k):
        checked += 1
        if d[i, i] != 0.0:
            failures.append(("identity", i, d[i, i]))
    for i, j in itertools.combinations(range(k), 2):
        checked += 2
        if d[i, j] != d[j, i]:
            failures.append(("symmetry", i, j, d[i, j] - d[j, i]))
        dq = wasserstein_p(eds[i], eds[j], q)
        if d[i, j] > dq * (1 + rtol) + 1e-300:
            failures.append(("monotone", i, j, d[i, j], dq))
    # bad[i, j, l]: d(i, l) > d(i, j) + d(j, l)
    bad = d[:, None, :] > (d[:, :, None] + d[None, :, :]) * (1 + rtol)
    checked += k**3
    for i, j, l in zip(*np.nonzero(bad)):
        failures.append(("triangle", int(i), int(j), int(l)))
    return PropertyReport(not failures, checked, failures)
