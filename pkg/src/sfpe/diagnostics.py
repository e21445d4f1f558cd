"""Contraction constants, error bounds, convergence experiments and estimators."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .branching import BranchingVectorSpec, Kind, sample_branching_batch
from .errors import BudgetExceededError, DomainError
from .maps import Family, SfpeMap, apply_map_batch, closed_form_Hp, phi
from .popdyn import InitialDistribution, SamplePool, pool_to_empirical, run_population_dynamics
from .wasserstein import quantile, wasserstein_p, wasserstein_pp
from .wbp import OracleBudget, expected_tree_size, sample_exact_levels

DEFAULT_TRIALS = 200_000
SLOPE_SLACK = 0.2
SE_MULTIPLIER = 3.0


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    method: str


def _mean_se(x):
    x = np.asarray(x, dtype=np.float64)
    se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
    return float(x.mean()), se


def _rng(rng):
    return np.random.default_rng(0) if rng is None else rng


# ---------------------------------------------------------------------------
# constants
# ---------------------------------------------------------------------------

def generic_Hp(map: SfpeMap, spec: BranchingVectorSpec, p: float, trials: int = DEFAULT_TRIALS,
               rng=None) -> Estimate:
    """Monte Carlo value of ``2 E[(sum_r phi(C_r))^p]``, valid for any Lipschitz map."""
    batch = sample_branching_batch(spec, trials, _rng(rng))
    if map.family == Family.FREE_ENTROPY:
        z = batch.n * math.tanh(map.beta)
    else:
        w = np.abs(batch.c)  # phi(c) = |c| for every built-in family
        z = np.zeros(batch.size)
        nz = batch.n > 0
        if w.size:
            z[nz] = np.add.reduceat(w, batch.offsets[:-1][nz])
    mean, se = _mean_se(2.0 * z.astype(np.float64) ** p)
    return Estimate(mean, se, "generic_mc")


def estimate_Hp(map: SfpeMap, spec: BranchingVectorSpec, p: float, trials: int = DEFAULT_TRIALS,
                rng=None) -> Estimate:
    """Mean-Lipschitz constant: the closed form when known, else :func:`generic_Hp`."""
    if p < 1:
        raise DomainError("p must be >= 1")
    cf = closed_form_Hp(map, spec, p)
    if cf is not None:
        return Estimate(float(cf), 0.0, "closed_form")
    return generic_Hp(map, spec, p, trials, rng)


def rho_beta(spec: BranchingVectorSpec, beta: float, trials: int = DEFAULT_TRIALS, rng=None) -> float:
    """``E[sum_{i<=N} |C_i|^beta]``; analytic for the built-in drivers."""
    if not beta > 0:
        raise DomainError("beta must be > 0")
    k = spec.kind
    if k in (Kind.QUICKSORT, Kind.FIND):
        return 2.0 / (beta + 1.0)
    if k == Kind.ISING:
        return spec.offspring_law().mean() * math.tanh(spec.param("beta")) ** beta
    if k == Kind.PAGERANK_LIKE:
        a = spec.weight_halfwidth()
        return spec.param("mean_offspring") * a**beta / (beta + 1.0)
    return rho_beta_mc(spec, beta, trials, rng).value


def rho_beta_mc(spec, beta, trials=DEFAULT_TRIALS, rng=None) -> Estimate:
    batch = sample_branching_batch(spec, trials, _rng(rng))
    s = np.zeros(batch.size)
    nz = batch.n > 0
    if batch.c.size:
        s[nz] = np.add.reduceat(np.abs(batch.c) ** beta, batch.offsets[:-1][nz])
    mean, se = _mean_se(s)
    return Estimate(mean, se, "mc")


def init_abs_moment(init: InitialDistribution, p, trials=DEFAULT_TRIALS, rng=None) -> float:
    """``E|R^(0)|^p``, analytic for point masses and uniforms."""
    val = init.abs_moment(p)
    if val is not None:
        return float(val)
    return float(np.mean(np.abs(init.sample(_rng(rng), trials)) ** p))


def map_at_zero_norm(map: SfpeMap, spec: BranchingVectorSpec, p, trials=DEFAULT_TRIALS, rng=None) -> Estimate:
    """``(E|Phi(Q, N, C, 0)|^p)^(1/p)`` with a delta-method standard error."""
    batch = sample_branching_batch(spec, trials, _rng(rng))
    vals = apply_map_batch(map, batch, np.zeros(batch.c.size))
    mean, se = _mean_se(np.abs(vals) ** p)
    norm = mean ** (1.0 / p)
    nse = (norm / (p * mean)) * se if mean > 0 else 0.0
    return Estimate(norm, nse, "mc")


def moment_bound(map: SfpeMap, spec: BranchingVectorSpec, p: float, k: int,
                 init: InitialDistribution | None = None, trials: int = DEFAULT_TRIALS,
                 rng=None, Hp: float | None = None) -> float:
    """Upper bound on ``(E|R^(k)|^p)^(1/p)``: ``A_p * sum_{i<k} (H_p^(1/p))^i``.

    ``A_p = (H_p^(1/p) + 1) ||R^(0)||_p + ||Phi(Q, N, C, 0)||_p``.  With
    ``k = 0`` the sum is empty and the bound is 0.
    """
    init = InitialDistribution() if init is None else init
    rng = _rng(rng)
    if Hp is None:
        Hp = estimate_Hp(map, spec, p, trials, rng).value
    h = Hp ** (1.0 / p)
    a_p = (h + 1.0) * init_abs_moment(init, p, trials, rng) ** (1.0 / p) \
        + map_at_zero_norm(map, spec, p, trials, rng).value
    return a_p * sum(h**i for i in range(k))


def mean_convergence_bound(Hp: float, p: float, k: int, per_level_iid_errors) -> float:
    """Bound on ``E[d_p(pool_k, F_k)^p]`` from the i.i.d. errors ``e_0..e_k``.

    ``(sum_{r<=k} h^r)^(p-1) * sum_{j<=k} h^(k-j) e_j`` with ``h = H_p^(1/p)``.
    """
    e = list(per_level_iid_errors)
    if len(e) != k + 1:
        raise ValueError("need one i.i.d. error per level 0..k")
    return float(np.dot(mean_convergence_weights(Hp, p, k), e))


def mean_convergence_weights(Hp, p, k):
    h = Hp ** (1.0 / p)
    pre = sum(h**r for r in range(k + 1)) ** (p - 1)
    return np.array([pre * h ** (k - j) for j in range(k + 1)])


def rate_exponent(p: float, q: float) -> float:
    """Exponent ``min((q - p) / q, 1/2)`` of the mean-convergence rate in ``m``.

    ``q = inf`` is accepted and gives 1/2.
    """
    if not (q > p >= 1):
        raise DomainError("need q > p >= 1")
    if q == 2 * p:
        raise DomainError("q = 2p is excluded")
    return 0.5 if math.isinf(q) else min((q - p) / q, 0.5)


def fit_rate(ms, values):
    """Least-squares fit of ``log(values)`` on ``log(ms)``: (slope, intercept, R^2)."""
    x, y = np.log(np.asarray(ms, float)), np.log(np.asarray(values, float))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - float(np.sum(resid**2) / ss) if ss > 0 else 1.0
    return float(slope), float(intercept), r2


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

@dataclass
class Constants:
    p: float
    Hp: float
    Hp_stderr: float
    Hp_method: str
    Hp_generic: float
    rho_1: float | None
    rho_p: float | None
    A_p: float | None
    c_p: float | None
    A_p_moment: float


@dataclass
class PerM:
    m: int
    replications: int
    mean_dpp: float
    stderr: float
    iid_mean: list
    iid_stderr: list
    bound: float
    bound_stderr: float

    @property
    def dominated(self):
        slack = SE_MULTIPLIER * math.hypot(self.stderr, self.bound_stderr)
        return self.mean_dpp <= self.bound + slack


@dataclass
class ContractionRatio:
    level: int
    distance: float
    previous: float
    ratio: float | None

    @property
    def defined(self):
        return self.ratio is not None


@dataclass
class DiagnosticsReport:
    constants: Constants
    per_m: list = field(default_factory=list)
    fitted_rate: tuple | None = None
    bound_values: list = field(default_factory=list)
    contraction: list = field(default_factory=list)
    params: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)


def compute_constants(map, spec, p, init=None, trials=DEFAULT_TRIALS, seed=0) -> Constants:
    init = InitialDistribution() if init is None else init
    g = rngmod.substream(seed, rngmod.AUX, 0)
    hp = estimate_Hp(map, spec, p, trials, g)
    gen = generic_Hp(map, spec, p, trials, g).value
    rho1 = rhop = None
    if map.family == Family.LINEAR:
        rho1, rhop = rho_beta(spec, 1.0, trials, g), rho_beta(spec, p, trials, g)
    h = hp.value ** (1.0 / p)
    r0 = init_abs_moment(init, p, trials, g) ** (1.0 / p)
    z0 = map_at_zero_norm(map, spec, p, trials, g).value
    moment_a = (h + 1.0) * r0 + z0
    c_p = a_p = None
    if hp.value < 1:
        c_p = hp.value
        # d_p(F_k, F)^p <= (d_p(F_1, F_0) / (1 - h))^p H_p^k with d_p(F_1, F_0) <= h r0 + z0
        a_p = ((h * r0 + z0) / (1.0 - h)) ** p
    elif rho1 is not None and max(rho1, rhop) < 1:
        c_p = max(rho1, rhop)
    return Constants(p, hp.value, hp.stderr, hp.method, gen, rho1, rhop, a_p, c_p, moment_a)


def run_convergence_experiment(map: SfpeMap, spec: BranchingVectorSpec, p: float, k: int,
                               m_grid, replications: int, oracle_size: int, seed: int, *,
                               init: InitialDistribution | None = None, q: float = math.inf,
                               trials: int = DEFAULT_TRIALS, threads: int = 1,
                               budget: OracleBudget | None = None) -> DiagnosticsReport:
    """Measure ``E[d_p(pool_k, F_k)^p]`` across pool sizes against an exact oracle.

    One exact reference sample of size ``oracle_size`` is drawn for every
    level ``0..k``.  For each ``m`` and replication the population dynamics
    pool of level ``k`` is compared with the level-``k`` reference, and an
    i.i.d. arm of size-``m`` exact samples is compared level by level; the
    i.i.d. errors feed :func:`mean_convergence_bound`.
    """
    init = InitialDistribution() if init is None else init
    m_grid = sorted(int(m) for m in m_grid)
    if replications < 2:
        raise DomainError("replications must be >= 2")
    if oracle_size < 10 * max(m_grid):
        warnings.warn("oracle size below 10 * max(m); distance estimates carry reference bias",
                      stacklevel=2)
    consts = compute_constants(map, spec, p, init, trials, seed)
    try:
        ref = sample_exact_levels(map, spec, k, init, oracle_size, rngmod.derive_seed(seed, 1), budget)
    except BudgetExceededError as exc:
        size = expected_tree_size(spec, k)
        hint = f" (expected {size:.3g} nodes per tree)" if size else ""
        raise BudgetExceededError(f"{exc}; try a smaller k or oracle size{hint}",
                                  nodes=exc.nodes, index=exc.index) from exc
    refs = [np.sort(r) for r in ref]
    weights = mean_convergence_weights(consts.Hp, p, k)
    report = DiagnosticsReport(consts, params=dict(
        map=map.label, spec=spec.label, p=p, q=q, k=k, m_grid=m_grid, replications=replications,
        oracle_size=oracle_size, seed=seed, init=init.label))
    for m in m_grid:
        pd, iid = [], []
        for r in range(replications):
            pool = run_population_dynamics(map, spec, k, m, init, rngmod.derive_seed(seed, 2, m, r),
                                           threads=threads, keep="last")[0]
            pd.append(wasserstein_pp(pool.values, refs[k], p))
            draws = sample_exact_levels(map, spec, k, init, m, rngmod.derive_seed(seed, 3, m, r), budget)
            iid.append([wasserstein_pp(draws[j], refs[j], p) for j in range(k + 1)])
        iid = np.array(iid)
        mean, se = _mean_se(pd)
        e_mean = iid.mean(axis=0)
        e_se = iid.std(axis=0, ddof=1) / math.sqrt(replications)
        bound = float(weights @ e_mean)
        # levels share trees, so errors are summed conservatively
        bound_se = float(weights @ e_se)
        report.per_m.append(PerM(m, replications, mean, se, e_mean.tolist(), e_se.tolist(),
                                 bound, bound_se))
        for j in range(k + 1):
            report.bound_values.append((m, j, mean_convergence_bound(consts.Hp, p, j, e_mean[:j + 1])))
    means = [row.mean_dpp for row in report.per_m]
    if len(m_grid) >= 2 and all(v > 0 for v in means):
        report.fitted_rate = fit_rate(m_grid, means)
        expo = rate_exponent(p, q)
        report.checks["slope"] = report.fitted_rate[0] <= -expo + SLOPE_SLACK
    report.checks["decreasing"] = all(b < a for a, b in zip(means, means[1:]))
    report.checks["dominance"] = all(row.dominated for row in report.per_m)
    return report


def contraction_check(map: SfpeMap, spec: BranchingVectorSpec, p: float, k: int, M: int, seed: int,
                      init: InitialDistribution | None = None,
                      budget: OracleBudget | None = None) -> list[ContractionRatio]:
    """Ratios ``d_p(F_j, F_{j-1}) / d_p(F_{j-1}, F_{j-2})`` for ``j = 2..k`` from exact samples.

    A ratio is ``None`` when its denominator is below ``10 eps`` times the
    sample scale.
    """
    if k < 2:
        raise DomainError("k must be >= 2")
    levels = [np.sort(v) for v in sample_exact_levels(map, spec, k, init, M,
                                                       rngmod.derive_seed(seed, 4), budget)]
    dist = [None] + [wasserstein_p(levels[j], levels[j - 1], p) for j in range(1, k + 1)]
    out = []
    for j in range(2, k + 1):
        scale = max(1.0, float(np.abs(levels[j - 1]).max()), float(np.abs(levels[j - 2]).max()))
        den = dist[j - 1]
        ratio = None if den < 10 * np.finfo(float).eps * scale else dist[j] / den
        out.append(ContractionRatio(j, dist[j], den, ratio))
    return out


def seed_stability(map, spec, p, k, exponents, seed, reference, init=None):
    """``d_p(pool_k, reference)`` along ``m = 2**a`` with one shared seed.

    Pools of different sizes share their keyed block streams, so this traces
    one realization of the algorithm as ``m`` grows.
    """
    ref = np.sort(np.asarray(reference, float))
    return [wasserstein_p(run_population_dynamics(map, spec, k, 2**a, init, seed, keep="last")[0].values,
                          ref, p) for a in exponents]


# ---------------------------------------------------------------------------
# pool estimators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FunctionalSpec:
    """Test function ``h`` with ``|h(x)| <= C (1 + |x|^p)``.

    kinds: ``moment`` (``x^r``), ``abs_moment`` (``|x|^r``), ``indicator``
    (``1{x <= t}``), ``polynomial`` (``sum_i coeffs[i] x^i``).
    """

    kind: str
    r: float | None = None
    t: float | None = None
    coeffs: tuple = ()

    @classmethod
    def moment(cls, r):
        return cls("moment", r=r)

    @classmethod
    def abs_moment(cls, r):
        return cls("abs_moment", r=r)

    @classmethod
    def indicator(cls, t):
        return cls("indicator", t=float(t))

    @classmethod
    def polynomial(cls, coeffs):
        return cls("polynomial", coeffs=tuple(float(c) for c in coeffs))

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "moment":
            return x**self.r
        if self.kind == "abs_moment":
            return np.abs(x) ** self.r
        if self.kind == "indicator":
            return (x <= self.t).astype(np.float64)
        if self.kind == "polynomial":
            return np.polynomial.polynomial.polyval(x, self.coeffs)
        raise DomainError(f"unknown functional {self.kind!r}")


@dataclass(frozen=True)
class FunctionalEstimate:
    value: float
    bootstrap_se: float


def estimate_functional(pool: SamplePool, h: FunctionalSpec, *, bootstrap: int = 200,
                        rng=None) -> FunctionalEstimate:
    """Plug-in average of ``h`` over the pool.

    The bootstrap standard error resamples the pool as if it were i.i.d.;
    pool entries are dependent, so it is only a heuristic.
    """
    vals = h(pool.values)
    value = float(vals.sum() / vals.size)
    se = 0.0
    if bootstrap > 0 and vals.size > 1:
        g = _rng(rng)
        boots = np.array([vals[g.integers(0, vals.size, vals.size)].mean() for _ in range(bootstrap)])
        se = float(boots.std(ddof=1))
    return FunctionalEstimate(value, se)


def estimate_quantiles(pool: SamplePool, probs) -> list[float]:
    ed = pool_to_empirical(pool)
    return [quantile(ed, u) for u in probs]
