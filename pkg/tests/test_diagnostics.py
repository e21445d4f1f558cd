import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sfpe import BranchingVectorSpec, DomainError, InitialDistribution, Law, SfpeMap, sample_exact_iid
from sfpe.diagnostics import (FunctionalSpec, contraction_check, estimate_Hp, estimate_functional,
                              estimate_quantiles, fit_rate, generic_Hp, map_at_zero_norm,
                              mean_convergence_bound, moment_bound, rate_exponent, rho_beta,
                              rho_beta_mc, run_convergence_experiment, seed_stability)
from sfpe.popdyn import pool_to_empirical, run_population_dynamics
from sfpe.wbp import sample_exact_levels


def test_estimate_Hp(quicksort, zero_weights, rng):
    mp, spec = quicksort
    est = estimate_Hp(mp, spec, 2)
    assert est.value == pytest.approx(1 / 3) and est.method == "closed_form"
    assert estimate_Hp(SfpeMap.linear(), zero_weights, 2, rng=rng).value == 0
    gen = generic_Hp(mp, spec, 2, 10**6, rng)
    assert gen.value == pytest.approx(2.0, rel=1e-12)
    assert estimate_Hp(mp, spec, 1, rng=rng).value == pytest.approx(2.0, rel=1e-12)
    with pytest.raises(DomainError):
        estimate_Hp(mp, spec, 0.5)


@pytest.mark.parametrize("mp,spec,p", [
    (SfpeMap.linear(True), BranchingVectorSpec.quicksort(), 2),
    (SfpeMap.linear(True), BranchingVectorSpec.quicksort(), 3),
    (SfpeMap.tree_sum(), BranchingVectorSpec.find(), 2),
    (SfpeMap.free_entropy(0.4), BranchingVectorSpec.ising(0.4, mean_degree=3.0), 1),
    (SfpeMap.linear(), BranchingVectorSpec.pagerank_like(), 1),
])
def test_generic_dominates_closed_form(mp, spec, p, rng):
    cf = estimate_Hp(mp, spec, p).value
    gen = generic_Hp(mp, spec, p, 100_000, rng)
    assert gen.value >= cf - 3 * gen.stderr


def test_rho_beta(rng):
    qs = BranchingVectorSpec.quicksort()
    assert rho_beta(qs, 1) == 1
    assert rho_beta(qs, 2) == pytest.approx(2 / 3)
    mc = rho_beta_mc(qs, 2, 10**6, rng)
    assert abs(mc.value - 2 / 3) <= 4 * mc.stderr
    ising = BranchingVectorSpec.ising(0.8, mean_degree=2.5)
    assert rho_beta(ising, 1.7) == pytest.approx(2.5 * math.tanh(0.8) ** 1.7)
    pr = BranchingVectorSpec.pagerank_like(cap=0.5, mean_offspring=4.0)
    mc = rho_beta_mc(pr, 2, 400_000, rng)
    assert abs(mc.value - rho_beta(pr, 2)) <= 4 * mc.stderr
    custom = BranchingVectorSpec.custom(Law.constant(3), Law.constant(0.5), Law.constant(0))
    assert rho_beta(custom, 2, 10, rng) == pytest.approx(0.75)


def test_moment_bound(quicksort, rng):
    mp, spec = quicksort
    assert moment_bound(mp, spec, 2, 0, rng=rng) == 0
    z = map_at_zero_norm(mp, spec, 2, 400_000, rng).value
    h = 1 / math.sqrt(3)
    b = moment_bound(mp, spec, 2, 5, InitialDistribution.point_mass(0), 400_000, rng)
    assert b == pytest.approx(z * sum(h**i for i in range(5)), rel=1e-2)
    assert b <= z / (1 - h) * 1.01


def test_mean_convergence_bound():
    e = [0.3, 0.2, 0.1]
    assert mean_convergence_bound(0.0, 2.0, 2, e) == 0.1
    assert mean_convergence_bound(0.5, 1.0, 2, e) == pytest.approx(0.25 * 0.3 + 0.5 * 0.2 + 0.1)
    h = 0.5 ** 0.5
    assert mean_convergence_bound(0.5, 2.0, 2, e) == pytest.approx(
        (1 + h + h * h) * (h * h * 0.3 + h * 0.2 + 0.1))
    with pytest.raises(ValueError):
        mean_convergence_bound(0.5, 1.0, 3, e)


def test_rate_exponent():
    assert rate_exponent(1, 3) == 0.5
    assert rate_exponent(1, 1.5) == pytest.approx(1 / 3)
    assert rate_exponent(1, math.inf) == 0.5
    for p, q in ((2, 4), (2, 2), (2, 1)):
        with pytest.raises(DomainError):
            rate_exponent(p, q)


@given(p=st.floats(1, 10), ratio=st.floats(1.01, 20), a=st.floats(1, 10))
def test_rate_exponent_scale_free(p, ratio, a):
    q = p * ratio
    if abs(ratio - 2) < 1e-9:
        return
    assert rate_exponent(p, q) == pytest.approx(rate_exponent(a * p, a * q), rel=1e-12)


def test_fit_rate():
    ms = [10, 100, 1000]
    s, c, r2 = fit_rate(ms, [3 * m**-0.5 for m in ms])
    assert s == pytest.approx(-0.5) and math.exp(c) == pytest.approx(3) and r2 == pytest.approx(1)


def test_contraction_degenerate(zero_weights):
    ratios = contraction_check(SfpeMap.linear(), zero_weights, 2, 4, 2000, 0)
    assert [r.level for r in ratios] == [2, 3, 4]
    # d(F_j, F_{j-1}) vanishes for j >= 2, so only ratios with that denominator are undefined
    assert ratios[0].ratio == 0 and ratios[0].distance == 0
    assert all(r.ratio is None for r in ratios[1:])
    with pytest.raises(DomainError):
        contraction_check(SfpeMap.linear(), zero_weights, 2, 1, 100, 0)


def test_convergence_experiment_quicksort_p2_bound(quicksort):
    mp, spec = quicksort
    rep = run_convergence_experiment(mp, spec, 2.0, 3, [1000], 50, 10_000, seed=12)
    row = rep.per_m[0]
    assert math.isfinite(row.bound) and len(row.iid_mean) == 4
    assert row.mean_dpp <= row.bound + 3 * math.hypot(row.stderr, row.bound_stderr)


def test_convergence_experiment_beta0_reduces_to_iid():
    mp = SfpeMap.free_entropy(0.0)
    spec = BranchingVectorSpec.ising(0.0, field=0.5, field_spread=0.5)
    rep = run_convergence_experiment(mp, spec, 1.0, 2, [100, 400, 1600], 10, 20_000, seed=3)
    means = [r.mean_dpp for r in rep.per_m]
    iid = [r.iid_mean[-1] for r in rep.per_m]
    for a, b, r in zip(means, iid, rep.per_m):
        assert abs(a - b) <= 4 * math.hypot(r.stderr, r.iid_stderr[-1])
    assert rep.fitted_rate[0] <= -0.5 + 0.2


def test_k0_harness_distance_zero():
    # m = M with the level-0 draws shared by both arms
    init = InitialDistribution.uniform(0, 1)
    mp, spec = SfpeMap.linear(True), BranchingVectorSpec.quicksort()
    from sfpe import rng as rngmod
    from sfpe.wasserstein import wasserstein_p
    pool = run_population_dynamics(mp, spec, 0, 5000, init, seed=1)[0]
    ref = sample_exact_iid(mp, spec, 0, init, 5000, 1, purpose=rngmod.INIT, block_size=rngmod.POOL_BLOCK)
    assert wasserstein_p(pool.values, ref, 1) == 0


def test_seed_stability_smoke(find):
    mp, spec = find
    ref = sample_exact_iid(mp, spec, 4, None, 50_000, 8)
    d = seed_stability(mp, spec, 1, 4, range(6, 15, 2), 5, ref)
    assert d[-1] < d[0]


def test_functionals(quicksort, rng):
    mp, spec = quicksort
    pool = run_population_dynamics(mp, spec, 10, 10**5, seed=13, keep="last")[0]
    assert abs(estimate_functional(pool, FunctionalSpec.moment(1), bootstrap=0).value) <= 0.02
    assert estimate_functional(pool, FunctionalSpec.indicator(math.inf), bootstrap=0).value == 1
    ed = pool_to_empirical(pool)
    for t in (-1.0, 0.0, 0.37):
        assert estimate_functional(pool, FunctionalSpec.indicator(t), bootstrap=0).value == ed.cdf(t)
    est = estimate_functional(pool, FunctionalSpec.abs_moment(2), bootstrap=50, rng=rng)
    assert est.bootstrap_se > 0
    poly = FunctionalSpec.polynomial([1, 0, 2])
    assert np.allclose(poly(np.array([0.0, 1.0, 2.0])), [1, 3, 9])


def test_functional_beta0_second_moment(rng):
    spec = BranchingVectorSpec.ising(0.0, field=0.5, field_spread=0.5)
    pool = run_population_dynamics(SfpeMap.free_entropy(0.0), spec, 3, 50_000, seed=2, keep="last")[0]
    x = pool.values ** 2
    q = rng.uniform(0, 1, 50_000) ** 2  # Q ~ Uniform(0.5 - 0.5, 0.5 + 0.5)
    est = estimate_functional(pool, FunctionalSpec.moment(2), bootstrap=0).value
    se = math.hypot(x.std() / math.sqrt(x.size), q.std() / math.sqrt(q.size))
    assert abs(est - q.mean()) <= 4 * se


def test_quantiles():
    from sfpe.popdyn import PoolMeta, SamplePool
    meta = PoolMeta("x", "y", 3, 0)
    assert estimate_quantiles(SamplePool(0, np.array([1.0, 2.0, 3.0]), meta), [0.5]) == [2.0]
    assert estimate_quantiles(SamplePool(0, np.full(3, 4.0), meta), [0.1, 0.9]) == [4.0, 4.0]


def test_find_median_against_oracle(find):
    mp, spec = find
    n = 10**5
    pool = run_population_dynamics(mp, spec, 8, n, seed=4, keep="last")[0]
    oracle = np.sort(sample_exact_iid(mp, spec, 8, None, n, 4))
    med_pool = estimate_quantiles(pool, [0.5])[0]
    med_oracle = oracle[n // 2 - 1]
    # density at the median from a central quantile difference
    d = 0.02
    dens = 2 * d / (oracle[int((0.5 + d) * n)] - oracle[int((0.5 - d) * n)])
    se = math.sqrt(0.25 / n) / dens
    assert abs(med_pool - med_oracle) <= 4 * math.sqrt(2) * se
