"""Acceptance criteria, one test per criterion.

Each test logs a PASS/FAIL line (shown in the terminal summary) and then
asserts the same condition.
"""
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from sfpe import BranchingVectorSpec, InitialDistribution, Law, SfpeMap
from sfpe import rng as rngmod
from sfpe.diagnostics import (contraction_check, estimate_Hp, moment_bound,
                              run_convergence_experiment)
from sfpe.popdyn import EvalCounter, level_branching, run_population_dynamics
from sfpe.wasserstein import (EmpiricalDistribution, metric_axiom_suite, quantile_tail_bound_check,
                              riemann_pp, wasserstein_pp_equal, wasserstein_pp_merge)
from sfpe.wbp import node_count_estimate, node_count_samples, sample_exact_iid, sample_exact_levels

QUICKSORT = (SfpeMap.linear(zero_mean=True), BranchingVectorSpec.quicksort())
FIND = (SfpeMap.tree_sum(), BranchingVectorSpec.find())


def _random_sample(g, n, df=2.5):
    kind = g.integers(4)
    if kind == 0:
        return g.normal(g.normal() * 3, g.exponential() + 0.1, n)
    if kind == 1:
        return g.standard_t(df, n)
    if kind == 2:
        return g.integers(-5, 5, n).astype(float)  # ties
    return g.exponential(size=n) * g.choice([-1.0, 1.0])


def test_c01_wasserstein_oracle_equivalence(acceptance_log):
    g = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst_fast = worst_riemann = 0.0
    for _ in range(200):
        n = int(g.integers(2, 10**4 + 1))
        a, b, p = _random_sample(g, n), _random_sample(g, n), float(g.choice([1.0, 1.5, 2.0, 3.0]))
        fast, merge = wasserstein_pp_equal(a, b, p), wasserstein_pp_merge(a, b, p)
        if fast > 0:
            worst_fast = max(worst_fast, abs(fast - merge) / fast)
    for _ in range(200):
        n, m = (int(x) for x in g.integers(1, 10**4 + 1, 2))
        if n == m:
            m += 1
        # df = 8 keeps the p-th power tails resolvable on a 10^6-point grid
        a, b = _random_sample(g, n, df=8), _random_sample(g, m, df=8)
        p = float(g.choice([1.0, 2.0]))
        merge, ref = wasserstein_pp_merge(a, b, p), riemann_pp(a, b, p, points=10**6)
        if ref > 0:
            worst_riemann = max(worst_riemann, abs(merge - ref) / ref)
    elapsed = time.perf_counter() - t0
    ok = worst_fast <= 1e-12 and worst_riemann <= 2e-3 and elapsed < 30
    acceptance_log(1, "Wasserstein oracle equivalence", ok,
                   f"fast/merge {worst_fast:.2e}, merge/Riemann {worst_riemann:.2e}, {elapsed:.1f}s")
    assert ok


def test_c02_metric_axioms(acceptance_log):
    g = np.random.default_rng(202)
    t0 = time.perf_counter()
    failures = checked = 0
    for _ in range(100):
        triple = [_random_sample(g, int(g.integers(1, 500))) for _ in range(3)]
        for p, q in ((1.0, 2.0), (2.0, 3.0), (1.5, 1.5)):
            rep = metric_axiom_suite(triple, p, q, rtol=1e-10)
            failures += len(rep.failures)
            checked += rep.checked
    elapsed = time.perf_counter() - t0
    ok = failures == 0 and elapsed < 10
    acceptance_log(2, "metric axioms", ok, f"{checked} checks, {failures} failures, {elapsed:.1f}s")
    assert ok


@pytest.fixture(scope="module")
def quicksort_experiment():
    t0 = time.perf_counter()
    rep = run_convergence_experiment(*QUICKSORT, 1.0, 5, [100, 1000, 10000], 20, 10**5, seed=2024)
    return rep, time.perf_counter() - t0


def test_c03_convergence_in_m(quicksort_experiment, acceptance_log):
    rep, elapsed = quicksort_experiment
    means = [r.mean_dpp for r in rep.per_m]
    slope = rep.fitted_rate[0]
    decreasing = all(b < a for a, b in zip(means, means[1:]))
    ok = decreasing and slope <= -0.3 and elapsed < 300
    acceptance_log(3, "convergence in m", ok,
                   f"means {[f'{v:.4g}' for v in means]}, slope {slope:.3f}, {elapsed:.1f}s")
    assert ok


def test_c04_bound_dominance(quicksort_experiment, acceptance_log):
    rep, _ = quicksort_experiment
    rows = [(r.m, r.mean_dpp, r.bound, 3 * math.hypot(r.stderr, r.bound_stderr)) for r in rep.per_m]
    ok = all(mean <= bound + slack for _, mean, bound, slack in rows)
    acceptance_log(4, "mean-convergence bound dominance", ok,
                   "; ".join(f"m={m}: {mean:.4g} <= {bound:.4g}+{slack:.2g}" for m, mean, bound, slack in rows)
                   + f" (H_1 = {rep.constants.Hp:g}, {rep.constants.Hp_method})")
    assert ok


def test_c05_contraction(acceptance_log):
    t0 = time.perf_counter()
    details, ok = [], True
    for name, (mp, spec), h2 in (("quicksort", QUICKSORT, 1 / 3), ("find", FIND, 2 / 3)):
        ratios = contraction_check(mp, spec, 2.0, 5, 5 * 10**4, seed=5)
        limit = math.sqrt(h2) + 0.1
        defined = [r.ratio for r in ratios if r.ratio is not None]
        ok &= bool(defined) and all(x <= limit for x in defined)
        details.append(f"{name} {[round(x, 3) for x in defined]} <= {limit:.3f}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 180
    acceptance_log(5, "contraction ratios", ok, "; ".join(details) + f", {elapsed:.1f}s")
    assert ok


def test_c06_moment_bound(acceptance_log):
    t0 = time.perf_counter()
    n, p = 10**5, 2.0
    details, ok = [], True
    for name, (mp, spec) in (("quicksort", QUICKSORT), ("find", FIND)):
        levels = sample_exact_levels(mp, spec, 6, None, n, seed=66)
        g = np.random.default_rng(6)
        hp = estimate_Hp(mp, spec, p).value
        worst = -math.inf
        for k, vals in enumerate(levels):
            mom = np.abs(vals) ** p
            mean = mom.mean()
            norm = mean ** (1 / p)
            se = norm / (p * mean) * mom.std(ddof=1) / math.sqrt(n) if mean > 0 else 0.0
            bound = moment_bound(mp, spec, p, k, None, 400_000, g, Hp=hp)
            worst = max(worst, (norm - bound) / se if se > 0 else (0.0 if norm <= bound else math.inf))
            ok &= norm <= bound + 3 * se
        details.append(f"{name} max (norm - bound)/se = {worst:.1f}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 120
    acceptance_log(6, "moment bound", ok, "; ".join(details) + f", {elapsed:.1f}s")
    assert ok


def _level_q(spec, m, seed, level):
    nb = -(-m // rngmod.POOL_BLOCK)
    return np.concatenate([level_branching(spec, m, seed, level, b).q for b in range(nb)])


def test_c07_degenerate_identities(acceptance_log):
    m, seed, k = 3 * rngmod.POOL_BLOCK + 17, 77, 4
    beta0 = BranchingVectorSpec.ising(0.0, mean_degree=2.5, field=0.5, field_spread=0.5)
    fe = run_population_dynamics(SfpeMap.free_entropy(0.0), beta0, k, m,
                                 InitialDistribution.uniform(-2, 2), seed)
    ok_fe = all(np.array_equal(pool.values, _level_q(beta0, m, seed, pool.level)) for pool in fe[1:])

    zero = BranchingVectorSpec.custom(Law.poisson(2.0), Law.constant(0.0), Law.uniform(-1.0, 1.0))
    lin = run_population_dynamics(SfpeMap.linear(), zero, k, m, InitialDistribution.uniform(3, 4), seed)
    ok_lin = all(np.array_equal(pool.values, _level_q(zero, m, seed, pool.level)) for pool in lin[1:])

    init = InitialDistribution.uniform(-1, 1)
    pool0 = run_population_dynamics(*QUICKSORT, 0, m, init, seed)[0].values
    direct = np.concatenate([init.sample(rngmod.substream(seed, rngmod.INIT, b), hi - lo)
                             for b, lo, hi in rngmod.blocks(m, rngmod.POOL_BLOCK)])
    oracle0 = sample_exact_iid(*QUICKSORT, 0, init, m, seed, purpose=rngmod.INIT,
                               block_size=rngmod.POOL_BLOCK)
    ok_k0 = np.array_equal(pool0, direct) and np.array_equal(pool0, oracle0)
    ok = ok_fe and ok_lin and ok_k0
    acceptance_log(7, "degenerate-map identities", ok,
                   f"free-entropy beta=0 {ok_fe}, linear C=0 {ok_lin}, k=0 {ok_k0}")
    assert ok


def test_c08_quicksort_mean_zero(acceptance_log):
    pool = run_population_dynamics(*QUICKSORT, 10, 10**5, seed=8, keep="last")[0].values
    oracle = sample_exact_iid(*QUICKSORT, 6, None, 10**4, seed=8)
    tol = 4 * oracle.std(ddof=1) / math.sqrt(oracle.size)
    ok = abs(pool.mean()) <= 0.02 and abs(oracle.mean()) <= tol
    acceptance_log(8, "Quicksort mean zero", ok,
                   f"pool mean {pool.mean():.4g}, oracle mean {oracle.mean():.4g} (tol {tol:.3g})")
    assert ok


def test_c09_quantile_tail_bound(acceptance_log):
    g = np.random.default_rng(909)
    violations = 0
    for _ in range(50):
        n = int(g.integers(1, 2000))
        vals = g.standard_cauchy(n) if g.random() < 0.3 else _random_sample(g, n)
        ed = EmpiricalDistribution(vals)
        for q in (1.0, 2.0):
            violations += quantile_tail_bound_check(ed, q, grid=1000).violations
    ok = violations == 0
    acceptance_log(9, "quantile tail bound", ok, f"{violations} violations over 50 x 2 x 1000 points")
    assert ok


def _best_time(fn, reps=3):
    best = math.inf
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def test_c10_complexity_contract(acceptance_log):
    mp, spec = QUICKSORT
    counts_ok = True
    for k, m in ((3, 1000), (5, 20000), (1, 1)):
        c = EvalCounter()
        run_population_dynamics(mp, spec, k, m, seed=1, keep="last", counter=c)
        counts_ok &= c.count == k * m

    k, m = 5, 200_000
    run_population_dynamics(mp, spec, k, 1000, seed=0, keep="last")  # warm-up
    t1 = _best_time(lambda: run_population_dynamics(mp, spec, k, m, seed=0, keep="last"))
    t2 = _best_time(lambda: run_population_dynamics(mp, spec, k, 2 * m, seed=0, keep="last"))
    ratio = t2 / t1
    time_ok = 1.6 <= ratio <= 2.6

    _, fixed = sample_exact_iid(mp, spec, 6, None, 1000, 1, return_node_counts=True)
    fixed_ok = np.all(fixed == 127) and node_count_estimate(spec, 6, 1, None) == 127
    pois = BranchingVectorSpec.custom(Law.poisson(3.0), Law.uniform(0, 0.3), Law.constant(1.0))
    _, counts = sample_exact_iid(SfpeMap.linear(), pois, 4, None, 20_000, 2, return_node_counts=True)
    est_samples = node_count_samples(pois, 4, 100_000, np.random.default_rng(3))
    se = math.hypot(counts.std(ddof=1) / math.sqrt(counts.size),
                    est_samples.std(ddof=1) / math.sqrt(est_samples.size))
    pois_ok = abs(counts.mean() - est_samples.mean()) <= 3 * se
    ok = counts_ok and time_ok and fixed_ok and pois_ok
    acceptance_log(10, "complexity contract", ok,
                   f"counter k*m {counts_ok}, time ratio {ratio:.2f}, N=2 sizes {fixed_ok}, "
                   f"Poisson sizes {counts.mean():.2f} vs {est_samples.mean():.2f} +- {se:.2f}")
    assert ok


def _run_cli(*args):
    return subprocess.run([sys.executable, "-m", "sfpe", *args], capture_output=True, text=True,
                          check=False)


def _value_column(path):
    lines = path.read_text(encoding="utf-8").splitlines()[1:]
    return [line.rsplit(",", 1)[-1] for line in lines]


def test_c11_determinism(tmp_path, acceptance_log):
    cfgs = {
        "simulate": "[run]\npreset = quicksort\nk = 6\nm = 20000\nseed = 11\n",
        "oracle": "[run]\npreset = find\nk = 5\nn = 2000\nseed = 11\n",
        "experiment": ("[run]\npreset = find\nk = 3\nm_grid = 50, 100\nreplications = 3\n"
                       "oracle_size = 2000\np = 2\ntrials = 20000\nseed = 11\n"),
        "validate": "[run]\npreset = ising\nseed = 11\n",
    }
    same = {}
    for cmd, text in cfgs.items():
        cfg = tmp_path / f"{cmd}.ini"
        cfg.write_text(text, encoding="utf-8")
        outs = [tmp_path / f"{cmd}_{i}" for i in range(2)]
        if cmd == "validate":
            # the echo includes the output directory, so keep it fixed
            runs = [_run_cli(cmd, "--config", str(cfg)) for _ in outs]
        else:
            runs = [_run_cli(cmd, "--config", str(cfg), "--out", str(o)) for o in outs]
        ok = all(r.returncode == 0 for r in runs)
        if cmd == "validate":
            ok &= runs[0].stdout == runs[1].stdout
        else:
            files = sorted(f.name for f in outs[0].glob("*.csv"))
            ok &= bool(files)
            for f in files:
                a, b = outs[0] / f, outs[1] / f
                if cmd in ("simulate", "oracle"):
                    ok &= _value_column(a) == _value_column(b)
                else:
                    ok &= a.read_bytes() == b.read_bytes()
        same[cmd] = ok
    pool = tmp_path / "simulate_0" / "pool_level_006.csv"
    d = [_run_cli("distance", str(pool), str(tmp_path / "oracle_0" / "oracle.csv"), "--p", "2")
         for _ in range(2)]
    same["distance"] = d[0].returncode == 0 and d[0].stdout == d[1].stdout
    ok = all(same.values())
    acceptance_log(11, "determinism", ok, ", ".join(f"{k} {v}" for k, v in same.items()))
    assert ok
