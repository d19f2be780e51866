"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

The lines are also repeated in pytest's terminal summary under
"acceptance criteria". Criteria are asserted at their stated tolerances;
a failing line here is a real failure, not a skipped check.
"""

import io
import math
import time

import numpy as np
from click.testing import CliRunner

from sasmo.cli import main
from sasmo.cluster import cluster, next_threshold
from sasmo.core import Box
from sasmo.estimator import is_estimate, mc_uniform
from sasmo.metrics import convergence_metric, diversity_metric
from sasmo.model import GaussianComponent, MixtureModel, fit_component, sample
from sasmo.problems import bruteforce_front, front_segments, sample_reference_front, zdt3_front_curve
from sasmo.sasmo import RunConfig, run

from . import oracles
from .conftest import ACCEPTANCE_LINES

# The Pareto set as published for the discrete example.
PUBLISHED_PARETO = set(range(5, 26)) | set(range(60, 86))


def report(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_01_exact_pareto_recovery():
    start = time.perf_counter()
    res = CliRunner().invoke(main, ["dmeasure", "--problem", "discrete_example", "--estimator", "exact"])
    elapsed = time.perf_counter() - start
    data = np.loadtxt(io.StringIO(res.output), delimiter=",", skiprows=1)
    x = data[:, 1].astype(int)
    D = data[:, -1]
    wrong_zero = sorted(int(v) for v, d in zip(x, D) if (d == 0.0) != (v in PUBLISHED_PARETO))
    ok = res.exit_code == 0 and len(x) == 101 and not wrong_zero and elapsed < 1.0
    report(1, ok, f"rows={len(x)} runtime={elapsed:.3f}s points disagreeing with the published set: {wrong_zero}")


def test_criterion_02_estimator_unbiased():
    start = time.perf_counter()
    N = 100_000
    se = math.sqrt(0.25 * 0.75 / N)
    passes = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        F = np.vstack([[0.5, 0.5], rng.random((N, 2))])
        estimate = mc_uniform(F, n_samples=N)[0]
        passes += abs(estimate - 0.25) <= 4 * se
    elapsed = time.perf_counter() - start
    report(2, passes >= 19 and elapsed < 10.0, f"{passes}/20 seeds within 4 SE, runtime={elapsed:.2f}s")


def test_criterion_03_is_equals_mc_when_uniform():
    rng = np.random.default_rng(303)
    identical = 0
    for _ in range(100):
        d = int(rng.integers(1, 6))
        n_obj = int(rng.integers(2, 4))
        lower = rng.uniform(-5, 0, d)
        box = Box(lower, lower + rng.uniform(0.5, 4.0, d))
        comp = GaussianComponent.isotropic(box.center, float(rng.uniform(0.01, 2.0)))
        model = MixtureModel((comp,), 1.0, box)
        X = sample(model, rng, int(rng.integers(5, 300)))
        F = np.column_stack([np.sin(X @ rng.standard_normal(d)) for _ in range(n_obj)])
        identical += np.array_equal(is_estimate(F, model.density(X), box.volume), mc_uniform(F))
    report(3, identical == 100, f"{identical}/100 instances bit-identical")


def test_criterion_04_fit_correctness():
    rng = np.random.default_rng(404)
    worst = 0.0
    exact = 0
    for _ in range(100):
        d = int(rng.integers(1, 6))
        # at least d + 1 points, so the sample covariance is a valid Gaussian covariance
        n = int(rng.integers(d + 1, 60))
        X = rng.standard_normal((n, d)) * rng.uniform(0.1, 10.0)
        c = fit_component(X, np.full(n, 0.3))
        mean = X.mean(axis=0)
        cov = np.cov(X.T, bias=True).reshape(d, d)
        worst = max(worst,
                    np.max(np.abs(c.mean - mean)) / np.max(np.abs(mean)),
                    np.max(np.abs(c.covariance - cov)) / np.max(np.abs(cov)))
        # First-order condition on exactly representable data: the weighted
        # mean of x over the elites equals the component mean with no rounding.
        m = 2 ** int(rng.integers(1, 6))
        Y = rng.integers(-8, 9, size=(m, d)).astype(float)
        cy = fit_component(Y)
        exact += bool(np.all(np.sum((Y - cy.mean) / m, axis=0) == 0.0))
    ok = worst <= 1e-10 and exact == 100
    report(4, ok, f"max relative error={worst:.2e}, exact first-order condition {exact}/100")


def test_criterion_05_clustering_contract():
    rng = np.random.default_rng(505)
    start = time.perf_counter()
    violations = 0
    for _ in range(1000):
        n = int(rng.integers(1, 40))
        d = int(rng.integers(1, 5))
        X = rng.uniform(-2, 2, (n, d))
        delta = float(rng.uniform(0.05, 3.0))
        shrink = float(rng.uniform(1.01, 2.0))
        cs = cluster(X, delta, rng)
        idx = np.sort(np.concatenate([c.indices for c in cs.clusters]))
        bad = idx.tolist() != list(range(n))
        for c in cs.clusters:
            bad |= not np.allclose(c.centroid, c.members.mean(axis=0), rtol=1e-12, atol=1e-12)
            bad |= not np.all(c.assignment_distances < delta)
            bad |= not np.array_equal(c.members, X[c.indices])
        bad |= not next_threshold(cs, delta, shrink) <= delta / shrink
        violations += bad
    elapsed = time.perf_counter() - start
    report(5, violations == 0 and elapsed < 5.0, f"violations={violations}/1000 runtime={elapsed:.2f}s")


def test_criterion_06_degenerate_limit():
    rng = np.random.default_rng(606)
    x_star = np.array([0.25, -0.5, 0.75, 0.1])
    errors = []
    for delta in (0.1, 0.01, 0.001):
        u = rng.standard_normal((400, 4))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        r = delta * rng.random(400) ** 0.25
        c = fit_component(x_star + u * r[:, None], floor=1e-14)
        errors.append(float(np.linalg.norm(c.mean - x_star)))
    ok = all(e <= d for e, d in zip(errors, (0.1, 0.01, 0.001)))
    report(6, ok, "mean errors " + ", ".join(f"{e:.2e}" for e in errors))


def test_criterion_07_zdt2_desk_scale():
    start = time.perf_counter()
    R = sample_reference_front("zdt2", 500)
    lam = [convergence_metric(R, run(RunConfig("zdt2", n0=500, t_max=50, seed=s)).final_objectives)
           for s in range(10)]
    elapsed = time.perf_counter() - start
    ok = min(lam) <= 0.05 and elapsed <= 600
    report(7, ok, f"best lambda={min(lam):.4f} (bound 0.05), runtime={elapsed:.1f}s")


def _covers_every_segment(segments, F):
    return all(np.min(np.linalg.norm(s[:, None, :] - F[None], axis=2)) <= 0.1 for s in segments)


def test_criterion_08_discontinuous_coverage():
    results = {}
    for name, dense in (("zdt3", zdt3_front_curve()), ("mop6", bruteforce_front("mop6").objectives)):
        segments = front_segments(dense)
        covered = [_covers_every_segment(segments, run(RunConfig(name, n0=500, t_max=50, seed=s)).final_objectives)
                   for s in range(10)]
        results[name] = (len(segments), sum(covered))
    ok = all(hits > 0 for _, hits in results.values())
    detail = "; ".join(f"{k}: {n} segments, {h}/10 runs cover all" for k, (n, h) in results.items())
    report(8, ok, detail)


def test_criterion_09_metric_sanity():
    R = np.random.default_rng(909).random((100, 2))
    checks = {
        "lambda(R,R)=0": convergence_metric(R, R) == 0.0,
        "even chain=0": diversity_metric((np.arange(9) / 8.0)[:, None], [0.0], [1.0]) == 0.0,
        "lambda single pair": abs(convergence_metric([[0, 0]], [[3, 4]]) - 5.0) <= 1e-12,
        "lambda average": abs(convergence_metric([[0, 0], [1, 0]], [[0, 0]]) - 0.5) <= 1e-12,
        "upsilon three points": abs(diversity_metric([[0.0], [0.2], [1.0]], [0.0], [1.0]) - 0.6) <= 1e-12,
        "upsilon oracle": abs(diversity_metric([[0.0], [0.2], [1.0]], [0.0], [1.0])
                              - oracles.diversity([(0.0,), (0.2,), (1.0,)], (0.0,), (1.0,))) <= 1e-12,
    }
    failed = [k for k, v in checks.items() if not v]
    report(9, not failed, f"{len(checks) - len(failed)}/{len(checks)} checks, failed={failed}")


def test_criterion_10_determinism(tmp_path):
    runner = CliRunner()
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        res = runner.invoke(main, ["run", "--problem", "mop4", "--seed", "42", "--out", str(out)])
        assert res.exit_code == 0, res.output
        outs.append(out)
    same = all((outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()
               for f in ("history_0.json", "front_0.csv"))
    report(10, same, "history_0.json and front_0.csv byte-identical" if same else "files differ")
