"""Acceptance checks; each prints one PASS/FAIL line (collected in the terminal summary)."""
from __future__ import annotations

import itertools
import random
import time
from collections import Counter
from statistics import fmean

import numpy as np
import pytest

from conftest import MB, world
from medusa_sim.core import Digest, JobSpec, Phase
from medusa_sim.harness import compare_schedulers, load_scenario, run_experiment, run_once
from medusa_sim.harness.presets import fault_variant, heterogeneous, homogeneous
from medusa_sim.netmodel import LinkModel, ThroughputTracker, estimate_transmission_time
from medusa_sim.predictor import FeatureVector, Observation, fit, residual_sum_of_squares
from medusa_sim.protocol import DecisionKind, JobExecution, collect_and_vote
from medusa_sim.scheduler import (Excluded, NoCloudAvailable, ScheduleEstimate, select_phase1_clouds,
                                  select_phase2_clouds)
from medusa_sim.netmodel import LinkDown

# --- protocol-level replica counts ---------------------------------------------------


@pytest.mark.parametrize("f", [0, 1, 2])
@pytest.mark.parametrize("fault", ["none", "arbitrary", "malicious"])
def test_replica_counts(acceptance, f, fault):
    if fault != "none" and f == 0:
        pytest.skip("no faults to inject when f=0")
    injections = []
    if fault == "arbitrary":
        injections = [{"id": "a", "kind": "arbitrary_corruption", "job": "vanilla:p0", "count": f}]
    elif fault == "malicious":
        injections = [{"id": "m", "kind": "malicious_corruption", "job": "vanilla:p0", "count": f}]
    mode = "arbitrary_only" if fault == "arbitrary" else "malicious"
    sc = load_scenario(world(2 * f + 1, f, mode=mode, injections=injections, seeds=range(1, 6)))
    t0 = time.perf_counter()
    results = run_experiment(sc)
    elapsed = (time.perf_counter() - t0) / len(results)
    want_faulty = f + 1 if fault == "none" else 2 * f + 1
    ok = all(m.result_correct for m in results) and elapsed < 5.0
    for m in results:
        for job, n in m.replicas.items():
            want = want_faulty if job == "vanilla:p0" else f + 1
            ok &= n == want
    seen = sorted({n for m in results for n in m.replicas.values()})
    acceptance(f"AC-1 replica counts f={f} fault={fault}", ok,
               f"replicas per job seen {seen}, expected {want_faulty} on the faulty job, "
               f"{elapsed:.3f}s per run")
    assert ok


# --- safety under collusion -----------------------------------------------------------


def test_collusion_safety(acceptance):
    rng = random.Random(7)
    correct = 0
    fired = 0
    runs = 100
    for seed in range(runs):
        pair = sorted(rng.sample(range(5), 2))
        job = rng.choice(["vanilla:p0", "vanilla:p1", "global"])
        doc = world(5, 2, seeds=[seed], bootstrap=3,
                    injections=[{"id": "c", "kind": "collusion", "job": job, "clouds": pair}])
        m, trace = run_once(load_scenario(doc), seed)
        result = trace.of("result")
        correct += bool(result) and result[0]["digest"] == result[0]["canonical"] and m.result_correct
        fired += m.faults_injected > 0
    ok = correct == runs
    acceptance("AC-2 collusion safety (5 clouds, f=2, 2 colluders)", ok,
               f"{correct}/{runs} runs accepted the fault-free digest; collusion fired in {fired}")
    assert ok


# --- voting oracle ----------------------------------------------------------------------


def _brute_force_decision(reported, pending, f):
    """Accept on f+1 identical; otherwise wait iff some completion of the pending replicas could accept."""
    counts = Counter()
    for d in reported:
        counts[d] += 1
        if counts[d] >= f + 1:
            return ("accept", d)
    alphabet = sorted(set(reported)) + [f"new{k}" for k in range(pending)]
    for outcome in itertools.product(alphabet, repeat=pending):
        total = Counter(reported) + Counter(outcome)
        if total and max(total.values()) >= f + 1:
            return ("wait", None)
    return ("need_extra_replica", None)


def test_voting_oracle(acceptance):
    digests = [Digest.of(bytes([k])) for k in range(3)]
    checked = mismatches = 0
    job = JobSpec("j", Phase.VANILLA, ("p",))
    for f in (0, 1, 2):
        for total in range(1, 6):
            for seq in itertools.product(range(3), repeat=total):
                ex = JobExecution(job, f, ("p",), 1.0)
                reps = [ex.launch(c) for c in range(total)]
                accepted = None
                for k, sym in enumerate(seq):
                    got = collect_and_vote(ex, reps[k].cloud, reps[k].attempt, digests[sym])
                    if got.kind is DecisionKind.ACCEPT and ex.accepted is None:
                        ex.accepted = got.digest
                    if accepted is not None:
                        want = ("accept", accepted)
                    else:
                        kind, d = _brute_force_decision(seq[: k + 1], total - k - 1, f)
                        want = (kind, digests[d] if d is not None else None)
                        if kind == "accept":
                            accepted = want[1]
                    have = (got.kind.value, got.digest)
                    checked += 1
                    mismatches += have != want
    ok = mismatches == 0
    acceptance("AC-3 voting oracle equivalence", ok,
               f"{checked} decisions over all sequences of <=5 reports from <=3 digests, f in 0..2; "
               f"{mismatches} mismatches")
    assert ok


# --- scheduler argmin oracle ------------------------------------------------------------


def _oracle_pick(candidates, k, table):
    """Exhaustive: the k-subset with the smallest total estimate, smallest ids on ties."""
    best = None
    for subset in itertools.combinations(sorted(candidates), k):
        key = (sum(table[c] for c in subset), subset)
        if best is None or key < best:
            best = key
    chosen = best[1]
    return sorted(chosen, key=lambda c: (table[c], c))


def test_scheduler_argmin_oracle(acceptance):
    rng = random.Random(2024)
    tables = 1000
    cases = mismatches = 0
    for _ in range(tables):
        n = rng.randint(1, 6)
        clouds = list(range(n))
        table = {c: float(rng.randint(0, 6)) for c in clouds}   # small ints force ties
        down = {c for c in clouds if rng.random() < 0.15}
        excluded = {c for c in clouds if rng.random() < 0.15}

        def estimate(c):
            if c in down:
                raise LinkDown(str(c))
            if c in excluded:
                raise Excluded(str(c))
            return ScheduleEstimate(c, table[c])

        for f in (0, 1, 2):
            usable = [c for c in clouds if c not in down and c not in excluded]
            # phase 2: exhaustive over f+1 subsets
            cases += 1
            if len(usable) < f + 1:
                try:
                    select_phase2_clouds(f, clouds, excluded, estimate)
                    mismatches += 1
                except NoCloudAvailable:
                    pass
            else:
                mismatches += select_phase2_clouds(f, clouds, excluded, estimate) != _oracle_pick(usable, f + 1, table)
            # phase 1: home forced first, exhaustive over f-subsets of the rest
            for home in clouds:
                cases += 1
                others = [c for c in usable if c != home]
                if home in excluded or len(others) < f:
                    try:
                        select_phase1_clouds(home, f, clouds, excluded, estimate)
                        mismatches += 1
                    except NoCloudAvailable:
                        pass
                    continue
                want = [home] + _oracle_pick(others, f, table)
                mismatches += select_phase1_clouds(home, f, clouds, excluded, estimate) != want
    ok = mismatches == 0
    acceptance("AC-4 scheduler argmin oracle", ok,
               f"{cases} selections over {tables} random tables (|C|<=6, f<=2); {mismatches} mismatches")
    assert ok


# --- transfer-time estimate ----------------------------------------------------------------


def test_transmission_time_exactness(acceptance):
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(1000):
        k = int(rng.integers(1, 16))
        rtt = float(rng.uniform(0, 0.5))
        link = LinkModel({(0, 1): rtt, (1, 0): rtt}, {(0, 1): 1e7, (1, 0): 1e7})
        tracker = ThroughputTracker(k)
        samples = rng.uniform(1e5, 1e9, size=int(rng.integers(1, 30)))
        for s in samples:
            tracker.record(0, 1, float(s))
        size = float(rng.uniform(0, 1e10))
        got = estimate_transmission_time(tracker, link, 0, 1, size)
        window = [float(s) for s in samples[-k:]]
        want = rtt / 2 + size / fmean(window)
        worst = max(worst, abs(got - want) / want if want else abs(got))
    ok = worst <= 1e-12
    acceptance("AC-5 windowed transfer-time estimate", ok, f"max relative error {worst:.2e} over 1000 inputs")
    assert ok


# --- least squares recovery ---------------------------------------------------------------


def test_least_squares_recovery(acceptance):
    rng = np.random.default_rng(11)
    scales = np.array([1e9, 16, 4, 3000, 32, 65536, 5, 1, 5, 2e9])
    beta = rng.uniform(0.1, 2.0, size=10) / scales
    intercept = 3.0
    X = rng.uniform(0.05, 1.0, size=(30, 10)) * scales

    def obs(y):
        return [Observation(FeatureVector(*row), float(t), 0) for row, t in zip(X, y)]

    exact = X @ beta + intercept
    model = fit(obs(exact))
    coef_err = float(np.max(np.abs(np.array(model.coefficients) - beta) / np.abs(beta)))
    icpt_err = abs(model.intercept - intercept) / intercept

    noisy = exact + rng.normal(0, 0.05, size=30)
    noisy_obs = obs(noisy)
    m2 = fit(noisy_obs)
    rss = residual_sum_of_squares(m2.coefficients, m2.intercept, noisy_obs)
    beaten = 0
    base = np.append(np.array(m2.coefficients), m2.intercept)
    for _ in range(1000):
        pert = base * (1 + rng.normal(0, 1e-3, size=11))
        if residual_sum_of_squares(pert[:-1], pert[-1], noisy_obs) < rss:
            beaten += 1
    ok = coef_err <= 1e-6 and icpt_err <= 1e-6 and not model.regularized and beaten == 0
    acceptance("AC-6 least-squares recovery", ok,
               f"max relative coefficient error {coef_err:.1e}, intercept {icpt_err:.1e}; "
               f"{beaten}/1000 perturbations beat the fitted RSS")
    assert ok


# --- fault-mode makespan ordering -----------------------------------------------------------


def test_fault_mode_ordering(acceptance):
    means = {}
    for fault in ("none", "arbitrary", "malicious", "outage"):
        runs = run_experiment(load_scenario(fault_variant(heterogeneous(seeds=20), fault, cloud=1)))
        assert all(not m.failed and m.result_correct for m in runs)
        means[fault] = fmean(m.makespan_s for m in runs)
    order = [means[k] for k in ("none", "arbitrary", "malicious", "outage")]
    ok = all(b - a > 0 for a, b in zip(order, order[1:]))
    acceptance("AC-7 fault-mode makespan ordering", ok,
               "mean makespan over 20 seeds: " + ", ".join(f"{k}={v:.1f}s" for k, v in means.items()))
    assert ok


# --- malicious exclusion ---------------------------------------------------------------------


def _random_fault_world(rng: random.Random, seed: int) -> dict:
    f = rng.choice([1, 1, 2])
    n = rng.randint(2 * f + 2, 2 * f + 3)
    jobs = ["vanilla:p0", "vanilla:p1", "global"]
    injections = []
    for k in range(rng.randint(1, 3)):
        kind = rng.choice(["arbitrary_corruption", "malicious_corruption", "collusion", "transmission_tamper",
                           "outage"])
        inj = {"id": f"i{k}", "kind": kind, "job": rng.choice(jobs)}
        if kind == "collusion":
            inj["clouds"] = sorted(rng.sample(range(n), f))
        elif kind == "malicious_corruption":
            inj["count"] = f
        elif kind == "arbitrary_corruption":
            inj["count"] = rng.randint(1, 2)
        elif kind == "transmission_tamper":
            inj.pop("job")
            inj["cloud"] = rng.randrange(n)
            inj["count"] = rng.randint(1, 2)
        elif kind == "outage" and rng.random() < 0.5:
            inj["cloud"] = rng.randrange(n)
        injections.append(inj)
    return world(n, f, injections=injections, seeds=[seed], bootstrap=3)


def test_malicious_exclusion(acceptance):
    rng = random.Random(99)
    violations = 0
    extras = 0
    failed = 0
    for seed in range(100):
        doc = _random_fault_world(rng, seed)
        _, trace = run_once(load_scenario(doc), seed)
        reported = {}
        for r in trace:
            if r["event"] == "replica_output":
                reported.setdefault(r["job"], set()).add(r["cloud"])
            elif r["event"] == "replica_launch":
                if r["cloud"] in reported.get(r["job"], set()):
                    violations += 1
                if reported.get(r["job"]):
                    extras += 1
        failed += bool(trace.of("job_failed"))
    ok = violations == 0
    acceptance("AC-8 malicious-mode exclusion", ok,
               f"100 randomized fault scenarios, {extras} replicas launched after outputs were reported, "
               f"{violations} on a cloud that had already reported; {failed} runs ended in a job failure")
    assert ok


# --- heterogeneity speedup and cloud usage -------------------------------------------------------


@pytest.fixture(scope="module")
def heterogeneous_comparison():
    return compare_schedulers(load_scenario(heterogeneous(seeds=20)))


@pytest.fixture(scope="module")
def homogeneous_comparison():
    return compare_schedulers(load_scenario(homogeneous(seeds=20)))


def test_heterogeneity_speedup(acceptance, heterogeneous_comparison, homogeneous_comparison):
    het, _ = heterogeneous_comparison
    hom, _ = homogeneous_comparison
    largest = max(het, key=lambda c: c.partition_bytes)
    ratio = largest.medusa.mean / largest.round_robin.mean
    hom_ratios = [c.medusa.mean / c.round_robin.mean for c in hom]
    ok = ratio <= 0.67 and all(0.9 <= r <= 1.1 for r in hom_ratios)
    acceptance("AC-9 heterogeneity speedup", ok,
               f"heterogeneous Medusa/RR mean makespan {ratio:.3f} at {largest.partition_bytes // MB} MB "
               f"per partition; homogeneous ratios " + ", ".join(f"{r:.3f}" for r in hom_ratios))
    assert ok


def test_heterogeneous_speedup_every_size_and_variance(heterogeneous_comparison):
    het, _ = heterogeneous_comparison
    for c in het:
        assert c.speedup > 1
        assert c.medusa.variance <= c.round_robin.variance


def test_cloud_usage_skew(acceptance, heterogeneous_comparison):
    _, metrics = heterogeneous_comparison
    largest = max(m.input_bytes for m in metrics)
    rr = [m for m in metrics if m.scheduler == "round_robin" and m.input_bytes == largest]
    md = [m for m in metrics if m.scheduler == "medusa" and m.input_bytes == largest]
    rr_spread = max(max(m.cloud_replicas) - min(m.cloud_replicas) for m in rr)
    totals = np.sum([m.cloud_replicas for m in md], axis=0)
    top_two = float(totals[0] + totals[1]) / float(totals.sum())
    ok = rr_spread <= 1 and top_two > 0.5
    acceptance("AC-10 cloud-usage skew", ok,
               f"round-robin per-run replica spread <= {rr_spread}; "
               f"Medusa put {top_two:.0%} of replicas on clouds 0 and 1")
    assert ok


# --- determinism --------------------------------------------------------------------------------


def test_determinism(acceptance):
    docs = [heterogeneous(seeds=3), fault_variant(heterogeneous(seeds=3), "outage", cloud=1),
            fault_variant(heterogeneous(seeds=3), "malicious"), world(5, 2, seeds=[3])]
    identical = 0
    total = 0
    for doc in docs:
        for sched in ("medusa", "round_robin"):
            sc = load_scenario(dict(doc, scheduler=sched))
            for seed in sc.seeds:
                m1, t1 = run_once(sc, seed)
                m2, t2 = run_once(sc, seed)
                total += 1
                identical += t1.to_jsonl() == t2.to_jsonl() and m1 == m2
    ok = identical == total
    acceptance("AC-11 determinism", ok, f"{identical}/{total} re-runs gave byte-identical traces and metrics")
    assert ok
