"""Acceptance gate: one test per criterion, each at its stated tolerance.

Every test prints a single [PASS]/[FAIL] line (visible with ``pytest -s``
or in the captured output of a failing run) before asserting, so a full
run doubles as a checklist.  Shared expensive results (the minimum-time
search, the switch-time optimizations) are computed once per session.
"""

import cmath
import math

import numpy as np
import pytest

from singletprep import dynamics, pontryagin, robustness
from singletprep.dynamics import error, evolve, find_gap_crossing, gap_scan, initial_state
from singletprep.optimize import adjoint_gradient, optimize_bang_bang, optimize_pwc
from singletprep.protocols import make_pwc
from singletprep.pontryagin import (
    conjugate_matrix,
    singular_invariant,
    singular_invariant_reference,
    solve_switching_time,
    switching_trace,
)


def report(name: str, passed: bool, detail: str) -> None:
    print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
    assert passed, f"{name}: {detail}"


@pytest.fixture(scope="module")
def switch_cache():
    return {tau: optimize_bang_bang(tau) for tau in (0.2, 0.45, 0.5, 0.55, 0.65, 0.75, 0.8, 0.85)}


@pytest.fixture(scope="module")
def solved_switch_075():
    return solve_switching_time(0.75)


def random_protocol(rng, case, max_segments=10):
    n = int(rng.integers(1, max_segments + 1))
    tau = float(rng.uniform(0.05, 2.0))
    return make_pwc(tau, rng.uniform(0.0, 1.0, (n, 2)), case=case)


def test_criterion_01_critical_times(critical_times):
    dev_star = abs(critical_times.tau_star - 0.93134)
    dev_zero = abs(critical_times.tau_0 - 0.40774)
    report(
        "criterion 1 (critical durations)",
        dev_star <= 1e-3 and dev_zero <= 1e-3,
        f"tau_star={critical_times.tau_star:.6f} (dev {dev_star:.2e} <= 1e-3), "
        f"tau_0={critical_times.tau_0:.6f} (dev {dev_zero:.2e} <= 1e-3)",
    )


def test_criterion_02_switching_time(switch_cache, solved_switch_075):
    t_b = solved_switch_075
    direct = switch_cache[0.75].t_b
    dev_anchor = abs(t_b - 0.3423)
    dev_direct = abs(t_b - direct)
    report(
        "criterion 2 (self-consistent switch time)",
        dev_anchor <= 1e-3 and dev_direct <= 1e-4,
        f"solved t_B={t_b:.6f} (anchor dev {dev_anchor:.2e} <= 1e-3, "
        f"optimizer dev {dev_direct:.2e} <= 1e-4)",
    )


def test_criterion_03_linear_switch_law(critical_times, switch_cache):
    tau_0 = critical_times.tau_0
    devs_b = []
    devs_j = []
    for tau in (0.45, 0.55, 0.65, 0.75, 0.85):
        result = switch_cache[tau]
        devs_b.append(abs(result.t_b - (tau - tau_0)))
        devs_j.append(abs(result.t_j - tau))
    early = switch_cache[0.2].t_b
    report(
        "criterion 3 (linear switch-time law)",
        max(devs_b) <= 1e-3 and max(devs_j) <= 1e-3 and early <= 1e-6,
        f"max |t_B - (tau - tau_0)| = {max(devs_b):.2e} <= 1e-3, "
        f"max |t_J - tau| = {max(devs_j):.2e} <= 1e-3, t_B(0.2) = {early:.1e}",
    )


def test_criterion_04_brute_force_agreement(switch_cache):
    dev_ansatz = []
    dev_refine = []
    for tau in (0.2, 0.5, 0.8):
        ten = optimize_pwc(tau, 10, restarts=50, seed=0)
        five = optimize_pwc(tau, 5, restarts=50, seed=0)
        dev_ansatz.append(abs(ten.best_error - switch_cache[tau].best_error))
        dev_refine.append(abs(five.best_error - ten.best_error))
    report(
        "criterion 4 (brute force vs two-parameter reduction)",
        max(dev_ansatz) <= 1e-3 and max(dev_refine) <= 2e-3,
        f"max |pwc10 - switch-time| = {max(dev_ansatz):.2e} <= 1e-3, "
        f"max |pwc5 - pwc10| = {max(dev_refine):.2e} <= 2e-3",
    )


def test_criterion_05_unreachable_sector():
    rng = np.random.default_rng(5)
    psi0 = initial_state(1)
    worst = 0.0
    for _ in range(1000):
        final = evolve(psi0, random_protocol(rng, case=1))
        worst = max(worst, abs(error(final) - 1.0))
    optimized = optimize_pwc(0.7, 10, case=1, restarts=50, seed=0).best_error
    report(
        "criterion 5 (symmetry-protected unreachability)",
        worst <= 1e-12 and abs(optimized - 1.0) <= 1e-9,
        f"max |error - 1| over 1000 protocols = {worst:.2e} <= 1e-12, "
        f"optimized error deviation = {abs(optimized - 1.0):.2e} <= 1e-9",
    )


def test_criterion_06_level_crossing():
    crossing = find_gap_crossing(case=1, tol=1e-8)
    expected = math.sqrt(2.0) / (1.0 + math.sqrt(2.0))
    _, gaps = gap_scan(case=-1, n_points=500)
    report(
        "criterion 6 (level crossing)",
        abs(crossing - expected) <= 1e-6 and np.min(gaps) > 0.0,
        f"crossing at b={crossing:.8f} (dev {abs(crossing - expected):.2e} <= 1e-6), "
        f"opposite-fields min gap = {np.min(gaps):.3f} > 0",
    )


def test_criterion_07_singular_structure(solved_switch_075):
    tau = 0.75
    t_b = solved_switch_075
    trace = switching_trace(tau, t_b)
    below = trace.times < t_b
    above = (trace.times > t_b) & (trace.times < tau)
    max_below = float(np.max(np.abs(trace.values[below])))
    min_above = float(np.min(trace.values[above]))

    tau_0 = tau - t_b
    rng = np.random.default_rng(7)
    worst_imag = 0.0
    worst_real = 0.0
    for _ in range(100):
        t, tb = rng.uniform(0.0, 2.0, 2)
        value = singular_invariant(float(t), float(tb), tau_0)
        worst_imag = max(worst_imag, abs(value.imag))
        worst_real = max(
            worst_real, abs(value.real - singular_invariant_reference(float(t), float(tb)))
        )
    report(
        "criterion 7 (singular stretch and its invariant)",
        max_below < 1e-8 and min_above > 0.0 and worst_imag <= 1e-6 and worst_real <= 2e-3,
        f"max |s| below switch = {max_below:.2e} < 1e-8, min s above = {min_above:.2e} > 0, "
        f"max |Im| = {worst_imag:.2e} <= 1e-6, max closed-form dev = {worst_real:.2e} <= 2e-3",
    )


def test_criterion_08_conjugate_matrix(solved_switch_075):
    tau_0 = 0.75 - solved_switch_075
    phase = cmath.exp(-1j * math.pi / 3.0)
    expected = 0.5 * np.array(
        [
            [-1.0, phase, -phase, 1.0],
            [phase.conjugate(), -1.0, 1.0, -phase.conjugate()],
            [-phase.conjugate(), 1.0, -1.0, phase.conjugate()],
            [1.0, -phase, phase, -1.0],
        ]
    )
    dev = float(np.max(np.abs(conjugate_matrix(tau_0) - expected)))
    report(
        "criterion 8 (conjugated cost matrix)",
        dev <= 2e-3,
        f"entrywise deviation = {dev:.2e} <= 2e-3 at tau_0 = {tau_0:.6f}",
    )


def test_criterion_09_robustness_laws(critical_times):
    ts, t0 = critical_times.tau_star, critical_times.tau_0
    stats = robustness.monte_carlo(0.02, 100_000, 1234, ts, t0)
    mean_ratio = stats.mean_error / 0.02**2
    std_ratio = stats.std_error / 0.02**2
    _, fit = robustness.sweep([0.005, 0.01, 0.02, 0.04], 100_000, 1234, ts, t0)
    report(
        "criterion 9 (timing-jitter laws)",
        abs(mean_ratio / (2.0 / 3.0) - 1.0) <= 0.02
        and abs(std_ratio / 0.647 - 1.0) <= 0.05
        and abs(fit.mean_exponent - 2.0) <= 0.05
        and abs(fit.std_exponent - 2.0) <= 0.05,
        f"mean/eps^2 = {mean_ratio:.4f} (2% of 2/3), std/eps^2 = {std_ratio:.4f} "
        f"(5% of 0.647), exponents = {fit.mean_exponent:.3f}/{fit.std_exponent:.3f} "
        f"(0.05 of 2.00)",
    )


def test_criterion_10_property_suite():
    rng = np.random.default_rng(10)
    psi0 = dynamics.initial_state(-1)

    # Norm conservation over 1000 random protocols and random states.
    worst_norm = 0.0
    for _ in range(1000):
        psi = rng.normal(size=4) + 1j * rng.normal(size=4)
        psi /= np.linalg.norm(psi)
        final = evolve(psi, random_protocol(rng, case=int(rng.choice([1, -1]))))
        worst_norm = max(worst_norm, abs(np.linalg.norm(final) - 1.0))

    # Adjoint gradient against central finite differences, 100 protocols.
    worst_grad = 0.0
    for _ in range(100):
        tau = float(rng.uniform(0.2, 1.5))
        values = rng.uniform(0.05, 0.95, (5, 2))
        protocol = make_pwc(tau, values)
        adj = adjoint_gradient(protocol, psi0)
        x = np.concatenate([values[:, 0], values[:, 1]])
        fd = np.zeros(10)
        for i in range(10):
            plus, minus = x.copy(), x.copy()
            plus[i] += 1e-5
            minus[i] -= 1e-5
            fd[i] = (
                error(evolve(psi0, make_pwc(tau, list(zip(plus[:5], plus[5:])))))
                - error(evolve(psi0, make_pwc(tau, list(zip(minus[:5], minus[5:])))))
            ) / 2e-5
        worst_grad = max(worst_grad, float(np.max(np.abs(adj - fd))))

    # Propagator unitarity and composition.
    worst_unit = 0.0
    worst_comp = 0.0
    for _ in range(50):
        b, j = rng.uniform(0.0, 1.0, 2)
        s, t = rng.uniform(0.0, 2.0, 2)
        h = dynamics._hamiltonian(b, j, -1)
        u = dynamics.propagator(h, t)
        worst_unit = max(worst_unit, float(np.max(np.abs(u.conj().T @ u - np.eye(4)))))
        worst_comp = max(
            worst_comp,
            float(
                np.max(
                    np.abs(
                        dynamics.propagator(h, s + t)
                        - dynamics.propagator(h, t) @ dynamics.propagator(h, s)
                    )
                )
            ),
        )

    # Costate-state overlap invariance along one-switch schedules.
    worst_overlap = 0.0
    for t_b in (0.15, 0.3, 0.5):
        times = np.linspace(0.0, 0.75, 401)
        psi, pi = pontryagin._state_costate_samples(0.75, t_b, times)
        overlaps = np.einsum("na,na->n", np.conj(pi), psi)
        worst_overlap = max(worst_overlap, float(np.max(np.abs(overlaps - overlaps[0]))))

    # Jitter moment identities at three standard errors.
    eps, n = 0.04, 100_000
    draws = robustness.sample_jitters(eps, n, 2024)
    var = eps**2 / 12.0
    ok_moments = bool(
        np.all(np.abs(draws.mean(axis=0)) < 3 * math.sqrt(var / n))
        and np.all(
            np.abs((draws**2).mean(axis=0) - var) < 3 * math.sqrt((eps**4 / 180.0) / n)
        )
    )
    d21 = draws[:, 2] - draws[:, 1]
    d10 = draws[:, 1] - draws[:, 0]
    ok_moments = ok_moments and (
        abs(np.mean(d21**2) - eps**2 / 6.0) < 3 * math.sqrt(np.var(d21**2) / n)
        and abs(np.mean(d21 * d10) + eps**2 / 12.0) < 3 * math.sqrt(np.var(d21 * d10) / n)
    )

    report(
        "criterion 10 (property suite)",
        worst_norm <= 1e-12
        and worst_grad < 1e-5
        and worst_unit <= 1e-12
        and worst_comp <= 1e-12
        and worst_overlap <= 1e-10
        and ok_moments,
        f"norm dev {worst_norm:.2e} <= 1e-12, gradient dev {worst_grad:.2e} < 1e-5, "
        f"unitarity {worst_unit:.2e} and composition {worst_comp:.2e} <= 1e-12, "
        f"overlap drift {worst_overlap:.2e} <= 1e-10, jitter moments in 3 SE: {ok_moments}",
    )
