"""Timing-error analysis of the optimal two-segment schedule.

The perfect schedule holds the exchange coupling on for the whole
duration and turns the field on for the final stretch.  Jitter shifts
the three switch events (start of the dynamics, field turn-on, field
turn-off); only the two duration differences enter the evolution, so a
rigid shift of all three is harmless.  Jitter offsets are drawn
independently and uniformly from [-eps/2, eps/2].

Sampling goes through a counter-based bit generator (Philox), so the
draws for realization i occupy fixed offsets 3i..3i+2 of the stream and
any partition of the realizations can reproduce its slice; statistics
are reduced with numpy's pairwise summation, making them bit-identical
for a given (eps, n, seed) regardless of how the work would be split.
The critical durations are inputs here, not constants, so the analysis
stays consistent with whatever the minimum-time search returned.
"""

from dataclasses import dataclass

import numpy as np

from . import dynamics
from .errors import ValidationError

_CASE = -1


@dataclass(frozen=True)
class TimingJitter:
    """Shifts of the three switch events: dynamics start, field turn-on,
    field turn-off."""

    dt0: float
    dt1: float
    dt2: float


@dataclass(frozen=True)
class RobustnessStats:
    """Sample statistics of the preparation error at one jitter scale."""

    epsilon: float
    mean_error: float
    std_error: float
    n_samples: int
    seed: int


def perturbed_error(jitter: TimingJitter, tau_star: float, tau_0: float) -> float:
    """Exact error of the jittered two-segment schedule (no expansion)."""
    d1 = tau_star - tau_0 + jitter.dt1 - jitter.dt0
    d2 = tau_0 + jitter.dt2 - jitter.dt1
    if d1 < 0.0 or d2 < 0.0:
        raise ValidationError(
            f"jitter {jitter} drives a segment duration negative "
            f"(exchange-only {d1}, field-on {d2})"
        )
    w1, v1 = dynamics.coupling_eigensystem(0.0, 1.0, _CASE)
    w2, v2 = dynamics.coupling_eigensystem(1.0, 1.0, _CASE)
    psi = v1 @ (np.exp(-1j * d1 * w1) * (v1.T @ dynamics.initial_state(_CASE)))
    psi = v2 @ (np.exp(-1j * d2 * w2) * (v2.T @ psi))
    c = np.vdot(dynamics.singlet_state(), psi)
    return float(1.0 - (c.real**2 + c.imag**2))


def sample_jitters(epsilon: float, n_samples: int, seed: int) -> np.ndarray:
    """(n_samples, 3) array of uniform offsets on [-eps/2, eps/2]."""
    if epsilon < 0.0:
        raise ValidationError(f"epsilon must be nonnegative, got {epsilon}")
    if n_samples < 1:
        raise ValidationError(f"n_samples must be at least 1, got {n_samples}")
    rng = np.random.Generator(np.random.Philox(seed))
    return rng.uniform(-0.5 * epsilon, 0.5 * epsilon, size=(n_samples, 3))


def monte_carlo(
    epsilon: float, n_samples: int, seed: int, tau_star: float, tau_0: float
) -> RobustnessStats:
    """Mean and standard deviation of the error over jittered realizations.

    Draws that would make a segment duration negative abort with a
    configuration error instead of being resampled, so the jitter
    distribution stays exactly uniform.
    """
    draws = sample_jitters(epsilon, n_samples, seed)
    d1 = tau_star - tau_0 + draws[:, 1] - draws[:, 0]
    d2 = tau_0 + draws[:, 2] - draws[:, 1]
    if d1.min() < 0.0 or d2.min() < 0.0:
        raise ValidationError(
            f"epsilon={epsilon} is large enough to drive a segment duration negative"
        )
    w1, v1 = dynamics.coupling_eigensystem(0.0, 1.0, _CASE)
    w2, v2 = dynamics.coupling_eigensystem(1.0, 1.0, _CASE)
    psi0 = dynamics.initial_state(_CASE)
    psi = (np.exp(-1j * np.outer(d1, w1)) * (v1.T @ psi0)) @ v1.T
    psi = (np.exp(-1j * np.outer(d2, w2)) * (psi @ v2)) @ v2.T
    overlap = psi @ np.conj(dynamics.singlet_state())
    # Roundoff can push 1 - |overlap|^2 a few ulp below zero near perfect
    # preparation; clip so the statistics stay nonnegative.
    errors = np.maximum(1.0 - np.abs(overlap) ** 2, 0.0)
    return RobustnessStats(
        epsilon=epsilon,
        mean_error=float(np.mean(errors)),
        std_error=float(np.std(errors)),
        n_samples=n_samples,
        seed=seed,
    )


def analytic_mean(epsilon: float) -> float:
    """Leading-order mean error (2/3) eps^2 of the jittered schedule."""
    if epsilon < 0.0:
        raise ValidationError(f"epsilon must be nonnegative, got {epsilon}")
    return (2.0 / 3.0) * epsilon**2


@dataclass(frozen=True)
class PowerLawFit:
    """Log-log least-squares exponents of the mean and standard deviation."""

    mean_exponent: float
    std_exponent: float


def sweep(
    epsilons,
    n_samples: int,
    seed: int,
    tau_star: float,
    tau_0: float,
) -> tuple[list[RobustnessStats], PowerLawFit | None]:
    """One Monte Carlo row per jitter scale, plus fitted power laws.

    Row i uses seed + i so rows are independent streams.  The fit is
    omitted (None) when fewer than two scales have positive statistics.
    """
    eps_list = [float(e) for e in epsilons]
    if not eps_list:
        raise ValidationError("at least one epsilon value is required")
    rows = [
        monte_carlo(eps, n_samples, seed + i, tau_star, tau_0)
        for i, eps in enumerate(eps_list)
    ]
    usable = [
        r for r in rows if r.epsilon > 0.0 and r.mean_error > 0.0 and r.std_error > 0.0
    ]
    if len(usable) < 2:
        return rows, None
    log_eps = np.log([r.epsilon for r in usable])
    mean_slope = np.polyfit(log_eps, np.log([r.mean_error for r in usable]), 1)[0]
    std_slope = np.polyfit(log_eps, np.log([r.std_error for r in usable]), 1)[0]
    return rows, PowerLawFit(float(mean_slope), float(std_slope))


def mean_error_expansion_coefficient(tau_star: float, tau_0: float) -> float:
    """Second-order coefficient of the mean error, term by term.

    Expands the jittered evolution around the perfect schedule to second
    order in the offsets and averages over the uniform draws; the five
    surviving expectation values are evaluated by direct matrix
    arithmetic.  The result multiplies eps^2 and should reproduce the 2/3
    of :func:`analytic_mean`.
    """
    h1 = dynamics._hamiltonian(0.0, 1.0, _CASE)
    h2 = dynamics._hamiltonian(1.0, 1.0, _CASE)
    u1 = dynamics.propagator(h1, tau_star - tau_0)
    u2 = dynamics.propagator(h2, tau_0)
    target = dynamics.singlet_state()
    phi = u1 @ dynamics.initial_state(_CASE)  # state at the field turn-on

    def overlap(vec: np.ndarray) -> complex:
        return complex(np.vdot(target, u2 @ vec))

    o_plain = overlap(phi)
    o_h1 = overlap(h1 @ phi)
    o_h2 = overlap(h2 @ phi)
    t1 = (np.conj(o_plain) * overlap((h1 @ h1 + h2 @ h2) @ phi)).real
    t2 = (np.conj(o_plain) * overlap(h2 @ (h1 @ phi))).real
    t3 = (np.conj(o_h1) * o_h2).real
    t4 = abs(o_h1) ** 2
    t5 = abs(o_h2) ** 2
    return (t1 - t2 + t3 - t4 - t5) / 6.0
