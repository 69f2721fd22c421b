"""Costate analysis of one-switch schedules in the reachable sector.

The costate obeys the same Schrodinger equation as the state, with the
terminal condition set by the cost gradient.  The field control carries
the switching function

    s(t) = -Im <costate(t)| K |state(t)>,

where K is the field derivative of the Hamiltonian: the optimal field
sits at its maximum where s > 0 and at zero where s < 0; stretches where
s vanishes identically leave the control singular (undetermined by the
sign rule).  The self-consistent turn-on delay is the point where the
sign change of s happens exactly at the switch itself.

Everything here works in the opposite-fields case, the only one where
the target is reachable.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import dynamics
from .errors import NumericalError, ValidationError

_CASE = -1

# Gradient of the preparation error with respect to the state components:
# annihilates the swap-even sector, -2 on the singlet.
TERMINAL_COST_MATRIX = np.array(
    [
        [0.0, 0.0, 0.0, 0.0],
        [0.0, -1.0, 1.0, 0.0],
        [0.0, 1.0, -1.0, 0.0],
        [0.0, 0.0, 0.0, 0.0],
    ]
)
TERMINAL_COST_MATRIX.setflags(write=False)

# Field derivative of the Hamiltonian (opposite-fields case).
FIELD_DERIVATIVE_MATRIX = dynamics._hamiltonian(1.0, 0.0, _CASE)
FIELD_DERIVATIVE_MATRIX.setflags(write=False)

SINGULAR_THRESHOLD = 1e-8
SINGULAR_MIN_POINTS = 5


def terminal_costate(final_state: np.ndarray) -> np.ndarray:
    """Costate at the final time: the cost-gradient matrix applied to the state."""
    psi = np.asarray(final_state, dtype=complex).reshape(4)
    norm = float(np.vdot(psi, psi).real)
    if abs(norm - 1.0) > 1e-9:
        raise ValidationError(f"state norm {math.sqrt(norm)} is not 1 within 1e-9")
    return TERMINAL_COST_MATRIX @ psi


@dataclass
class SwitchingTrace:
    """Sampled switching function for a one-switch schedule."""

    tau: float
    t_b: float
    times: np.ndarray
    values: np.ndarray
    singular_intervals: list[tuple[float, float]] = field(default_factory=list)

    def regimes(self) -> list[str]:
        """Per-sample control regime: bang0, bang1, or singular.

        Isolated zeros are ordinary switch points and keep the previous
        bang value.
        """
        labels = []
        previous = None
        for t, s in zip(self.times, self.values):
            if any(lo <= t <= hi for lo, hi in self.singular_intervals):
                labels.append("singular")
                continue
            if s > 0.0:
                previous = "bang1"
            elif s < 0.0:
                previous = "bang0"
            elif previous is None:
                previous = "bang1" if self.t_b <= 0.0 else "bang0"
            labels.append(previous)
        return labels

    def csv_rows(self) -> list[tuple[float, float, str]]:
        """Serialized rows (t, s, regime), the file format of the trace."""
        return list(zip(self.times.tolist(), self.values.tolist(), self.regimes()))


def _corner_systems():
    return (
        dynamics.coupling_eigensystem(0.0, 1.0, _CASE),
        dynamics.coupling_eigensystem(1.0, 1.0, _CASE),
    )


def _evolution_endpoints(tau: float, t_b: float):
    """States anchoring the trace: state at the switch, at the final time,
    and the costate propagated back to the switch."""
    (w1, v1), (w2, v2) = _corner_systems()
    psi0 = dynamics.initial_state(_CASE)
    psi_switch = v1 @ (np.exp(-1j * t_b * w1) * (v1.T @ psi0))
    psi_final = v2 @ (np.exp(-1j * (tau - t_b) * w2) * (v2.T @ psi_switch))
    pi_final = TERMINAL_COST_MATRIX @ psi_final
    pi_switch = v2 @ (np.exp(-1j * (t_b - tau) * w2) * (v2.T @ pi_final))
    return psi0, psi_switch, pi_final, pi_switch


def _state_costate_samples(tau: float, t_b: float, times: np.ndarray):
    """State and costate at each sample time (switch convention: the field
    is on from t_b, so t >= t_b uses the both-on branch)."""
    (w1, v1), (w2, v2) = _corner_systems()
    psi0, psi_switch, pi_final, pi_switch = _evolution_endpoints(tau, t_b)

    psi = np.empty((times.size, 4), dtype=complex)
    pi = np.empty((times.size, 4), dtype=complex)
    before = times < t_b
    after = ~before

    tb_times = times[before]
    psi[before] = (np.exp(-1j * np.outer(tb_times, w1)) * (v1.T @ psi0)) @ v1.T
    pi[before] = (np.exp(-1j * np.outer(tb_times - t_b, w1)) * (v1.T @ pi_switch)) @ v1.T

    ta_times = times[after]
    psi[after] = (np.exp(-1j * np.outer(ta_times - t_b, w2)) * (v2.T @ psi_switch)) @ v2.T
    pi[after] = (np.exp(-1j * np.outer(ta_times - tau, w2)) * (v2.T @ pi_final)) @ v2.T
    return psi, pi


def _coefficient_samples(tau, t_b, times, control_derivative):
    psi, pi = _state_costate_samples(tau, t_b, times)
    return -np.einsum("na,ab,nb->n", np.conj(pi), control_derivative, psi).imag


def _find_singular_intervals(times, values):
    """Maximal runs of at least SINGULAR_MIN_POINTS samples with |s| below
    the singularity threshold."""
    small = np.abs(values) < SINGULAR_THRESHOLD
    intervals = []
    start = None
    for i, flag in enumerate([*small, False]):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            if i - start >= SINGULAR_MIN_POINTS:
                intervals.append((float(times[start]), float(times[i - 1])))
            start = None
    return intervals


def _validate_trace_args(tau, t_b, n_grid):
    if not (math.isfinite(tau) and tau > 0):
        raise ValidationError(f"tau must be positive and finite, got {tau}")
    if not 0.0 <= t_b <= tau:
        raise ValidationError(f"t_b={t_b} outside the evolution window [0, {tau}]")
    if n_grid < 2:
        raise ValidationError(f"n_grid must be at least 2, got {n_grid}")


def switching_trace(tau: float, t_b: float, n_grid: int = 2001) -> SwitchingTrace:
    """Sample the field switching function on a uniform grid over [0, tau]."""
    _validate_trace_args(tau, t_b, n_grid)
    times = np.linspace(0.0, tau, n_grid)
    values = _coefficient_samples(tau, t_b, times, FIELD_DERIVATIVE_MATRIX)
    return SwitchingTrace(
        tau=tau,
        t_b=t_b,
        times=times,
        values=values,
        singular_intervals=_find_singular_intervals(times, values),
    )


def dj_coefficient(tau: float, t_b: float, n_grid: int = 2001):
    """Sample the exchange-control coefficient -Im<costate|dH/dj|state>.

    Same sign convention as the field switching function: positive values
    favor the exchange coupling at its maximum.  Returns (times, values).
    """
    _validate_trace_args(tau, t_b, n_grid)
    times = np.linspace(0.0, tau, n_grid)
    values = _coefficient_samples(tau, t_b, times, np.asarray(dynamics.DJ_HAMILTONIAN))
    return times, values


def _switch_value(tau: float, t_b: float, offset: float) -> float:
    """Switching function just above the switch time itself."""
    t = min(t_b + offset, tau)
    psi, pi = _state_costate_samples(tau, t_b, np.array([t]))
    return float(
        -np.vdot(pi[0], FIELD_DERIVATIVE_MATRIX @ psi[0]).imag
    )


def solve_switching_time(
    tau: float,
    tol: float = 1e-12,
    offset: float = 1e-9,
    n_scan: int = 201,
) -> float:
    """Self-consistent turn-on delay: the root of g(t_b) = s(t_b+; t_b).

    Scans from the short-delay side for the first sign change of g and
    refines it by bisection to ``tol``; the evaluation point sits
    ``offset`` above the switch to avoid sampling exactly at the protocol
    discontinuity.  Valid in the regime where the optimum has a single
    interior switch; outside it no sign change exists.
    """
    if not (math.isfinite(tau) and tau > 0):
        raise ValidationError(f"tau must be positive and finite, got {tau}")

    def g(t_b: float) -> float:
        return _switch_value(tau, t_b, offset)

    grid = np.linspace(0.0, tau - offset, n_scan)
    lo = hi = None
    g_prev = g(grid[0])
    for t in grid[1:]:
        g_next = g(t)
        if g_prev < 0.0 <= g_next:
            lo, hi = t - (grid[1] - grid[0]), t
            break
        g_prev = g_next
    if lo is None:
        raise NumericalError(
            f"no negative-to-positive crossing of the switching function at tau={tau}; "
            "total time outside the single-switch regime"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def conjugate_matrix(tau0: float) -> np.ndarray:
    """The cost-gradient matrix conjugated by the both-on evolution over tau0."""
    if not (math.isfinite(tau0) and tau0 >= 0):
        raise ValidationError(f"tau0 must be nonnegative and finite, got {tau0}")
    w2, v2 = dynamics.coupling_eigensystem(1.0, 1.0, _CASE)
    u2 = dynamics.propagator_from_eigensystem(w2, v2, tau0)
    return u2.conj().T @ TERMINAL_COST_MATRIX @ u2


def singular_invariant(t: float, t_b: float, tau0: float) -> complex:
    """The singular-stretch expectation value, evaluated from propagators.

    Real for every (t, t_b) exactly when tau0 is the critical turn-on
    delay; its real part then follows a closed trigonometric form (see
    :func:`singular_invariant_reference`).
    """
    for name, value in (("t", t), ("t_b", t_b), ("tau0", tau0)):
        if not math.isfinite(value):
            raise ValidationError(f"{name} must be finite, got {value}")
    w1, v1 = dynamics.coupling_eigensystem(0.0, 1.0, _CASE)
    u1b = dynamics.propagator_from_eigensystem(w1, v1, t_b)
    u1t = dynamics.propagator_from_eigensystem(w1, v1, t)
    psi0 = dynamics.initial_state(_CASE)
    conj = conjugate_matrix(tau0)
    left = u1b.conj().T @ conj @ u1b
    right = u1t.conj().T @ FIELD_DERIVATIVE_MATRIX @ u1t
    return complex(np.vdot(psi0, left @ right @ psi0))


def singular_invariant_reference(t: float, t_b: float) -> float:
    """Closed trigonometric form of the singular-stretch expectation value,
    valid at the critical turn-on delay."""
    return (
        2.0 * math.cos(2.0 * t)
        + math.cos(2.0 * (t - t_b))
        - math.sqrt(3.0) * math.sin(2.0 * (t - t_b))
    )
