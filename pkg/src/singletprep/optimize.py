"""Protocol optimization: brute-force piecewise-constant search, the
two-switch-time reduction, adjoint gradients, and the minimum-time search.

The piecewise-constant search is a projected-gradient descent (clamping to
the box, step-halving line search) from multiple starts; a derivative-free
Nelder-Mead fallback is available for cross-checking.  The two-parameter
search scans a dense switch-time grid and polishes the best cell with a
compass search.  Inner loops evaluate through a batched LAPACK
eigendecomposition for speed; every reported ``best_error`` is recomputed
through the exact single-protocol evolution path, so re-evaluating the
returned protocol reproduces it.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize as _scipy_minimize

from . import dynamics
from .errors import NumericalError, ValidationError
from .protocols import BangBangParams, Protocol, bang_bang_protocol, make_pwc

_IMPROVEMENT_TOL = 1e-12
_PROJECTED_GRAD_TOL = 1e-10
_DEGENERACY_TOL = 1e-12


@dataclass
class OptimizationResult:
    """Outcome of a protocol search."""

    best_error: float
    best_protocol: Protocol | BangBangParams
    restarts_used: int
    converged: bool
    evaluations: int

    @property
    def t_b(self) -> float | None:
        p = self.best_protocol
        return p.t_b if isinstance(p, BangBangParams) else None

    @property
    def t_j(self) -> float | None:
        p = self.best_protocol
        return p.t_j if isinstance(p, BangBangParams) else None


@dataclass
class MinTimeResult:
    """Critical durations: ``tau_star`` for exact preparation, ``tau_0``
    below which the optimum is a constant full-strength pulse."""

    tau_star: float
    tau_0: float
    bracket_width: float

    def __post_init__(self):
        if not self.tau_0 < self.tau_star:
            raise NumericalError(
                f"inconsistent critical times: tau_0={self.tau_0} >= tau_star={self.tau_star}"
            )


def result_to_dict(result: OptimizationResult, case: int = -1) -> dict:
    """JSON-ready form: {"tau", "best_error", "t_B", "t_J", "protocol"}.

    ``case`` labels the expanded schedule when the result holds bare
    switch times (piecewise-constant protocols already carry it).
    """
    from .protocols import protocol_to_dict

    p = result.best_protocol
    if isinstance(p, BangBangParams):
        tau, t_b, t_j = p.tau, p.t_b, p.t_j
        protocol = protocol_to_dict(bang_bang_protocol(p, case=case))
    else:
        tau, t_b, t_j = p.tau, None, None
        protocol = protocol_to_dict(p)
    return {
        "tau": tau,
        "best_error": result.best_error,
        "t_B": t_b,
        "t_J": t_j,
        "protocol": protocol,
    }


# ---------------------------------------------------------------------
# Fast piecewise-constant evaluation (batched eigendecomposition)
# ---------------------------------------------------------------------


def _hamiltonian_batch(b: np.ndarray, j: np.ndarray, case: int) -> np.ndarray:
    h = np.zeros((b.size, 4, 4))
    h[:, 0, 1] = h[:, 1, 0] = b
    h[:, 2, 3] = h[:, 3, 2] = b
    h[:, 0, 2] = h[:, 2, 0] = case * b
    h[:, 1, 3] = h[:, 3, 1] = case * b
    h[:, 1, 2] = h[:, 2, 1] = 2.0 * j
    return h


def _segment_systems(x: np.ndarray, case: int) -> tuple[np.ndarray, np.ndarray]:
    n = x.size // 2
    return np.linalg.eigh(_hamiltonian_batch(x[:n], x[n:], case))


def _pwc_error(x: np.ndarray, dts: np.ndarray, case: int, psi0: np.ndarray,
               target: np.ndarray) -> float:
    w, v = _segment_systems(x, case)
    psi = psi0
    for k in range(dts.size):
        vk = v[k]
        psi = vk @ (np.exp(-1j * dts[k] * w[k]) * (vk.T @ psi))
    c = np.vdot(target, psi)
    return float(1.0 - (c.real**2 + c.imag**2))


def _pwc_error_and_grad(x: np.ndarray, dts: np.ndarray, case: int, psi0: np.ndarray,
                        target: np.ndarray) -> tuple[float, np.ndarray]:
    """Error and its gradient in one forward plus one backward pass.

    The derivative of each segment propagator exp(-i dt H) follows from
    the divided-difference (Daleckii-Krein) form in the eigenbasis of H;
    coincident eigenvalues take the derivative branch.
    """
    n = dts.size
    db = dynamics._hamiltonian(1.0, 0.0, case)
    dj = np.asarray(dynamics.DJ_HAMILTONIAN)
    w, v = _segment_systems(x, case)
    vt = np.swapaxes(v, 1, 2)
    phases = np.exp(-1j * dts[:, None] * w)

    states = np.empty((n + 1, 4), dtype=complex)
    states[0] = psi0
    for k in range(n):
        states[k + 1] = v[k] @ (phases[k] * (vt[k] @ states[k]))
    c = np.vdot(target, states[n])
    err = float(1.0 - (c.real**2 + c.imag**2))

    # chis[k] = adjoint of the product of all segments after k, applied to
    # the target.
    chis = np.empty((n, 4), dtype=complex)
    chi = target.astype(complex)
    for k in range(n - 1, -1, -1):
        chis[k] = chi
        chi = v[k] @ (np.conj(phases[k]) * (vt[k] @ chi))

    dw = w[:, :, None] - w[:, None, :]
    close = np.abs(dw) < _DEGENERACY_TOL
    gamma = np.where(
        close,
        -1j * dts[:, None, None] * phases[:, :, None],
        (phases[:, :, None] - phases[:, None, :]) / np.where(close, 1.0, dw),
    )
    bra = np.conj(np.einsum("kpq,kq->kp", vt, chis))
    ket = np.einsum("kpq,kq->kp", vt, states[:n])
    dc = np.concatenate(
        [
            np.einsum("kp,kpq,kq->k", bra, gamma * np.einsum("krp,rs,ksq->kpq", v, db, v), ket),
            np.einsum("kp,kpq,kq->k", bra, gamma * np.einsum("krp,rs,ksq->kpq", v, dj, v), ket),
        ]
    )
    return err, -2.0 * np.real(np.conj(c) * dc)


def adjoint_gradient(protocol: Protocol, state: np.ndarray) -> np.ndarray:
    """Gradient of the preparation error with respect to the segment values.

    Returns a length-2N array: derivatives with respect to the N field
    values, then with respect to the N exchange values.  Costs one forward
    and one backward propagation pass regardless of N.
    """
    n = protocol.n_segments
    if n == 0:
        return np.zeros(0)
    dts = np.array([seg.dt for seg in protocol.segments])
    x = np.array([seg.b for seg in protocol.segments]
                 + [seg.j for seg in protocol.segments])
    psi0 = np.asarray(state, dtype=complex).reshape(4)
    _, grad = _pwc_error_and_grad(x, dts, protocol.case, psi0, dynamics.singlet_state())
    return grad


# ---------------------------------------------------------------------
# Projected-gradient multistart
# ---------------------------------------------------------------------


def _projected_descent(x0, dts, case, psi0, target, max_evals):
    """Monotone projected-gradient descent with a step-halving line search.

    Trial steps are seeded with the spectral (Barzilai-Borwein) length and
    halved until the error decreases; iterates are clamped to the box.
    """
    x = np.clip(x0, 0.0, 1.0)
    fx, g = _pwc_error_and_grad(x, dts, case, psi0, target)
    evals = 2
    alpha_spectral = 1.0
    converged = False
    while evals < max_evals:
        if np.linalg.norm(x - np.clip(x - g, 0.0, 1.0)) < _PROJECTED_GRAD_TOL:
            converged = True
            break
        alpha = alpha_spectral
        accepted = False
        while alpha > 1e-18 and evals < max_evals:
            xt = np.clip(x - alpha * g, 0.0, 1.0)
            if np.array_equal(xt, x):
                break
            ft = _pwc_error(xt, dts, case, psi0, target)
            evals += 1
            if ft < fx:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            converged = True
            break
        step = xt - x
        improvement = fx - ft
        x = xt
        fx, g_new = _pwc_error_and_grad(x, dts, case, psi0, target)
        evals += 2
        curvature = float(step @ (g_new - g))
        if curvature > 1e-18:
            alpha_spectral = min(max(float(step @ step) / curvature, 1e-8), 1e4)
        else:
            alpha_spectral = 1.0
        g = g_new
        if improvement < _IMPROVEMENT_TOL:
            converged = True
            break
    return x, fx, evals, converged


def _nelder_mead_start(x0, dts, case, psi0, target, max_evals):
    res = _scipy_minimize(
        _pwc_error,
        np.clip(x0, 0.0, 1.0),
        args=(dts, case, psi0, target),
        method="Nelder-Mead",
        bounds=[(0.0, 1.0)] * x0.size,
        options={"xatol": 1e-10, "fatol": 1e-13, "maxfev": max_evals},
    )
    return np.clip(res.x, 0.0, 1.0), float(res.fun), int(res.nfev), bool(res.success)


def optimize_pwc(
    tau: float,
    n_segments: int,
    case: int = -1,
    restarts: int = 50,
    seed: int = 0,
    method: str = "projected-gradient",
    max_evals_per_start: int = 100_000,
) -> OptimizationResult:
    """Minimize the preparation error over the 2N-dimensional coupling box.

    Local searches run from ``restarts`` seeded uniform starts plus two
    deterministic ones: the all-maximum protocol and the linear ramp (the
    two qualitative optimum shapes).  Deterministic for a given seed; each
    start draws from its own (seed, index) stream, so the outcome does not
    depend on evaluation order.
    """
    if n_segments < 1:
        raise ValidationError(f"n_segments must be at least 1, got {n_segments}")
    if restarts < 1:
        raise ValidationError(f"restarts must be at least 1, got {restarts}")
    if method not in ("projected-gradient", "nelder-mead"):
        raise ValidationError(f"unknown method {method!r}")
    if not (math.isfinite(tau) and tau > 0):
        raise ValidationError(f"tau must be positive and finite, got {tau}")

    n = n_segments
    dts = np.full(n, tau / n)
    psi0 = dynamics.initial_state(case)
    target = dynamics.singlet_state()

    fractions = (np.arange(n) + 0.5) / n
    starts = [
        np.ones(2 * n),
        np.concatenate([1.0 - fractions, fractions]),
    ]
    for i in range(restarts):
        rng = np.random.default_rng([seed, i])
        starts.append(rng.uniform(0.0, 1.0, 2 * n))

    search = _projected_descent if method == "projected-gradient" else _nelder_mead_start
    best_x = None
    best_fx = math.inf
    total_evals = 0
    any_converged = False
    restarts_used = 0
    for x0 in starts:
        x, fx, evals, converged = search(x0, dts, case, psi0, target, max_evals_per_start)
        total_evals += evals
        restarts_used += 1
        any_converged = any_converged or converged
        if fx < best_fx:
            best_fx = fx
            best_x = x
        if best_fx < 1e-13:
            break

    protocol = make_pwc(tau, list(zip(best_x[:n], best_x[n:])), case=case)
    # Clamp away the few-ulp negatives an essentially perfect preparation
    # can produce.
    best_error = max(0.0, dynamics.error(dynamics.evolve(psi0, protocol)))
    return OptimizationResult(
        best_error=best_error,
        best_protocol=protocol,
        restarts_used=restarts_used,
        converged=any_converged,
        evaluations=total_evals,
    )


# ---------------------------------------------------------------------
# Two-switch-time optimization
# ---------------------------------------------------------------------


def _corner_systems(case: int):
    return (
        dynamics.coupling_eigensystem(0.0, 1.0, case),
        dynamics.coupling_eigensystem(1.0, 1.0, case),
        dynamics.coupling_eigensystem(1.0, 0.0, case),
    )


def _bang_bang_error_grid(tau, t_bs, t_js, case, psi0, target):
    """Errors on the full (t_b, t_j) mesh, flattened in t_b-major order.

    Before both switches the Hamiltonian is the exchange-only corner;
    between them it is either the both-on corner (t_b <= t_j) or zero
    (t_j < t_b, a free idle); after both it is the field-only corner.
    """
    (w1, v1), (w2, v2), (w3, v3) = _corner_systems(case)
    tb = np.repeat(t_bs, t_js.size)
    tj = np.tile(t_js, t_bs.size)
    first = np.minimum(tb, tj)
    second = np.maximum(tb, tj)
    psi = (np.exp(-1j * np.outer(first, w1)) * (v1.T @ psi0)) @ v1.T
    on = tb <= tj
    psi[on] = (np.exp(-1j * np.outer(second[on] - first[on], w2)) * (psi[on] @ v2)) @ v2.T
    psi = (np.exp(-1j * np.outer(tau - second, w3)) * (psi @ v3)) @ v3.T
    overlap = psi @ np.conj(target)
    return tb, tj, 1.0 - np.abs(overlap) ** 2


def _bang_bang_error_single(tau, t_b, t_j, case, psi0, target):
    (w1, v1), (w2, v2), (w3, v3) = _corner_systems(case)
    first, second = (t_b, t_j) if t_b <= t_j else (t_j, t_b)
    psi = v1 @ (np.exp(-1j * first * w1) * (v1.T @ psi0))
    if t_b <= t_j:
        psi = v2 @ (np.exp(-1j * (second - first) * w2) * (v2.T @ psi))
    psi = v3 @ (np.exp(-1j * (tau - second) * w3) * (v3.T @ psi))
    c = np.vdot(target, psi)
    return float(1.0 - (c.real**2 + c.imag**2))


def _compass_polish(f, x0, fx0, lo, hi, step0, tol, max_evals=20_000):
    """Deterministic compass search on a clamped rectangle."""
    x = list(x0)
    fx = fx0
    step = step0
    evals = 0
    while step > tol and evals < max_evals:
        moved = False
        for di, delta in ((0, step), (0, -step), (1, step), (1, -step)):
            xt = list(x)
            xt[di] = min(max(xt[di] + delta, lo), hi)
            if xt[di] == x[di]:
                continue
            ft = f(xt[0], xt[1])
            evals += 1
            if ft < fx:
                x, fx = xt, ft
                moved = True
                break
        if not moved:
            step *= 0.5
    return x, fx, evals


def optimize_bang_bang(
    tau: float, case: int = -1, grid_size: int = 400, polish_tol: float = 1e-8
) -> OptimizationResult:
    """Minimize the error over the two switch times in [0, tau]^2.

    A dense grid scan localizes the optimum (ties broken toward the
    smallest t_j, then smallest t_b, since past the minimum preparation
    time the optimum is not unique), then a compass search polishes the
    switch times to ``polish_tol``.
    """
    if not (math.isfinite(tau) and tau > 0):
        raise ValidationError(f"tau must be positive and finite, got {tau}")
    if grid_size < 2:
        raise ValidationError(f"grid_size must be at least 2, got {grid_size}")
    psi0 = dynamics.initial_state(case)
    target = dynamics.singlet_state()

    ts = np.linspace(0.0, tau, grid_size)
    tb, tj, err = _bang_bang_error_grid(tau, ts, ts, case, psi0, target)
    ties = err <= err.min() + 1e-10
    pick = np.lexsort((tb[ties], tj[ties]))[0]
    x0 = (float(tb[ties][pick]), float(tj[ties][pick]))
    fx0 = float(err[ties][pick])

    f = lambda a, b: _bang_bang_error_single(tau, a, b, case, psi0, target)
    (t_b, t_j), _, polish_evals = _compass_polish(
        f, x0, fx0, 0.0, tau, ts[1] - ts[0], polish_tol
    )

    params = BangBangParams(tau=tau, t_b=t_b, t_j=t_j)
    best_error = max(
        0.0, dynamics.error(dynamics.evolve(psi0, bang_bang_protocol(params, case)))
    )
    return OptimizationResult(
        best_error=best_error,
        best_protocol=params,
        restarts_used=1,
        converged=True,
        evaluations=grid_size * grid_size + polish_evals,
    )


# ---------------------------------------------------------------------
# Minimum-time search
# ---------------------------------------------------------------------


def min_time_search(
    case: int = -1,
    error_threshold: float = 1e-6,
    tau_resolution: float = 1e-4,
    tau_max: float = 2.0,
    grid_size: int = 400,
) -> MinTimeResult:
    """Bisect for the two critical durations of the optimal schedule.

    ``tau_star``: the total time where the optimal error vanishes.  The
    threshold crossing is bracketed by bisection to ``tau_resolution``;
    since the optimal error vanishes quadratically at the critical time,
    the reported value linearly extrapolates sqrt(error) to zero from the
    last two above-threshold points, which lands on the zero-error time
    rather than the threshold-dependent crossing.

    ``tau_0``: the smallest total time whose optimal field turn-on delay
    exceeds ``tau_resolution`` (below it the optimum is the constant pulse).
    """
    if not 0.0 < error_threshold < 0.5:
        raise ValidationError(f"error_threshold must lie in (0, 0.5), got {error_threshold}")
    if tau_resolution <= 0.0:
        raise ValidationError(f"tau_resolution must be positive, got {tau_resolution}")

    cache: dict[float, OptimizationResult] = {}

    def solve(tau: float) -> OptimizationResult:
        if tau not in cache:
            cache[tau] = optimize_bang_bang(tau, case=case, grid_size=grid_size)
        return cache[tau]

    lo, err_lo = 0.0, 0.5  # zero-duration evolution has error exactly 1/2
    hi = None
    for candidate in (tau_max / 4.0, tau_max / 2.0, tau_max):
        if solve(candidate).best_error < error_threshold:
            hi = candidate
            break
        lo = candidate
    if hi is None:
        raise NumericalError(
            f"error threshold {error_threshold} not reached below tau={tau_max}"
        )
    while hi - lo > tau_resolution:
        mid = 0.5 * (lo + hi)
        if solve(mid).best_error < error_threshold:
            hi = mid
        else:
            lo = mid
    bracket_width = hi - lo

    above = sorted(
        (t, r.best_error) for t, r in cache.items() if r.best_error >= error_threshold
    )
    if len(above) >= 2:
        (t1, e1), (t2, e2) = above[-2], above[-1]
        slope = (math.sqrt(e1) - math.sqrt(e2)) / (t2 - t1)
        tau_star = t2 + math.sqrt(e2) / slope if slope > 0 else 0.5 * (lo + hi)
    else:
        tau_star = 0.5 * (lo + hi)

    def delayed(tau: float) -> bool:
        return solve(tau).t_b > tau_resolution

    lo0, hi0 = tau_resolution, hi
    if not delayed(hi0):
        raise NumericalError("no turn-on delay found below the minimum preparation time")
    if delayed(lo0):
        raise NumericalError(f"turn-on delay already present at tau={lo0}")
    while hi0 - lo0 > tau_resolution:
        mid = 0.5 * (lo0 + hi0)
        if delayed(mid):
            hi0 = mid
        else:
            lo0 = mid
    tau_0 = 0.5 * (lo0 + hi0)

    return MinTimeResult(tau_star=tau_star, tau_0=tau_0, bracket_width=bracket_width)
