"""Exact dynamics of two exchange-coupled qubits with tunable local fields.

The system lives in the fixed basis (up-up, up-down, down-up, down-down).
States are complex arrays of shape (4,), Hamiltonians real symmetric 4x4
arrays with zero diagonal.  Two control knobs: a local field of strength
``b`` applied to both qubits (with a relative sign ``case``) and an
exchange coupling ``j``, both bounded to [0, lam].  Units: hbar = 1,
energies in units of the bound ``lam`` (default 1), times in 1/lam.

Propagators are built from a cyclic-Jacobi eigendecomposition of the
real symmetric Hamiltonian, so every propagator is unitary to machine
precision and eigensystems can be reused across time arguments.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import NumericalError, ValidationError

# Qubit-swap permutation: exchanges the two mixed basis states.
Q_MATRIX = np.array(
    [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]
)
Q_MATRIX.setflags(write=False)

# Derivative of the Hamiltonian with respect to the exchange coupling j.
DJ_HAMILTONIAN = np.array(
    [
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 2.0, 0.0],
        [0.0, 2.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0],
    ]
)
DJ_HAMILTONIAN.setflags(write=False)

_TARGET = np.array([0.0, 1.0, -1.0, 0.0], dtype=complex) / math.sqrt(2.0)
_TARGET.setflags(write=False)


def singlet_state() -> np.ndarray:
    """The maximally entangled singlet (0, 1, -1, 0)/sqrt(2)."""
    return _TARGET.copy()


def initial_state(case: int) -> np.ndarray:
    """Unentangled ground state of the field-only Hamiltonian (j = 0).

    ``case`` is the relative sign of the two local fields: +1 for equal
    fields, -1 for opposite fields.
    """
    _check_case(case)
    if case == 1:
        c = np.array([1.0, -1.0, -1.0, 1.0], dtype=complex)
    else:
        c = np.array([1.0, -1.0, 1.0, -1.0], dtype=complex)
    return c / 2.0


def state_to_reals(state: np.ndarray) -> list[float]:
    """Serialize a state as 8 reals: the 4 real parts then the 4 imaginary."""
    psi = np.asarray(state, dtype=complex).reshape(4)
    return [*psi.real.tolist(), *psi.imag.tolist()]


def state_from_reals(values) -> np.ndarray:
    """Inverse of :func:`state_to_reals`."""
    arr = np.asarray(values, dtype=float)
    if arr.shape != (8,):
        raise ValidationError(f"expected 8 reals, got shape {arr.shape}")
    return arr[:4] + 1j * arr[4:]


def _check_case(case: int) -> None:
    if case not in (1, -1):
        raise ValidationError(f"case must be +1 or -1, got {case!r}")


@dataclass(frozen=True)
class ControlParams:
    """Instantaneous couplings: field strength ``b``, exchange ``j``.

    ``case`` fixes the relative sign of the two local fields and ``lam``
    is the common bound 0 <= b, j <= lam.
    """

    b: float
    j: float
    case: int = -1
    lam: float = 1.0

    def __post_init__(self):
        _check_case(self.case)
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ValidationError(f"lam must be positive and finite, got {self.lam}")
        for name, value in (("b", self.b), ("j", self.j)):
            if not math.isfinite(value):
                raise ValidationError(f"{name} must be finite, got {value}")
            if not 0.0 <= value <= self.lam:
                raise ValidationError(
                    f"{name}={value} outside the allowed range [0, {self.lam}]"
                )


def _hamiltonian(b: float, j: float, case: int) -> np.ndarray:
    """Raw 4x4 Hamiltonian; callers are responsible for bound checks."""
    b2 = b
    b1 = case * b
    tj = 2.0 * j
    return np.array(
        [
            [0.0, b2, b1, 0.0],
            [b2, 0.0, tj, b1],
            [b1, tj, 0.0, b2],
            [0.0, b1, b2, 0.0],
        ]
    )


def build_hamiltonian(params: ControlParams) -> np.ndarray:
    """Hamiltonian matrix for the given couplings (real symmetric, zero diagonal)."""
    return _hamiltonian(params.b, params.j, params.case)


def symmetric_eigh(
    h: np.ndarray, *, threshold: float = 1e-14, max_sweeps: int = 100
) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a small real symmetric matrix by cyclic Jacobi.

    Returns eigenvalues in ascending order and the matching orthonormal
    eigenvector columns.  Sweeps stop once every off-diagonal magnitude is
    below ``threshold``; exceeding ``max_sweeps`` signals an internal fault.
    """
    a = np.array(h, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    for _ in range(max_sweeps):
        off = np.max(np.abs(a - np.diag(np.diag(a))))
        if off < threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < threshold:
                    continue
                phi = 0.5 * math.atan2(2.0 * apq, a[q, q] - a[p, p])
                c = math.cos(phi)
                s = math.sin(phi)
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
                vec_p = v[:, p].copy()
                vec_q = v[:, q].copy()
                v[:, p] = c * vec_p - s * vec_q
                v[:, q] = s * vec_p + c * vec_q
    else:
        raise NumericalError("Jacobi eigensolver did not converge within the sweep cap")
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


@lru_cache(maxsize=512)
def coupling_eigensystem(b: float, j: float, case: int) -> tuple[np.ndarray, np.ndarray]:
    """Cached eigensystem of the Hamiltonian at the given couplings."""
    w, v = symmetric_eigh(_hamiltonian(b, j, case))
    w.setflags(write=False)
    v.setflags(write=False)
    return w, v


def propagator_from_eigensystem(w: np.ndarray, v: np.ndarray, t: float) -> np.ndarray:
    """exp(-i t H) from the eigensystem (w, v) of H."""
    phase = np.exp(-1j * t * w)
    return (v * phase) @ v.T


def propagator(h: np.ndarray, t: float) -> np.ndarray:
    """Unitary exp(-i t H) for a real symmetric H; negative t inverts the evolution."""
    if not math.isfinite(t):
        raise ValidationError(f"time must be finite, got {t}")
    w, v = symmetric_eigh(h)
    return propagator_from_eigensystem(w, v, t)


def evolve(state: np.ndarray, protocol) -> np.ndarray:
    """Apply the ordered product of segment propagators to ``state``.

    ``protocol`` is a :class:`singletprep.protocols.Protocol`; a protocol
    with no segments returns the input unchanged.
    """
    psi = np.asarray(state, dtype=complex).reshape(4).copy()
    for seg in protocol.segments:
        w, v = coupling_eigensystem(seg.b, seg.j, protocol.case)
        psi = v @ (np.exp(-1j * seg.dt * w) * (v.T @ psi))
    return psi


def error(state: np.ndarray) -> float:
    """Preparation error 1 - |<target|state>|^2 of a normalized state."""
    psi = np.asarray(state, dtype=complex).reshape(4)
    norm = float(np.vdot(psi, psi).real)
    if abs(norm - 1.0) > 1e-9:
        raise ValidationError(f"state norm {math.sqrt(norm)} is not 1 within 1e-9")
    overlap = np.vdot(_TARGET, psi)
    return float(1.0 - (overlap.real**2 + overlap.imag**2))


def q_sector(state: np.ndarray, threshold: float = 1e-10):
    """Swap-symmetry sector of a normalized state: +1, -1, or "mixed"."""
    psi = np.asarray(state, dtype=complex).reshape(4)
    swapped = Q_MATRIX @ psi
    if np.max(np.abs(swapped - psi)) < threshold:
        return 1
    if np.max(np.abs(swapped + psi)) < threshold:
        return -1
    return "mixed"


def gap_scan(case: int = 1, n_points: int = 500) -> tuple[np.ndarray, np.ndarray]:
    """Gap between the two lowest levels along the cut j = 1 - b, b in (0, 1).

    Returns the open uniform grid of b values and the gap at each point
    (ascending-sorted eigenvalues, so the gap is 0 at an exact crossing).
    """
    _check_case(case)
    if n_points < 2:
        raise ValidationError(f"n_points must be at least 2, got {n_points}")
    bs = np.linspace(0.0, 1.0, n_points + 2)[1:-1]
    gaps = np.empty_like(bs)
    for i, b in enumerate(bs):
        w, _ = symmetric_eigh(_hamiltonian(b, 1.0 - b, case))
        gaps[i] = w[1] - w[0]
    return bs, gaps


def _swap_even_block(b: float, j: float) -> np.ndarray:
    """Hamiltonian restricted to the swap-even sector (equal-fields case).

    Basis: up-up, the symmetric mixed combination, down-down.
    """
    r = math.sqrt(2.0) * b
    return np.array([[0.0, r, 0.0], [r, 2.0 * j, r], [0.0, r, 0.0]])


def find_gap_crossing(case: int = 1, tol: float = 1e-6, n_scan: int = 512):
    """Locate the level crossing on the j = 1 - b cut, or None if there is none.

    For the equal-fields case the swap symmetry splits the spectrum into
    sectors, so the crossing is the root of the signed difference between
    the odd-sector level (the singlet, at energy -2j) and the lowest
    even-sector level; the root is refined by bisection to ``tol``.
    """
    _check_case(case)
    if case == -1:
        _, gaps = gap_scan(case, n_scan)
        if np.min(gaps) > 1e-3:
            return None
        raise NumericalError("unexpected near-crossing in the opposite-fields case")

    def signed(b: float) -> float:
        j = 1.0 - b
        w, _ = symmetric_eigh(_swap_even_block(b, j))
        return -2.0 * j - w[0]

    bs = np.linspace(0.0, 1.0, n_scan + 2)[1:-1]
    values = [signed(b) for b in bs]
    lo = hi = None
    for i in range(len(bs) - 1):
        if values[i] == 0.0:
            return float(bs[i])
        if values[i] < 0.0 < values[i + 1]:
            lo, hi = bs[i], bs[i + 1]
            break
    if lo is None:
        raise NumericalError("no sign change found while locating the crossing")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if signed(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return float(0.5 * (lo + hi))
