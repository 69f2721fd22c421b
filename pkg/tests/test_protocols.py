import math

import numpy as np
import pytest

from singletprep.dynamics import error, evolve, initial_state
from singletprep.errors import ValidationError
from singletprep.optimize import optimize_bang_bang
from singletprep.protocols import (
    BangBangParams,
    Protocol,
    Segment,
    bang_bang_protocol,
    linear_protocol,
    make_pwc,
    protocol_from_dict,
    protocol_to_dict,
)

RNG = np.random.default_rng(4711)


# ---------------------------------------------------------------------
# Piecewise-constant construction
# ---------------------------------------------------------------------


def test_make_pwc_single_segment():
    p = make_pwc(1.0, [(1.0, 1.0)])
    assert p.segments == (Segment(1.0, 1.0, 1.0),)
    assert p.tau == 1.0


def test_make_pwc_equal_durations():
    p = make_pwc(0.8, [(0.5, 0.5)] * 10)
    assert p.n_segments == 10
    assert all(seg.dt == pytest.approx(0.08, abs=1e-15) for seg in p.segments)
    assert math.fsum(seg.dt for seg in p.segments) == pytest.approx(0.8, abs=1e-12)


def test_make_pwc_rejects_out_of_box_value():
    with pytest.raises(ValidationError, match="segment 0"):
        make_pwc(1.0, [(2.0, 0.0)])
    with pytest.raises(ValidationError, match="segment 2"):
        make_pwc(1.0, [(0.5, 0.5), (0.5, 0.5), (0.5, -0.1)])


def test_make_pwc_rejects_bad_tau_or_empty():
    with pytest.raises(ValidationError):
        make_pwc(0.0, [(0.5, 0.5)])
    with pytest.raises(ValidationError):
        make_pwc(1.0, [])


def test_durations_sum_matches_tau_for_awkward_totals():
    for tau, n in ((0.8, 10), (0.93134, 7), (20.0, 2000)):
        p = make_pwc(tau, [(0.1, 0.9)] * n)
        assert math.fsum(seg.dt for seg in p.segments) == pytest.approx(tau, abs=1e-12)


def test_protocol_validation():
    with pytest.raises(ValidationError):
        Protocol(tau=1.0, segments=(Segment(0.5, 0.5, 0.5),), case=-1)  # sum mismatch
    with pytest.raises(ValidationError):
        Protocol(tau=1.0, segments=(Segment(-1.0, 0.5, 0.5), Segment(2.0, 0.5, 0.5)))
    with pytest.raises(ValidationError):
        Protocol(tau=1.0, segments=(Segment(1.0, 0.5, 0.5),), case=2)


def test_breakpoints_derived_from_durations():
    p = make_pwc(1.0, [(0.0, 1.0)] * 4)
    np.testing.assert_allclose(p.breakpoints(), [0.25, 0.5, 0.75, 1.0])


# ---------------------------------------------------------------------
# Linear ramp
# ---------------------------------------------------------------------


def test_linear_single_segment_samples_midpoint():
    p = linear_protocol(1.0, 1)
    assert p.segments == (Segment(1.0, 0.5, 0.5),)


def test_linear_ramp_directions():
    p = linear_protocol(1.0, 10)
    bs = [seg.b for seg in p.segments]
    js = [seg.j for seg in p.segments]
    assert bs[0] > 0.9 and bs[-1] < 0.1  # field ramps down
    assert js[0] < 0.1 and js[-1] > 0.9  # exchange ramps up
    np.testing.assert_allclose(np.array(bs) + np.array(js), 1.0, atol=1e-15)


def test_linear_loses_to_optimal_switch_times():
    tau = 0.9
    linear_err = error(evolve(initial_state(-1), linear_protocol(tau, 200)))
    optimal_err = optimize_bang_bang(tau).best_error
    assert linear_err > optimal_err


def test_linear_approaches_adiabatic_limit():
    tau = 20.0
    err = error(evolve(initial_state(-1), linear_protocol(tau, 2000)))
    assert err < 0.05
    # Oracle: a finer discretization gives the same number, so the 2000
    # segments already resolve the ramp.
    err_fine = error(evolve(initial_state(-1), linear_protocol(tau, 4000)))
    assert abs(err - err_fine) < 1e-3


def test_linear_requires_segments():
    with pytest.raises(ValidationError):
        linear_protocol(1.0, 0)


# ---------------------------------------------------------------------
# Bang-bang expansion
# ---------------------------------------------------------------------


def test_bang_bang_constant_pulse():
    p = bang_bang_protocol(BangBangParams(tau=0.2, t_b=0.0, t_j=0.2))
    assert p.segments == (Segment(0.2, 1.0, 1.0),)


def test_bang_bang_two_segments():
    t_b = 0.8 - 0.40774
    p = bang_bang_protocol(BangBangParams(tau=0.8, t_b=t_b, t_j=0.8))
    assert p.n_segments == 2
    first, second = p.segments
    assert first == Segment(pytest.approx(0.39226), 0.0, 1.0)
    assert second == Segment(pytest.approx(0.40774), 1.0, 1.0)


def test_bang_bang_exchange_off_before_field_on():
    p = bang_bang_protocol(BangBangParams(tau=1.0, t_b=0.5, t_j=0.25))
    assert p.n_segments == 3
    assert p.segments[0] == Segment(0.25, 0.0, 1.0)
    assert p.segments[1] == Segment(0.25, 0.0, 0.0)
    assert p.segments[2] == Segment(0.5, 1.0, 0.0)


def test_bang_bang_switch_times_validated():
    with pytest.raises(ValidationError):
        BangBangParams(tau=0.5, t_b=0.6, t_j=0.5)
    with pytest.raises(ValidationError):
        BangBangParams(tau=0.5, t_b=0.2, t_j=-0.1)


# ---------------------------------------------------------------------
# Refinement and continuity
# ---------------------------------------------------------------------


def test_refinement_consistency():
    psi0 = initial_state(-1)
    for _ in range(10):
        n = int(RNG.integers(1, 8))
        tau = float(RNG.uniform(0.1, 1.5))
        values = [tuple(v) for v in RNG.uniform(0.0, 1.0, (n, 2))]
        coarse = make_pwc(tau, values)
        fine = make_pwc(tau, [v for v in values for _ in range(2)])
        out_coarse = evolve(psi0, coarse)
        out_fine = evolve(psi0, fine)
        np.testing.assert_allclose(out_coarse, out_fine, atol=1e-12)


def test_bang_bang_evolution_is_continuous_in_switch_times():
    psi0 = initial_state(-1)
    delta = 1e-6
    base = BangBangParams(tau=0.75, t_b=0.3, t_j=0.6)
    ref = evolve(psi0, bang_bang_protocol(base))
    for bumped in (
        BangBangParams(tau=0.75, t_b=0.3 + delta, t_j=0.6),
        BangBangParams(tau=0.75, t_b=0.3, t_j=0.6 + delta),
    ):
        out = evolve(psi0, bang_bang_protocol(bumped))
        assert np.linalg.norm(out - ref) / delta < 10.0


# ---------------------------------------------------------------------
# JSON wire format
# ---------------------------------------------------------------------


def test_protocol_json_roundtrip():
    p = bang_bang_protocol(BangBangParams(tau=0.75, t_b=0.3, t_j=0.6), case=-1)
    doc = protocol_to_dict(p)
    assert doc["case"] == "-1"
    assert set(doc) == {"tau", "case", "segments"}
    assert set(doc["segments"][0]) == {"dt", "b", "j"}
    assert protocol_from_dict(doc) == p


def test_protocol_json_plus_case():
    p = make_pwc(1.0, [(0.5, 0.5)], case=1)
    doc = protocol_to_dict(p)
    assert doc["case"] == "+1"
    assert protocol_from_dict(doc) == p


def test_protocol_from_dict_rejects_malformed():
    with pytest.raises(ValidationError):
        protocol_from_dict({"tau": 1.0})
    with pytest.raises(ValidationError):
        protocol_from_dict({"tau": 1.0, "case": "-1", "segments": [{"dt": 1.0}]})
