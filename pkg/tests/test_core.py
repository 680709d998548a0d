import math

import numpy as np
import pytest

from twohop.core import (SOURCE, RELAY, EnergyProfile, Instance, Policy, RateFunctionSpec,
                         canonicalize, check_feasibility, check_optimality_properties,
                         evaluate_policy, make_instance, normalize)
from twohop.exceptions import InvalidInstanceError, PreconditionViolatedError

LN3_HALF = 0.5 * math.log(3)


def test_normalize_identity():
    inst = make_instance(1, [(0, 1)], [(0, 2)])
    assert normalize(inst) == inst


def test_normalize_scales_by_squared_gain():
    inst = make_instance(1, [(0, 1)], [(0, 8), (0.5, 4)], gains=(2, 0.5))
    out = normalize(inst)
    assert out.gains == (1.0, 1.0)
    assert out.source.arrivals == ((0.0, 4.0),)
    assert out.relay.arrivals == ((0.0, 2.0), (0.5, 1.0))


@pytest.mark.parametrize("gains", [(0, 1), (1, -1)])
def test_normalize_rejects_bad_gain(gains):
    with pytest.raises(InvalidInstanceError):
        normalize(make_instance(1, [(0, 1)], [(0, 1)], gains=gains))


@pytest.mark.parametrize("src", [[(0, 0)], [(0.1, 1)], [(0, 1), (1, 1)], [(0, 1), (0.5, -1)]])
def test_bad_profiles_rejected(src):
    with pytest.raises(InvalidInstanceError):
        make_instance(1, src, [(0, 1)])


def test_empty_profile_rejected():
    with pytest.raises(InvalidInstanceError):
        EnergyProfile(())


def test_custom_table_rate():
    rate = RateFunctionSpec("custom-table", ((0, 0), (1, 1), (3, 2)))
    assert rate(2.0) == pytest.approx(1.5)
    assert rate(5.0) == pytest.approx(3.0)
    assert rate.data(2.0, 2.0) == pytest.approx(2.0)
    with pytest.raises(InvalidInstanceError):
        RateFunctionSpec("custom-table", ((0, 0), (1, 1), (2, 3)))


def test_rate_data_nan_and_zero_duration():
    out = RateFunctionSpec().data(np.array([1.0, 1.0, 1.0]), np.array([1.0, 0.0, np.nan]))
    assert out[0] == pytest.approx(math.log(2))
    assert out[1] == 0.0
    assert math.isnan(out[2])


def _half_half():
    inst = make_instance(1, [(0, 1)], [(0, 1)])
    pol = Policy.from_tuples([(SOURCE, 2, 0.5), (RELAY, 2, 0.5)])
    return inst, pol


def test_evaluate_constant_powers():
    inst, pol = _half_half()
    c = evaluate_policy(inst, pol)
    assert c.B_s[-1] == pytest.approx(LN3_HALF, abs=1e-15)
    assert c.throughput == pytest.approx(LN3_HALF, abs=1e-15)
    assert np.all(np.diff(c.B_s) >= 0) and np.all(np.diff(c.E_r) >= 0)


def test_evaluate_zero_power():
    inst = make_instance(1, [(0, 1)], [(0, 1)])
    pol = Policy.from_tuples([(SOURCE, 0, 0.5), (RELAY, 0, 0.5)])
    assert evaluate_policy(inst, pol).throughput == 0.0


def test_feasible_exact_budget():
    inst, pol = _half_half()
    assert check_feasibility(inst, pol).feasible


def test_reversed_segments_violate_data_causality():
    inst, _ = _half_half()
    pol = Policy.from_tuples([(RELAY, 2, 0.5), (SOURCE, 2, 0.5)])
    rep = check_feasibility(inst, pol)
    assert not rep.feasible
    v = [v for v in rep.violations if v.kind == "data-causality"]
    assert v[0].time == pytest.approx(0.5)
    assert v[0].magnitude == pytest.approx(LN3_HALF, abs=1e-12)


def test_energy_causality_violation():
    inst = make_instance(2, [(0, 1), (1, 1)], [(0, 1)])
    # 1.5 J spent by t=1, only 1 J arrived before it
    pol = Policy.from_tuples([(SOURCE, 1.5, 1.0), (RELAY, 1.0, 1.0)])
    rep = check_feasibility(inst, pol)
    v = [v for v in rep.violations if v.kind == "energy-causality-source"]
    assert len(v) == 1
    assert v[0].time == 1.0
    assert v[0].magnitude == pytest.approx(0.5)


def test_duration_violation():
    inst, _ = _half_half()
    rep = check_feasibility(inst, Policy.from_tuples([(SOURCE, 2, 0.5)]))
    assert "duration" in rep.kinds()


def test_symmetric_policy_passes_all_properties():
    inst = make_instance(10, [(0, 5)], [(0, 5)])
    pol = Policy.from_tuples([(SOURCE, 1, 5), (RELAY, 1, 5)])
    rep = check_optimality_properties(inst, pol)
    assert rep.passed, str(rep)


def test_decreasing_source_power_flagged():
    inst = make_instance(2, [(0, 3.5)], [(0, 0.05)])
    pol = Policy.from_tuples([(SOURCE, 3, 1), (RELAY, 0.1, 0.5), (SOURCE, 1, 0.5)])
    assert check_feasibility(inst, pol).feasible
    rep = check_optimality_properties(inst, pol)
    assert "monotone-power" in rep.failures()


def test_properties_need_feasible_policy():
    inst, _ = _half_half()
    with pytest.raises(PreconditionViolatedError):
        check_optimality_properties(inst, Policy.from_tuples([(RELAY, 2, 0.5), (SOURCE, 2, 0.5)]))


def test_canonicalize_merges_equal_levels():
    pol = Policy.from_tuples([(SOURCE, 1, 1), (SOURCE, 1, 2), (RELAY, 2, 1)])
    c = canonicalize(pol)
    assert len(c.segments) == 2
    assert c.segments[0].duration == 3
    assert canonicalize(c) == c


def test_instance_rejects_arrival_at_deadline():
    with pytest.raises(InvalidInstanceError):
        Instance(1.0, EnergyProfile(((0.0, 1.0), (1.0, 1.0))), EnergyProfile(((0.0, 1.0),)))
