import math

import numpy as np
import pytest

from twohop.core import (RELAY, SOURCE, EnergyProfile, check_feasibility,
                         check_optimality_properties, evaluate_policy, make_instance)
from twohop.exceptions import UnsupportedInstanceError
from twohop.oracle import grid_oracle
from twohop.single_link import single_link_data
from twohop.solver import (R1, R2, R3, R4, S1, S2, classify_source_region,
                           r1_relay_consumption, solve, solve_m1, solve_r1)

LN2 = math.log(2)

# one instance per region branch (T=1), found by scanning seeded random draws
BRANCHES = {
    "R1 lumped split": ([(0, 2.976248), (0.537937, 1.272486)],
                        [(0, 2.380668), (0.517296, 3.391492)]),
    "R1 empty-buffer split": ([(0, 0.015621), (0.267044, 7.321259)],
                              [(0, 1.082955), (0.036148, 1.613647)]),
    "R2 merged p_r2=p_r3": ([(0, 4.287332), (0.936104, 1.616469)],
                            [(0, 0.169189), (0.614821, 4.553892)]),
    "R2 empty-buffer split": ([(0, 0.096374), (0.872429, 2.930307)],
                              [(0, 0.076868), (0.829981, 4.825001)]),
    "R3 separate relay epochs": ([(0, 3.621436), (0.964302, 0.079255)],
                                 [(0, 1.249789), (0.970471, 0.222149)]),
    "R4 merged p_r1=p_r2": ([(0, 2.603683), (0.072274, 3.091310)],
                            [(0, 0.085659), (0.932518, 2.648234)]),
    "R4 empty-buffer split": ([(0, 3.918806), (0.676449, 10.456479)],
                              [(0, 2.865044), (0.905738, 2.816400)]),
    "single source epoch": ([(0, 1.480566), (0.126248, 1.265074)],
                            [(0, 0.712070), (0.181145, 1.025554)]),
}


def fig5(ts1, es0=5.0):
    return make_instance(10, [(0, es0), (ts1, 5)], [(0, 5), (8, 5)])


def data(e, d):
    return d * math.log1p(e / d)


def test_m1_symmetric():
    xi, pol = solve_m1(5.0, EnergyProfile(((0.0, 5.0),)), 10.0)
    assert xi == pytest.approx(5.0, abs=1e-9)
    assert [s.power for s in pol.segments] == pytest.approx([1.0, 1.0])
    inst = make_instance(10, [(0, 5)], [(0, 5)])
    assert evaluate_policy(inst, pol).throughput == pytest.approx(5 * LN2, abs=1e-9)


def test_m1_crossing_matches_scan():
    relay = EnergyProfile(((0.0, 2.5), (8.0, 2.5)))
    xi, pol = solve_m1(5.0, relay, 10.0)
    xs = np.arange(1e-5, 10, 1e-5)
    h = np.array([data(5.0, x) - single_link_data(relay, x, 10.0) for x in xs[::100]])
    # coarse pass locates the sign change, fine pass pins it to 1e-5
    k = int(np.nonzero(np.diff(np.sign(h)))[0][0]) * 100
    fine = xs[k:k + 101]
    hf = np.array([data(5.0, x) - single_link_data(relay, x, 10.0) for x in fine])
    j = int(np.nonzero(np.diff(np.sign(hf)))[0][0])
    assert fine[j] <= xi <= fine[j + 1]
    inst = make_instance(10, [(0, 5)], [(0, 2.5), (8, 2.5)])
    assert check_optimality_properties(inst, pol).passed


def test_m1_vanishing_source():
    relay = EnergyProfile(((0.0, 1.0),))
    # source data is at most E, so the relay window has to close: xi -> T
    prev = 0.0
    for e in (1e-2, 1e-4, 1e-6):
        xi, pol = solve_m1(e, relay, 1.0)
        assert prev < xi < 1.0
        prev = xi
    assert 1.0 - xi < 1e-4
    inst = make_instance(1, [(0, 1e-6)], [(0, 1.0)])
    assert evaluate_policy(inst, pol).throughput < 1e-5


def test_source_region_early_second_arrival():
    inst = make_instance(10, [(0, 5), (1e-6, 5)], [(0, 5), (8, 5)])
    assert classify_source_region(inst)[0] == S1


def test_source_region_boundary_is_s1():
    _, xi = classify_source_region(fig5(5.0))
    # place t_s1 so that the corner lies exactly on the line through the origin
    ts = 5.0 * xi / 10.0
    assert classify_source_region(fig5(ts))[0] == S1
    assert classify_source_region(fig5(ts * 1.001))[0] == S2


def test_source_region_late_arrival():
    inst = fig5(9.0)
    relay = inst.relay
    xs = np.arange(1e-5, 10, 1e-5)
    h = np.array([data(10.0, x) - single_link_data(relay, x, 10.0) for x in xs[::100]])
    k = int(np.nonzero(np.diff(np.sign(h)))[0][0]) * 100
    fine = xs[k:k + 101]
    hf = np.array([data(10.0, x) - single_link_data(relay, x, 10.0) for x in fine])
    xi_scan = fine[int(np.nonzero(np.diff(np.sign(hf)))[0][0])]
    expected = S1 if 10.0 / xi_scan <= 5.0 / 9.0 else S2
    label, xi = classify_source_region(inst)
    assert abs(xi - xi_scan) <= 1e-5
    assert label == expected == S2


def test_r3_r4_printed_inequality():
    lhs, rhs = data(5, 3), data(5, 2)
    assert lhs == pytest.approx(3 * math.log(8 / 3))
    assert rhs == pytest.approx(2 * math.log(3.5))
    # 3 ln(8/3) = 2.942488...; the quoted 2.94244 is off in the fifth decimal
    assert lhs == pytest.approx(2.94244, abs=1e-4) and rhs == pytest.approx(2.50553, abs=1e-5)
    assert lhs > rhs
    sol = solve(fig5(5.0))
    assert sol.label.relay_region == R4
    ref = grid_oracle(fig5(5.0))
    assert abs(sol.throughput - ref.throughput) <= 5e-3 * sol.throughput
    assert sol.throughput >= ref.throughput - 1e-9


def test_all_relay_energy_initial_is_r1():
    inst = make_instance(10, [(0, 4), (5, 1)], [(0, 5 - 1e-9), (8, 1e-9)])
    assert solve(inst).label == type(solve(inst).label)(S2, R1)


def test_r1_symmetric_totals():
    inst = make_instance(10, [(0, 4), (5, 1)], [(0, 4), (5, 1)])
    sol = solve(inst)
    assert sol.label.relay_region == R1 and sol.branch == "R1 lumped split"
    assert sol.unknowns["t"] == pytest.approx(5.0, abs=1e-9)
    assert sol.throughput == pytest.approx(5 * LN2, abs=1e-9)


def test_single_arrivals_reduce_to_m1():
    sol = solve(make_instance(10, [(0, 5)], [(0, 5)]))
    assert sol.label.source_region == S1
    assert sol.unknowns["xi_s1"] == pytest.approx(5.0, abs=1e-9)


def test_unsupported_three_arrivals():
    with pytest.raises(UnsupportedInstanceError):
        solve(make_instance(1, [(0, 1), (0.3, 1), (0.6, 1)], [(0, 1)]))


@pytest.mark.parametrize("branch", list(BRANCHES))
def test_branch_instances(branch):
    src, rel = BRANCHES[branch]
    inst = make_instance(1, src, rel)
    sol = solve(inst)
    assert sol.branch == branch
    assert check_feasibility(inst, sol.policy).feasible
    assert check_optimality_properties(inst, sol.policy).passed
    for k, r in sol.residuals.items():
        assert r <= 1e-8, k
    ref = grid_oracle(inst)
    assert sol.throughput >= ref.throughput - 1e-9
    assert sol.throughput <= ref.throughput * (1 + 5e-3)


def _relay_used_by(inst, pol, t):
    c = evaluate_policy(inst, pol)
    return float(np.interp(t, c.times, c.E_r))


def test_r2_relay_empties_at_its_arrival():
    for branch in ("R2 merged p_r2=p_r3", "R2 empty-buffer split"):
        src, rel = BRANCHES[branch]
        inst = make_instance(1, src, rel)
        sol = solve(inst)
        tr, er0 = inst.relay.times[1], inst.relay.amounts[0]
        assert _relay_used_by(inst, sol.policy, tr) == pytest.approx(er0, abs=1e-9)


def test_r2_branch_b_empty_buffer_at_ts1():
    src, rel = BRANCHES["R2 empty-buffer split"]
    inst = make_instance(1, src, rel)
    sol = solve(inst)
    c = evaluate_policy(inst, sol.policy)
    ts = inst.source.times[1]
    bs, br = np.interp(ts, c.times, c.B_s), np.interp(ts, c.times, c.B_r)
    assert abs(bs - br) <= 1e-8 * bs


def test_r3_buffer_and_depletion():
    src, rel = BRANCHES["R3 separate relay epochs"]
    inst = make_instance(1, src, rel)
    sol = solve(inst)
    ts = inst.source.times[1]
    c = evaluate_policy(inst, sol.policy)
    # end of relay epoch 1 is t_s1: battery empty, data still buffered
    assert np.interp(ts, c.times, c.E_r) == pytest.approx(inst.relay.amounts[0], abs=1e-9)
    assert np.interp(ts, c.times, c.B_s) - np.interp(ts, c.times, c.B_r) > 1e-6
    assert c.E_r[-1] == pytest.approx(inst.relay.total, abs=1e-9)


def test_r4_merged_relay_powers_rise():
    src, rel = BRANCHES["R4 merged p_r1=p_r2"]
    sol = solve(make_instance(1, src, rel))
    ps = [p for p, _ in sol.policy.levels(RELAY)]
    assert all(b >= a for a, b in zip(ps, ps[1:]))


def test_r2_continuous_across_r1_boundary():
    src = [(0, 2.976248), (0.537937, 1.272486)]
    total, tr = 5.77216, 0.5
    inst = make_instance(1, src, [(0, total / 2), (tr, total / 2)])
    r1 = solve_r1(inst)
    used = r1_relay_consumption(inst, r1)
    e0 = used * (1 - 1e-7)
    sol = solve(make_instance(1, src, [(0, e0), (tr, total - e0)]))
    assert sol.label.relay_region == R2
    assert sol.branch == "R2 merged p_r2=p_r3"
    assert abs(sol.throughput - r1.throughput) <= 1e-6


def test_tie_at_equal_second_arrivals_is_not_r2():
    inst = make_instance(10, [(0, 5), (6, 5)], [(0, 5), (6, 5)])
    sol = solve(inst)
    assert sol.label.relay_region != R2


@pytest.mark.parametrize("ts1", range(1, 10))
def test_fig5_samples_match_oracle(ts1):
    inst = fig5(float(ts1))
    sol = solve(inst)
    ref = grid_oracle(inst)
    assert sol.throughput >= ref.throughput - 1e-9
    assert sol.throughput <= ref.throughput * (1 + 5e-3)


def test_gains_are_folded_in():
    a = solve(make_instance(1, [(0, 1), (0.5, 1)], [(0, 4), (0.5, 4)], gains=(1, 2)))
    b = solve(make_instance(1, [(0, 1), (0.5, 1)], [(0, 16), (0.5, 16)]))
    assert a.throughput == pytest.approx(b.throughput, rel=1e-12)


def test_r3_solution_has_both_nodes():
    src, rel = BRANCHES["R3 separate relay epochs"]
    sol = solve(make_instance(1, src, rel))
    assert sol.policy.levels(SOURCE) and sol.policy.levels(RELAY)
    assert sol.label.relay_region == R3
