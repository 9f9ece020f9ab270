import json
import math

import numpy as np
import pytest

from cktcs.core import make_params
from cktcs.states import Grid, StateSpec, build_state, default_grid, evaluate
from cktcs.verify import (
    BoundaryLeakError,
    BoxTooSmallError,
    VerificationSummary,
    battery,
    box_for_run,
    default_report,
    ehrenfest_check,
    grid_overlap,
    invariant_suite,
    negative_control,
    propagate_oracle,
    residual_suite,
    sampling_ratio,
    schrodinger_residual,
)

GROUND = StateSpec("fock", 0)


def test_summary_contract():
    s = VerificationSummary()
    s.add("a", 1e-13, 1e-12)
    s.add("b", 0.5, 1e-2, lower=True)
    s.add("c", math.nan, 1.0)
    with pytest.raises(KeyError):
        s.add("a", 0, 1)
    assert s.failures == ["c"]
    rows = [json.loads(line) for line in s.to_json_lines().splitlines()]
    assert [r["check"] for r in rows] == ["a", "b", "c"]
    assert s.to_text().splitlines()[-1] == "2/3 checks passed"
    loose = s.with_tolerances({"a": 1e-14, "b": 0.9})
    assert loose.failures == ["a", "b", "c"]
    assert s.checks["a"].passed


def test_residual_undamped_ground(undamped):
    rep = schrodinger_residual(undamped, GROUND, 0.7)
    assert rep.grid.n_points == 4096 and rep.dt == 1e-4
    assert rep.rel_l2 < 1e-6


@pytest.mark.parametrize("b_im", [0.49, 0.98, 1.96])
def test_residual_fock3_damped_t2(b_im):
    p = make_params(1.0, 0.4, 1.0, 1.0, 1j * b_im, 1.0, 0.5)
    assert schrodinger_residual(p, StateSpec("fock", 3), 2.0).rel_l2 < 1e-5


def test_residual_negative_control(damped):
    good = schrodinger_residual(damped, GROUND, 1.0)
    bad = schrodinger_residual(damped, GROUND, 1.0, corrupt_branch=True)
    assert good.rel_l2 < 1e-8 < 1e-2 < bad.rel_l2
    assert negative_control(damped).passed


def test_residual_boundary_leak(damped):
    narrow = Grid(1.0, 2.0, 512)
    with pytest.raises(BoundaryLeakError, match="edge amplitude"):
        schrodinger_residual(damped, GROUND, 0.0, grid=narrow)


def test_residual_spatial_order():
    # strongly damped chirp: the spatial stencil dominates the residual
    p = battery()[6]
    spec = StateSpec("fock", 3)
    g = default_grid(build_state(p, spec, 2.0))
    r = [schrodinger_residual(p, spec, 2.0, grid=Grid(g.center, g.half_width, n)).abs_l2
         for n in (4096, 8192, 16384)]
    ratios = np.array(r[:-1]) / np.array(r[1:])
    assert np.all((ratios > 12) & (ratios < 20))


def test_residual_time_order(damped):
    # second-order difference at a coarse step is dominated by dt**2
    g = default_grid(build_state(damped, GROUND, 1.0), n_points=8192)
    r = [schrodinger_residual(damped, GROUND, 1.0, dt=dt, grid=g, time_order=2).abs_l2
         for dt in (4e-2, 2e-2)]
    assert r[0] / r[1] == pytest.approx(4.0, rel=0.1)


def test_sampling_ratio_flags_chirp():
    p = battery()[12]
    early = build_state(p, GROUND, 0.0)
    late = build_state(p, GROUND, 3.0)
    assert sampling_ratio(early, default_grid(early)) < 0.01
    assert sampling_ratio(late, default_grid(late)) > 1


def test_cn_zero_state_stays_zero(damped):
    g = Grid(0.0, 10.0, 256)
    res = propagate_oracle(damped, np.zeros(256), g, 1.0, 50)
    assert np.all(res.psi == 0) and res.norm_drift == 0


def test_cn_undamped_overlap(undamped):
    g = box_for_run(undamped, GROUND, 1.0)
    psi0 = evaluate(build_state(undamped, GROUND, 0.0), g.points)
    res = propagate_oracle(undamped, psi0, g, 1.0, 2000)
    exact = evaluate(build_state(undamped, GROUND, 1.0), g.points)
    assert abs(grid_overlap(g, exact, res.psi)) > 1 - 1e-6
    assert res.norm_drift < 1e-12


def test_cn_time_convergence(damped):
    g = box_for_run(damped, GROUND, 1.0)
    psi0 = evaluate(build_state(damped, GROUND, 0.0), g.points)
    exact = evaluate(build_state(damped, GROUND, 1.0), g.points)
    err, defect = [], []
    for n in (25, 50, 100):
        psi = propagate_oracle(damped, psi0, g, 1.0, n).psi
        err.append(math.sqrt(np.sum(np.abs(psi - exact) ** 2) * g.spacing))
        defect.append(1 - abs(grid_overlap(g, exact, psi)))
    np.testing.assert_allclose(np.array(err[:-1]) / err[1:], 4.0, rtol=0.1)
    # the overlap defect is quadratic in the error amplitude
    np.testing.assert_allclose(np.array(defect[:-1]) / defect[1:], 16.0, rtol=0.1)


def test_cn_box_too_small(damped):
    g = Grid(1.0, 3.0, 256)
    psi0 = evaluate(build_state(damped, GROUND, 0.0), g.points)
    with pytest.raises(BoxTooSmallError):
        propagate_oracle(damped, psi0, g, 2.0, 100)


@pytest.mark.parametrize("spec", [GROUND, StateSpec("fock", 2), StateSpec("coherent", alpha=1.0)])
def test_ehrenfest(damped, spec):
    s = ehrenfest_check(damped, spec, np.linspace(0, 6, 7))
    assert s.passed, s.to_text()
    assert max(r.value for k, r in s.checks.items() if k.endswith("mean_x")) < 1e-8


def test_invariants_pass(undamped, overdamped):
    for p in (undamped, overdamped):
        s = invariant_suite(p, np.linspace(0, 5, 4))
        assert s.passed, s.to_text()
        assert "route_equivalence" in s.checks


def test_invariants_detect_broken_skew_product(damped):
    s = invariant_suite(damped, [0.5, 1.5], corrupt_w=1.01)
    assert {"wronskian", "commutator_phase"} <= set(s.failures)
    assert "commutator" not in s.failures


def test_residual_suite_skips_under_resolved():
    s = residual_suite(battery()[12])
    assert s.passed
    assert "6 under-resolved times skipped" in s.checks["residual[fock:0]"].detail


def test_default_report_single_point(damped):
    s = default_report([damped], n_times=3, propagation=False)
    assert s.passed, s.failures
    broken = default_report([damped], n_times=3, propagation=False, corrupt_branch=True)
    assert {"[gamma=0.4,b_im=0.9].residual[fock:0]", "[gamma=0.4,b_im=0.9].residual[fock:3]"} <= set(broken.failures)
