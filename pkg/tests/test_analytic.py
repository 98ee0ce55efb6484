import numpy as np
import pytest

from offsim.analytic import (atax_total, axpy_total, compose, estimate,
                             phase_e_axpy, phase_f_axpy, phase_g,
                             relative_error, speedup_metrics)

TOL = 1e-9

# frozen evaluations of the closed forms
AXPY_TOTALS = {(1, 1024): 972.16, (8, 1024): 695.52, (32, 1024): 665.88}
ATAX_TOTALS = {(1, 64, 64): 17411.28, (2, 64, 64): 17919.68}


def test_axpy_phase_formulas_frozen():
    assert phase_e_axpy(1024) == pytest.approx(364.0, abs=TOL)
    assert phase_e_axpy(64) == pytest.approx(124.0, abs=TOL)
    assert phase_f_axpy(1, 1024) == pytest.approx(243.16, abs=TOL)
    assert phase_f_axpy(32, 1024) == pytest.approx(60.88, abs=TOL)
    assert phase_g(1, 1024) == pytest.approx(204.0, abs=TOL)
    assert phase_g(32, 1024) == pytest.approx(80.0, abs=TOL)


def test_phase_limits_as_size_vanishes():
    # the size-independent parts are the DMA setup/round-trip and init costs
    assert phase_e_axpy(0) == pytest.approx(108.0, abs=TOL)
    assert phase_f_axpy(4, 0) == pytest.approx(55.0, abs=TOL)
    assert phase_g(4, 0) == pytest.approx(76.0, abs=TOL)


def test_totals_frozen():
    for (n, N), want in AXPY_TOTALS.items():
        assert axpy_total(n, N) == pytest.approx(want, abs=TOL)
    for (n, N, M), want in ATAX_TOTALS.items():
        assert atax_total(n, N, M) == pytest.approx(want, abs=TOL)


def test_axpy_total_decreasing_in_n():
    totals = [axpy_total(n, 4096) for n in (1, 2, 4, 8, 16, 32)]
    assert all(a > b for a, b in zip(totals, totals[1:]))


def test_atax_total_has_interior_tradeoff():
    # broadcast grows with n while writeback shrinks: at N=M=64 a single
    # cluster is already optimal and larger n only adds traffic
    totals = [atax_total(n, 64, 64) for n in (1, 2, 4, 8, 16, 32)]
    assert min(totals) == totals[0]
    assert all(a < b for a, b in zip(totals, totals[1:]))


def test_totals_accept_arrays():
    ns = np.array([1, 8, 32])
    got = axpy_total(ns, 1024)
    want = [AXPY_TOTALS[(1, 1024)], AXPY_TOTALS[(8, 1024)],
            AXPY_TOTALS[(32, 1024)]]
    assert np.allclose(got, want, atol=TOL)


def test_compose():
    assert compose([[3, 5], [10, 2]]) == 15.0
    assert compose([[7.5]]) == 7.5
    assert compose([[4, 4, 4], [1, 1, 1]]) == 5.0


def test_compose_monotone_in_cells():
    m = [[3, 5], [10, 2]]
    bumped = [[3, 5], [11, 2]]
    assert compose(bumped) > compose(m)
    slack = [[3, 5], [10, 9]]  # raising a non-critical cell below the max: no change
    assert compose(slack) == compose(m)


def test_compose_rejects_bad_shapes():
    with pytest.raises(ValueError):
        compose([[1, 2], [3]])
    with pytest.raises(ValueError):
        compose([])
    with pytest.raises(ValueError):
        compose([1, 2, 3])


def test_relative_error():
    assert relative_error(100.0, 100.0) == 0.0
    assert relative_error(1000.0, 850.0) == pytest.approx(0.15)
    assert relative_error(1000.0, 1150.0) == pytest.approx(0.15)
    got = relative_error(np.array([100.0, 200.0]), np.array([90.0, 220.0]))
    assert np.allclose(got, [0.1, 0.1])
    with pytest.raises(ValueError):
        relative_error(0.0, 10.0)


def test_speedup_metrics():
    m = speedup_metrics(1000.0, 500.0, 500.0)
    assert m == (2.0, 2.0, 1.0)
    m = speedup_metrics(2300.0, 1000.0, 1150.0)
    assert m.ideal_speedup == pytest.approx(2.3)
    assert m.ext_speedup == pytest.approx(2.0)
    assert m.restored_fraction == pytest.approx(1000.0 / 1150.0)
    # restored fraction is the ratio of the two speedups by construction
    assert m.restored_fraction == pytest.approx(m.ext_speedup / m.ideal_speedup)
    with pytest.raises(ValueError):
        speedup_metrics(0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        speedup_metrics(1.0, 1.0, -2.0)


def test_estimate_phases_sum_to_total():
    for n in (1, 4, 32):
        est = estimate("axpy", n, {"N": 1024})
        assert sum(est.per_phase.values()) == pytest.approx(est.total, abs=1e-6)
        assert est.total == pytest.approx(axpy_total(n, 1024), abs=TOL)
    est = estimate("atax", 2, {"N": 64, "M": 64})
    assert est.total == pytest.approx(ATAX_TOTALS[(2, 64, 64)], abs=TOL)
    assert est.per_phase["compute"] == pytest.approx(3.98 * 64 * 64)


def test_estimate_record_shape():
    rec = estimate("axpy", 8, {"N": 1024}).to_record()
    assert rec["kernel"] == "axpy" and rec["n_clusters"] == 8
    assert rec["N"] == 1024
    assert rec["total"] == pytest.approx(695.52)
    assert set(rec["phases"]) == {"operand_fetch", "compute", "writeback",
                                  "fixed_protocol"}


def test_estimate_unmodeled_kernel():
    with pytest.raises(KeyError):
        estimate("gemm", 1, {"M": 16, "N": 16, "K": 16})
    with pytest.raises(ValueError):
        estimate("axpy", 0, {"N": 1024})
