import numpy as np
import pytest
from dataclasses import replace

from dnls_nnn.homoclinic import (
    MatchFailure,
    det_curve_fit,
    multistart_search,
    newton_match,
    scan_parameters,
    symmetric_search,
    transversality_det,
)
from dnls_nnn.manifold import evaluate_series, rescale_series
from dnls_nnn.maps import apply_symmetry

from conftest import POINT_ILL


def _matches_reference(point, tol=1e-8):
    # solutions come in +/- pairs; compare modulo the sign symmetry
    return min(np.max(np.abs(point - POINT_ILL)),
               np.max(np.abs(point + POINT_ILL))) <= tol


def test_symmetric_search_finds_the_mirror_pair(sols_ill):
    assert len(sols_ill) == 2
    for sol in sols_ill:
        assert sol.residual <= 1e-10
        assert _matches_reference(sol.point)
    assert np.max(np.abs(sols_ill[0].point + sols_ill[1].point)) <= 1e-10


def test_solutions_lie_on_both_series(pair_ill, sols_ill):
    Ps, Pu = pair_ill
    for sol in sols_ill:
        qu = evaluate_series(Pu, sol.u1, sol.v1)
        qs = evaluate_series(Ps, sol.u2, sol.v2)
        assert np.linalg.norm(qu - qs) <= sol.residual + 1e-15
        assert np.max(np.abs(0.5 * (qu + qs) - sol.point)) <= 1e-15


def test_symmetric_point_is_a_palindrome(sols_ill):
    # the matched image lies on the fixed set of the coordinate reversal
    for sol in sols_ill:
        assert np.max(np.abs(apply_symmetry("sigma5", sol.point) - sol.point)) \
            <= 1e-10


def test_newton_match_reconverges_from_perturbed_seed(pair_ill, sols_ill):
    Ps, Pu = pair_ill
    ref = sols_ill[0]
    seed = (ref.u1 + 1e-3, ref.v1 - 1e-3, ref.u2 + 5e-4, ref.v2 - 2e-4)
    sol = newton_match(Pu, Ps, seed)
    assert np.max(np.abs(sol.point - ref.point)) <= 1e-8
    assert sol.residual <= 1e-10


def test_newton_match_rejects_the_origin(pair_ill):
    Ps, Pu = pair_ill
    with pytest.raises(MatchFailure) as err:
        newton_match(Pu, Ps, (0.0, 0.0, 0.0, 0.0))
    assert err.value.reason == "trivial-solution"


def test_newton_match_rejects_out_of_box_guess(pair_ill):
    Ps, Pu = pair_ill
    with pytest.raises(MatchFailure) as err:
        newton_match(Pu, Ps, (1.2, 0.0, 0.0, 0.0))
    assert err.value.reason == "left-box"


def test_newton_match_reports_unreachable_threshold(pair_ill, sols_ill):
    Ps, Pu = pair_ill
    ref = sols_ill[0]
    with pytest.raises(MatchFailure) as err:
        newton_match(Pu, Ps, (ref.u1, ref.v1, ref.u2, ref.v2), threshold=1e-30)
    assert err.value.reason == "above-threshold"


def test_multistart_recovers_the_symmetric_pair(pair_ill, sols_ill):
    Ps, Pu = pair_ill
    sols = multistart_search(Pu, Ps)
    assert len(sols) >= 2
    for ref in sols_ill:
        dists = [np.max(np.abs(s.point - ref.point)) for s in sols]
        assert min(dists) <= 1e-8
    # image-space dedupe leaves distinct points only
    for i, a in enumerate(sols):
        for b in sols[i + 1:]:
            assert np.linalg.norm(a.point - b.point) > 1e-8


def test_transversality_det_is_bounded_away_from_zero(pair_ill, sols_ill):
    Ps, Pu = pair_ill
    dets = [transversality_det(Pu, Ps, sol) for sol in sols_ill]
    for d in dets:
        assert abs(d) > 1e-6
    # the tangent Jacobians are even in the parameters, so mirror images
    # carry the same determinant
    assert dets[0] == pytest.approx(dets[1], rel=1e-9)


def test_transversality_det_gauge_sign_invariance(pair_ill, sols_ill):
    Ps, Pu = pair_ill
    sol = sols_ill[0]
    d0 = transversality_det(Pu, Ps, sol)
    Ps2 = rescale_series(Ps, (-Ps.scale[0], -Ps.scale[1]))
    Pu2 = rescale_series(Pu, (-Pu.scale[0], -Pu.scale[1]))
    sol2 = replace(sol, u1=-sol.u1, v1=-sol.v1, u2=-sol.u2, v2=-sol.v2)
    assert np.max(np.abs(evaluate_series(Pu2, sol2.u1, sol2.v1)
                         - evaluate_series(Pu, sol.u1, sol.v1))) < 1e-14
    assert transversality_det(Pu2, Ps2, sol2) == pytest.approx(d0, rel=1e-9)


def test_transversality_det_vanishes_for_repeated_columns(pair_ill, sols_ill):
    Ps, _ = pair_ill
    sol = sols_ill[0]
    fake = replace(sol, u1=sol.u2, v1=sol.v2)
    assert abs(transversality_det(Ps, Ps, fake)) < 1e-12


def test_det_curve_fit_recovers_synthetic_roots():
    coeffs = np.array([80.64, 33.74, 5.272, 0.3682, 0.009737])
    A = np.linspace(-0.145, -0.115, 13)
    fit = det_curve_fit(A, np.polyval(coeffs, A))
    assert not fit.ill_conditioned
    true_roots = np.roots(coeffs)
    true_real = np.sort(true_roots[np.abs(true_roots.imag) < 1e-10].real)
    for r in true_real:
        assert np.min(np.abs(fit.roots - r)) < 1e-5, r


def test_det_curve_fit_flags_underdetermined_data():
    A = np.array([-0.14, -0.13, -0.12])
    fit = det_curve_fit(A, np.zeros(3) + 3.7, degree=4)
    assert fit.ill_conditioned


def test_scan_records_errors_and_continues():
    cells = scan_parameters([0.0004], [0.0, -0.125])
    assert len(cells) == 2
    bad, good = cells
    assert bad.A == 0.0 and not bad.found and bad.error is not None
    assert "ValueError" in bad.error
    assert good.found and good.best_residual <= 1e-10
    assert good.solution.det is not None and abs(good.solution.det) > 1e-6
    assert _matches_reference(good.solution.point)


def test_scan_empty_when_no_intersection_exists():
    cells = scan_parameters([-0.1], [-0.125])
    assert len(cells) == 1
    assert not cells[0].found and cells[0].error is None


def test_scan_worker_pool_matches_serial():
    eps, As = [0.0004], [-0.125, -0.13]
    serial = scan_parameters(eps, As)
    pooled = scan_parameters(eps, As, workers=2)
    assert len(serial) == len(pooled) == 2
    for a, b in zip(serial, pooled):
        assert (a.epsilon, a.A, a.found) == (b.epsilon, b.A, b.found)
        assert a.best_residual == pytest.approx(b.best_residual, rel=1e-12)
        assert np.allclose(a.solution.point, b.solution.point, rtol=1e-12)
        assert a.solution.det == pytest.approx(b.solution.det, rel=1e-9)
