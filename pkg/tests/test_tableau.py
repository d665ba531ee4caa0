"""Tableau structure, order conditions, stability margins and search"""

import numpy as np
import pytest

from llg_imex.errors import InvalidTableauError, TableauSearchError, UnsupportedTableauError
from llg_imex.models.tableau import (
    BUILTIN_ORDER_TOL, ImexTableau, is_admissible, max_order_residual, order_residuals,
    paper_tableau, search_tableau, stability_margins, validate_structure,
)

BUILTIN_MARGINS = (0.06825992, 0.10528603, 0.01284959)


def _uniform_diagonal_tableau(gamma):
    a = [
        [0.0, 0.0, 0.0, 0.0],
        [0.0, gamma, 0.0, 0.0],
        [0.0, gamma, gamma, 0.0],
        [0.0, gamma, gamma, gamma],
    ]
    at = np.tril(np.full((4, 4), 0.25), k=-1)
    return ImexTableau.from_coefficients(a, at, b=a[3])


# ============================================================
# Paper tableau
# ============================================================

def test_builtin_weights_sum_to_one():
    t = paper_tableau()
    assert abs(np.sum(t.b) - 1.0) <= 1e-8 * (1 + 1e-6)


def test_builtin_row_sum_c3():
    t = paper_tableau()
    assert abs(t.a_implicit[2, 1] + t.a_implicit[2, 2] - t.c[2]) <= 1e-7


def test_builtin_second_order_weight():
    t = paper_tableau()
    assert float(np.dot(t.b, t.c)) == pytest.approx(0.5, abs=1e-7)


def test_builtin_structure_passes():
    report = validate_structure(paper_tableau())
    assert report.passed
    assert report.max_residual <= 1e-7


def test_builtin_order_residuals():
    residuals = order_residuals(paper_tableau(), 3)
    # b = b_tilde and c = c_tilde leave five independent conditions
    assert len(residuals) == 5
    assert {r.order for r in residuals} == {1, 2, 3}
    assert all(r.residual <= BUILTIN_ORDER_TOL for r in residuals)


def test_unshared_weights_keep_all_conditions():
    t = paper_tableau()
    shifted = t.with_changes(b_tilde=np.array(t.b) + np.array([0.0, 1e-3, -1e-3, 0.0]))
    assert len(order_residuals(shifted, 3)) == 20
    assert len(order_residuals(shifted, 2)) == 6


def test_builtin_margins():
    margins = stability_margins(paper_tableau())
    np.testing.assert_allclose(margins.as_tuple(), BUILTIN_MARGINS, atol=1e-8)
    assert margins.admissible


# ============================================================
# Degenerate tableaux
# ============================================================

def test_degenerate_four_stage_weights():
    zeros = np.zeros((4, 4))
    t = ImexTableau.from_coefficients(zeros, zeros, b=[1.0, 0.0, 0.0, 0.0])
    residuals = {r.name: r.residual for r in order_residuals(t, 2)}
    assert residuals["sum b"] == 0.0
    assert residuals["b*c"] == pytest.approx(0.5)


def test_forward_euler_pair():
    t = ImexTableau.from_coefficients([[0.0]], [[0.0]], b=[1.0])
    first = [r for r in order_residuals(t, 2) if r.order == 1]
    second = [r for r in order_residuals(t, 2) if r.order == 2]
    assert all(r.residual == 0.0 for r in first)
    assert all(r.residual == pytest.approx(0.5) for r in second)


def test_order_residuals_rejects_upper_explicit_entry():
    t = paper_tableau()
    at = np.array(t.a_explicit)
    at[0, 3] = 0.1
    with pytest.raises(InvalidTableauError):
        order_residuals(t.with_changes(a_explicit=at), 1)


# ============================================================
# Stability margins
# ============================================================

def test_uniform_diagonal_margins():
    margins = stability_margins(_uniform_diagonal_tableau(0.4))
    np.testing.assert_allclose(margins.as_tuple(), (0.8, 0.8, 0.8), atol=1e-15)


def test_large_a32_is_inadmissible():
    t = paper_tableau()
    a = np.array(t.a_implicit)
    a[2, 1] = a[1, 1] + 3 * a[1, 1]
    margins = stability_margins(t.with_changes(a_implicit=a))
    assert margins.m2 < 0
    assert not margins.admissible


def test_margins_match_raw_formula():
    a = paper_tableau().a_implicit
    a22, a32, a33, a42, a43, a44 = a[1, 1], a[2, 1], a[2, 2], a[3, 1], a[3, 2], a[3, 3]
    expected = (
        2 * a22 - abs(a32 - a22) - abs(a42 - a32),
        2 * a33 - abs(a32 - a22) - abs(a43 - a33),
        2 * a44 - abs(a42 - a32) - abs(a43 - a33),
    )
    np.testing.assert_allclose(stability_margins(paper_tableau()).as_tuple(), expected, atol=1e-15)


def test_scaling_last_diagonal_shifts_only_m4():
    t = paper_tableau()
    base = stability_margins(t)
    lam = 1.5
    a = np.array(t.a_implicit)
    a[3, 3] *= lam
    scaled = stability_margins(t.with_changes(a_implicit=a))
    assert scaled.m4 - base.m4 == pytest.approx(2 * (lam - 1) * t.a_implicit[3, 3], abs=1e-15)
    assert scaled.m2 == base.m2
    assert scaled.m3 == base.m3


def test_margins_need_four_stages():
    t = ImexTableau.from_coefficients([[0.0]], [[0.0]], b=[1.0])
    with pytest.raises(UnsupportedTableauError):
        stability_margins(t)
    assert not is_admissible(t)


# ============================================================
# Structure validation
# ============================================================

def test_upper_explicit_entry_fails_structure():
    t = paper_tableau()
    at = np.array(t.a_explicit)
    at[1, 2] = 0.2
    report = validate_structure(t.with_changes(a_explicit=at))
    assert not report.passed
    assert report.check("explicit strictly lower triangular").message == "not strictly lower triangular"


def test_row_sum_mismatch_reports_residual():
    t = paper_tableau()
    c = np.array(t.c)
    c[3] += 0.1
    report = validate_structure(t.with_changes(c=c, c_tilde=c))
    check = report.check("implicit row sums")
    assert not check.passed
    assert check.residual == pytest.approx(0.1, abs=1e-7)


def test_negative_diagonal_fails_structure():
    t = paper_tableau()
    a = np.array(t.a_implicit)
    a[2, 2] = -a[2, 2]
    assert not validate_structure(t.with_changes(a_implicit=a)).passed


# ============================================================
# Search
# ============================================================

def test_search_from_builtin_start_stays_close():
    start = paper_tableau()
    found = search_tableau(seed=7, tol=1e-10, initial=start)
    assert max_order_residual(found, 3) < 1e-10
    assert stability_margins(found).admissible
    assert validate_structure(found).passed
    np.testing.assert_allclose(found.a_implicit, start.a_implicit, atol=1e-6)
    np.testing.assert_allclose(found.a_explicit, start.a_explicit, atol=1e-6)


def test_search_is_deterministic():
    first = search_tableau(seed=3, tol=1e-10, initial=paper_tableau())
    second = search_tableau(seed=3, tol=1e-10, initial=paper_tableau())
    np.testing.assert_array_equal(first.a_implicit, second.a_implicit)


def test_search_budget_exhaustion():
    with pytest.raises(TableauSearchError):
        search_tableau(seed=1, tol=1e-12, max_restarts=1, max_nfev=1)


def test_search_rejects_nonpositive_tolerance():
    with pytest.raises(ValueError):
        search_tableau(seed=1, tol=0.0)
