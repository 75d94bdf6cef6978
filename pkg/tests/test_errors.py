"""Error norms, supercloseness distances, and convergence-order fits."""

import numpy as np
import pytest

from oseenstress.errors import ErrorRow, fit_order, fit_orders, hdiv_error, l2_error, supercloseness
from oseenstress.mesh import make_lshape_mesh, make_square_piecewise_uniform
from oseenstress.problems import get_problem
from oseenstress.spaces import PseudostressField, VelocityField, build_space


def zero_velocity(mesh):
    return VelocityField(mesh=mesh, coeffs=np.zeros((2, mesh.nt)))


def zero_pseudostress(mesh, kind="rt0"):
    space = build_space(mesh, kind)
    return PseudostressField(space=space, coeffs=np.zeros((2, space.n_dofs_per_row)))


def test_l2_error_against_analytic_norm():
    # For the zero field the error is the analytic norm of the exact
    # velocity, which integrates to exactly one for this data.
    prob = get_problem("p1")
    coarse = make_square_piecewise_uniform()
    fine = make_square_piecewise_uniform(1)
    assert l2_error(zero_velocity(coarse), prob.exact_u) == pytest.approx(1.0, abs=1e-6)
    assert l2_error(zero_velocity(fine), prob.exact_u) == pytest.approx(1.0, abs=1e-8)


def test_l2_error_vanishes_for_represented_field():
    mesh = make_square_piecewise_uniform()
    field = VelocityField(mesh=mesh, coeffs=np.full((2, mesh.nt), 2.5))
    exact = lambda x: np.broadcast_to([2.5, 2.5], x.shape).copy()
    assert l2_error(field, exact) < 1e-14


def test_l2_error_rejects_wrong_exact_shape():
    mesh = make_square_piecewise_uniform()
    with pytest.raises(ValueError, match="shape"):
        l2_error(zero_velocity(mesh), lambda x: x[..., 0])


def test_corner_graded_quadrature_is_monotone_in_depth():
    # Near-corner integrands of singular problems are underestimated by a
    # fixed-order rule; geometric subdivision toward the corner must
    # strictly increase (and converge) the measured norm.
    prob = get_problem("p2")
    mesh = make_lshape_mesh()
    field = zero_pseudostress(mesh)
    plain = l2_error(field, prob.exact_sigma)
    depth1 = l2_error(field, prob.exact_sigma, singular_corner=(0.0, 0.0), corner_depth=1)
    depth3 = l2_error(field, prob.exact_sigma, singular_corner=(0.0, 0.0), corner_depth=3)
    assert plain < depth1 < depth3
    assert depth3 - plain > 5e-4


def test_corner_grading_ignores_missing_corner():
    # A corner that is not a mesh vertex changes nothing.
    prob = get_problem("p1")
    mesh = make_square_piecewise_uniform()
    field = zero_velocity(mesh)
    a = l2_error(field, prob.exact_u)
    b = l2_error(field, prob.exact_u, singular_corner=(10.0, 10.0))
    assert a == b


def test_hdiv_error_against_analytic_norm():
    prob = get_problem("p1")
    mesh = make_square_piecewise_uniform(1)
    field = zero_pseudostress(mesh)
    exact = float(np.sqrt(4.0 * np.pi**4 + 2.0))
    assert hdiv_error(field, prob.exact_div_sigma) == pytest.approx(exact, rel=1e-8)


def test_supercloseness_exact_norm_and_homogeneity():
    mesh = make_square_piecewise_uniform()
    space = build_space(mesh, "rt0")
    rng = np.random.default_rng(3)
    a = PseudostressField(space=space, coeffs=rng.standard_normal((2, space.n_dofs_per_row)))
    b = PseudostressField(space=space, coeffs=rng.standard_normal((2, space.n_dofs_per_row)))
    d = supercloseness(a, b)
    a2 = PseudostressField(space=space, coeffs=2.0 * a.coeffs)
    b2 = PseudostressField(space=space, coeffs=2.0 * b.coeffs)
    assert supercloseness(a2, b2) == 2.0 * d
    # velocity variant: closed form sqrt(sum area * |da|^2)
    ua = VelocityField(mesh=mesh, coeffs=np.ones((2, mesh.nt)))
    ub = VelocityField(mesh=mesh, coeffs=np.zeros((2, mesh.nt)))
    assert supercloseness(ua, ub) == pytest.approx(np.sqrt(2.0), rel=1e-14)


def test_supercloseness_rejects_mismatched_inputs():
    mesh = make_square_piecewise_uniform()
    other = make_square_piecewise_uniform(1)
    with pytest.raises(ValueError, match="different meshes"):
        supercloseness(zero_velocity(mesh), zero_velocity(other))
    with pytest.raises(ValueError, match="different spaces"):
        supercloseness(zero_pseudostress(mesh), zero_pseudostress(mesh))
    with pytest.raises(TypeError):
        supercloseness(zero_velocity(mesh), zero_pseudostress(mesh))


def test_fit_order_recovers_exact_power_law():
    nts = np.array([19 * 4**k for k in range(6)], dtype=float)
    h = nts**-0.5
    errs = 3.7 * h**1.5
    assert fit_order(nts, errs) == pytest.approx(1.5, abs=1e-10)
    # The coarsest level is excluded: corrupting it must not change the fit.
    errs_bad = errs.copy()
    errs_bad[0] *= 100.0
    assert fit_order(nts, errs_bad) == pytest.approx(1.5, abs=1e-10)


def test_fit_order_degenerate_inputs():
    assert np.isnan(fit_order([19, 76], [1.0, 0.5]))
    assert np.isnan(fit_order([19, 76, 304], [1.0, 0.5, 0.0]))
    with pytest.raises(ValueError):
        fit_order([19, 76, 304], [1.0, 0.5])


def make_row(level, nt, err, with_star):
    return ErrorRow(
        level=level,
        nt=nt,
        ndofs=3 * nt,
        err_u=err,
        err_eh=err**2,
        err_ustar=err**2,
        err_sigma=err,
        err_xih=err**2,
        err_sigmastar=(err**2 if with_star else None),
        err_div=err,
        err_rho=err,
        err_zeta=err,
    )


def test_fit_orders_requires_three_rows_and_skips_missing_columns():
    rows = []
    for level in range(4):
        nt = 19 * 4**level
        h = nt**-0.5
        rows.append(make_row(level, nt, 2.0 * h, with_star=(level != 2)))
    with pytest.raises(ValueError):
        fit_orders(rows[:2])
    orders = fit_orders(rows)
    assert "err_sigmastar" not in orders  # None in one row -> skipped
    assert orders["err_u"] == pytest.approx(1.0, abs=1e-10)
    assert orders["err_eh"] == pytest.approx(2.0, abs=1e-10)
