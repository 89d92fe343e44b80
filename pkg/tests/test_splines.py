"""Cyclic/year bases, tensor rows, penalties and the constrained design."""

import numpy as np
import pytest

from gevdesign.errors import DataError, ExtrapolationError
from gevdesign.splines import (BasisSpec, ModelStructure, cyclic_basis_at,
                               cyclic_month_basis, penalty_matrices, tensor_row,
                               year_basis)

SPEC = BasisSpec(year_range=(1985, 2014))


class TestCyclicBasis:
    def test_twelve_periodic(self):
        u = np.linspace(0.0, 1.0, 49)
        assert np.allclose(cyclic_basis_at(u, 8), cyclic_basis_at(u + 1.0, 8), atol=1e-13)

    def test_partition_of_unity_all_months(self):
        rows = cyclic_month_basis(np.arange(1, 13), SPEC)
        assert np.allclose(rows.sum(axis=1), 1.0, atol=1e-12)

    def test_minimal_dimension_evaluates(self):
        spec = BasisSpec(k_month=4, year_range=(2000, 2010))
        for m in range(1, 13):
            row = cyclic_month_basis(m, spec)
            assert row.shape == (4,) and np.all(np.isfinite(row))

    def test_month_out_of_range(self):
        with pytest.raises(DataError):
            cyclic_month_basis(13, SPEC)


class TestYearBasis:
    def test_boundaries_evaluate(self):
        for y in (1985, 2014):
            row = year_basis(y, SPEC)
            assert row.shape == (5,)
            assert row.sum() == pytest.approx(1.0, abs=1e-12)

    def test_extrapolation_refused(self):
        with pytest.raises(ExtrapolationError):
            year_basis(2015, SPEC)
        with pytest.raises(ExtrapolationError):
            year_basis(1984, SPEC)

    def test_partition_of_unity_interior(self):
        rows = year_basis(np.arange(1985, 2015), SPEC)
        assert np.allclose(rows.sum(axis=1), 1.0, atol=1e-12)


class TestTensorRow:
    def test_is_outer_product_month_major(self):
        bm = cyclic_month_basis(4, SPEC)
        by = year_basis(1999, SPEC)
        assert np.allclose(tensor_row(4, 1999, SPEC), np.outer(bm, by).ravel())

    def test_length(self):
        assert tensor_row(1, 1990, SPEC).shape == (SPEC.k_month * SPEC.k_year,)

    def test_zero_marginal_blocks(self):
        bm = cyclic_month_basis(2, SPEC)
        row = tensor_row(2, 1990, SPEC)
        blocks = row.reshape(SPEC.k_month, SPEC.k_year)
        for j in np.nonzero(bm == 0.0)[0]:
            assert np.all(blocks[j] == 0.0)


class TestPenalties:
    def test_constant_vector_in_null_space(self):
        pm, py = penalty_matrices(SPEC)
        one = np.ones(pm.shape[0])
        assert abs(one @ pm @ one) < 1e-12
        assert abs(one @ py @ one) < 1e-12

    def test_symmetric_psd(self):
        rng = np.random.default_rng(2)
        for s in penalty_matrices(SPEC):
            assert np.allclose(s, s.T)
            for _ in range(100):
                v = rng.normal(size=s.shape[0])
                assert v @ s @ v >= -1e-10

    def test_quadratic_coefficients_penalized(self):
        # order-2 difference penalty is positive on a quadratic-in-index vector
        pm, py = penalty_matrices(SPEC)
        idx = np.arange(SPEC.k_month * SPEC.k_year, dtype=float)
        v = idx ** 2
        assert v @ pm @ v > 1.0
        assert v @ py @ v > 1.0


class TestModelStructure:
    def test_design_reproducible(self):
        st = ModelStructure(SPEC, "tensor")
        months = np.tile(np.arange(1, 13), 5)
        years = np.repeat(np.arange(1990, 1995), 12)
        a = st.design_matrix(months, years)
        b = ModelStructure(SPEC, "tensor").design_matrix(months, years)
        assert np.array_equal(a, b)

    def test_constraint_grid_sums_vanish(self):
        st = ModelStructure(SPEC, "tensor")
        x = st.design_matrix(list(range(1, 13)), [1999] * 12)
        assert np.max(np.abs(x[:, st.sl_month].sum(axis=0))) < 1e-10
        xy = st.design_matrix([6] * 30, list(range(1985, 2015)))
        assert np.max(np.abs(xy[:, st.sl_year].sum(axis=0))) < 1e-10

    def test_coefficient_count(self):
        st = ModelStructure(SPEC, "tensor")
        km, ky = SPEC.k_month, SPEC.k_year
        assert st.n_coef == 1 + (km - 1) + (ky - 1) + (km - 1) * (ky - 1)
        assert ModelStructure(SPEC, "seasonal").n_coef == km

    def test_penalty_blockwise(self):
        st = ModelStructure(SPEC, "tensor")
        p = st.penalty(2.0, 3.0)
        assert np.allclose(p, 2.0 * st.pen_month + 3.0 * st.pen_year)
        assert np.allclose(p, p.T)

    def test_spec_invariants(self):
        with pytest.raises(DataError):
            BasisSpec(k_month=3)
        with pytest.raises(DataError):
            BasisSpec(k_year=2)
        with pytest.raises(DataError):
            BasisSpec(penalty_order=3)
