"""Spline bases and roughness penalties for the non-stationary GEV surfaces.

Month enters as a continuous cyclic coordinate at block centers,
u = (month - 0.5)/12 with period 1, through a cyclic cubic B-spline basis
with equally spaced knots on the circle. Year is rescaled to [0, 1] and
expanded in a clamped (open-uniform) B-spline basis. The bivariate
surface uses the Kronecker product of the marginal rows, month-major.

Identifiability: fitted models use an intercept plus sum-to-zero
constrained marginal blocks and a doubly-constrained tensor interaction.
Constraints are imposed over the fixed evaluation grid (all 12 months,
all integer years in range) via a deterministic Householder null-space
transform, so the same BasisSpec always reproduces the same columns.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.interpolate import BSpline

from gevdesign.errors import DataError, ExtrapolationError

__all__ = [
    "BasisSpec",
    "cyclic_month_basis",
    "year_basis",
    "tensor_row",
    "penalty_matrices",
    "ModelStructure",
]


@dataclass(frozen=True)
class BasisSpec:
    """Basis dimensions, penalty order and fitted year range."""

    k_month: int = 8
    k_year: int = 5
    penalty_order: int = 2
    year_range: Optional[tuple[int, int]] = None

    def __post_init__(self):
        if not 4 <= self.k_month <= 12:
            raise DataError(f"k_month must be in [4, 12], got {self.k_month}")
        if self.k_year < 3:
            raise DataError(f"k_year must be >= 3, got {self.k_year}")
        if self.penalty_order not in (1, 2):
            raise DataError(f"penalty_order must be 1 or 2, got {self.penalty_order}")
        if self.year_range is not None and self.year_range[1] < self.year_range[0]:
            raise DataError(f"empty year_range {self.year_range}")

    def to_dict(self) -> dict:
        return {
            "k_month": self.k_month,
            "k_year": self.k_year,
            "penalty_order": self.penalty_order,
            "year_range": list(self.year_range) if self.year_range else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BasisSpec":
        yr = d.get("year_range")
        return cls(
            k_month=int(d.get("k_month", 8)),
            k_year=int(d.get("k_year", 5)),
            penalty_order=int(d.get("penalty_order", 2)),
            year_range=tuple(yr) if yr else None,
        )


def _cardinal_cubic(t: np.ndarray) -> np.ndarray:
    """Uniform cubic B-spline on [0, 4]; shifts over the integers sum to 1."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    m = (t >= 0) & (t < 1)
    out[m] = t[m] ** 3 / 6.0
    m = (t >= 1) & (t < 2)
    out[m] = (-3 * t[m] ** 3 + 12 * t[m] ** 2 - 12 * t[m] + 4) / 6.0
    m = (t >= 2) & (t < 3)
    out[m] = (3 * t[m] ** 3 - 24 * t[m] ** 2 + 60 * t[m] - 44) / 6.0
    m = (t >= 3) & (t < 4)
    out[m] = (4 - t[m]) ** 3 / 6.0
    return out


def cyclic_basis_at(u, k: int) -> np.ndarray:
    """Cyclic cubic B-spline row(s) at period-1 coordinate(s) u, k >= 4 columns."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    j = np.arange(k)
    t = np.mod(u[:, None] - j[None, :] / k, 1.0) * k
    return _cardinal_cubic(t)


def _month_coord(month) -> np.ndarray:
    month = np.atleast_1d(np.asarray(month))
    if np.any((month < 1) | (month > 12)) or np.any(month != np.floor(month)):
        raise DataError(f"month must be an integer in 1..12, got {month}")
    return (month.astype(float) - 0.5) / 12.0


def cyclic_month_basis(month, spec: BasisSpec) -> np.ndarray:
    """Cyclic basis row for an integer month in 1..12; exactly 12-periodic."""
    rows = cyclic_basis_at(_month_coord(month), spec.k_month)
    return rows[0] if np.isscalar(month) or np.ndim(month) == 0 else rows


def _year_degree(k_year: int) -> int:
    # a clamped basis of dimension k needs degree <= k - 1
    return min(3, k_year - 1)


def _year_knots(k_year: int) -> np.ndarray:
    degree = _year_degree(k_year)
    n_interior = k_year - degree - 1
    interior = np.linspace(0.0, 1.0, n_interior + 2)[1:-1]
    return np.concatenate([np.zeros(degree + 1), interior, np.ones(degree + 1)])


def _year_coord(year, spec: BasisSpec) -> np.ndarray:
    if spec.year_range is None:
        raise DataError("BasisSpec.year_range is required for year bases")
    first, last = spec.year_range
    year = np.atleast_1d(np.asarray(year, dtype=float))
    if np.any(year < first) or np.any(year > last):
        raise ExtrapolationError(
            f"year outside fitted range [{first}, {last}]: {year[(year < first) | (year > last)]}"
        )
    if last == first:
        return np.zeros_like(year)
    return (year - first) / (last - first)


def year_basis_at(s, k: int) -> np.ndarray:
    """Clamped B-spline row(s) at rescaled coordinate(s) s in [0, 1]."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    knots = _year_knots(k)
    dm = BSpline.design_matrix(np.clip(s, 0.0, 1.0), knots, _year_degree(k))
    return np.asarray(dm.todense())


def year_basis(year, spec: BasisSpec) -> np.ndarray:
    """B-spline row for a year inside the fitted range; refuses extrapolation."""
    rows = year_basis_at(_year_coord(year, spec), spec.k_year)
    return rows[0] if np.ndim(year) == 0 else rows


def tensor_row(month, year, spec: BasisSpec) -> np.ndarray:
    """Kronecker product of the marginal rows, flattened month-major."""
    bm = cyclic_month_basis(month, spec)
    by = year_basis(year, spec)
    return np.kron(bm, by)


def difference_matrix(k: int, order: int, cyclic: bool) -> np.ndarray:
    """Order-1/2 difference operator on k coefficients, wrapping when cyclic."""
    if cyclic:
        rows = []
        for i in range(k):
            r = np.zeros(k)
            if order == 1:
                r[i] = -1.0
                r[(i + 1) % k] = 1.0
            else:
                r[(i - 1) % k] += 1.0
                r[i] += -2.0
                r[(i + 1) % k] += 1.0
            rows.append(r)
        return np.array(rows)
    return np.diff(np.eye(k), n=order, axis=0)


def month_penalty(spec: BasisSpec) -> np.ndarray:
    d = difference_matrix(spec.k_month, spec.penalty_order, cyclic=True)
    return d.T @ d


def year_penalty(spec: BasisSpec) -> np.ndarray:
    d = difference_matrix(spec.k_year, spec.penalty_order, cyclic=False)
    return d.T @ d


def penalty_matrices(spec: BasisSpec) -> tuple[np.ndarray, np.ndarray]:
    """Marginal difference penalties lifted to the tensor space.

    Returns (S_month x I, I x S_year), both (k_month*k_year) square,
    symmetric PSD, with the constant coefficient vector in the null space.
    """
    sm = month_penalty(spec)
    sy = year_penalty(spec)
    return np.kron(sm, np.eye(spec.k_year)), np.kron(np.eye(spec.k_month), sy)


def _nullspace_transform(c: np.ndarray) -> np.ndarray:
    """Orthonormal basis Z of {b : c.b = 0} via a deterministic Householder step."""
    c = np.asarray(c, dtype=float)
    q = c / np.linalg.norm(c)
    v = q.copy()
    v[0] += np.copysign(1.0, q[0])
    H = np.eye(c.size) - 2.0 * np.outer(v, v) / (v @ v)
    return H[:, 1:]


class ModelStructure:
    """Constrained design for one GEV surface pair (mu and log sigma share it).

    Columns: intercept | centered month block | centered year block |
    doubly-centered tensor block (year and tensor blocks only for the
    tensor model). Exposes the design row for any in-range (month, year)
    and the two penalty matrices (month- and year-direction) on the
    constrained coefficients.
    """

    def __init__(self, spec: BasisSpec, kind: str):
        if kind not in ("seasonal", "tensor"):
            raise DataError(f"unknown model kind {kind!r}")
        if kind == "tensor" and spec.year_range is None:
            raise DataError("tensor model requires BasisSpec.year_range")
        self.spec = spec
        self.kind = kind

        km, ky = spec.k_month, spec.k_year
        month_grid = cyclic_basis_at((np.arange(1, 13) - 0.5) / 12.0, km)
        self.z_month = _nullspace_transform(month_grid.sum(axis=0))

        labels = ["intercept"] + [f"month_{i}" for i in range(km - 1)]
        self.sl_intercept = slice(0, 1)
        self.sl_month = slice(1, km)
        pm = month_penalty(spec)
        sm_c = self.z_month.T @ pm @ self.z_month

        if kind == "tensor":
            first, last = spec.year_range
            n_years = last - first + 1
            if ky > n_years:
                raise DataError(f"k_year={ky} exceeds {n_years} distinct years in range")
            s_grid = (np.arange(n_years)) / max(n_years - 1, 1)
            year_grid = year_basis_at(s_grid, ky)
            self.z_year = _nullspace_transform(year_grid.sum(axis=0))
            sy_c = self.z_year.T @ year_penalty(spec) @ self.z_year

            p_m, p_y = km - 1, ky - 1
            self.sl_year = slice(km, km + p_y)
            self.sl_tensor = slice(km + p_y, km + p_y + p_m * p_y)
            labels += [f"year_{i}" for i in range(p_y)]
            labels += [f"tensor_{i}_{j}" for i in range(p_m) for j in range(p_y)]
            self.n_coef = km + p_y + p_m * p_y

            pen_month = np.zeros((self.n_coef, self.n_coef))
            pen_month[self.sl_month, self.sl_month] = sm_c
            pen_month[self.sl_tensor, self.sl_tensor] = np.kron(sm_c, np.eye(p_y))
            pen_year = np.zeros((self.n_coef, self.n_coef))
            pen_year[self.sl_year, self.sl_year] = sy_c
            pen_year[self.sl_tensor, self.sl_tensor] = np.kron(np.eye(p_m), sy_c)
        else:
            self.z_year = None
            self.sl_year = slice(km, km)
            self.sl_tensor = slice(km, km)
            self.n_coef = km
            pen_month = np.zeros((km, km))
            pen_month[self.sl_month, self.sl_month] = sm_c
            pen_year = np.zeros((km, km))

        self.labels = labels
        self.pen_month = pen_month
        self.pen_year = pen_year

    def design_matrix(self, months, years) -> np.ndarray:
        months = np.atleast_1d(np.asarray(months))
        years = np.atleast_1d(np.asarray(years))
        mm = cyclic_basis_at(_month_coord(months), self.spec.k_month) @ self.z_month
        x = np.empty((months.size, self.n_coef))
        x[:, 0] = 1.0
        x[:, self.sl_month] = mm
        if self.kind == "tensor":
            yy = year_basis_at(_year_coord(years, self.spec), self.spec.k_year) @ self.z_year
            x[:, self.sl_year] = yy
            x[:, self.sl_tensor] = (mm[:, :, None] * yy[:, None, :]).reshape(months.size, -1)
        return x

    def design_row(self, month, year) -> np.ndarray:
        return self.design_matrix([month], [year])[0]

    def penalty(self, lambda_month: float, lambda_year: float) -> np.ndarray:
        return lambda_month * self.pen_month + lambda_year * self.pen_year
