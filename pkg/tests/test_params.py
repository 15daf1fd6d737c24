from __future__ import annotations

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from infoflow import derive_params
from infoflow.errors import BadDimension, NegativeConfinement, OutOfRange


def test_log_case_three_dimensions():
    p = derive_params(0.5, 0.0, 3)
    assert p.theta == pytest.approx(0.5)
    assert p.delta == 2.0
    assert p.capital_lambda == 0.0
    assert p.beta == 1.0
    assert p.c0 == pytest.approx(22 / 15)


def test_thin_film_case():
    p = derive_params(1.0, 1.0, 1)
    assert p.theta == pytest.approx(math.sqrt(2) / 3, abs=1e-12)
    assert p.delta == 3.0
    assert p.capital_lambda == pytest.approx(1 / math.sqrt(3))
    assert p.beta == 0.0
    assert p.c0 == 1.0


def test_intermediate_exponent_in_two_dimensions():
    p = derive_params(0.75, 2.0, 2)
    assert p.delta == 3.0
    assert p.capital_lambda == pytest.approx(math.sqrt(2 / 3))
    assert p.beta == pytest.approx(1 / 3)
    assert p.c0 == pytest.approx(23 / 18)


@pytest.mark.parametrize("alpha, lam, dim, err", [
    (0.49, 1.0, 1, OutOfRange), (1.2, 1.0, 1, OutOfRange), (float("nan"), 1.0, 1, OutOfRange),
    (0.75, -1e-3, 1, NegativeConfinement), (0.75, 1.0, 0, BadDimension),
])
def test_rejects_bad_inputs(alpha, lam, dim, err):
    with pytest.raises(err):
        derive_params(alpha, lam, dim)


alphas = st.floats(0.5, 1.0)
lams = st.floats(0.0, 100.0)
dims = st.integers(1, 8)


@given(alphas, lams, dims)
def test_derived_constants(alpha, lam, dim):
    p = derive_params(alpha, lam, dim)
    assert p.capital_lambda ** 2 * p.delta == pytest.approx(lam, rel=1e-12, abs=1e-300)
    assert p.delta - 2 == pytest.approx((2 * alpha - 1) * dim, abs=1e-12)
    assert 0 < p.theta <= 0.5 + 1e-15
    assert 0 <= p.beta <= 1
    assert p.c0 > 0


@given(lams, dims)
def test_c0_is_one_for_thin_film(lam, dim):
    assert derive_params(1.0, lam, dim).c0 == pytest.approx(1.0)


@given(alphas, dims)
def test_c0_closed_form_in_beta(alpha, dim):
    p = derive_params(alpha, 1.0, dim)
    k = (dim - 1) ** 2 / (dim * (dim + 2))
    assert p.c0 == pytest.approx((1 + p.beta) * (1 - p.beta * k), rel=1e-12)


@given(st.floats(0.5, 1.0), st.floats(0.5, 1.0))
def test_c0_grows_with_beta_on_the_line(a1, a2):
    lo, hi = sorted((a1, a2))  # smaller alpha, larger beta
    assert derive_params(lo, 1.0).c0 >= derive_params(hi, 1.0).c0 - 1e-12


@given(alphas, lams, dims)
def test_pure(alpha, lam, dim):
    assert derive_params(alpha, lam, dim) == derive_params(alpha, lam, dim)
