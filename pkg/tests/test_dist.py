import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from optauction.dist import (CapacityLinkedUniform, Histogram1D, IndependentUniform, TabulatedGrid,
                             Uniform1D, conditional_cdf, is_regular, is_regular_1d, virtual_cost)
from optauction.errors import DomainError, SingularityError
from optauction.model import SellerSpec

finite = st.floats(-100, 100, allow_nan=False)
width = st.floats(0.1, 50)


# --- one-dimensional -------------------------------------------------------


@given(lo=finite, w=width, u=st.floats(0, 1))
def test_uniform_virtual_cost_closed_form(lo, w, u):
    d = Uniform1D(lo, lo + w)
    c = lo + u * w
    assert d.virtual_cost(c) == pytest.approx(2 * c - lo, abs=1e-9)
    assert d.virtual_value(c) == pytest.approx(2 * c - (lo + w), abs=1e-9)


def test_uniform_rejects_points_outside_support():
    with pytest.raises(DomainError):
        Uniform1D(0.0, 1.0).cdf(1.5)


def test_histogram_cdf_and_density_integrate_consistently():
    d = Histogram1D((0.0, 1.0, 3.0, 4.0), (0.5, 0.3, 0.2))
    total, _ = integrate.quad(d.pdf, 0.0, 4.0, points=[1.0, 3.0])
    assert total == pytest.approx(1.0, abs=1e-10)
    for x in (0.25, 1.0, 2.2, 3.9):
        part, _ = integrate.quad(d.pdf, 0.0, x, points=[p for p in (1.0, 3.0) if p < x])
        assert d.cdf(x) == pytest.approx(part, abs=1e-10)


def test_zero_density_cell_is_a_singularity():
    d = Histogram1D((0.0, 1.0, 2.0), (1.0, 0.0))
    with pytest.raises(SingularityError):
        d.virtual_cost(1.5)
    assert not is_regular_1d(d).regular


@given(masses=st.lists(st.floats(0.05, 1.0), min_size=1, max_size=6))
def test_non_increasing_histogram_density_is_cost_regular(masses):
    m = sorted(masses, reverse=True)
    total = math.fsum(m)
    m = [v / total for v in m[:-1]] + [1.0 - math.fsum(v / total for v in m[:-1])]
    if m[-1] <= 0:
        return
    d = Histogram1D(tuple(np.linspace(0, 1, len(m) + 1)), tuple(m))
    assert is_regular_1d(d, 64, "cost").regular


def test_rising_histogram_density_breaks_cost_regularity():
    d = Histogram1D((0.0, 0.5, 1.0), (0.1, 0.9))
    res = is_regular_1d(d, 64, "cost")
    assert not res.regular and res.counterexample is not None


# --- two-dimensional -------------------------------------------------------


def _mass_integral(dist, c_hi_of_q=None):
    hi = c_hi_of_q or (lambda q: dist.cost_hi)
    val, _ = integrate.dblquad(lambda c, q: dist.joint_pdf(c, q), dist.cap_lo, dist.cap_hi,
                               lambda q: dist.cost_lo, hi, epsabs=1e-10)
    return val


def test_joint_densities_integrate_to_one():
    iu = IndependentUniform(1.0, 4.0, 10.0, 20.0)
    assert _mass_integral(iu) == pytest.approx(1.0, abs=1e-8)
    cl = CapacityLinkedUniform(1.0, 4.0, 10.0, 20.0, 0.1)
    assert _mass_integral(cl, lambda q: cl.cost_support(q)[1]) == pytest.approx(1.0, abs=1e-8)
    grid = TabulatedGrid.uniform_cells((1.0, 4.0), (10.0, 20.0), [[0.3, 0.2], [0.25, 0.25]])
    val = 0.0
    for lo_q, hi_q in zip(grid.capacity_edges, grid.capacity_edges[1:]):
        for lo_c, hi_c in zip(grid.cost_edges, grid.cost_edges[1:]):
            eps = 1e-9
            part, _ = integrate.dblquad(lambda c, q: grid.joint_pdf(c, q), lo_q + eps, hi_q - eps,
                                        lo_c + eps, hi_c - eps)
            val += part
    assert val == pytest.approx(1.0, abs=1e-6)


def test_capacity_linked_virtual_cost():
    d = CapacityLinkedUniform(2.0, 10.0, 0.0, 10.0, 0.5)
    assert d.cost_support(4.0) == (2.0, 8.0)
    assert d.virtual_cost(5.0, 4.0) == pytest.approx(8.0)
    # above the conditional support the mechanism clamps to its top
    assert d.mechanism_virtual_cost(9.0, 4.0) == pytest.approx(2 * 8.0 - 2.0)
    with pytest.raises(DomainError):
        d.virtual_cost(9.0, 4.0)


def test_tabulated_conditionals_use_the_capacity_row():
    g = TabulatedGrid((0.0, 1.0, 2.0), (0.0, 1.0, 2.0), ((0.4, 0.1), (0.1, 0.4)))
    assert g.conditional_cdf(1.0, 0.5) == pytest.approx(0.8)
    assert g.conditional_cdf(1.0, 1.5) == pytest.approx(0.2)
    assert g.virtual_cost(0.5, 0.5) == pytest.approx(0.5 + 0.4 / 0.8)


def test_grid_masses_must_sum_to_one():
    with pytest.raises(ValueError):
        TabulatedGrid((0.0, 1.0), (0.0, 1.0), ((0.5,),))


@settings(max_examples=40, deadline=None)
@given(c_lo=st.floats(0, 10), cw=st.floats(0.5, 10), q_lo=st.floats(0, 10), qw=st.floats(0.5, 10),
       frac=st.floats(0, 0.9))
def test_uniform_families_are_regular(c_lo, cw, q_lo, qw, frac):
    slope = frac * cw / qw
    assert is_regular(IndependentUniform(c_lo, c_lo + cw, q_lo, q_lo + qw), 12).regular
    assert is_regular(CapacityLinkedUniform(c_lo, c_lo + cw, q_lo, q_lo + qw, slope), 12).regular


def test_grid_with_shifting_rows_is_not_regular():
    g = TabulatedGrid.uniform_cells((1.0, 5.0), (10.0, 30.0), [[0.2, 0.15, 0.1], [0.25, 0.2, 0.1]])
    res = is_regular(g, 32)
    assert not res.regular and "capacity" in res.reason


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_samples_stay_in_the_support(seed):
    rng = np.random.default_rng(seed)
    for d in (IndependentUniform(1, 2, 3, 4), CapacityLinkedUniform(1, 5, 0, 4, 0.5),
              TabulatedGrid.uniform_cells((0, 1), (0, 1), [[0.5, 0.0], [0.25, 0.25]])):
        c, q = d.sample(rng)
        lo, hi = d.cost_support(q)
        assert d.cap_lo <= q <= d.cap_hi and lo <= c <= hi


def test_module_helpers_read_the_seller_distribution():
    spec = SellerSpec(1, frozenset("A"), (1.0, 3.0), (1.0, 2.0), IndependentUniform(1.0, 3.0, 1.0, 2.0))
    assert conditional_cdf(spec, 2.0, 1.5) == pytest.approx(0.5)
    assert virtual_cost(spec, 2.0, 1.5) == pytest.approx(3.0)
