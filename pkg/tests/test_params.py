import math

import mpmath
import pytest

from wrpath.mesh import MeshStats, compute_stats
from wrpath.params import (
    DiscretizationParams,
    ParamUnderflowError,
    compute_params,
    error_budget,
    strict_delta,
)


def test_error_budget_is_min_of_both_terms(single_mesh):
    st = compute_stats(single_mesh)
    eta = 1.0 + 1.0 / math.cos(st.theta_cm)
    got = error_budget(st, 0.1, eta)
    term_a = 0.1 / (st.n**3 * st.mu * eta)
    term_b = st.l_min / (4.0 * st.n * st.w_max * st.l_max)
    assert got == min(term_a, term_b)
    assert got <= term_a and got <= term_b


def test_practical_delta_formula(two_region_mesh):
    st = compute_stats(two_region_mesh)
    p = compute_params(st, 0.1, mode="practical")
    eta = 1.0 + 1.0 / math.cos(st.theta_cm)
    assert p.eta == eta
    assert p.delta == 0.1 / (2.0 * st.n * st.mu * eta)
    assert p.sigma == p.eps_prime
    assert p.mode == "practical"


def test_strict_delta_exact_n3(single_mesh):
    # independent high-precision recomputation, rounded once at the end
    st = compute_stats(single_mesh)
    p = compute_params(st, 0.1, mode="strict")
    with mpmath.workdps(80):
        ep = mpmath.mpf(p.eps_prime)
        want = float(ep ** (st.n * st.n + 1) / (2 * mpmath.mpf(st.mu)))
    assert p.delta == want
    assert p.delta > 0.0


def test_strict_underflows_for_large_meshes():
    st = MeshStats(n=50, l_min=1.0, l_max=10.0, w_min=1.0, w_max=8.0, mu=8.0, theta_cm=0.1)
    with pytest.raises(ParamUnderflowError):
        compute_params(st, 0.1, mode="strict")


def test_strict_delta_direct_underflow():
    with pytest.raises(ParamUnderflowError):
        strict_delta(20, 2.0, 1e-4)


def test_epsilon_validation(single_mesh):
    st = compute_stats(single_mesh)
    for bad in (0.0, -0.5, 1.5):
        with pytest.raises(ValueError):
            compute_params(st, bad)
    with pytest.raises(ValueError):
        compute_params(st, 0.1, mode="bogus")


def test_params_reject_nonpositive_spacing():
    with pytest.raises(ValueError):
        DiscretizationParams(
            epsilon=0.1, delta=0.0, sigma=1.0, eps_prime=1.0,
            mode="practical", eta=2.0, n=3, mu=1.0,
        )
