import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tedopa_sim.chain_mapping import (
    ChainCoefficients,
    DiscretizedMeasure,
    asymptotic_limits,
    chain_coefficients,
    chain_length_heuristic,
    discretize_measure,
    recurrence_coefficients,
    stieltjes_recurrence,
)
from tedopa_sim.errors import InvalidInputError, NumericalError
from tedopa_sim.spectral_density import OhmicExponential, Tabulated

TABLE_W = [199.55, 385.14, 495.81, 514.13, 507.85]
TABLE_T = [139.97, 222.93, 253.56, 253.63]


def mp_stieltjes(alpha, omega_c, omega_max, n, dps=30):
    """Classical Stieltjes procedure with adaptive mpmath quadrature of the exact density."""
    mpmath.mp.dps = dps
    a = mpmath.mpf(alpha)
    wc = mpmath.mpf(omega_c)
    J = lambda w: 2 * mpmath.pi * a * w * mpmath.exp(-w / wc)
    pts = [0, omega_c, 3 * omega_c, 6 * omega_c, omega_max]
    alphas, betas = [], []

    def p(k, w):
        p_prev, p_cur = mpmath.mpf(0), mpmath.mpf(1)
        for j in range(k):
            b = betas[j] if j > 0 else 0
            p_prev, p_cur = p_cur, (w - alphas[j]) * p_cur - b * p_prev
        return p_cur

    norm_prev = None
    for k in range(n):
        norm = mpmath.quad(lambda w: p(k, w) ** 2 * J(w), pts)
        first = mpmath.quad(lambda w: w * p(k, w) ** 2 * J(w), pts)
        alphas.append(first / norm)
        betas.append(norm if k == 0 else norm / norm_prev)
        norm_prev = norm
    return [float(x) for x in alphas], [float(x) for x in betas]


def test_reproduces_published_coefficients(ohmic):
    c = chain_coefficients(ohmic, 5)
    assert c.t0 == pytest.approx(70.69, abs=0.05)
    assert np.allclose(c.w, TABLE_W, atol=0.05)
    assert np.allclose(c.t, TABLE_T, atol=0.05)


def test_matches_high_precision_stieltjes(ohmic):
    alpha_ref, beta_ref = mp_stieltjes(0.25, 100.0, 1000.0, 6)
    alpha, beta = recurrence_coefficients(ohmic, 6)
    assert np.allclose(alpha, alpha_ref, rtol=1e-9)
    assert np.allclose(beta, beta_ref, rtol=1e-9)


def test_pi_normalization_only_rescales_t0(ohmic):
    a = chain_coefficients(ohmic, 4, pi_normalization=True)
    b = chain_coefficients(ohmic, 4, pi_normalization=False)
    assert b.t0 == pytest.approx(a.t0 * math.sqrt(math.pi), rel=1e-14)
    assert np.array_equal(a.w, b.w) and np.array_equal(a.t, b.t)


def test_t0_is_the_coupling_weight(ohmic):
    # t0^2 = (1/pi) int J = 2 alpha wc^2 (1 - 11 e^-10) for the cut Ohmic density
    expected = 2 * 0.25 * 100.0**2 * (1 - 11 * math.exp(-10))
    assert chain_coefficients(ohmic, 1).t0 ** 2 == pytest.approx(expected, rel=1e-11)


def test_long_chain_asymptotics(ohmic):
    c = chain_coefficients(ohmic, 200)
    w_inf, t_inf = asymptotic_limits(ohmic.omega_min, ohmic.omega_max)
    assert (w_inf, t_inf) == (500.0, 250.0)
    assert abs(c.w[-1] - w_inf) / w_inf < 0.01
    assert abs(c.t[-1] - t_inf) / t_inf < 0.01


def test_gauss_quadrature_consistency(ohmic):
    # eigenvalues of the Jacobi matrix are Gauss nodes: they integrate
    # low moments of the measure exactly
    alpha, beta = recurrence_coefficients(ohmic, 8)
    jac = np.diag(alpha) + np.diag(np.sqrt(beta[1:]), 1) + np.diag(np.sqrt(beta[1:]), -1)
    nodes, vecs = np.linalg.eigh(jac)
    weights = beta[0] * vecs[0] ** 2
    m = discretize_measure(ohmic, 800, 16)
    for k in range(10):
        ref = np.sum(m.weights * (m.nodes / 100.0) ** k)
        assert np.sum(weights * (nodes / 100.0) ** k) == pytest.approx(ref, rel=1e-9)


def test_discrete_measure_recovers_its_own_recurrence():
    # uniform discrete measure: Jacobi eigenvalues stay inside the support
    nodes = np.linspace(-1, 1, 64)
    weights = np.full(64, 1 / 64)
    alpha, beta = stieltjes_recurrence(DiscretizedMeasure(nodes, weights), 16)
    jac = np.diag(alpha) + np.diag(np.sqrt(beta[1:]), 1) + np.diag(np.sqrt(beta[1:]), -1)
    evals = np.linalg.eigvalsh(jac)
    assert np.all(evals > -1 - 1e-12) and np.all(evals < 1 + 1e-12)
    assert np.allclose(alpha, 0.0, atol=1e-13)  # symmetric measure


def test_stieltjes_guard_on_node_count():
    m = DiscretizedMeasure(np.arange(8.0), np.ones(8))
    with pytest.raises(InvalidInputError):
        stieltjes_recurrence(m, 3)


def test_degenerate_measure_reports_breakdown():
    nodes = np.arange(16.0)
    weights = np.zeros(16)
    weights[3] = 1.0
    with pytest.raises(NumericalError) as info:
        stieltjes_recurrence(DiscretizedMeasure(nodes, weights), 4)
    assert "beta[1]" in str(info.value)


def test_l1_chain_has_no_hopping(ohmic):
    c = chain_coefficients(ohmic, 1)
    assert c.length == 1 and c.t.size == 0
    with pytest.raises(InvalidInputError):
        chain_coefficients(ohmic, 0)


def test_truncated(coeffs8):
    c = coeffs8.truncated(3)
    assert c.length == 3 and np.array_equal(c.w, coeffs8.w[:3]) and np.array_equal(c.t, coeffs8.t[:2])
    with pytest.raises(InvalidInputError):
        coeffs8.truncated(9)
    with pytest.raises(InvalidInputError):
        ChainCoefficients(1.0, [1.0, 2.0], [])


def test_tabulated_flat_density_matches_legendre():
    # uniform density on [-1, 1]: Legendre recurrence beta_k = k^2 / (4k^2 - 1)
    sd = Tabulated(omega=[-1.0, 1.0], values=[1.0, 1.0])
    alpha, beta = recurrence_coefficients(sd, 6)
    k = np.arange(1, 6)
    assert np.allclose(alpha, 0.0, atol=1e-12)
    assert beta[0] == pytest.approx(2.0, rel=1e-12)
    assert np.allclose(beta[1:], k**2 / (4 * k**2 - 1), rtol=1e-10)


@settings(max_examples=15, deadline=None)
@given(
    alpha=st.floats(min_value=0.01, max_value=2.0),
    omega_c=st.floats(min_value=10.0, max_value=500.0),
)
def test_coefficients_positive_and_inside_band(alpha, omega_c):
    sd = OhmicExponential(alpha=alpha, omega_c=omega_c)
    c = chain_coefficients(sd, 6)
    assert c.t0 > 0 and np.all(c.t > 0)
    assert np.all((c.w > sd.omega_min) & (c.w < sd.omega_max))
    # t0 scales as sqrt(alpha); w and t do not depend on alpha
    ref = chain_coefficients(OhmicExponential(alpha=1.0, omega_c=omega_c), 6)
    assert c.t0 == pytest.approx(ref.t0 * math.sqrt(alpha), rel=1e-10)
    assert np.allclose(c.w, ref.w, rtol=1e-10)


def test_chain_length_heuristic():
    assert chain_length_heuristic(250.0, 0.0) == 0
    assert chain_length_heuristic(250.0, 0.1) == 10
    with pytest.raises(InvalidInputError):
        chain_length_heuristic(0.0, 1.0)
    with pytest.raises(InvalidInputError):
        chain_length_heuristic(250.0, -1.0)
