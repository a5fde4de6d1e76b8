import numpy as np
import pytest
from hypothesis import given, strategies as st

from helpers import mc_relu_moments

from ntkdyn.errors import ContractViolationError
from ntkdyn.kernels import (
    AnalyticKernelSpec,
    KernelMatrix,
    fcn_gram,
    fcntk,
    kappa0,
    kappa1,
    kappa_maclaurin_coeffs,
    kernel_entries,
    res_gram,
    resntk,
    resntk_level_args,
)
from ntkdyn.linalg import sym_eig_min


# ---------------------------------------------------------------- kappa ----


def test_kappa_endpoint_values():
    assert kappa0(1.0) == pytest.approx(1.0, abs=1e-15)
    assert kappa0(-1.0) == pytest.approx(0.0, abs=1e-15)
    assert kappa0(0.0) == pytest.approx(0.5, abs=1e-15)
    assert kappa1(1.0) == pytest.approx(1.0, abs=1e-15)
    assert kappa1(-1.0) == pytest.approx(0.0, abs=1e-15)
    assert kappa1(0.0) == pytest.approx(1.0 / np.pi, abs=1e-15)


def test_kappa_half_hand_values():
    # arccos(1/2) = pi/3 makes both closed forms exact by hand
    assert kappa0(0.5) == pytest.approx(2.0 / 3.0, abs=1e-12)
    assert kappa1(0.5) == pytest.approx(1.0 / 3.0 + np.sqrt(3.0) / (2.0 * np.pi), abs=1e-12)


def test_kappa_array_input():
    u = np.array([-1.0, 0.0, 1.0])
    assert kappa0(u).shape == (3,)
    assert np.allclose(kappa0(u), [0.0, 0.5, 1.0], atol=1e-15)


def test_kappa_monotone_on_grid():
    u = np.linspace(-1.0, 1.0, 201)
    assert np.all(np.diff(kappa0(u)) > 0.0)
    assert np.all(np.diff(kappa1(u)) >= 0.0)


def test_kappa_tolerates_float_drift_past_one():
    assert kappa0(1.0 + 5e-13) == pytest.approx(1.0, abs=1e-12)
    assert kappa1(-1.0 - 5e-13) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("bad", [1.01, -1.1, np.nan, np.inf])
def test_kappa_domain_violations(bad):
    with pytest.raises(ContractViolationError):
        kappa0(bad)
    with pytest.raises(ContractViolationError):
        kappa1(bad)


@given(st.floats(min_value=-1.0, max_value=1.0, allow_nan=False))
def test_kappa_range_and_order(u):
    k0, k1 = kappa0(u), kappa1(u)
    assert 0.0 <= k0 <= 1.0
    assert 0.0 <= k1 <= 1.0
    assert k1 >= u - 1e-15  # kappa1 dominates the identity on [-1, 1]


@pytest.mark.parametrize("seed", range(20))
def test_kappa_matches_gaussian_expectations(seed):
    """Monte-Carlo oracle: the closed forms equal the ReLU moments of a
    correlated Gaussian pair within 3 standard errors at 1e6 draws."""
    rng = np.random.default_rng(1000 + seed)
    sxx = float(rng.uniform(0.3, 3.0))
    syy = float(rng.uniform(0.3, 3.0))
    rho = float(rng.uniform(-0.95, 0.95))
    sxy = rho * np.sqrt(sxx * syy)
    m1, se1, m0, se0 = mc_relu_moments(sxx, sxy, syy, 1_000_000, 5000 + seed)
    assert abs(0.5 * np.sqrt(sxx * syy) * kappa1(rho) - m1) < 3.0 * se1
    assert abs(0.5 * kappa0(rho) - m0) < 3.0 * se0


# ------------------------------------------------------ fully connected ----


def test_fcntk_origin_hand_value_doubled():
    # x = x' = 0: every layer has S = 2, rho = 1, so K = 2 + 2 = 4 at L = 1
    assert fcntk([0.0, 0.0], [0.0, 0.0], 1) == pytest.approx(4.0, abs=1e-12)


def test_fcntk_orthogonal_pair_hand_value():
    # x=(1,0), x'=(0,1), L=1: S1=1, diag 2, rho=1/2,
    # S2 = 2 kappa1(1/2) + 2, K = S1 kappa0(1/2) + S2 = 10/3 + sqrt(3)/pi
    got = fcntk([1.0, 0.0], [0.0, 1.0], 1)
    assert got == pytest.approx(10.0 / 3.0 + np.sqrt(3.0) / np.pi, abs=1e-12)


def test_fcntk_origin_hand_value_unit():
    # unit biases and no output-bias term halve the origin value at L = 1
    assert fcntk([0.0, 0.0], [0.0, 0.0], 1, bias_mode="unit") == pytest.approx(2.0, abs=1e-12)


def test_fcntk_circle_diagonal_values():
    """On a unit-norm input the diagonal recursion is exact by hand: all
    correlations are 1, so doubled gives 6, 12, 20 and unit 4, 8, 13."""
    # 1e-7 tolerance: kappa0 has square-root sensitivity at rho = 1, so the
    # 1e-16 norm drift of cos/sin inputs surfaces as ~1e-8 here
    x = np.array([np.cos(0.7), np.sin(0.7)])
    for L, expect in ((1, 6.0), (2, 12.0), (3, 20.0)):
        assert fcntk(x, x, L) == pytest.approx(expect, abs=1e-7)
    for L, expect in ((1, 4.0), (2, 8.0), (3, 13.0)):
        assert fcntk(x, x, L, bias_mode="unit") == pytest.approx(expect, abs=1e-7)


def test_fcn_gram_matches_pairwise_scalar():
    rng = np.random.default_rng(3)
    X = rng.uniform(-1.0, 1.0, size=(5, 3))
    for mode in ("doubled", "unit"):
        G = fcn_gram(X, 2, mode)
        assert np.allclose(G, G.T, atol=1e-12)
        for i in range(5):
            for j in range(i + 1, 5):
                assert G[i, j] == pytest.approx(fcntk(X[i], X[j], 2, mode), abs=1e-12)


def test_fcntk_increases_with_depth():
    x = np.array([0.3, -0.4])
    for mode in ("doubled", "unit"):
        vals = [fcntk(x, x, L, mode) for L in range(1, 6)]
        assert np.all(np.diff(vals) > 0.0)


def test_fcntk_input_dim_mismatch():
    with pytest.raises(ContractViolationError):
        fcntk([1.0, 0.0], [1.0, 0.0, 0.0], 1)


def test_fcn_gram_rejects_bad_args():
    X = np.zeros((2, 2))
    with pytest.raises(ContractViolationError):
        fcn_gram(X, 0)
    with pytest.raises(ContractViolationError):
        fcn_gram(X, 2, bias_mode="none")
    with pytest.raises(ContractViolationError):
        fcn_gram(np.zeros(3), 1)


# ------------------------------------------------------------- residual ----


def test_resntk_origin_hand_value_depth_one():
    # x = x' = 0 lifts to the unit vector e_d; with a = 1 the L = 1 recursion
    # gives K1 = 1 + kappa1(1) = 2, B1 = 1 + kappa0(1) = 2,
    # r = kappa1(1) + 2 kappa0(1) + 1 = 4, so kernel = 2 + 2 + 4 = 8
    assert resntk([0.0], [0.0], 1, 1.0) == pytest.approx(8.0, abs=1e-12)


def test_resntk_origin_hand_value_depth_two():
    # one more level: K2 = K1 + 2 kappa1(1) = 4; backward pass B1 = 4 and
    # r = (2 + 3 + 1) + 2 (1 + 2 + 1) = 14, so kernel = 4 + 4 + 14 = 22
    assert resntk([0.0], [0.0], 2, 1.0) == pytest.approx(22.0, abs=1e-12)


def test_resntk_symmetry_and_gram_consistency():
    rng = np.random.default_rng(8)
    X = rng.uniform(-2.0, 2.0, size=(6, 2))
    G = res_gram(X, 3, 0.7)
    assert np.allclose(G, G.T, atol=1e-12)
    for i in range(6):
        for j in range(6):
            assert G[i, j] == pytest.approx(resntk(X[i], X[j], 3, 0.7), abs=1e-10)


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
def test_resntk_level_args_stay_in_domain(a):
    """The kappa arguments of every level must stay in [-1, 1]; this is the
    normalization that keeps the closed form well defined."""
    rng = np.random.default_rng(17)
    for _ in range(1000):
        x, xp = rng.uniform(-3.0, 3.0, size=(2, 2))
        args = resntk_level_args(x, xp, 4, a)
        assert args.shape == (4,)
        assert np.all(np.abs(args) <= 1.0 + 1e-12)


def test_resntk_rejects_bad_args():
    with pytest.raises(ContractViolationError):
        resntk([0.0], [0.0], 0, 1.0)
    with pytest.raises(ContractViolationError):
        resntk([0.0], [0.0], 1, 0.0)
    with pytest.raises(ContractViolationError):
        resntk([0.0], [0.0, 1.0], 1, 1.0)


# ------------------------------------------------------------ maclaurin ----


def test_maclaurin_kappa0_leading_terms():
    powers, coeffs = kappa_maclaurin_coeffs("kappa0", 4)
    assert powers.tolist() == [0, 1, 3, 5]
    expect = [0.5, 1.0 / np.pi, 1.0 / (6.0 * np.pi), 3.0 / (40.0 * np.pi)]
    assert np.allclose(coeffs, expect, rtol=0.0, atol=1e-15)


def test_maclaurin_kappa1_leading_terms():
    powers, coeffs = kappa_maclaurin_coeffs("kappa1", 4)
    assert powers.tolist() == [0, 1, 2, 4]
    expect = [1.0 / np.pi, 0.5, 1.0 / (2.0 * np.pi), 1.0 / (24.0 * np.pi)]
    assert np.allclose(coeffs, expect, rtol=0.0, atol=1e-15)


def test_maclaurin_single_term():
    powers, coeffs = kappa_maclaurin_coeffs("kappa0", 1)
    assert powers.tolist() == [0] and coeffs.tolist() == [0.5]


@pytest.mark.parametrize("which", ["kappa0", "kappa1"])
def test_maclaurin_first_fifty_terms_positive(which):
    powers, coeffs = kappa_maclaurin_coeffs(which, 50)
    assert len(powers) == 50
    assert np.all(np.diff(powers) > 0)
    assert np.all(coeffs > 0.0)


@pytest.mark.parametrize("u", [0.5, -0.8])
def test_maclaurin_partial_sums_converge_to_closed_form(u):
    p0, c0 = kappa_maclaurin_coeffs("kappa0", 200)
    p1, c1 = kappa_maclaurin_coeffs("kappa1", 200)
    assert np.sum(c0 * u ** p0.astype(float)) == pytest.approx(kappa0(u), abs=1e-9)
    assert np.sum(c1 * u ** p1.astype(float)) == pytest.approx(kappa1(u), abs=1e-9)


def test_maclaurin_rejects_bad_args():
    with pytest.raises(ContractViolationError):
        kappa_maclaurin_coeffs("kappa0", 0)
    with pytest.raises(ContractViolationError):
        kappa_maclaurin_coeffs("kappa2", 3)


# ------------------------------------------------- spec / kernel matrix ----


def test_analytic_grams_are_positive_definite():
    rng = np.random.default_rng(23)
    X = rng.uniform(-1.0, 1.0, size=(12, 2))
    for spec in (
        AnalyticKernelSpec(family="fcntk", depth=3),
        AnalyticKernelSpec(family="fcntk", depth=3, bias_mode="unit"),
        AnalyticKernelSpec(family="resntk", depth=2, scale_a=1.0),
    ):
        K = spec.gram(X)
        assert K.provenance == "analytic"
        assert K.n == 12
        assert sym_eig_min(K.entries) > 0.0


def test_spec_value_matches_gram():
    spec = AnalyticKernelSpec(family="resntk", depth=2, scale_a=0.5)
    X = np.array([[0.1, 0.2], [-0.3, 0.7]])
    G = spec.gram(X).entries
    assert spec.value(X[0], X[1]) == pytest.approx(G[0, 1], abs=1e-12)


def test_spec_validation():
    with pytest.raises(ContractViolationError):
        AnalyticKernelSpec(family="ntk", depth=1)
    with pytest.raises(ContractViolationError):
        AnalyticKernelSpec(family="fcntk", depth=0)
    with pytest.raises(ContractViolationError):
        AnalyticKernelSpec(family="resntk", depth=1, scale_a=0.0)
    with pytest.raises(ContractViolationError):
        AnalyticKernelSpec(family="fcntk", depth=1, bias_mode="tripled")


def test_kernel_matrix_rejects_asymmetric_entries():
    with pytest.raises(ContractViolationError):
        KernelMatrix(entries=np.array([[1.0, 2.0], [0.0, 1.0]]), provenance="analytic")
    with pytest.raises(ContractViolationError):
        KernelMatrix(entries=np.eye(2), provenance="guessed")


def test_kernel_entries_passthrough():
    M = np.array([[2.0, 1.0], [1.0, 2.0]])
    K = KernelMatrix(entries=M, provenance="empirical", width=4)
    assert kernel_entries(K) is K.entries
    assert np.array_equal(kernel_entries(M), M)
    assert np.array_equal(np.asarray(K), M)
