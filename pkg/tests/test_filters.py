import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctvff.filters import (CtvffState, GvffState, NumericalDivergenceError, RlsState, SgState,
                           UnsupportedMechanismError, count_extra_ops, ctvff_update, detect,
                           gvff_lambda, gvff_update, rls_step, sg_step)


def _crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def weighted_ls(R, b, lam, w_init, rinv_scale=1.0):
    """Direct solve of the exponentially weighted LS problem including the
    regularization implied by the initial filter and inverse correlation."""
    n, M = R.shape
    A = lam**n / rinv_scale * np.eye(M, dtype=complex)
    p = A @ w_init
    for j in range(n):
        wt = lam ** (n - 1 - j)
        A += wt * np.outer(R[j], R[j].conj())
        p += wt * R[j] * np.conj(b[j])
    return np.linalg.solve(A, p)


def run_rls(R, b, lam, w_init=0.01):
    st_ = RlsState.initial(R.shape[1], w_init=w_init)
    for j in range(R.shape[0]):
        st_, _, _ = rls_step(st_, R[j], b[j], lam)
    return st_


# ---------------------------------------------------------------------------
# RLS
# ---------------------------------------------------------------------------

def test_rls_scalar_hand_case():
    st0 = RlsState(np.zeros(1, dtype=complex), np.eye(1, dtype=complex))
    st1, e, z = rls_step(st0, np.array([1.0]), 1.0, 1.0)
    assert z == 0 and e == 1
    assert np.allclose(st1.gain, [0.5], atol=1e-15)
    assert np.allclose(st1.w, [0.5], atol=1e-15)
    assert np.allclose(st1.Rinv, [[0.5]], atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4), st.sampled_from([0.9, 0.97, 0.99, 1.0]))
def test_rls_equals_weighted_least_squares(seed, M, lam):
    rng = np.random.default_rng(seed)
    R = _crandn(rng, 10, M)
    b = rng.choice([-1.0, 1.0], size=10)
    w = run_rls(R, b, lam).w
    ref = weighted_ls(R, b, lam, np.full(M, 0.01, dtype=complex))
    assert np.linalg.norm(w - ref) <= 1e-8 * np.linalg.norm(ref)


def test_rinv_stays_hermitian_and_gain_identity_holds(rng):
    st_ = RlsState.initial(6)
    for j in range(500):
        r = _crandn(rng, 6)
        st_, _, _ = rls_step(st_, r, 1.0, 0.98)
        assert np.max(np.abs(st_.Rinv - st_.Rinv.conj().T)) < 1e-9
        k = st_.gain
        assert np.linalg.norm(k - st_.Rinv @ r) <= 1e-10 * np.linalg.norm(k)


def test_rls_batched_equals_single(rng):
    R = _crandn(rng, 20, 3, 4)
    b = rng.choice([-1.0, 1.0], size=(20, 3))
    lam = np.array([0.9, 0.95, 1.0])
    batch = RlsState.initial(4, batch=(3,))
    for j in range(20):
        batch, _, _ = rls_step(batch, R[j], b[j], lam)
    for t in range(3):
        single = run_rls(R[:, t], b[:, t], lam[t])
        assert np.allclose(batch.w[t], single.w, atol=1e-13)


def test_rls_divergence_is_flagged():
    st_ = RlsState.initial(2)
    with pytest.raises(NumericalDivergenceError) as exc, np.errstate(invalid="ignore"):
        rls_step(st_, np.array([np.nan, 1.0]), 1.0, 0.99, symbol_index=17)
    assert exc.value.symbol_index == 17


# ---------------------------------------------------------------------------
# CTVFF
# ---------------------------------------------------------------------------

def test_ctvff_hand_case():
    s = CtvffState(0.5, 1.0, 0.5, 0.5, 1.0, gamma=0.1, rho=0.4, prev_abs_err=0.8)
    s2, lam = ctvff_update(s, 1.0)
    assert abs(s2.rho - 0.6) < 1e-15
    assert abs(s2.gamma - 0.41) < 1e-15
    assert abs(lam - 1 / 1.41) < 1e-15 and abs(lam - 0.70922) < 1e-5
    assert s2.prev_abs_err == 1.0
    assert (s2.mult_ops, s2.add_ops) == (7, 3)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 50), min_size=1, max_size=60),
       st.floats(0.01, 0.99), st.floats(1e-5, 10), st.floats(0.01, 0.99))
def test_ctvff_positivity_and_clamping(errors, d1, d2, d3):
    s = CtvffState(d1, d2, d3, 0.9, 0.999)
    for e in errors:
        s, lam = ctvff_update(s, e)
        assert s.gamma >= 0 and s.rho >= 0
        assert 0.9 <= lam <= 0.999


@pytest.mark.parametrize("kw", [dict(delta1=1.0), dict(delta1=0.0), dict(delta2=0.0),
                                dict(delta3=1.0), dict(lambda_minus=0.99, lambda_plus=0.98)])
def test_ctvff_parameter_validation(kw):
    base = dict(delta1=0.9, delta2=0.01, delta3=0.9, lambda_minus=0.98, lambda_plus=0.999)
    base.update(kw)
    with pytest.raises(ValueError):
        CtvffState(**base)


# ---------------------------------------------------------------------------
# GVFF
# ---------------------------------------------------------------------------

def test_gvff_lambda_step_and_truncation():
    s = GvffState(mu=0.1, lambda_minus=0.9, lambda_plus=0.999, lam=0.95,
                  dw_dlambda=np.array([1.0 + 0j, 0.0]), dRinv_dlambda=np.eye(2, dtype=complex))
    r = np.array([2.0 + 0j, 5.0])
    # grad = Re[psi^H r e*] = Re[2 * (0.1 - 0.2j)^*] = 0.2
    _, lam = gvff_lambda(s, r, 0.1 - 0.2j)
    assert abs(lam - (0.95 + 0.1 * 0.2)) < 1e-15
    _, lam = gvff_lambda(s, r, 10.0)
    assert lam == 0.999
    _, lam = gvff_lambda(s, r, -10.0)
    assert lam == 0.9


def test_gvff_mu_zero_keeps_lambda(rng):
    s = GvffState.initial(3, mu=0.0, lambda_minus=0.9, lambda_plus=0.9999, lambda0=0.97)
    rls = RlsState.initial(3)
    for _ in range(50):
        r = _crandn(rng, 3)
        s, lam = gvff_lambda(s, r, 1.0)
        rls, e, _ = rls_step(rls, r, 1.0, lam)
        s, _ = gvff_update(s, rls, r, e)
        assert lam == 0.97


def test_gvff_scalar_derivative_by_quotient_rule():
    # scalar RLS: Rinv(i) = P / (lam + P |r|^2); with S = dP/dlam the quotient
    # rule gives dRinv/dlam = (S lam - P) / (lam + P |r|^2)^2
    P, S, lam, r = 0.7, 0.3, 0.95, 1.3 - 0.4j
    psi, w, b = 0.2 + 0.1j, 0.4 - 0.3j, 1.0
    rls0 = RlsState(np.array([w]), np.array([[P]], dtype=complex))
    rls1, e, _ = rls_step(rls0, np.array([r]), b, lam)
    g = GvffState(mu=0.0, lambda_minus=0.5, lambda_plus=1.0, lam=lam,
                  dw_dlambda=np.array([psi]), dRinv_dlambda=np.array([[S]], dtype=complex))
    g1, _ = gvff_update(g, rls1, np.array([r]), e)
    den = lam + P * abs(r) ** 2
    dP = (S * lam - P) / den**2
    k = P * r / den
    dpsi = psi - k * np.conj(r) * psi + dP * r * np.conj(e)
    assert abs(g1.dRinv_dlambda[0, 0] - dP) < 1e-14
    assert abs(g1.dw_dlambda[0] - dpsi) < 1e-14


def test_gvff_derivatives_match_finite_differences(rng):
    # with a constant forgetting factor the tracked derivatives are the exact
    # sensitivities of w(n) and Rinv(n) to lambda when they start at zero
    M, n, lam, h = 3, 40, 0.95, 1e-6
    R = _crandn(rng, n, M)
    b = rng.choice([-1.0, 1.0], size=n)
    g = GvffState(mu=0.0, lambda_minus=0.5, lambda_plus=1.0, lam=lam,
                  dw_dlambda=np.zeros(M, dtype=complex),
                  dRinv_dlambda=np.zeros((M, M), dtype=complex))
    rls = RlsState.initial(M)
    for j in range(n):
        rls, e, _ = rls_step(rls, R[j], b[j], lam)
        g, _ = gvff_update(g, rls, R[j], e)
    hi, lo = run_rls(R, b, lam + h), run_rls(R, b, lam - h)
    fd_w = (hi.w - lo.w) / (2 * h)
    fd_P = (hi.Rinv - lo.Rinv) / (2 * h)
    assert np.linalg.norm(g.dw_dlambda - fd_w) <= 1e-5 * np.linalg.norm(fd_w)
    assert np.linalg.norm(g.dRinv_dlambda - fd_P) <= 1e-5 * np.linalg.norm(fd_P)


def test_gvff_op_counter_increments(rng):
    M = 16
    g = GvffState.initial(M, 0.001, 0.9, 0.9999)
    rls = RlsState.initial(M)
    r = _crandn(rng, M)
    rls, e, _ = rls_step(rls, r, 1.0, g.lam)
    g, _ = gvff_update(g, rls, r, e)
    assert (g.mult_ops, g.add_ops) == (1858, 1808)


# ---------------------------------------------------------------------------
# SG, detection, counts
# ---------------------------------------------------------------------------

def test_sg_two_steps_by_hand():
    s = SgState(np.array([0.0, 0.0], dtype=complex), step=0.5)
    r1 = np.array([1.0, 1j])
    s, e1, z1 = sg_step(s, r1, 1.0)
    assert z1 == 0 and e1 == 1
    assert np.allclose(s.w, [0.5, 0.5j], atol=1e-14)
    r2 = np.array([1j, 1.0])
    s, e2, z2 = sg_step(s, r2, -1.0)
    # z = w^H r = 0.5 * 1j + (-0.5j) * 1 = 0
    assert abs(z2) < 1e-14 and abs(e2 + 1) < 1e-14
    assert np.allclose(s.w, [0.5 - 0.5j, 0.5j - 0.5], atol=1e-14)


def test_sg_zero_step_leaves_filter(rng):
    s = SgState(_crandn(rng, 4), step=0.0)
    w0 = s.w.copy()
    for _ in range(20):
        s, _, _ = sg_step(s, _crandn(rng, 4), 1.0)
    assert np.array_equal(s.w, w0)


def test_detect_sign_and_tie():
    assert detect(0.0) == 1.0
    assert detect(-0.3 + 5j) == -1.0
    assert np.array_equal(detect(np.array([1e-12, -1e-12, 0j])), [1.0, -1.0, 1.0])


def test_count_extra_ops():
    assert count_extra_ops("ctvff", 17) == (7, 3)
    assert count_extra_ops("gvff", 17) == (7 * 289 + 4 * 17 + 2, 7 * 289 + 17)
    assert count_extra_ops("fixed", 17) == (0, 0)
    with pytest.raises(UnsupportedMechanismError):
        count_extra_ops("mgvff", 17)


def test_single_step_is_fast(rng):
    st_ = RlsState.initial(17)
    r = _crandn(rng, 17)
    t = time.perf_counter()
    for _ in range(1000):
        st_, _, _ = rls_step(st_, r, 1.0, 0.999)
    assert time.perf_counter() - t < 2.0
