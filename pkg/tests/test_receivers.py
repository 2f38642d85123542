"""Tests for the linear and SIC detectors.

The reference SINR functions check their own dual algebraic routes on every
call, so simply exercising them over many random instances is already a
strong test; the rest pins shapes, closed-form special cases, marginal
distributions, and the batched engine against the reference ops.
"""

import numpy as np
import pytest
from scipy import stats

from wlmimo.random_matrix import (
    ordered_eig_sym,
    sample_channel,
    wl_transform,
)
from wlmimo.receivers import (
    ReceiverSpec,
    SinrReport,
    batched_tagged_sinr,
    cl_sinr,
    detection_matrix,
    mmse_sinr,
    sic_sinr_stages,
    zf_sinr,
)

SNR = 31.6227766


def random_instance(rng, m_rx=3, n_users=4, family="wl"):
    hbar = sample_channel(m_rx, n_users, rng)
    h = wl_transform(hbar) if family == "wl" else hbar
    xi = rng.uniform(0.2, 3.0, n_users)
    return h, xi


# ---------------------------------------------------------------------------
# Spec plumbing
# ---------------------------------------------------------------------------

def test_receiver_spec_labels():
    assert ReceiverSpec("wl", "zf").label == "WL-ZF"
    assert ReceiverSpec("cl", "mmse", sic=True).label == "CL-MMSE-SIC"


def test_receiver_spec_capacity():
    assert ReceiverSpec("wl", "zf").max_users(3) == 6
    assert ReceiverSpec("cl", "zf").max_users(3) == 3


def test_receiver_spec_validation():
    with pytest.raises(ValueError):
        ReceiverSpec("dual", "zf")
    with pytest.raises(ValueError):
        ReceiverSpec("wl", "lmmse")


def test_family_channel_type_enforced():
    rng = np.random.default_rng(30)
    hbar = sample_channel(2, 2, rng)
    with pytest.raises(TypeError):
        zf_sinr(hbar, np.ones(2), SNR)          # complex into WL
    with pytest.raises(TypeError):
        cl_sinr(wl_transform(hbar), np.ones(2), SNR)   # real into CL
    with pytest.raises(ValueError):
        cl_sinr(hbar, np.ones(3), SNR)          # xi length mismatch
    with pytest.raises(ValueError):
        cl_sinr(sample_channel(2, 3, rng), np.ones(3), SNR)   # N > M


# ---------------------------------------------------------------------------
# Detection matrices
# ---------------------------------------------------------------------------

def test_zf_matrix_inverts_effective_channel():
    rng = np.random.default_rng(31)
    h, xi = random_instance(rng)
    w = detection_matrix(h, xi, SNR, ReceiverSpec("wl", "zf"))
    assert w.shape == h.shape
    assert np.allclose(w.T @ (h * np.sqrt(xi)), np.eye(4), atol=1e-10)


def test_cl_zf_matrix_inverts_effective_channel():
    rng = np.random.default_rng(32)
    hbar, xi = random_instance(rng, family="cl", n_users=3)
    w = detection_matrix(hbar, xi, SNR, ReceiverSpec("cl", "zf"))
    assert np.allclose(w.conj().T @ (hbar * np.sqrt(xi)), np.eye(3), atol=1e-10)


def test_mmse_matrix_approaches_zf_at_high_snr():
    rng = np.random.default_rng(33)
    h, xi = random_instance(rng)
    w_zf = detection_matrix(h, xi, SNR, ReceiverSpec("wl", "zf"))
    w_mmse = detection_matrix(h, xi, 1e12, ReceiverSpec("wl", "mmse"))
    assert np.linalg.norm(w_mmse - w_zf) < 1e-6


# ---------------------------------------------------------------------------
# Reference SINRs
# ---------------------------------------------------------------------------

def test_dual_routes_agree_across_many_instances():
    """Each call cross-checks two algebraic forms; none may raise."""
    rng = np.random.default_rng(34)
    for _ in range(300):
        m = int(rng.integers(2, 5))
        n_wl = int(rng.integers(1, 2 * m + 1))
        h, xi = random_instance(rng, m, n_wl)
        snr = float(rng.uniform(0.1, 1e4))
        zf_sinr(h, xi, snr)
        mmse_sinr(h, xi, snr)
        n_cl = int(rng.integers(1, m + 1))
        hbar, xic = random_instance(rng, m, n_cl, family="cl")
        cl_sinr(hbar, xic, snr, "zf")
        cl_sinr(hbar, xic, snr, "mmse")


def test_orthonormal_columns_give_closed_form_sinr():
    rng = np.random.default_rng(35)
    q, _ = np.linalg.qr(rng.standard_normal((6, 3)))
    xi = np.full(3, 0.8)
    assert zf_sinr(q, xi, SNR) == pytest.approx(2 * SNR * 0.8)
    # with equal powers the MMSE ridge cancels the -1 exactly
    assert mmse_sinr(q, xi, SNR) == pytest.approx(2 * SNR * 0.8)


def test_single_user_sinr_is_matched_filter():
    rng = np.random.default_rng(36)
    hbar = sample_channel(2, 1, rng)
    h = wl_transform(hbar)
    xi = np.array([1.7])
    expect = 2 * SNR * 1.7 * float(h[:, 0] @ h[:, 0])
    assert zf_sinr(h, xi, SNR) == pytest.approx(expect)
    assert cl_sinr(hbar, xi, SNR) == pytest.approx(
        SNR * 1.7 * float(np.abs(hbar[:, 0].conj() @ hbar[:, 0])))


def test_mmse_dominates_zf():
    rng = np.random.default_rng(37)
    for _ in range(50):
        h, xi = random_instance(rng)
        assert np.all(mmse_sinr(h, xi, SNR) >= zf_sinr(h, xi, SNR) - 1e-12)
        hbar, xic = random_instance(rng, 3, 3, family="cl")
        assert np.all(cl_sinr(hbar, xic, SNR, "mmse")
                      >= cl_sinr(hbar, xic, SNR, "zf") - 1e-12)


def test_mmse_never_negative_at_low_snr():
    rng = np.random.default_rng(38)
    for _ in range(50):
        h, xi = random_instance(rng, 2, 4)
        assert np.all(mmse_sinr(h, xi, 1e-4) >= 0.0)


def test_mmse_excess_over_zf_matches_residual_form():
    """At high SNR the MMSE-over-ZF excess converges to xi_n eta_n with
    eta the interference leakage through the inverted interferer Gram."""
    rng = np.random.default_rng(39)
    snr = 1e6
    h, xi = random_instance(rng, 3, 4)
    gap = mmse_sinr(h, xi, snr) - zf_sinr(h, xi, snr)
    for n in range(4):
        rest = np.delete(h, n, axis=1)
        coef = np.linalg.solve(rest.T @ rest, rest.T @ h[:, n])
        eta = float(np.sum(coef ** 2 / np.delete(xi, n)))
        assert gap[n] == pytest.approx(xi[n] * eta, rel=1e-3)

    hbar, xic = random_instance(rng, 3, 3, family="cl")
    gap = cl_sinr(hbar, xic, snr, "mmse") - cl_sinr(hbar, xic, snr, "zf")
    for n in range(3):
        rest = np.delete(hbar, n, axis=1)
        coef = np.linalg.solve(rest.conj().T @ rest, rest.conj().T @ hbar[:, n])
        eta = float(np.sum(np.abs(coef) ** 2 / np.delete(xic, n)))
        assert gap[n] == pytest.approx(xic[n] * eta, rel=1e-3)


@pytest.mark.parametrize("m,n", [(2, 2), (2, 4), (4, 6)])
def test_wl_zf_sinr_marginal_law(m, n):
    """gamma / (snr xi) is chi-square with 2M - N + 1 degrees of freedom."""
    rng = np.random.default_rng(40 + n)
    snr = 10.0
    h = wl_transform(sample_channel(m, n, rng, size=30_000))
    gam = batched_tagged_sinr(h, np.ones(n), snr, ReceiverSpec("wl", "zf"))
    assert stats.kstest(gam / snr, stats.chi2(2 * m - n + 1).cdf).pvalue > 0.01


@pytest.mark.parametrize("m,n", [(2, 2), (4, 3)])
def test_cl_zf_sinr_marginal_law(m, n):
    """gamma / (snr xi) is Gamma(M - N + 1) for the conventional receiver."""
    rng = np.random.default_rng(50 + n)
    snr = 10.0
    hbar = sample_channel(m, n, rng, size=30_000)
    gam = batched_tagged_sinr(hbar, np.ones(n), snr, ReceiverSpec("cl", "zf"))
    assert stats.kstest(gam / snr, stats.gamma(m - n + 1).cdf).pvalue > 0.01


def test_gram_inverse_diagonal_spectral_bound():
    # [(H'H)^-1]_nn >= v_n1^2 / lambda_1 keeps only the smallest-eigenvalue
    # term of the spectral expansion; the SIC analysis rests on it
    rng = np.random.default_rng(41)
    h, _ = random_instance(rng, 2, 4)
    gram = h.T @ h
    diag_inv = np.diag(np.linalg.inv(gram))
    eig = ordered_eig_sym(gram)
    bound = eig.vectors[:, 0] ** 2 / eig.values[0]
    assert np.all(diag_inv >= bound - 1e-12)


# ---------------------------------------------------------------------------
# SIC
# ---------------------------------------------------------------------------

def test_sic_first_pick_is_linear_argmax():
    rng = np.random.default_rng(42)
    h, xi = random_instance(rng)
    rep = sic_sinr_stages(h, xi, SNR, ReceiverSpec("wl", "zf", sic=True))
    assert rep.order[0] == int(np.argmax(zf_sinr(h, xi, SNR)))


@pytest.mark.parametrize("family,criterion", [
    ("wl", "zf"), ("wl", "mmse"), ("cl", "zf"), ("cl", "mmse"),
])
def test_sic_stage_sinr_never_below_linear(family, criterion):
    """Cancelling interferers cannot hurt any user's decode-stage SINR."""
    rng = np.random.default_rng(43)
    n = 4 if family == "wl" else 3
    for _ in range(20):
        h, xi = random_instance(rng, 3, n, family=family)
        if family == "wl":
            fn = zf_sinr if criterion == "zf" else mmse_sinr
            linear = np.asarray(fn(h, xi, SNR))
        else:
            linear = np.asarray(cl_sinr(h, xi, SNR, criterion))
        rep = sic_sinr_stages(h, xi, SNR,
                              ReceiverSpec(family, criterion, sic=True))
        assert np.all(rep.sinr >= linear - 1e-9)


def test_sic_tie_breaks_to_lowest_index():
    # standard-basis columns keep every stage SINR bit-identical, so the
    # argmax tie rule is actually exercised
    h = np.eye(8)[:, :4]
    xi = np.ones(4)
    rep = sic_sinr_stages(h, xi, SNR, ReceiverSpec("wl", "zf", sic=True))
    assert rep.order.tolist() == [0, 1, 2, 3]
    assert np.allclose(rep.sinr, 2 * SNR)


def test_sic_single_user():
    rng = np.random.default_rng(45)
    h, xi = random_instance(rng, 2, 1)
    rep = sic_sinr_stages(h, xi, SNR, ReceiverSpec("wl", "zf", sic=True))
    assert rep.order.tolist() == [0]
    assert rep.sinr[0] == pytest.approx(zf_sinr(h, xi, SNR, n=0))


def test_sinr_report_requires_permutation():
    with pytest.raises(ValueError):
        SinrReport(sinr=np.ones(3), order=np.array([0, 0, 2]))


# ---------------------------------------------------------------------------
# Batched engine vs reference ops
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("family", ["wl", "cl"])
@pytest.mark.parametrize("criterion", ["zf", "mmse"])
@pytest.mark.parametrize("sic", [False, True])
def test_batched_tagged_matches_reference(family, criterion, sic):
    rng = np.random.default_rng(46)
    m, n, b = 3, 3, 40
    hbar = sample_channel(m, n, rng, size=b)
    h = wl_transform(hbar) if family == "wl" else hbar
    xi = rng.uniform(0.3, 2.0, (b, n))
    rx = ReceiverSpec(family, criterion, sic=sic)
    got = batched_tagged_sinr(h, xi, SNR, rx)
    for i in range(b):
        if sic:
            expect = sic_sinr_stages(h[i], xi[i], SNR, rx).sinr[0]
        elif family == "wl":
            fn = zf_sinr if criterion == "zf" else mmse_sinr
            expect = fn(h[i], xi[i], SNR, n=0)
        else:
            expect = cl_sinr(h[i], xi[i], SNR, criterion, n=0)
        assert got[i] == pytest.approx(expect, rel=1e-9, abs=1e-12)


def test_batched_shared_profile_broadcasts():
    rng = np.random.default_rng(47)
    h = wl_transform(sample_channel(2, 3, rng, size=10))
    xi = np.array([0.5, 1.0, 2.0])
    got = batched_tagged_sinr(h, xi, SNR, ReceiverSpec("wl", "zf"))
    assert got.shape == (10,)
    assert got[3] == pytest.approx(zf_sinr(h[3], xi, SNR, n=0))


def test_batched_rejects_flat_channel():
    rng = np.random.default_rng(48)
    h = wl_transform(sample_channel(2, 3, rng))
    with pytest.raises(ValueError):
        batched_tagged_sinr(h, np.ones(3), SNR, ReceiverSpec("wl", "zf"))
