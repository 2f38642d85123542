"""Linear and successive multi-user detection front ends, WL and CL.

Widely linear (WL) receivers operate on the real stacked channel H
(2M x N, from :func:`wlmimo.random_matrix.wl_transform`) and see 2M virtual
receive dimensions; conventional linear (CL) receivers operate on the
complex channel itself.  Per-user post-detection SINRs:

    WL-ZF:    gamma_n = 2 snr xi_n / [(H'H)^-1]_nn
                      = 2 snr xi_n h_n' Pperp_n h_n
    WL-MMSE:  gamma_n = 2 snr xi_n / [(H'H + Psi^-1/(2 snr))^-1]_nn - 1
                      = 2 snr xi_n h_n' Pperp~_n h_n
    CL-ZF:    gamma_n = snr xi_n / [(Hb^H Hb)^-1]_nn
    CL-MMSE:  gamma_n = snr xi_n / [(Hb^H Hb + Psi^-1/snr)^-1]_nn - 1

where h_n is column n, and Pperp_n projects onto the orthogonal complement
of the remaining columns (the MMSE variant uses the regularized resolvent
instead of the exact projector).  Both published forms of each SINR are
evaluated by the reference functions and must agree to 1e-9 relative; the
batched helpers used inside Monte Carlo loops compute only the Gram form.

SIC variants decode greedily by largest SINR (ties to the lowest user
index), assume genie-aided cancellation, and recompute the detector from
scratch on the remaining columns after every stage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ReceiverSpec",
    "SinrReport",
    "detection_matrix",
    "zf_sinr",
    "mmse_sinr",
    "cl_sinr",
    "sic_sinr_stages",
    "batched_tagged_sinr",
]

DUAL_FORM_RTOL = 1e-9

FAMILIES = ("wl", "cl")
CRITERIA = ("zf", "mmse")


@dataclass(frozen=True)
class ReceiverSpec:
    """Which detector to run: family x criterion, optionally with SIC."""

    family: str
    criterion: str
    sic: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}")
        if self.criterion not in CRITERIA:
            raise ValueError(f"criterion must be one of {CRITERIA}")

    @property
    def label(self) -> str:
        name = f"{self.family}-{self.criterion}".upper()
        return name + "-SIC" if self.sic else name

    def max_users(self, m_rx: int) -> int:
        return 2 * m_rx if self.family == "wl" else m_rx


def _check_dims(rx: ReceiverSpec, h: np.ndarray, xi: np.ndarray) -> None:
    n = h.shape[-1]
    if xi.shape[-1] != n:
        raise ValueError("xi length does not match the user count")
    rows = h.shape[-2]
    m_rx = rows // 2 if rx.family == "wl" else rows
    if rx.family == "wl":
        if np.iscomplexobj(h):
            raise TypeError("WL receivers expect the real stacked channel")
        if rows % 2 != 0:
            raise ValueError("stacked channel must have an even row count")
    elif not np.iscomplexobj(h):
        raise TypeError("CL receivers expect the complex channel")
    if n > rx.max_users(m_rx):
        raise ValueError(
            f"{rx.label} cannot separate {n} users with {m_rx} antennas"
        )


def detection_matrix(
    h: np.ndarray, xi: np.ndarray, snr: float, rx: ReceiverSpec
) -> np.ndarray:
    """Receive filter W; the soft estimate is W' y (WL) or W^H y (CL).

    ZF:    W = A (A* A)^-1,                A = H Psi^(1/2)
    MMSE:  W = A (A* A + c I)^-1,          c = 1/(2 snr) WL, 1/snr CL
    """
    h = np.asarray(h)
    xi = np.asarray(xi, dtype=float)
    _check_dims(rx, h, xi)
    if snr <= 0:
        raise ValueError("snr must be positive")
    a = h * np.sqrt(xi)
    gram = a.conj().T @ a
    if rx.criterion == "mmse":
        c = 1.0 / (2.0 * snr) if rx.family == "wl" else 1.0 / snr
        gram = gram + c * np.eye(gram.shape[0])
    return a @ np.linalg.inv(gram)


def _gram_diag_inv(gram: np.ndarray) -> np.ndarray:
    """Diagonal of gram^-1 (real part for complex input)."""
    inv = np.linalg.inv(gram)
    return np.real(np.diagonal(inv, axis1=-2, axis2=-1))


def _projector_quad(h: np.ndarray, ridge: np.ndarray | None) -> np.ndarray:
    """q_n = h_n* Pperp_n h_n for every n, optionally regularized.

    `ridge` holds the per-user diagonal loading added to the interferers'
    Gram matrix (None for the exact ZF projector).
    """
    n = h.shape[1]
    out = np.empty(n)
    for i in range(n):
        hn = h[:, i]
        others = np.delete(h, i, axis=1)
        if others.shape[1] == 0:
            out[i] = float(np.real(hn.conj() @ hn))
            continue
        gram = others.conj().T @ others
        if ridge is not None:
            gram = gram + np.diag(np.delete(ridge, i))
        coef = np.linalg.solve(gram, others.conj().T @ hn)
        out[i] = float(np.real(hn.conj() @ hn - (others.conj().T @ hn).conj() @ coef))
    return out


def _dual_check(a: np.ndarray, b: np.ndarray, what: str) -> None:
    if not np.allclose(a, b, rtol=DUAL_FORM_RTOL, atol=1e-9):
        worst = float(np.max(np.abs(a - b) / np.maximum(np.abs(a), 1e-300)))
        raise ArithmeticError(
            f"{what}: matrix-inverse and projector forms disagree (rel {worst:.2e})"
        )


def zf_sinr(
    h: np.ndarray, xi: np.ndarray, snr: float, n: int | None = None
) -> np.ndarray | float:
    """WL-ZF per-user SINR (all users, or just user `n`).

    Evaluates both the Gram-inverse and projector forms and insists they
    agree to 1e-9 relative before returning.
    """
    h = np.asarray(h)
    xi = np.asarray(xi, dtype=float)
    _check_dims(ReceiverSpec("wl", "zf"), h, xi)
    h = h.astype(float, copy=False)
    if snr <= 0:
        raise ValueError("snr must be positive")
    gram = h.T @ h
    by_inverse = 2.0 * snr * xi / _gram_diag_inv(gram)
    by_projector = 2.0 * snr * xi * _projector_quad(h, None)
    _dual_check(by_inverse, by_projector, "WL-ZF SINR")
    return by_inverse if n is None else float(by_inverse[n])


def mmse_sinr(
    h: np.ndarray, xi: np.ndarray, snr: float, n: int | None = None
) -> np.ndarray | float:
    """WL-MMSE per-user SINR, clamped at zero.

    Dual evaluation as in :func:`zf_sinr`; the resolvent form subtracts 1
    and can go microscopically negative, hence the clamp.
    """
    h = np.asarray(h)
    xi = np.asarray(xi, dtype=float)
    _check_dims(ReceiverSpec("wl", "mmse"), h, xi)
    h = h.astype(float, copy=False)
    if snr <= 0:
        raise ValueError("snr must be positive")
    ridge = 1.0 / (2.0 * snr * xi)
    gram = h.T @ h + np.diag(ridge)
    by_inverse = 2.0 * snr * xi / _gram_diag_inv(gram) - 1.0
    by_projector = 2.0 * snr * xi * _projector_quad(h, ridge)
    _dual_check(by_inverse, by_projector, "WL-MMSE SINR")
    out = np.maximum(by_inverse, 0.0)
    return out if n is None else float(out[n])


def cl_sinr(
    hbar: np.ndarray,
    xi: np.ndarray,
    snr: float,
    criterion: str = "zf",
    n: int | None = None,
) -> np.ndarray | float:
    """CL-ZF / CL-MMSE per-user SINR on the complex channel."""
    hbar = np.asarray(hbar)
    xi = np.asarray(xi, dtype=float)
    rx = ReceiverSpec("cl", criterion)
    _check_dims(rx, hbar, xi)
    if snr <= 0:
        raise ValueError("snr must be positive")
    if criterion == "zf":
        gram = hbar.conj().T @ hbar
        by_inverse = snr * xi / _gram_diag_inv(gram)
        by_projector = snr * xi * _projector_quad(hbar, None)
    else:
        ridge = 1.0 / (snr * xi)
        gram = hbar.conj().T @ hbar + np.diag(ridge)
        by_inverse = snr * xi / _gram_diag_inv(gram) - 1.0
        by_projector = snr * xi * _projector_quad(hbar, ridge)
    _dual_check(by_inverse, by_projector, f"CL-{criterion.upper()} SINR")
    out = np.maximum(by_inverse, 0.0) if criterion == "mmse" else by_inverse
    return out if n is None else float(out[n])


@dataclass(frozen=True)
class SinrReport:
    """Outcome of a SIC run: decode order and each user's stage SINR."""

    sinr: np.ndarray    # (N,) SINR user n saw at the stage it was decoded
    order: np.ndarray   # (N,) user indices in decode order

    def __post_init__(self):
        if sorted(self.order.tolist()) != list(range(len(self.order))):
            raise ValueError("decode order must be a permutation of the users")


def _stage_sinrs(h, xi, snr, rx) -> np.ndarray:
    """Per-user SINRs of the configured (non-SIC) criterion, batched-free."""
    if rx.family == "wl":
        fn = zf_sinr if rx.criterion == "zf" else mmse_sinr
        return np.asarray(fn(h, xi, snr))
    return np.asarray(cl_sinr(h, xi, snr, rx.criterion))


def sic_sinr_stages(
    h: np.ndarray, xi: np.ndarray, snr: float, rx: ReceiverSpec
) -> SinrReport:
    """Greedy genie-aided SIC: largest SINR first, detector rebuilt per stage."""
    h = np.asarray(h)
    xi = np.asarray(xi, dtype=float)
    _check_dims(rx, h, xi)
    n = h.shape[1]
    remaining = list(range(n))
    sinr = np.zeros(n)
    order = []
    while remaining:
        idx = np.array(remaining)
        gams = _stage_sinrs(h[:, idx], xi[idx], snr, rx)
        pick = int(np.argmax(gams))    # argmax breaks ties at the lowest index
        user = remaining[pick]
        sinr[user] = float(gams[pick])
        order.append(user)
        remaining.pop(pick)
    return SinrReport(sinr=sinr, order=np.array(order))


# ---------------------------------------------------------------------------
# Batched engine paths (Gram form only; the dual check lives above)
# ---------------------------------------------------------------------------

def _batched_diag_inv(gram: np.ndarray) -> np.ndarray:
    return np.real(np.linalg.inv(gram).diagonal(axis1=-2, axis2=-1))


def _batched_linear_sinrs(h, xi, snr, rx) -> np.ndarray:
    """(B, N) per-user SINRs for the linear receivers on stacked draws."""
    gram = np.swapaxes(h.conj(), -2, -1) @ h
    pre = 2.0 * snr if rx.family == "wl" else snr
    if rx.criterion == "mmse":
        k = gram.shape[-1]
        ridge = 1.0 / (pre * xi)
        gram = gram.copy()
        step = np.arange(k)
        gram[..., step, step] += ridge
        out = pre * xi / _batched_diag_inv(gram) - 1.0
        return np.maximum(np.real(out), 0.0)
    return pre * xi / _batched_diag_inv(gram)


def batched_tagged_sinr(
    h: np.ndarray, xi: np.ndarray, snr: float, rx: ReceiverSpec
) -> np.ndarray:
    """SINR of user 0 for a stack of draws; SIC uses its decode-stage SINR.

    `h` is (B, 2M, N) real for WL or (B, M, N) complex for CL; `xi` is
    (B, N) or a shared (N,).  Users are exchangeable, so tracking index 0
    is enough for outage statistics.
    """
    h = np.asarray(h)
    xi = np.asarray(xi, dtype=float)
    if h.ndim != 3:
        raise ValueError("expected a (batch, rows, users) channel stack")
    _check_dims(rx, h, np.atleast_2d(xi)[0])
    b, _, n = h.shape
    if xi.ndim == 1:
        xi = np.broadcast_to(xi, (b, n))
    if not rx.sic:
        return _batched_linear_sinrs(h, xi, snr, rx)[:, 0]

    alive = np.ones((b, n), dtype=bool)
    tagged = np.zeros(b)
    for stage in range(n):
        k = n - stage
        cols = np.nonzero(alive)[1].reshape(b, k)
        hs = np.take_along_axis(h, cols[:, None, :], axis=2)
        xs = np.take_along_axis(xi, cols, axis=1)
        gams = _batched_linear_sinrs(hs, xs, snr, rx)
        pick = np.argmax(gams, axis=1)
        rows = np.arange(b)
        picked_user = cols[rows, pick]
        was_tagged = picked_user == 0
        tagged[was_tagged] = gams[rows, pick][was_tagged]
        alive[rows, picked_user] = False
    return tagged
