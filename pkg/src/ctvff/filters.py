"""
Adaptive receive filters
========================

Exponentially weighted RLS with a pluggable forgetting-factor rule:

* fixed forgetting factor,
* gradient-based variable forgetting factor (GVFF),
* correlated time-averaged variable forgetting factor (CTVFF),

plus the LMS (SG) and Rake baselines and hard-decision detection.

Every state field may carry leading batch dimensions: ``w`` is ``(..., M)``,
``Rinv`` is ``(..., M, M)`` and scalars are ``(...)``. The harness advances
many independent trials at once this way; single-trial use simply omits the
batch axes.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "NumericalDivergenceError",
    "UnsupportedMechanismError",
    "RlsState",
    "FixedFf",
    "GvffState",
    "CtvffState",
    "SgState",
    "rls_step",
    "ctvff_update",
    "gvff_lambda",
    "gvff_update",
    "sg_step",
    "rake_filter",
    "detect",
    "count_extra_ops",
]


class NumericalDivergenceError(FloatingPointError):
    def __init__(self, symbol_index=None, what="RLS state"):
        self.symbol_index = symbol_index
        at = "" if symbol_index is None else f" at symbol {symbol_index}"
        super().__init__(f"non-finite {what}{at}")


class UnsupportedMechanismError(ValueError):
    pass


def _dot(a, b):
    """Batched ``a^H b`` over the last axis."""
    return np.einsum("...m,...m->...", a.conj(), b)


def _matvec(A, x):
    return np.einsum("...ij,...j->...i", A, x)


def _outer(a, b):
    """Batched ``a b^H``."""
    return a[..., :, None] * b[..., None, :].conj()


def _hermitian(A):
    return 0.5 * (A + np.swapaxes(A, -1, -2).conj())


@dataclass(frozen=True)
class RlsState:
    """Receive filter ``w``, inverse correlation ``Rinv`` and the last gain."""

    w: np.ndarray
    Rinv: np.ndarray
    gain: np.ndarray | None = None

    @classmethod
    def initial(cls, M: int, w_init: float = 0.01, rinv_scale: float = 1.0,
                batch: tuple = ()) -> "RlsState":
        w = np.full(batch + (M,), w_init, dtype=complex)
        Rinv = np.broadcast_to(rinv_scale * np.eye(M, dtype=complex), batch + (M, M)).copy()
        return cls(w, Rinv)


@dataclass(frozen=True)
class FixedFf:
    lam: float

    kind = "fixed"


@dataclass(frozen=True)
class CtvffState:
    """Memory of the correlated time-averaged forgetting-factor rule.

    ``prev_abs_err`` is the error magnitude of the previous symbol; ``lam`` is
    the last emitted forgetting factor. ``mult_ops``/``add_ops`` count the
    arithmetic performed by the rule itself.
    """

    delta1: float
    delta2: float
    delta3: float
    lambda_minus: float
    lambda_plus: float
    gamma: np.ndarray | float = 0.0
    rho: np.ndarray | float = 0.0
    prev_abs_err: np.ndarray | float = 0.0
    lam: np.ndarray | float = 1.0
    mult_ops: int = 0
    add_ops: int = 0

    kind = "ctvff"

    def __post_init__(self):
        if not 0 < self.delta1 < 1:
            raise ValueError("delta1 must lie in (0, 1)")
        if not self.delta2 > 0:
            raise ValueError("delta2 must be positive")
        if not 0 < self.delta3 < 1:
            raise ValueError("delta3 must lie in (0, 1)")
        if not 0 < self.lambda_minus <= self.lambda_plus <= 1:
            raise ValueError("need 0 < lambda_minus <= lambda_plus <= 1")


@dataclass(frozen=True)
class GvffState:
    """Gradient forgetting-factor state.

    ``dw_dlambda`` and ``dRinv_dlambda`` are the derivatives of the filter and
    of the inverse correlation with respect to the forgetting factor.
    """

    mu: float
    lambda_minus: float
    lambda_plus: float
    lam: np.ndarray | float
    dw_dlambda: np.ndarray
    dRinv_dlambda: np.ndarray
    mult_ops: int = 0
    add_ops: int = 0

    kind = "gvff"

    @classmethod
    def initial(cls, M: int, mu: float, lambda_minus: float, lambda_plus: float,
                lambda0: float = 0.998, batch: tuple = ()) -> "GvffState":
        if not 0 < lambda_minus <= lambda_plus <= 1:
            raise ValueError("need 0 < lambda_minus <= lambda_plus <= 1")
        return cls(mu=mu, lambda_minus=lambda_minus, lambda_plus=lambda_plus,
                   lam=np.full(batch, float(lambda0)) if batch else float(lambda0),
                   dw_dlambda=np.zeros(batch + (M,), dtype=complex),
                   dRinv_dlambda=np.broadcast_to(np.eye(M, dtype=complex), batch + (M, M)).copy())


@dataclass(frozen=True)
class SgState:
    w: np.ndarray
    step: float = 0.025

    kind = "sg"


# ---------------------------------------------------------------------------
# recursions
# ---------------------------------------------------------------------------

def rls_step(state: RlsState, r, b_ref, lam, symbol_index=None, check=True):
    """One exponentially weighted RLS update.

    Parameters
    ----------
    state : RlsState
        Filter ``w(i-1)`` and ``Rinv(i-1)``.
    r : array_like
        Received vector ``r(i)``.
    b_ref : array_like
        Reference symbol (training symbol or decision).
    lam : float or array_like
        Forgetting factor used at this symbol.
    check : bool
        Raise :class:`NumericalDivergenceError` on non-finite results.

    Returns
    -------
    state : RlsState
        Updated filter, inverse correlation and the gain vector ``k(i)``.
    e : complex
        A-priori error ``b_ref - w(i-1)^H r(i)``.
    z : complex
        Filter output ``w(i-1)^H r(i)`` used for detection.
    """
    r = np.asarray(r, dtype=complex)
    lam = np.asarray(lam, dtype=float)
    z = _dot(state.w, r)
    e = b_ref - z
    u = _matvec(state.Rinv, r)
    denom = lam + np.real(_dot(r, u))
    k = u / denom[..., None]
    w = state.w + k * e.conj()[..., None]
    rH_Rinv = np.einsum("...i,...ij->...j", r.conj(), state.Rinv)
    Rinv = (state.Rinv - k[..., :, None] * rH_Rinv[..., None, :]) / lam[..., None, None]
    Rinv = _hermitian(Rinv)
    if check and not (np.all(np.isfinite(w)) and np.all(np.isfinite(Rinv))):
        raise NumericalDivergenceError(symbol_index)
    return RlsState(w, Rinv, k), e, z


def ctvff_update(state: CtvffState, abs_err):
    """Advance the error-correlation statistics and emit the forgetting factor.

    ``abs_err`` is the magnitude of the current symbol's error; it is paired
    with the stored magnitude of the previous symbol.
    """
    # 7 multiplications and 3 additions, tallied line by line
    rho = state.delta3 * state.rho + (1.0 - state.delta3) * state.prev_abs_err * abs_err  # 3m 1a
    gamma = state.delta1 * state.gamma + state.delta2 * (rho * rho)                       # 3m 1a
    raw = 1.0 / (1.0 + gamma)                                                            # 1m 1a
    lam = np.clip(raw, state.lambda_minus, state.lambda_plus)
    new = replace(state, gamma=gamma, rho=rho, prev_abs_err=abs_err, lam=lam,
                  mult_ops=state.mult_ops + 7, add_ops=state.add_ops + 3)
    return new, lam


def gvff_lambda(state: GvffState, r, e):
    """Gradient step on the forgetting factor, truncated to its bounds.

    Uses the filter derivative of the previous symbol and the a-priori error
    of the current one.
    """
    grad = np.real(_dot(state.dw_dlambda, r) * np.conj(e))
    lam = np.clip(state.lam + state.mu * grad, state.lambda_minus, state.lambda_plus)
    return replace(state, lam=lam), lam


def gvff_update(state: GvffState, rls: RlsState, r, e, symbol_index=None, check=True):
    """Propagate the derivatives through the RLS update that used ``state.lam``.

    ``rls`` must be the state returned by :func:`rls_step` for this symbol, so
    ``rls.gain`` is ``k(i)`` and ``rls.Rinv`` is ``Rinv(i)``.
    """
    r = np.asarray(r, dtype=complex)
    k = rls.gain
    lam = np.asarray(state.lam, dtype=float)[..., None, None]
    P = state.dRinv_dlambda
    # (I - k r^H) P (I - r k^H) expanded to rank-one corrections
    Y = P - _outer(k, np.einsum("...i,...ij->...j", r.conj(), P).conj())
    Y = Y - _outer(_matvec(Y, r), k)
    dP = (Y + _outer(k, k) - rls.Rinv) / lam
    dP = _hermitian(dP)
    psi = state.dw_dlambda
    e_c = np.conj(e)[..., None]
    psi = psi - k * _dot(r, psi)[..., None] + _matvec(dP, r) * e_c
    M = r.shape[-1]
    m, n = count_extra_ops("gvff", M)
    new = replace(state, dw_dlambda=psi, dRinv_dlambda=dP,
                  mult_ops=state.mult_ops + m, add_ops=state.add_ops + n)
    if check and not (np.all(np.isfinite(psi)) and np.all(np.isfinite(dP))):
        raise NumericalDivergenceError(symbol_index, "GVFF derivative")
    return new, state.lam


def sg_step(state: SgState, r, b_ref):
    """Plain LMS update; returns the new state, the a-priori error and the output."""
    r = np.asarray(r, dtype=complex)
    z = _dot(state.w, r)
    e = b_ref - z
    w = state.w + state.step * r * np.conj(e)[..., None]
    return replace(state, w=w), e, z


def rake_filter(env) -> np.ndarray:
    """Matched filter to the desired user's effective signature."""
    return env.signature.copy()


def detect(z):
    """Sign of the real part; an exact zero decides +1."""
    out = np.where(np.real(z) >= 0, 1.0, -1.0)
    return out if out.ndim else float(out)


def count_extra_ops(kind: str, M: int) -> tuple[int, int]:
    """(multiplications, additions) the forgetting-factor rule adds per symbol."""
    if M < 1:
        raise ValueError("M must be positive")
    kind = kind.lower()
    if kind == "ctvff":
        return 7, 3
    if kind == "gvff":
        return 7 * M * M + 4 * M + 2, 7 * M * M + M
    if kind in ("fixed", "sg", "rake"):
        return 0, 0
    raise UnsupportedMechanismError(f"unsupported forgetting-factor mechanism: {kind!r}")
