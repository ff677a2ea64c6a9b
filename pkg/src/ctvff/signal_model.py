"""
DS-CDMA downlink signal model
=============================

Spreading codes, the multipath constraint matrix, Jakes fading, the ISI
matrices of the previous/next symbols, received-vector synthesis and the
exact second-order statistics (covariance, MMSE filter, minimum MSE) of a
frozen channel.

All chip vectors are column-major numpy arrays; complex baseband throughout.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.linalg as la

__all__ = [
    "CodeCapacityError",
    "NotPositiveDefiniteError",
    "SpreadingCode",
    "ChannelState",
    "IsiMatrices",
    "ReceivedVector",
    "AnalyticalEnv",
    "gold_family",
    "code_capacity",
    "gen_spreading_codes",
    "load_codes",
    "save_codes",
    "build_constraint_matrix",
    "normalize_profile",
    "init_channel",
    "jakes_gains",
    "jakes_step",
    "channel_trajectory",
    "build_isi_matrices",
    "synth_received",
    "compute_analytical_env",
    "env_from_signatures",
    "env_from_covariance",
    "filter_mse",
    "snr_to_noise_var",
]

JAKES_OSCILLATORS = 8

# (feedback taps of u, feedback taps of v) per register length; taps are the
# nonzero exponents of the characteristic polynomial except x^0.
_GOLD_POLYS = {
    3: ((3, 1), (3, 2)),
    # no preferred pair exists for degree 4; the reciprocal pair is used
    4: ((4, 1), (4, 3)),
    5: ((5, 2), (5, 4, 3, 2)),
    6: ((6, 1), (6, 5, 2, 1)),
    7: ((7, 3), (7, 3, 2, 1)),
}


class CodeCapacityError(ValueError):
    """More users were requested than the code family can supply."""


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """The received covariance is not positive definite."""


@dataclass(frozen=True)
class SpreadingCode:
    """Unit-norm signature of one user, chips in {+1/sqrt(N), -1/sqrt(N)}."""

    chips: np.ndarray
    user_index: int
    random_fallback: bool = False

    def __post_init__(self):
        if self.chips.ndim != 1 or abs(np.linalg.norm(self.chips) - 1.0) > 1e-12:
            raise ValueError("a spreading code must be a unit-norm vector")

    @property
    def N(self) -> int:
        return self.chips.shape[0]


@dataclass(frozen=True)
class ChannelState:
    """Multipath gains around symbol ``time`` plus the Jakes oscillator state.

    ``h`` holds the gains of the current symbol, ``h_prev``/``h_next`` those of
    the neighbouring symbols (needed for the ISI terms).
    """

    h: np.ndarray
    h_prev: np.ndarray
    h_next: np.ndarray
    power_profile: np.ndarray
    f_dT: float
    doppler: np.ndarray = field(repr=False)
    phases: np.ndarray = field(repr=False)
    time: int = 0

    @property
    def L_p(self) -> int:
        return self.h.shape[0]


@dataclass(frozen=True)
class IsiMatrices:
    Hp: np.ndarray
    Hs: np.ndarray


@dataclass(frozen=True)
class ReceivedVector:
    r: np.ndarray
    symbols: np.ndarray  # (K, 3): b(i-1), b(i), b(i+1)


@dataclass(frozen=True)
class AnalyticalEnv:
    """Exact second-order description of a frozen scenario for one user.

    Attributes
    ----------
    Rbar : (M, M) complex
        Covariance of the received vector.
    s : (M,) complex
        Cross-correlation with the desired symbol, ``A_k C_k h``.
    signature : (M,) complex
        Effective spreading code ``C_k h`` of the desired user.
    w0 : (M,) complex
        MMSE filter.
    xi_min, sigma0_sq : float
        Minimum MSE and the variance of the measurement error at ``w0``.
    """

    Rbar: np.ndarray
    s: np.ndarray
    signature: np.ndarray
    w0: np.ndarray
    xi_min: float
    sigma0_sq: float
    amplitudes: np.ndarray
    k_desired: int = 0
    sigma_sq: float = 0.0

    @property
    def M(self) -> int:
        return self.s.shape[0]


# ---------------------------------------------------------------------------
# spreading codes
# ---------------------------------------------------------------------------

def _m_sequence(taps, n):
    reg = [1] * n
    out = np.empty(2**n - 1, dtype=np.int8)
    for j in range(out.size):
        out[j] = reg[-1]
        fb = 0
        for t in taps:
            fb ^= reg[t - 1]
        reg = [fb] + reg[:-1]
    return out


def gold_family(N: int) -> np.ndarray:
    """Binary (0/1) Gold-like family of length ``N = 2**n - 1``.

    Rows are ``u``, ``v`` and ``u xor shift(v, j)`` for ``j = 0 .. N-1``,
    i.e. ``N + 2`` sequences.
    """
    n = int(round(np.log2(N + 1)))
    if 2**n - 1 != N or n not in _GOLD_POLYS:
        raise ValueError(f"no shift-register family for N={N}")
    pu, pv = _GOLD_POLYS[n]
    u = _m_sequence(pu, n)
    v = _m_sequence(pv, n)
    rows = [u, v] + [u ^ np.roll(v, -j) for j in range(N)]
    return np.array(rows, dtype=np.int8)


def code_capacity(N: int) -> int:
    """Number of codes available at length ``N`` (``N + 2`` for Gold lengths)."""
    try:
        return gold_family(N).shape[0]
    except ValueError:
        return 2**N


def gen_spreading_codes(K: int, N: int, seed: int = 0) -> list[SpreadingCode]:
    """Draw ``K`` distinct unit-norm codes of length ``N``.

    Gold lengths use the shift-register family in a seed-dependent order; the
    first ``K`` codes do not depend on ``K``, so adding users keeps the codes
    of the existing ones. Other lengths fall back to random +-1 codes and set
    ``random_fallback`` on every returned code.
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    if K < 1:
        raise ValueError("K must be at least 1")
    rng = np.random.default_rng(seed)
    try:
        fam = gold_family(N)
    except ValueError:
        fam = None
    if fam is not None:
        if K > fam.shape[0]:
            raise CodeCapacityError(
                f"K={K} exceeds the {fam.shape[0]} codes available for N={N}")
        order = rng.permutation(fam.shape[0])[:K]
        bipolar = 1.0 - 2.0 * fam[order]
        fallback = False
    else:
        if K > 2**N:
            raise CodeCapacityError(f"K={K} exceeds 2**N for N={N}")
        warnings.warn(f"no Gold family for N={N}; using random codes", stacklevel=2)
        rows, seen = [], set()
        while len(rows) < K:
            c = rng.choice([-1.0, 1.0], size=N)
            key = c.tobytes()
            if key not in seen:
                seen.add(key)
                rows.append(c)
        bipolar = np.array(rows)
        fallback = True
    return [SpreadingCode(row / np.sqrt(N), k, fallback) for k, row in enumerate(bipolar)]


def load_codes(path) -> list[SpreadingCode]:
    """Read codes from a text file, one code per line as +-1 integers."""
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        chips = np.array([int(tok) for tok in line.split()], dtype=float)
        if not np.all(np.abs(chips) == 1):
            raise ValueError(f"chips must be +1 or -1: {line!r}")
        rows.append(chips)
    if not rows:
        raise ValueError(f"no codes in {path}")
    if len({r.size for r in rows}) != 1:
        raise ValueError("all codes must have the same length")
    return [SpreadingCode(r / np.sqrt(r.size), k) for k, r in enumerate(rows)]


def save_codes(codes, path) -> None:
    lines = [" ".join(str(int(v)) for v in np.sign(c.chips)) for c in codes]
    Path(path).write_text("\n".join(lines) + "\n")


def build_constraint_matrix(code, L_p: int) -> np.ndarray:
    """``M x L_p`` matrix whose column ``j`` is the code delayed by ``j`` chips."""
    p = code.chips if isinstance(code, SpreadingCode) else np.asarray(code)
    N = p.shape[0]
    C = np.zeros((N + L_p - 1, L_p), dtype=p.dtype)
    for j in range(L_p):
        C[j:j + N, j] = p
    return C


# ---------------------------------------------------------------------------
# fading channel
# ---------------------------------------------------------------------------

def normalize_profile(profile_db) -> np.ndarray:
    """Path amplitudes from a power profile in dB, scaled to unit total power."""
    p = np.sqrt(10.0 ** (np.asarray(profile_db, dtype=float) / 10.0))
    return p / np.sqrt(np.sum(p**2))


def jakes_gains(doppler: np.ndarray, phases: np.ndarray, f_dT: float, times) -> np.ndarray:
    """Sum-of-sinusoids fading gains ``alpha_f(t)``.

    ``doppler`` holds ``cos(theta_n)`` per path and oscillator. Returns an
    array of shape ``times.shape + (L_p,)``. A zero Doppler gives the
    deterministic gain 1 (time-invariant channel).
    """
    t = np.asarray(times, dtype=float)
    L_p, n_osc = doppler.shape
    if f_dT == 0:
        return np.ones(t.shape + (L_p,), dtype=complex)
    arg = 2 * np.pi * f_dT * t[..., None, None] * doppler + phases
    return np.exp(1j * arg).sum(axis=-1) / np.sqrt(n_osc)


def _oscillators(L_p, rng, n_osc=JAKES_OSCILLATORS):
    # evenly spaced arrival angles with one random rotation per path
    offset = rng.uniform(0, 1, size=(L_p, 1))
    theta = 2 * np.pi * (np.arange(n_osc) + offset) / n_osc
    phases = rng.uniform(-np.pi, np.pi, size=(L_p, n_osc))
    return np.cos(theta), phases


def init_channel(profile_db, f_dT: float, rng: np.random.Generator, time: int = 0,
                 n_osc: int = JAKES_OSCILLATORS) -> ChannelState:
    if f_dT < 0:
        raise ValueError("f_dT must be nonnegative")
    p = normalize_profile(profile_db)
    doppler, phases = _oscillators(p.size, rng, n_osc)
    a = jakes_gains(doppler, phases, f_dT, [time - 1, time, time + 1])
    return ChannelState(h=p * a[1], h_prev=p * a[0], h_next=p * a[2], power_profile=p,
                        f_dT=f_dT, doppler=doppler, phases=phases, time=time)


def jakes_step(state: ChannelState) -> ChannelState:
    """Advance the channel by one symbol."""
    a_next = jakes_gains(state.doppler, state.phases, state.f_dT, state.time + 2)
    return replace(state, h_prev=state.h, h=state.h_next,
                   h_next=state.power_profile * a_next, time=state.time + 1)


def channel_trajectory(profile_db, f_dT: float, n_symbols: int,
                       rng: np.random.Generator, n_osc: int = JAKES_OSCILLATORS) -> np.ndarray:
    """Gains ``h(i)`` for ``i = 0 .. n_symbols + 1`` as an ``(n_symbols+2, L_p)`` array.

    Draws the same oscillators as :func:`init_channel`, so row ``i`` equals the
    ``h`` of that channel stepped ``i`` times.
    """
    p = normalize_profile(profile_db)
    doppler, phases = _oscillators(p.size, rng, n_osc)
    return p * jakes_gains(doppler, phases, f_dT, np.arange(n_symbols + 2))


def build_isi_matrices(channel: ChannelState, N: int) -> IsiMatrices:
    """ISI matrices of the previous (``Hp``) and next (``Hs``) symbols."""
    L_p = channel.L_p
    M = N + L_p - 1
    Hp = np.zeros((M, N), dtype=complex)
    Hs = np.zeros((M, N), dtype=complex)
    for m in range(M):
        for n in range(N):
            f = m + N - n
            if 1 <= f <= L_p - 1:
                Hp[m, n] = channel.h_prev[f]
            f = m - N - n
            if 0 <= f <= L_p - 2:
                Hs[m, n] = channel.h_next[f]
    return IsiMatrices(Hp, Hs)


# ---------------------------------------------------------------------------
# received signal and exact statistics
# ---------------------------------------------------------------------------

def snr_to_noise_var(snr_db: float, desired_power: float = 1.0) -> float:
    return desired_power * 10.0 ** (-snr_db / 10.0)


def synth_received(codes, channel: ChannelState, symbols, amplitudes, sigma_sq: float,
                   rng: np.random.Generator | None = None) -> ReceivedVector:
    """One received vector from the matrix form of the model.

    ``symbols`` is ``(K, 3)`` with columns ``b(i-1), b(i), b(i+1)``.
    """
    symbols = np.asarray(symbols)
    if not np.all(np.abs(symbols) == 1):
        raise ValueError("symbols must be +1 or -1")
    N = codes[0].N
    L_p = channel.L_p
    isi = build_isi_matrices(channel, N)
    r = np.zeros(N + L_p - 1, dtype=complex)
    for k, code in enumerate(codes):
        A = amplitudes[k]
        C = build_constraint_matrix(code, L_p)
        b_prev, b, b_next = symbols[k]
        r += A * b * (C @ channel.h)
        r += A * b_prev * (isi.Hp @ code.chips) + A * b_next * (isi.Hs @ code.chips)
    if sigma_sq > 0:
        if rng is None:
            raise ValueError("a random generator is needed when sigma_sq > 0")
        r += np.sqrt(sigma_sq / 2) * (rng.standard_normal(r.size) + 1j * rng.standard_normal(r.size))
    return ReceivedVector(r, symbols)


def _hpd_solve(Rbar, rhs):
    try:
        c = la.cho_factor(Rbar, lower=True)
    except la.LinAlgError as exc:
        raise NotPositiveDefiniteError("received covariance is not positive definite") from exc
    return la.cho_solve(c, rhs)


def env_from_signatures(signatures, tails, heads, amplitudes, sigma_sq, k_desired=0):
    """Build an :class:`AnalyticalEnv` from per-user effective vectors.

    ``signatures[k] = C_k h``, ``tails[k] = Hp p_k`` and ``heads[k] = Hs p_k``,
    each ``(K, M)``.
    """
    signatures = np.asarray(signatures)
    amplitudes = np.asarray(amplitudes, dtype=float)
    M = signatures.shape[1]
    Rbar = sigma_sq * np.eye(M, dtype=complex)
    for k in range(signatures.shape[0]):
        a2 = amplitudes[k] ** 2
        for v in (signatures[k], tails[k], heads[k]):
            Rbar += a2 * np.outer(v, v.conj())
    sig = signatures[k_desired]
    return env_from_covariance(Rbar, amplitudes[k_desired] * sig, sig, amplitudes,
                               sigma_sq, k_desired)


def env_from_covariance(Rbar, s, signature, amplitudes=None, sigma_sq=0.0, k_desired=0):
    """Complete an :class:`AnalyticalEnv` from a covariance and cross-correlation."""
    Rbar = 0.5 * (Rbar + Rbar.conj().T)
    w0 = _hpd_solve(Rbar, s)
    xi_min = 1.0 - float(np.real(np.vdot(s, w0)))
    sigma0_sq = float(1.0 - 2.0 * np.real(np.vdot(w0, s)) + np.real(np.vdot(w0, Rbar @ w0)))
    amps = np.ones(1) if amplitudes is None else np.asarray(amplitudes, dtype=float)
    return AnalyticalEnv(Rbar=Rbar, s=s, signature=signature, w0=w0, xi_min=xi_min,
                         sigma0_sq=sigma0_sq, amplitudes=amps,
                         k_desired=k_desired, sigma_sq=sigma_sq)


def compute_analytical_env(codes, channel: ChannelState, amplitudes, sigma_sq: float,
                           k_desired: int = 0) -> AnalyticalEnv:
    """Covariance, MMSE filter and minimum MSE for the channel frozen at ``channel``."""
    L_p = channel.L_p
    isi = build_isi_matrices(channel, codes[0].N)
    sig = np.array([build_constraint_matrix(c, L_p) @ channel.h for c in codes])
    tails = np.array([isi.Hp @ c.chips for c in codes])
    heads = np.array([isi.Hs @ c.chips for c in codes])
    return env_from_signatures(sig, tails, heads, amplitudes, sigma_sq, k_desired)


def filter_mse(w, env: AnalyticalEnv) -> float:
    """``E|b - w^H r|^2`` of a fixed filter in ``env``."""
    w = np.asarray(w)
    return float(1.0 - 2.0 * np.real(np.vdot(w, env.s)) + np.real(np.vdot(w, env.Rbar @ w)))
