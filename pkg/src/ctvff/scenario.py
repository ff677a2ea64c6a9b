"""Per-scenario constants and per-trial random data, batched over trials."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ScenarioConfig
from .signal_model import (build_constraint_matrix, channel_trajectory, env_from_signatures,
                           gen_spreading_codes, load_codes, snr_to_noise_var)

__all__ = [
    "ScenarioSetup",
    "scenario_setup",
    "trial_seeds",
    "trial_channel",
    "trial_symbols",
    "trial_noise",
    "user_env_vectors",
    "rbar_batch",
    "env_at",
    "synth_batch",
    "trial_received",
]

# spawn-key namespaces of the per-trial random streams
_CHANNEL, _NOISE, _SYMBOLS = 0, 1, 2


@dataclass(frozen=True)
class ScenarioSetup:
    config: ScenarioConfig
    codes: list
    C: np.ndarray            # (K, M, L_p)
    amplitudes: np.ndarray   # (K,)
    sigma_sq: float
    entry: np.ndarray        # (K,) first active symbol per user

    @property
    def N(self) -> int:
        return self.config.N

    @property
    def M(self) -> int:
        return self.config.M

    @property
    def K(self) -> int:
        return self.amplitudes.size

    def active(self, j) -> np.ndarray:
        """Users transmitting at symbol ``j``."""
        return self.entry <= j

    def active_at(self, i):
        """Activity at symbols ``i-1``, ``i`` and ``i+1``."""
        return self.active(i - 1), self.active(i), self.active(i + 1)


def scenario_setup(config: ScenarioConfig) -> ScenarioSetup:
    K = config.K_total
    if config.code_file:
        codes = load_codes(config.code_file)
        if len(codes) < K or codes[0].N != config.N:
            raise ValueError(f"{config.code_file} must hold at least {K} codes of length {config.N}")
        codes = codes[:K]
    else:
        codes = gen_spreading_codes(K, config.N, config.seed)
    C = np.array([build_constraint_matrix(c, config.L_p) for c in codes]).astype(complex)
    amps = 10.0 ** (np.asarray(config.all_power_offsets_db(), dtype=float) / 20.0)
    return ScenarioSetup(config, codes, C, amps, snr_to_noise_var(config.snr_db),
                         np.asarray(config.entry_symbols()))


def trial_seeds(seed, n: int, namespace: int = 0) -> list[np.random.SeedSequence]:
    """Decorrelated child seeds, one per trial, independent of ``n``."""
    return [np.random.SeedSequence(seed, spawn_key=(namespace, j)) for j in range(n)]


def _stream(ss: np.random.SeedSequence, *key) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(ss.entropy, spawn_key=ss.spawn_key + key))


def trial_channel(config: ScenarioConfig, ss, n_symbols: int | None = None) -> np.ndarray:
    """Channel gains ``h(0) .. h(T+1)`` of one trial, ``(T+2, L_p)``."""
    T = config.total_symbols if n_symbols is None else n_symbols
    return channel_trajectory(config.profile_db, config.f_dT, T, _stream(ss, _CHANNEL))


def trial_symbols(setup: ScenarioSetup, ss, n_symbols: int | None = None) -> np.ndarray:
    """Symbols ``b_k(0) .. b_k(T+1)``, ``(K, T+2)``, zero before a user enters.

    Each user has its own stream so adding users leaves the others unchanged.
    """
    T = setup.config.total_symbols if n_symbols is None else n_symbols
    out = np.empty((setup.K, T + 2))
    j = np.arange(T + 2)
    for k in range(setup.K):
        b = _stream(ss, _SYMBOLS, k).choice([-1.0, 1.0], size=T + 2)
        out[k] = np.where(j >= setup.entry[k], b, 0.0)
    return out


def trial_noise(setup: ScenarioSetup, ss, n_symbols: int | None = None) -> np.ndarray:
    T = setup.config.total_symbols if n_symbols is None else n_symbols
    rng = _stream(ss, _NOISE)
    scale = np.sqrt(setup.sigma_sq / 2)
    return scale * (rng.standard_normal((T, setup.M)) + 1j * rng.standard_normal((T, setup.M)))


def user_env_vectors(setup: ScenarioSetup, h_prev, h, h_next):
    """Effective signatures and ISI vectors of all users.

    Channel arguments are ``(..., L_p)``; returns three ``(..., K, M)`` arrays:
    ``C_k h``, the tail of the previous symbol ``Hp p_k`` and the head of the
    next symbol ``Hs p_k``.
    """
    N, L = setup.N, setup.config.L_p
    sig = np.einsum("kml,...l->...km", setup.C, h)
    tails = np.zeros_like(sig)
    heads = np.zeros_like(sig)
    if L > 1:
        tails[..., : L - 1] = np.einsum("kml,...l->...km", setup.C, h_prev)[..., N:]
        heads[..., N:] = np.einsum("kml,...l->...km", setup.C, h_next)[..., : L - 1]
    return sig, tails, heads


def rbar_batch(setup: ScenarioSetup, sig, tails, heads, activity):
    """Covariance and cross-correlation for a batch of channel snapshots.

    ``activity`` is the triple returned by :meth:`ScenarioSetup.active_at`.
    """
    M = setup.M
    a2 = setup.amplitudes**2
    Rbar = np.broadcast_to(setup.sigma_sq * np.eye(M, dtype=complex), sig.shape[:-2] + (M, M)).copy()
    act_prev, act, act_next = activity
    for k in range(setup.K):
        for v, on in ((sig[..., k, :], act[k]), (tails[..., k, :], act_prev[k]),
                      (heads[..., k, :], act_next[k])):
            if on:
                Rbar += a2[k] * v[..., :, None] * v[..., None, :].conj()
    s = setup.amplitudes[0] * sig[..., 0, :]
    return Rbar, s


def env_at(setup: ScenarioSetup, h_prev, h, h_next, i: int):
    """Exact :class:`AnalyticalEnv` of the desired user at symbol ``i``."""
    sig, tails, heads = user_env_vectors(setup, h_prev, h, h_next)
    act_prev, act, act_next = setup.active_at(i)
    amps = setup.amplitudes
    return env_from_signatures(sig * act[:, None], tails * act_prev[:, None],
                               heads * act_next[:, None], amps, setup.sigma_sq, 0)


def synth_batch(setup: ScenarioSetup, sig, tails, heads, b_prev, b, b_next, noise):
    """Received vectors ``(..., M)``; users are summed in index order."""
    r = noise.copy()
    for k in range(setup.K):
        a = setup.amplitudes[k]
        r += a * (b[..., k, None] * sig[..., k, :] + b_prev[..., k, None] * tails[..., k, :]
                  + b_next[..., k, None] * heads[..., k, :])
    return r


def trial_received(setup: ScenarioSetup, ss, n_symbols: int | None = None) -> np.ndarray:
    """Received vectors ``r(1) .. r(T)`` of one trial, ``(T, M)``."""
    cfg = setup.config
    T = cfg.total_symbols if n_symbols is None else n_symbols
    H = trial_channel(cfg, ss, T)
    S = trial_symbols(setup, ss, T)
    noise = trial_noise(setup, ss, T)
    sig, tails, heads = user_env_vectors(setup, H[:-2], H[1:-1], H[2:])
    return synth_batch(setup, sig, tails, heads, S[:, :-2].T, S[:, 1:-1].T, S[:, 2:].T, noise)
