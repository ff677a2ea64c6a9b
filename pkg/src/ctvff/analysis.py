"""
Steady-state predictors for the CTVFF receiver
==============================================

Closed-form mean forgetting factor, steady-state MSE for a time-invariant
channel and tracking MSE under a random-walk model of the optimum filter,
plus the Monte Carlo estimator of the random-walk perturbation covariance.
All MSE values are linear.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import rbar_batch, scenario_setup, trial_channel, trial_seeds, user_env_vectors

__all__ = [
    "CtvffPrediction",
    "QCovariance",
    "predict_lambda_inf",
    "predict_ss_mse",
    "predict_tracking_mse",
    "predict_ctvff",
    "estimate_q_covariance",
]


@dataclass(frozen=True)
class CtvffPrediction:
    gamma_inf: float
    lambda_inf: float
    ss_mse: float
    tracking_mse: float | None = None
    lambda_inf_unclamped: float | None = None


@dataclass(frozen=True)
class QCovariance:
    Q: np.ndarray
    n_samples: int

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.Q)))


def predict_lambda_inf(delta1, delta2, delta3, xi_min):
    """Steady-state means of the CTVFF statistic and forgetting factor.

    Returns
    -------
    gamma_inf, lambda_inf : float
    """
    if delta1 == 1:
        raise ZeroDivisionError("delta1 = 1 makes the steady-state statistic unbounded")
    a = (1.0 - delta1) * (1.0 + delta3)
    b = delta2 * (1.0 - delta3) * xi_min**2
    return b / a, a / (a + b)


def predict_ss_mse(lambda_inf, sigma0_sq, M, xi_min):
    """Minimum MSE plus the misadjustment of an RLS filter with mean forgetting ``lambda_inf``."""
    return xi_min + (1.0 - lambda_inf) / (1.0 + lambda_inf) * sigma0_sq * M


def predict_tracking_mse(lambda_inf, sigma0_sq, M, xi_min, Rbar, Q):
    """Steady-state MSE with the lag term of a random-walk optimum filter.

    ``Q`` is the covariance of the per-symbol increment of the optimum filter
    (an array or a :class:`QCovariance`).
    """
    if lambda_inf == 1:
        raise ZeroDivisionError("lambda_inf = 1 leaves the lag term unbounded")
    Q = Q.Q if isinstance(Q, QCovariance) else np.asarray(Q)
    lag = float(np.real(np.trace(np.asarray(Rbar) @ Q))) / (1.0 - lambda_inf**2)
    return predict_ss_mse(lambda_inf, sigma0_sq, M, xi_min) + lag


def predict_ctvff(env, delta1, delta2, delta3, Q=None, lambda_bounds=None) -> CtvffPrediction:
    """All predictions for one :class:`~ctvff.signal_model.AnalyticalEnv`.

    With ``lambda_bounds = (lambda_minus, lambda_plus)`` the mean forgetting
    factor is clipped to the interval the receiver itself enforces before it
    enters the MSE expressions; the raw value is kept in
    ``lambda_inf_unclamped``.
    """
    gamma_inf, raw = predict_lambda_inf(delta1, delta2, delta3, env.xi_min)
    lambda_inf = raw if lambda_bounds is None else float(np.clip(raw, *lambda_bounds))
    ss = predict_ss_mse(lambda_inf, env.sigma0_sq, env.M, env.xi_min)
    tr = None
    if Q is not None:
        tr = predict_tracking_mse(lambda_inf, env.sigma0_sq, env.M, env.xi_min, env.Rbar, Q)
    return CtvffPrediction(gamma_inf, lambda_inf, ss, tr, raw)


def estimate_q_covariance(config, n_experiments: int = 1000, n_symbols: int = 1000,
                          seed: int | None = None) -> QCovariance:
    """Sample covariance of ``q(i) = w0(i) - w0(i-1)`` over independent channels.

    Every experiment draws its own fading trajectory and ``w0(i)`` is the MMSE
    filter of the covariance at symbol ``i``; each symbol of each experiment
    contributes one increment. The set of active users is held at its final
    state so that only channel motion moves ``w0``; user entries and the
    missing ISI before the first symbol are not part of the random walk.
    A static channel gives exactly zero.
    """
    M = config.M
    if config.f_dT == 0:
        return QCovariance(np.zeros((M, M), dtype=complex), 0)
    setup = scenario_setup(config)
    seeds = trial_seeds(config.seed if seed is None else seed, n_experiments, namespace=1)
    acc = np.zeros((M, M), dtype=complex)
    count = 0
    activity = setup.active_at(config.total_symbols)
    for start in range(0, n_experiments, 250):
        H = np.stack([trial_channel(config, ss, n_symbols) for ss in seeds[start:start + 250]])
        w_prev = None
        for i in range(1, n_symbols + 1):
            pieces = user_env_vectors(setup, H[:, i - 1], H[:, i], H[:, i + 1])
            Rbar, s = rbar_batch(setup, *pieces, activity)
            w0 = np.linalg.solve(Rbar, s[..., None])[..., 0]
            if w_prev is not None:
                q = w0 - w_prev
                acc += np.einsum("bi,bj->ij", q, q.conj())
                count += q.shape[0]
            w_prev = w0
    Q = acc / count
    return QCovariance(0.5 * (Q + Q.conj().T), count)
