"""
Experiment harness
==================

Runs a :class:`~ctvff.config.ScenarioConfig`: synthesizes the received signal
(with users entering at event symbols), drives every configured receiver in
training and then decision-directed mode on the same data, and records
per-symbol SINR, MSE and forgetting factor plus the BER of the
decision-directed part. Trials are advanced together as a batch; each trial
draws from its own random streams, so results depend only on the seed.
"""
from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .analysis import CtvffPrediction, estimate_q_covariance, predict_ctvff
from .config import ScenarioConfig
from .filters import (CtvffState, GvffState, RlsState, SgState, ctvff_update,
                      detect, gvff_lambda, gvff_update, rls_step, sg_step)
from .scenario import (rbar_batch, scenario_setup, synth_batch, trial_channel, trial_noise,
                       trial_seeds, trial_symbols, user_env_vectors)
from .signal_model import env_from_covariance

__all__ = [
    "EmptyAverageError",
    "UnsupportedAxisError",
    "TrialTraces",
    "MetricsTrace",
    "SweepTable",
    "SWEEP_AXES",
    "sinr_of",
    "run_trial",
    "run_monte_carlo",
    "steady_state_window",
    "sweep",
    "predict_for_config",
    "write_trace_csv",
    "trace_csv_text",
    "TRACE_COLUMNS",
]

TRACE_COLUMNS = ("symbol", "algorithm", "sinr_db", "mse", "lambda", "mult_ops", "add_ops", "source")
SWEEP_AXES = ("delta1", "delta2", "delta3", "SNR", "K", "f_dT", "lambda")
STEADY_FRACTION = 0.2
_CHUNK = 100
WORKERS_ENV = "CTVFF_WORKERS"
# a filter norm beyond this counts as divergence, like a non-finite entry
DIVERGENCE_NORM = 1e8


class EmptyAverageError(RuntimeError):
    """Every trial of an algorithm diverged; there is nothing to average."""


class UnsupportedAxisError(ValueError):
    pass


def sinr_of(w, env) -> float:
    """Output SINR in dB of a linear filter against the exact covariance.

    Returns ``-inf`` when the filter rejects the desired signal completely and
    ``+inf`` when nothing but the desired signal gets through.
    """
    w = np.asarray(w)
    sig = abs(np.vdot(w, env.s)) ** 2
    total = float(np.real(np.vdot(w, env.Rbar @ w)))
    # signal power at round-off level counts as a rejected signal
    if sig <= (1e-12 * np.linalg.norm(w) * np.linalg.norm(env.s)) ** 2:
        return -np.inf
    rest = total - sig
    if rest <= 1e-14 * total:
        return np.inf
    return 10 * np.log10(sig / rest)


# ---------------------------------------------------------------------------
# receivers, batched over trials
# ---------------------------------------------------------------------------

class _Receiver:
    def __init__(self, alg, M, B):
        self.alg = alg
        self.M, self.B = M, B
        self.reset(np.ones(B, dtype=bool))

    @property
    def ops(self):
        return 0, 0


class _RlsReceiver(_Receiver):
    def reset(self, mask):
        a, M, B = self.alg, self.M, self.B
        if mask.all():
            self.rls = RlsState.initial(M, batch=(B,))
            if a.kind == "ctvff":
                self.ff = CtvffState(a.delta1, a.delta2, a.delta3, a.lambda_minus, a.lambda_plus,
                                     gamma=np.zeros(B), rho=np.zeros(B),
                                     prev_abs_err=np.zeros(B), lam=np.full(B, a.lambda_plus))
            elif a.kind == "gvff":
                self.ff = GvffState.initial(M, a.mu, a.lambda_minus, a.lambda_plus, a.lambda0,
                                            batch=(B,))
            else:
                self.ff = None
            return
        self.rls.w[mask] = 0.01
        self.rls.Rinv[mask] = np.eye(M)
        if a.kind == "ctvff":
            for name in ("gamma", "rho", "prev_abs_err"):
                getattr(self.ff, name)[mask] = 0.0
            self.ff.lam[mask] = a.lambda_plus
        elif a.kind == "gvff":
            self.ff.lam[mask] = a.lambda0
            self.ff.dw_dlambda[mask] = 0.0
            self.ff.dRinv_dlambda[mask] = np.eye(M)

    @property
    def ops(self):
        if self.ff is None:
            return 0, 0
        return self.ff.mult_ops, self.ff.add_ops

    def step(self, r, b_true, training, i, sig0):
        w_used = self.rls.w
        z = np.einsum("bm,bm->b", w_used.conj(), r)
        ref = b_true if training else detect(z)
        e = ref - z
        kind = self.alg.kind
        if kind == "ctvff":
            self.ff, lam = ctvff_update(self.ff, np.abs(e))
        elif kind == "gvff":
            self.ff, lam = gvff_lambda(self.ff, r, e)
        else:
            lam = np.full(self.B, self.alg.lam)
        self.rls, e, _ = rls_step(self.rls, r, ref, lam, i, check=False)
        if kind == "gvff":
            self.ff, _ = gvff_update(self.ff, self.rls, r, e, i, check=False)
        elif kind == "ctvff" and self.alg.error_mode == "a_posteriori":
            post = ref - np.einsum("bm,bm->b", self.rls.w.conj(), r)
            self.ff = replace(self.ff, prev_abs_err=np.abs(post))
        return w_used, z, np.asarray(lam, dtype=float)

    def bad(self):
        bad = ~(np.linalg.norm(self.rls.w, axis=-1) < DIVERGENCE_NORM)
        bad |= ~np.isfinite(self.rls.Rinv).all((-1, -2))
        if self.alg.kind == "gvff":
            bad |= ~np.isfinite(self.ff.dRinv_dlambda).all((-1, -2))
            bad |= ~np.isfinite(self.ff.dw_dlambda).all(-1) | ~np.isfinite(self.ff.lam)
        elif self.alg.kind == "ctvff":
            bad |= ~np.isfinite(self.ff.gamma)
        return bad


class _SgReceiver(_Receiver):
    def reset(self, mask):
        if mask.all():
            self.state = SgState(np.full((self.B, self.M), 0.01, dtype=complex), self.alg.step)
        else:
            self.state.w[mask] = 0.01

    def step(self, r, b_true, training, i, sig0):
        w_used = self.state.w
        z = np.einsum("bm,bm->b", w_used.conj(), r)
        ref = b_true if training else detect(z)
        self.state, _, _ = sg_step(self.state, r, ref)
        return w_used, z, np.full(self.B, np.nan)

    def bad(self):
        return ~(np.linalg.norm(self.state.w, axis=-1) < DIVERGENCE_NORM)


class _RakeReceiver(_Receiver):
    def reset(self, mask):
        pass

    def step(self, r, b_true, training, i, sig0):
        z = np.einsum("bm,bm->b", sig0.conj(), r)
        return sig0, z, np.full(self.B, np.nan)

    def bad(self):
        return np.zeros(self.B, dtype=bool)


def _make_receiver(alg, M, B):
    if alg.kind in ("ctvff", "gvff", "fixed"):
        return _RlsReceiver(alg, M, B)
    if alg.kind == "sg":
        return _SgReceiver(alg, M, B)
    if alg.kind == "rake":
        return _RakeReceiver(alg, M, B)
    raise ValueError(f"unknown algorithm kind {alg.kind!r}")


# ---------------------------------------------------------------------------
# traces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrialTraces:
    """Per-trial arrays: ``sinr`` (linear), ``mse`` and ``lam`` are ``(R, A, T)``."""

    sinr: np.ndarray
    mse: np.ndarray
    lam: np.ndarray
    errors: np.ndarray
    diverged: np.ndarray

    @staticmethod
    def concat(parts):
        return TrialTraces(*(np.concatenate([getattr(p, f) for p in parts])
                             for f in ("sinr", "mse", "lam", "errors", "diverged")))


@dataclass(frozen=True)
class MetricsTrace:
    """Per-symbol metrics averaged over the non-diverged trials.

    ``sinr_db``, ``mse``, ``lam``, ``mult_ops`` and ``add_ops`` are ``(A, T)``
    arrays, one row per algorithm. SINR is averaged in the linear domain and
    converted to dB afterwards. ``ber`` holds ``None`` for algorithms with no
    decision-directed symbols.
    """

    algorithms: tuple
    sinr_db: np.ndarray
    mse: np.ndarray
    lam: np.ndarray
    mult_ops: np.ndarray
    add_ops: np.ndarray
    ber: tuple
    diverged_runs: np.ndarray
    runs: int
    training_symbols: int
    sinr_averaging: str = "linear"
    trials: TrialTraces | None = None

    @property
    def total_symbols(self) -> int:
        return self.sinr_db.shape[1]

    def index(self, label: str) -> int:
        return self.algorithms.index(label)

    def steady_state(self, fraction: float = STEADY_FRACTION) -> dict:
        """Mean SINR (dB of the linear mean), MSE, forgetting factor and BER over the final window."""
        win = steady_state_window(self.total_symbols, fraction)
        out = {}
        for a, label in enumerate(self.algorithms):
            lin = np.mean(10.0 ** (self.sinr_db[a, win] / 10.0))
            out[label] = {"sinr_db": 10 * np.log10(lin), "mse": float(np.mean(self.mse[a, win])),
                          "lambda": float(np.mean(self.lam[a, win])), "ber": self.ber[a]}
        return out


def steady_state_window(T: int, fraction: float = STEADY_FRACTION) -> slice:
    n = max(1, int(round(fraction * T)))
    return slice(T - n, T)


def _simulate_chunk(config: ScenarioConfig, seeds):
    setup = scenario_setup(config)
    cfg = config
    B, T, A, M = len(seeds), cfg.total_symbols, len(cfg.algorithms), setup.M
    H = np.stack([trial_channel(cfg, ss) for ss in seeds])
    S = np.stack([trial_symbols(setup, ss) for ss in seeds])
    noise = np.stack([trial_noise(setup, ss) for ss in seeds])
    rx = [_make_receiver(alg, M, B) for alg in cfg.algorithms]
    sinr = np.empty((B, A, T))
    mse = np.empty((B, A, T))
    lam = np.empty((B, A, T))
    errors = np.zeros((B, A), dtype=np.int64)
    diverged = np.zeros((B, A), dtype=bool)
    mult = np.zeros((A, T), dtype=np.int64)
    add = np.zeros((A, T), dtype=np.int64)
    a2 = setup.amplitudes**2
    for i in range(1, T + 1):
        sig, tails, heads = user_env_vectors(setup, H[:, i - 1], H[:, i], H[:, i + 1])
        r = synth_batch(setup, sig, tails, heads, S[:, :, i - 1], S[:, :, i], S[:, :, i + 1],
                        noise[:, i - 1])
        act_prev, act, act_next = setup.active_at(i)
        weights = np.stack([a2 * act, a2 * act_prev, a2 * act_next])  # (3, K)
        b = S[:, 0, i]
        training = i <= cfg.training_symbols
        for a, rcv in enumerate(rx):
            w, z, lam_i = rcv.step(r, b, training, i, sig[:, 0])
            proj = np.abs(np.einsum("bm,vbkm->vbk", w.conj(), np.stack([sig, tails, heads]))) ** 2
            signal = a2[0] * proj[0, :, 0]
            power = np.einsum("vbk,vk->b", proj, weights) + setup.sigma_sq * np.einsum(
                "bm,bm->b", w.conj(), w).real
            with np.errstate(divide="ignore", invalid="ignore"):
                sinr[:, a, i - 1] = signal / (power - signal)
            mse[:, a, i - 1] = np.abs(b - z) ** 2
            lam[:, a, i - 1] = lam_i
            if not training:
                errors[:, a] += detect(z) != b
            mult[a, i - 1], add[a, i - 1] = rcv.ops
            bad = rcv.bad()
            if bad.any():
                diverged[:, a] |= bad
                rcv.reset(bad)
    return TrialTraces(sinr, mse, lam, errors, diverged), mult, add


def _n_workers(workers):
    if workers is not None:
        return max(1, int(workers))
    return max(1, int(os.environ.get(WORKERS_ENV, "1")))


def _run(config: ScenarioConfig, seeds, keep_trials: bool, workers=None) -> MetricsTrace:
    chunks = [seeds[j:j + _CHUNK] for j in range(0, len(seeds), _CHUNK)]
    n = min(_n_workers(workers), len(chunks))
    if n > 1:
        with ProcessPoolExecutor(n) as pool:
            results = list(pool.map(_simulate_chunk, [config] * len(chunks), chunks))
    else:
        results = [_simulate_chunk(config, c) for c in chunks]
    trials = TrialTraces.concat([r[0] for r in results])
    mult, add = results[0][1], results[0][2]
    return _average(config, trials, mult, add, keep_trials)


def _average(config, trials: TrialTraces, mult, add, keep_trials) -> MetricsTrace:
    labels = tuple(a.label for a in config.algorithms)
    valid = ~trials.diverged
    counts = valid.sum(axis=0)
    for a, label in enumerate(labels):
        if counts[a] == 0:
            raise EmptyAverageError(f"all {trials.diverged.shape[0]} trials of {label} diverged")
    wts = valid[:, :, None]
    sinr_lin = np.where(wts, trials.sinr, 0.0).sum(axis=0) / counts[:, None]
    with np.errstate(divide="ignore"):
        sinr_db = 10 * np.log10(sinr_lin)
    mse = np.where(wts, trials.mse, 0.0).sum(axis=0) / counts[:, None]
    lam = np.where(wts, trials.lam, 0.0).sum(axis=0) / counts[:, None]
    n_dd = config.total_symbols - config.training_symbols
    if n_dd > 0:
        rates = np.where(valid, trials.errors / n_dd, 0.0).sum(axis=0) / counts
        ber = tuple(float(x) for x in rates)
    else:
        ber = (None,) * len(labels)
    return MetricsTrace(labels, sinr_db, mse, lam, mult, add, ber,
                        trials.diverged.sum(axis=0), trials.diverged.shape[0],
                        config.training_symbols, trials=trials if keep_trials else None)


def run_trial(config: ScenarioConfig, trial_seed, keep_trials: bool = False) -> MetricsTrace:
    """Run one trial; ``trial_seed`` is an int or a ``SeedSequence``."""
    if not isinstance(trial_seed, np.random.SeedSequence):
        trial_seed = np.random.SeedSequence(trial_seed)
    return _run(config.validate(), [trial_seed], keep_trials, workers=1)


def run_monte_carlo(config: ScenarioConfig, keep_trials: bool = False, workers=None) -> MetricsTrace:
    """Average ``config.runs`` trials with child seeds of ``config.seed``.

    Trial ``j`` uses ``trial_seeds(config.seed, runs)[j]``. Worker processes
    (``workers`` or the ``CTVFF_WORKERS`` environment variable) split the
    trials; results are gathered in trial order, so the output does not depend
    on the worker count.
    """
    config.validate()
    return _run(config, trial_seeds(config.seed, config.runs), keep_trials, workers)


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

def _apply_axis(config: ScenarioConfig, axis: str, value) -> ScenarioConfig:
    if axis in ("delta1", "delta2", "delta3"):
        algs = tuple(replace(a, **{axis: float(value)}) if a.kind == "ctvff" else a
                     for a in config.algorithms)
        return replace(config, algorithms=algs)
    if axis == "lambda":
        algs = tuple(replace(a, lam=float(value)) if a.kind == "fixed" else a
                     for a in config.algorithms)
        return replace(config, algorithms=algs)
    if axis == "SNR":
        return replace(config, snr_db=float(value))
    if axis == "f_dT":
        return replace(config, f_dT=float(value))
    if axis == "K":
        K = int(value)
        return replace(config, K_initial=K, power_offsets_db=(0.0,) * K)
    raise UnsupportedAxisError(f"unsupported sweep axis {axis!r}; expected one of {SWEEP_AXES}")


@dataclass(frozen=True)
class SweepTable:
    axis: str
    rows: tuple  # (axis_value, algorithm, metric, statistic, source)

    def value(self, axis_value, algorithm, metric, source="simulated"):
        for row in self.rows:
            if row[:3] == (axis_value, algorithm, metric) and row[4] == source:
                return row[3]
        raise KeyError((axis_value, algorithm, metric, source))

    def to_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("axis", "axis_value", "algorithm", "metric", "statistic", "source"))
        for v, alg, metric, stat, source in self.rows:
            w.writerow((self.axis, _fmt(v), alg, metric, _fmt(stat), source))


def sweep(config: ScenarioConfig, axis: str, values, analytical: bool = False,
          q_experiments: int = 1000, log=None) -> SweepTable:
    """One Monte Carlo run per axis value; statistics over the final 20% of symbols.

    With ``analytical=True`` the CTVFF predictions for the same settings are
    added as rows with ``source = "analytical"``.
    """
    if axis not in SWEEP_AXES:
        raise UnsupportedAxisError(f"unsupported sweep axis {axis!r}; expected one of {SWEEP_AXES}")
    rows = []
    for v in values:
        cfg = _apply_axis(config, axis, v)
        trace = run_monte_carlo(cfg)
        for label, st in trace.steady_state().items():
            rows.append((v, label, "sinr_db", st["sinr_db"], "simulated"))
            rows.append((v, label, "mse", st["mse"], "simulated"))
            rows.append((v, label, "ber", st["ber"], "simulated"))
        if analytical:
            for label, pred in predict_for_config(cfg, q_experiments=q_experiments).items():
                mse = pred.tracking_mse if pred.tracking_mse is not None else pred.ss_mse
                rows.append((v, label, "mse", mse, "analytical"))
                rows.append((v, label, "lambda", pred.lambda_inf, "analytical"))
        if log is not None:
            log(f"{axis}={v}: done")
    return SweepTable(axis, tuple(rows))


# ---------------------------------------------------------------------------
# analytical predictions for a scenario
# ---------------------------------------------------------------------------

def _window_envs(config: ScenarioConfig, fraction=STEADY_FRACTION, n_trials=None):
    """Per-trial environments at the channel averaged over the steady-state window."""
    setup = scenario_setup(config)
    T = config.total_symbols
    win = range(steady_state_window(T, fraction).start + 1, T + 1)
    if config.f_dT == 0:
        H = trial_channel(config, np.random.SeedSequence(0))[None]
        envs_of = [0]
    else:
        n = config.runs if n_trials is None else n_trials
        H = np.stack([trial_channel(config, ss) for ss in trial_seeds(config.seed, n)])
        envs_of = range(H.shape[0])
    M = setup.M
    Racc = np.zeros((H.shape[0], M, M), dtype=complex)
    sacc = np.zeros((H.shape[0], M), dtype=complex)
    gacc = np.zeros((H.shape[0], M), dtype=complex)
    for i in win:
        sig, tails, heads = user_env_vectors(setup, H[:, i - 1], H[:, i], H[:, i + 1])
        Rbar, s = rbar_batch(setup, sig, tails, heads, setup.active_at(i))
        Racc += Rbar
        sacc += s
        gacc += sig[:, 0]
    n = len(win)
    return [env_from_covariance(Racc[j] / n, sacc[j] / n, gacc[j] / n, setup.amplitudes,
                                setup.sigma_sq) for j in envs_of]


def predict_for_config(config: ScenarioConfig, Q=None, q_experiments: int = 1000,
                       n_trials=None) -> dict:
    """Closed-form CTVFF predictions for every CTVFF receiver of ``config``.

    Static channels use the exact environment. Fading channels evaluate the
    predictors per trial at the window-averaged covariance (same channel draws
    as :func:`run_monte_carlo`) and average the results; the tracking MSE uses
    ``Q`` or an estimate from :func:`~ctvff.analysis.estimate_q_covariance`.
    """
    algs = [a for a in config.algorithms if a.kind == "ctvff"]
    if not algs:
        return {}
    envs = _window_envs(config, n_trials=n_trials)
    if config.f_dT > 0 and Q is None:
        Q = estimate_q_covariance(config, q_experiments)
    out = {}
    for alg in algs:
        preds = [predict_ctvff(env, alg.delta1, alg.delta2, alg.delta3,
                               Q if config.f_dT > 0 else None,
                               (alg.lambda_minus, alg.lambda_plus)) for env in envs]
        tracking = None
        if config.f_dT > 0:
            tracking = float(np.mean([p.tracking_mse for p in preds]))
        out[alg.label] = CtvffPrediction(
            gamma_inf=float(np.mean([p.gamma_inf for p in preds])),
            lambda_inf=float(np.mean([p.lambda_inf for p in preds])),
            ss_mse=float(np.mean([p.ss_mse for p in preds])),
            tracking_mse=tracking,
            lambda_inf_unclamped=float(np.mean([p.lambda_inf_unclamped for p in preds])))
    return out


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return "" if np.isnan(x) else repr(float(x))
    if isinstance(x, (np.integer,)):
        return str(int(x))
    return str(x)


def write_trace_csv(trace: MetricsTrace, fh, prefix: str = "", predictions: dict | None = None,
                    header: bool = True) -> None:
    """One row per symbol per algorithm; predictions add constant analytical rows."""
    w = csv.writer(fh, lineterminator="\n")
    if header:
        w.writerow(TRACE_COLUMNS)
    T = trace.total_symbols
    for a, label in enumerate(trace.algorithms):
        name = prefix + label
        for i in range(T):
            w.writerow((i + 1, name, _fmt(trace.sinr_db[a, i]), _fmt(trace.mse[a, i]),
                        _fmt(trace.lam[a, i]), int(trace.mult_ops[a, i]),
                        int(trace.add_ops[a, i]), "simulated"))
    for label, pred in (predictions or {}).items():
        mse = pred.tracking_mse if pred.tracking_mse is not None else pred.ss_mse
        for i in range(T):
            w.writerow((i + 1, prefix + label, "", _fmt(mse), _fmt(pred.lambda_inf), "", "",
                        "analytical"))


def trace_csv_text(trace: MetricsTrace, **kw) -> str:
    buf = io.StringIO()
    write_trace_csv(trace, buf, **kw)
    return buf.getvalue()

