"""
Figure-reproduction presets
===========================

Each preset bundles one or more fully populated :class:`ScenarioConfig`
variants with the kind of experiment to run on them: a per-symbol trace or a
sweep over one axis. Receiver parameters are the published tuned values;
where no value is published the library defaults apply (SG step 0.025,
fixed forgetting factor 0.997).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .config import AlgorithmConfig as Alg
from .config import Event, ScenarioConfig

__all__ = ["Preset", "PRESETS", "get_preset", "preset_names"]


@dataclass(frozen=True)
class Preset:
    """A named experiment.

    ``variants`` maps a label to a scenario; variant labels prefix the
    algorithm names in the CSV output when there is more than one variant.
    ``kind`` is ``"trace"`` or ``"sweep"``; sweeps run over ``axis`` with
    ``values``. ``analytical`` adds the closed-form CTVFF predictions.
    """

    name: str
    description: str
    variants: tuple  # ((label, ScenarioConfig), ...)
    kind: str = "trace"
    axis: str | None = None
    values: tuple = ()
    analytical: bool = False
    notes: tuple = field(default=())

    @property
    def config(self) -> ScenarioConfig:
        """The first (or only) scenario."""
        return self.variants[0][1]

    def with_overrides(self, runs=None, seed=None, algorithms=None) -> "Preset":
        """Copy with the run count, seed or algorithm subset replaced in every variant."""
        out = []
        for label, cfg in self.variants:
            kw = {}
            if runs is not None:
                kw["runs"] = int(runs)
            if seed is not None:
                kw["seed"] = int(seed)
            if algorithms is not None:
                wanted = [a.lower() for a in algorithms]
                algs = tuple(a for a in cfg.algorithms
                             if a.label.lower() in wanted or a.kind in wanted)
                if not algs:
                    raise ValueError(f"none of {list(algorithms)} is configured in preset "
                                     f"{self.name!r} ({[a.label for a in cfg.algorithms]})")
                kw["algorithms"] = algs
            out.append((label, replace(cfg, **kw)))
        return replace(self, variants=tuple(out))


_PROFILE_A = (0.0, -6.0, -10.0)
_PROFILE_B = (0.0, -3.0, -6.0)
_SG = Alg("sg", step=0.025)
_DEFAULT_NOTES = ("SG step size not published; default 0.025 used",)

_FIG4 = ScenarioConfig(
    N=15, L_p=3, profile_db=_PROFILE_A,
    K_initial=6, power_offsets_db=(0.0, 3.0, 3.0, 6.0, 0.0, 0.0),
    snr_db=15.0, f_dT=1e-5,
    algorithms=(
        Alg("ctvff", lambda_minus=0.98, lambda_plus=0.99998, delta1=0.934, delta2=0.005,
            delta3=0.99),
        Alg("gvff", lambda_minus=0.992, lambda_plus=0.99998, lambda0=0.998, mu=0.0025),
        Alg("fixed", lam=0.997),
        _SG,
    ),
    training_symbols=250, total_symbols=2000,
    events=(Event(1000, (3.0, 3.0, 6.0, 0.0)),),
    runs=200, seed=0,
)

_FIG6 = ScenarioConfig(
    N=15, L_p=3, profile_db=_PROFILE_B,
    K_initial=6, power_offsets_db=(0.0,) * 6,
    snr_db=15.0, f_dT=0.0,
    algorithms=(
        Alg("ctvff", lambda_minus=0.98, lambda_plus=0.99998, delta1=0.9879, delta2=0.001,
            delta3=0.99),
        Alg("gvff", lambda_minus=0.992, lambda_plus=0.99998, lambda0=0.998, mu=0.006),
        Alg("fixed", lam=0.9995),
        _SG,
    ),
    training_symbols=250, total_symbols=1500, runs=200, seed=0,
)

_FADING_ALGS = (
    Alg("ctvff", lambda_minus=0.98, lambda_plus=0.99998, delta1=0.988, delta2=0.001, delta3=0.99),
    Alg("gvff", lambda_minus=0.993, lambda_plus=0.99998, lambda0=0.998, mu=0.003),
    Alg("fixed", lam=0.997),
    _SG,
)

_FIG7 = ScenarioConfig(
    N=15, L_p=3, profile_db=_PROFILE_A,
    K_initial=5, power_offsets_db=(0.0,) * 5,
    snr_db=15.0, f_dT=1e-5, algorithms=_FADING_ALGS,
    training_symbols=250, total_symbols=1500, runs=200, seed=0,
)

_FIG8 = replace(_FIG7, K_initial=6, power_offsets_db=(0.0,) * 6, f_dT=1e-4,
                algorithms=_FADING_ALGS + (Alg("rake"),))


def _analysis_config(f_dT, delta1, delta2, delta3):
    return ScenarioConfig(
        N=15, L_p=3, profile_db=_PROFILE_A,
        K_initial=4, power_offsets_db=(0.0,) * 4,
        snr_db=15.0, f_dT=f_dT,
        algorithms=(Alg("ctvff", lambda_minus=0.98, lambda_plus=0.99998, delta1=delta1,
                        delta2=delta2, delta3=delta3),),
        training_symbols=250, total_symbols=1500, runs=200, seed=0,
    )


_STATIC_ANALYSIS = _analysis_config(0.0, 0.99, 0.0035, 0.995)
_TRACKING_ANALYSIS = _analysis_config(1e-5, 0.99, 0.0004, 0.99)

_SWEEP_DELTA_BASE = ScenarioConfig(
    N=15, L_p=3, profile_db=_PROFILE_B,
    K_initial=6, power_offsets_db=(0.0,) * 6,
    snr_db=15.0, f_dT=0.0,
    algorithms=(Alg("ctvff", lambda_minus=0.98, lambda_plus=0.99998, delta1=0.99, delta2=0.005,
                    delta3=0.99),),
    training_symbols=250, total_symbols=1500, runs=200, seed=0,
)


def _delta2_variant(d2):
    algs = tuple(replace(a, delta2=d2) for a in _SWEEP_DELTA_BASE.algorithms)
    return (f"delta2={d2:g}", replace(_SWEEP_DELTA_BASE, algorithms=algs))


PRESETS = {
    "fig4": Preset(
        "fig4", "SINR versus symbols; four interferers enter after symbol 1000",
        (("fig4", _FIG4),), notes=_DEFAULT_NOTES),
    "fig5": Preset(
        "fig5", "CTVFF forgetting-factor trace in the fig4 scenario",
        (("fig5", replace(_FIG4, algorithms=_FIG4.algorithms[:1])),)),
    "fig6": Preset(
        "fig6", "SINR versus symbols in a static channel, K=6 equal powers",
        (("fig6", _FIG6),), notes=_DEFAULT_NOTES),
    "fig7": Preset(
        "fig7", "BER versus normalized Doppler, K=5",
        (("fig7", _FIG7),), kind="sweep", axis="f_dT",
        values=(1e-5, 3e-5, 1e-4, 3e-4, 1e-3),
        notes=_DEFAULT_NOTES + ("fixed forgetting factor held at 0.997 for every f_dT",)),
    "fig8a": Preset(
        "fig8a", "BER and SINR versus SNR, f_dT=1e-4, K=6",
        (("fig8a", _FIG8),), kind="sweep", axis="SNR", values=(0.0, 4.0, 8.0, 12.0, 16.0, 20.0),
        notes=_DEFAULT_NOTES + ("K for the SNR sweep not published; 6 used",)),
    "fig8b": Preset(
        "fig8b", "BER and SINR versus number of users, f_dT=1e-4, SNR 15 dB",
        (("fig8b", _FIG8),), kind="sweep", axis="K", values=(2, 4, 6, 8, 10, 12, 14),
        notes=_DEFAULT_NOTES),
    "fig9": Preset(
        "fig9", "Simulated versus analytical MSE of CTVFF, static and fading channels",
        (("static", _STATIC_ANALYSIS), ("tracking", _TRACKING_ANALYSIS)), analytical=True),
    "fig10": Preset(
        "fig10", "Steady-state MSE versus SNR, simulated and analytical",
        (("static", _STATIC_ANALYSIS), ("tracking", _TRACKING_ANALYSIS)),
        kind="sweep", axis="SNR", values=(0.0, 5.0, 10.0, 15.0, 20.0), analytical=True),
    "sweep-delta": Preset(
        "sweep-delta", "Steady-state SINR versus delta1 for several delta2, static, K=6",
        tuple(_delta2_variant(d2) for d2 in (0.015, 0.005, 0.001, 0.0005, 0.0001)),
        kind="sweep", axis="delta1", values=(0.9, 0.93, 0.96, 0.98, 0.99, 0.995, 0.999)),
}


def preset_names() -> list[str]:
    return list(PRESETS)


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
