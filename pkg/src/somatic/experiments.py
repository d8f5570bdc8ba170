"""Parameterized runners for the somatic-transform simulations and the
fairness reconstruction. Every runner is deterministic and returns a list of
:class:`ExperimentRecord`."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Mapping, Sequence

from .sequential import (
    Collapse,
    ConformityConfig,
    DEFAULT_CONFORMITY,
    sigma_mixture_posterior,
)
from .transform import (
    CategoricalBelief,
    GaussianBelief,
    GaussianMixture,
    SomaticPotential,
    density_grid,
    entropy,
    expected_anchor,
    posterior_x,
    posterior_y,
)

# Wide enough that every default sweep keeps its posterior mass on-grid
# (the gamma=5 posterior has sd ~1.9 around y ~2.9).
GRID_MIN, GRID_MAX, GRID_N = -10.0, 12.0, 2201

# Potency of nurse / doctor, US 2015 survey.
NURSE_DOCTOR = {"nurse": 1.9, "doctor": 2.95}
# Evaluation of an iPhone (good) and a Blackberry (bad) from product ratings.
GOOD_BAD = {"good": 1.32, "bad": -0.67}

SAD_E = -1.88
DISAPPOINTED_E = -1.71

# Characteristic-emotion E values for the four fairness conditions.
FAIRNESS_EMOTIONS = {
    ("voice", "salient"): 2.31,
    ("no_voice", "salient"): -0.84,
    ("voice", "non_salient"): 1.94,
    ("no_voice", "non_salient"): 1.5,
}


@dataclass(frozen=True)
class ExperimentRecord:
    experiment: str
    params: Mapping[str, Any]
    outputs: Mapping[str, float]
    grid: tuple[tuple[float, float], ...] | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        for k, v in self.outputs.items():
            if not math.isfinite(v):
                raise ValueError(f"{self.experiment}: output {k}={v!r} is not finite")

    def flat(self) -> dict[str, Any]:
        row: dict[str, Any] = {"experiment": self.experiment}
        row.update(self.params)
        row.update(self.outputs)
        return row


def _grid(m: GaussianMixture) -> tuple[tuple[float, float], ...]:
    return tuple(density_grid(m, GRID_MIN, GRID_MAX, GRID_N))


def _nurse_doctor_point(name: str, p: float, mu_y: float, sigma_y: float, gamma: float,
                        anchors: Mapping[str, float]) -> ExperimentRecord:
    prior = CategoricalBelief(("nurse", "doctor"), (p, 1.0 - p))
    prior_y = GaussianBelief(mu_y, sigma_y)
    pot = SomaticPotential(anchors, gamma)
    post = posterior_x(prior, prior_y, pot)
    mix = posterior_y(prior, prior_y, pot)
    params = {"p": p, "mu_y": mu_y, "sigma_y": sigma_y, "gamma": gamma,
              "m_nurse": anchors["nurse"], "m_doctor": anchors["doctor"]}
    outputs = {
        "prior_nurse": p,
        "prior_entropy": entropy(prior),
        "post_nurse": post["nurse"],
        "post_entropy": entropy(post),
        "expected_anchor": expected_anchor(prior, pot),
        "post_y_mean": mix.mean(),
    }
    return ExperimentRecord(name, params, outputs, _grid(mix))


def run_uy_sweep(mu_values: Sequence[float] = (-1.0, 0.0, 1.0, 2.0, 2.2, 3.0, 4.0, 5.0),
                 p: float = 0.7, sigma_y: float = 2.0, gamma: float = 0.3,
                 anchors: Mapping[str, float] = NURSE_DOCTOR) -> list[ExperimentRecord]:
    """Vary the sentiment prior mean with the label prior fixed."""
    return [_nurse_doctor_point("uy", p, float(mu), sigma_y, gamma, anchors)
            for mu in mu_values]


def run_gamma_sweep(gamma_values: Sequence[float] = (0.05, 0.1, 0.3, 0.5, 1.0, 2.0, 5.0),
                    mu_y: float = 3.0, p: float = 0.7, sigma_y: float = 2.0,
                    anchors: Mapping[str, float] = NURSE_DOCTOR) -> list[ExperimentRecord]:
    return [_nurse_doctor_point("gamma", p, mu_y, sigma_y, float(g), anchors)
            for g in gamma_values]


def run_px_sweep(p_values: Sequence[float] = (0.1, 0.5, 0.9), mu_y: float = 3.0,
                 sigma_y: float = 3.5, gamma: float = 0.2,
                 anchors: Mapping[str, float] = NURSE_DOCTOR) -> list[ExperimentRecord]:
    """Vary the label prior. No sentiment prior mean is published for this
    sweep, so the default 3.0 is borrowed from the gamma sweep."""
    return [_nurse_doctor_point("px", float(p), mu_y, sigma_y, gamma, anchors)
            for p in p_values]


def run_dissonance(sigma_values: Sequence[float] = (0.5, 1.23, 2.0), mu_y: float = 2.0,
                   gamma: float = 0.3, prior_bad: float = 0.8,
                   anchors: Mapping[str, float] = GOOD_BAD,
                   type_weights: Sequence[float] | None = None) -> list[ExperimentRecord]:
    """One row per prior dispersion plus a final row averaging over them as
    discrete types (uniform weights unless ``type_weights`` is given)."""
    sigma_values = [float(s) for s in sigma_values]
    if type_weights is None:
        type_weights = [1.0 / len(sigma_values)] * len(sigma_values)
    if len(type_weights) != len(sigma_values):
        raise ValueError("type_weights must match sigma_values in length")
    prior = CategoricalBelief(("good", "bad"), (1.0 - prior_bad, prior_bad))
    pot = SomaticPotential(anchors, gamma)
    base = {"mu_y": mu_y, "gamma": gamma, "prior_bad": prior_bad,
            "m_good": anchors["good"], "m_bad": anchors["bad"]}

    records = []
    mixes = []
    for s in sigma_values:
        prior_y = GaussianBelief(mu_y, s)
        post = posterior_x(prior, prior_y, pot)
        mix = posterior_y(prior, prior_y, pot)
        mixes.append(mix)
        records.append(ExperimentRecord(
            "dissonance", {"case": f"sigma_y={s!r}", "sigma_y": s, **base},
            {"post_bad": post["bad"], "post_entropy": entropy(post)}, _grid(mix)))

    types = list(zip(type_weights, sigma_values))
    p_bad = sigma_mixture_posterior(types, prior, mu_y, pot, "bad")
    averaged = CategoricalBelief.from_weights(("good", "bad"), (1.0 - p_bad, p_bad))
    pooled = GaussianMixture.from_arrays(
        [w * c[0] for w, m in zip(type_weights, mixes) for c in m.components],
        [c[1] for m in mixes for c in m.components],
        [c[2] for m in mixes for c in m.components])
    records.append(ExperimentRecord(
        "dissonance", {"case": "mixture", "sigma_y": None, **base},
        {"post_bad": p_bad, "post_entropy": entropy(averaged)}, _grid(pooled)))
    return records


def run_conformity(steps: int = 10, config: ConformityConfig = DEFAULT_CONFORMITY) -> list[ExperimentRecord]:
    """Peers repeatedly pick the other answer; one record per step, step 0
    being the prior."""
    params = {"prior_wrong": config.prior_wrong, "mu_y": config.mu_y,
              "sigma_y": config.sigma_y, "gamma": config.gamma,
              "p_other_given_wrong": config.p_other_given_wrong,
              "anchor_gap": config.anchor_gap, "collapse": config.collapse}
    records = []
    for st in config.run(steps):
        records.append(ExperimentRecord(
            "conformity", {"step": st.step, **params},
            {"p_wrong": st.belief_x["wrong"], "post_entropy": entropy(st.belief_x),
             "n_components": float(len(st.belief_y)), "post_y_mean": st.belief_y.mean()},
            _grid(st.belief_y)))
    return records


def sadness_rating(emotion_e: float, sad_e: float = SAD_E,
                   disappointed_e: float = DISAPPOINTED_E) -> float:
    """Map an emotion's Evaluation onto a 1-7 sadness scale.

    The rating falls linearly with distance from the mean Evaluation of
    *sad* and *disappointed*: distance 0 gives 4, the 4.3 scale half-width
    gives 1.
    """
    if not (math.isfinite(emotion_e) and abs(emotion_e) <= 4.3):
        raise ValueError(f"emotion E {emotion_e!r} outside [-4.3, 4.3]")
    ref = (sad_e + disappointed_e) / 2.0
    return 1.0 + 6.0 * (4.3 - abs(emotion_e - ref)) / 8.6


def run_fairness(sad_e: float = SAD_E, disappointed_e: float = DISAPPOINTED_E) -> list[ExperimentRecord]:
    records = []
    for (voice, salience), e in FAIRNESS_EMOTIONS.items():
        records.append(ExperimentRecord(
            "fairness", {"voice": voice, "salience": salience, "emotion_e": e},
            {"rating": sadness_rating(e, sad_e, disappointed_e)}))
    return records


def fairness_table(records: Sequence[ExperimentRecord]) -> dict[str, dict[str, float]]:
    """``{salience: {voice: rating}}`` view of :func:`run_fairness` output."""
    table: dict[str, dict[str, float]] = {}
    for r in records:
        table.setdefault(r.params["salience"], {})[r.params["voice"]] = r.outputs["rating"]
    return table


# --- registry used by the CLI ----------------------------------------------

@dataclass(frozen=True)
class ExperimentSpec:
    run: Callable[..., list[ExperimentRecord]]
    defaults: Mapping[str, Any]
    list_params: tuple[str, ...] = ()
    # parameter -> (lexicon label, EPA dimension) for --lexicon overrides
    lexicon_anchors: Mapping[str, tuple[str, str]] = field(default_factory=dict)


def _nurse_doctor_runner(fn):
    def run(*, m_nurse, m_doctor, **kw):
        return fn(**kw, anchors={"nurse": m_nurse, "doctor": m_doctor})
    run.__name__ = fn.__name__
    return run


def _dissonance_runner(*, m_good, m_bad, **kw):
    return run_dissonance(**kw, anchors={"good": m_good, "bad": m_bad})


def _conformity_runner(*, steps, collapse: Collapse, **kw):
    return run_conformity(int(steps), replace(DEFAULT_CONFORMITY, collapse=collapse, **kw))


_ND_ANCHORS = {"m_nurse": ("nurse", "p"), "m_doctor": ("doctor", "p")}

EXPERIMENTS: dict[str, ExperimentSpec] = {
    "uy": ExperimentSpec(
        _nurse_doctor_runner(run_uy_sweep),
        {"mu_values": (-1.0, 0.0, 1.0, 2.0, 2.2, 3.0, 4.0, 5.0), "p": 0.7, "sigma_y": 2.0,
         "gamma": 0.3, "m_nurse": 1.9, "m_doctor": 2.95},
        ("mu_values",), _ND_ANCHORS),
    "gamma": ExperimentSpec(
        _nurse_doctor_runner(run_gamma_sweep),
        {"gamma_values": (0.05, 0.1, 0.3, 0.5, 1.0, 2.0, 5.0), "mu_y": 3.0, "p": 0.7,
         "sigma_y": 2.0, "m_nurse": 1.9, "m_doctor": 2.95},
        ("gamma_values",), _ND_ANCHORS),
    "px": ExperimentSpec(
        _nurse_doctor_runner(run_px_sweep),
        {"p_values": (0.1, 0.5, 0.9), "mu_y": 3.0, "sigma_y": 3.5, "gamma": 0.2,
         "m_nurse": 1.9, "m_doctor": 2.95},
        ("p_values",), _ND_ANCHORS),
    "dissonance": ExperimentSpec(
        _dissonance_runner,
        {"sigma_values": (0.5, 1.23, 2.0), "mu_y": 2.0, "gamma": 0.3, "prior_bad": 0.8,
         "m_good": 1.32, "m_bad": -0.67, "type_weights": None},
        ("sigma_values", "type_weights"),
        {"m_good": ("iphone", "e"), "m_bad": ("blackberry", "e")}),
    "conformity": ExperimentSpec(
        _conformity_runner,
        {"steps": 10, "prior_wrong": DEFAULT_CONFORMITY.prior_wrong,
         "mu_y": DEFAULT_CONFORMITY.mu_y, "sigma_y": DEFAULT_CONFORMITY.sigma_y,
         "gamma": DEFAULT_CONFORMITY.gamma,
         "p_other_given_wrong": DEFAULT_CONFORMITY.p_other_given_wrong,
         "anchor_gap": DEFAULT_CONFORMITY.anchor_gap,
         "collapse": DEFAULT_CONFORMITY.collapse}),
    "fairness": ExperimentSpec(
        run_fairness, {"sad_e": SAD_E, "disappointed_e": DISAPPOINTED_E}, (),
        {"sad_e": ("sad", "e"), "disappointed_e": ("disappointed", "e")}),
}

# short names accepted by --set for the swept parameter
SWEEP_ALIASES = {
    "uy": {"mu_y": "mu_values"},
    "gamma": {"gamma": "gamma_values"},
    "px": {"p": "p_values"},
    "dissonance": {"sigma_y": "sigma_values"},
}
