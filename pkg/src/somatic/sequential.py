"""Sequential label updates with the somatic transform applied after each
observation, plus averaging over discrete sentiment-dispersion types."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Literal, Mapping, Sequence

import numpy as np

from .transform import (
    CategoricalBelief,
    GaussianBelief,
    GaussianMixture,
    NumericalError,
    SomaticPotential,
    joint_transform,
    posterior_x,
)

Collapse = Literal["exact", "moment_match"]
COLLAPSES = ("exact", "moment_match")

PRUNE_EPS = 1e-8
MAX_COMPONENTS = 64

# Observation symbols for the conformity stream: a peer picks the answer
# other than the one the participant selected, or the same one.
PEER_OTHER = "peer_picked_other"
PEER_SAME = "peer_picked_same"


@dataclass(frozen=True)
class ObservationModel:
    """``likelihood[(obs, label)] = P(obs | label)``."""

    likelihood: Mapping[tuple[str, str], float]

    def __post_init__(self) -> None:
        lik = {(str(o), str(x)): float(p) for (o, x), p in dict(self.likelihood).items()}
        if any(not (0.0 <= p <= 1.0) for p in lik.values()):
            raise ValueError("observation likelihoods must lie in [0, 1]")
        for label in {x for _, x in lik}:
            if not any(p > 0 for (_, x), p in lik.items() if x == label):
                raise ValueError(f"label {label!r} has no observation with positive likelihood")
        object.__setattr__(self, "likelihood", lik)

    @property
    def symbols(self) -> set[str]:
        return {o for o, _ in self.likelihood}

    def column(self, obs: str, labels: Sequence[str]) -> np.ndarray:
        if obs not in self.symbols:
            raise ValueError(f"unknown observation {obs!r}")
        try:
            return np.array([self.likelihood[(obs, x)] for x in labels])
        except KeyError as exc:
            raise ValueError(f"no likelihood for observation {obs!r} and label {exc.args[0][1]!r}") from None


def conformity_observation_model(p_other_given_wrong: float = 0.85) -> ObservationModel:
    """Peers are more likely to pick the other answer when ours is wrong."""
    q = p_other_given_wrong
    return ObservationModel({
        (PEER_OTHER, "wrong"): q,
        (PEER_OTHER, "right"): 1.0 - q,
        (PEER_SAME, "wrong"): 1.0 - q,
        (PEER_SAME, "right"): q,
    })


def bayes_obs_update(b: CategoricalBelief, m: ObservationModel, obs: str) -> CategoricalBelief:
    w = b.as_array() * m.column(obs, b.labels)
    if w.sum() <= 0:
        raise NumericalError(f"observation {obs!r} is impossible under the current belief")
    return CategoricalBelief.from_weights(b.labels, w)


@dataclass(frozen=True)
class InferenceState:
    belief_x: CategoricalBelief
    belief_y: GaussianMixture
    step: int = 0

    @classmethod
    def initial(cls, belief_x: CategoricalBelief, belief_y: GaussianBelief) -> "InferenceState":
        return cls(belief_x, GaussianMixture.single(belief_y), 0)


def prune(m: GaussianMixture, eps: float = PRUNE_EPS, cap: int = MAX_COMPONENTS) -> GaussianMixture:
    """Drop components lighter than ``eps``, keep at most ``cap`` heaviest, renormalize."""
    order = sorted(range(len(m)), key=lambda i: -m.components[i][0])
    keep = [i for i in order if m.components[i][0] >= eps][:cap]
    if not keep:
        keep = order[:1]
    keep.sort()
    w = m.weights[keep]
    return GaussianMixture.from_arrays(w, m.means[keep], m.sds[keep])


def conformity_step(s: InferenceState, pot: SomaticPotential, m: ObservationModel, obs: str,
                    collapse: Collapse = "exact", cap: int = MAX_COMPONENTS) -> InferenceState:
    """One observation followed by one somatic coupling pass."""
    if collapse not in COLLAPSES:
        raise ValueError(f"unknown collapse {collapse!r}; expected one of {COLLAPSES}")
    bx = bayes_obs_update(s.belief_x, m, obs)
    post_x, post_y = joint_transform(bx, s.belief_y, pot)
    if collapse == "moment_match":
        post_y = GaussianMixture.single(post_y.moment_match())
    else:
        post_y = prune(post_y, cap=cap)
    return InferenceState(post_x, post_y, s.step + 1)


def run_chain(s: InferenceState, pot: SomaticPotential, m: ObservationModel,
              observations: Iterable[str], collapse: Collapse = "exact") -> list[InferenceState]:
    """All states visited, starting with ``s`` itself."""
    states = [s]
    for obs in observations:
        states.append(conformity_step(states[-1], pot, m, obs, collapse))
    return states


def sigma_mixture_posterior(types: Sequence[tuple[float, float]], prior_x: CategoricalBelief,
                            mu_y: float, pot: SomaticPotential, target_label: str) -> float:
    """Posterior of ``target_label`` averaged over discrete prior-dispersion types.

    ``types`` holds ``(weight, sd_y)`` pairs whose weights sum to one.
    """
    weights = [float(w) for w, _ in types]
    if not weights or any(w < 0 for w in weights) or abs(math.fsum(weights) - 1.0) > 1e-9:
        raise ValueError(f"type weights must be nonnegative and sum to 1, got {weights}")
    return math.fsum(
        w * posterior_x(prior_x, GaussianBelief(mu_y, sd), pot)[target_label]
        for w, sd in types
    )


# --- conformity calibration ------------------------------------------------

CONFORMITY_TARGETS = {5: 0.67, 10: 0.995}


@dataclass(frozen=True)
class ConformityConfig:
    prior_wrong: float = 0.1
    mu_y: float = 2.0
    sigma_y: float = 1.3
    gamma: float = 0.3
    p_other_given_wrong: float = 0.85
    anchor_gap: float = 0.51
    collapse: Collapse = "exact"

    def potential(self) -> SomaticPotential:
        return SomaticPotential({"right": self.anchor_gap, "wrong": -self.anchor_gap}, self.gamma)

    def initial_state(self) -> InferenceState:
        bx = CategoricalBelief(("right", "wrong"), (1.0 - self.prior_wrong, self.prior_wrong))
        return InferenceState.initial(bx, GaussianBelief(self.mu_y, self.sigma_y))

    def run(self, steps: int) -> list[InferenceState]:
        return run_chain(self.initial_state(), self.potential(),
                         conformity_observation_model(self.p_other_given_wrong),
                         [PEER_OTHER] * steps, self.collapse)


# Frozen output of calibrate_conformity() with default arguments.
DEFAULT_CONFORMITY = ConformityConfig(anchor_gap=0.51, collapse="moment_match")


def wrong_trajectory(cfg: ConformityConfig, steps: int) -> list[float]:
    return [st.belief_x["wrong"] for st in cfg.run(steps)]


def calibration_error(traj: Sequence[float], targets: Mapping[int, float] = CONFORMITY_TARGETS) -> float:
    return math.fsum((traj[k] - v) ** 2 for k, v in targets.items())


@dataclass(frozen=True)
class CalibrationResult:
    best: ConformityConfig
    error: float
    rows: tuple[dict, ...]


def calibrate_conformity(base: ConformityConfig = ConformityConfig(), *,
                         coarse: tuple[float, float, float] = (0.5, 3.5, 0.05),
                         fine_step: float = 0.01,
                         targets: Mapping[int, float] = CONFORMITY_TARGETS) -> CalibrationResult:
    """Grid-search the symmetric anchor gap and collapse strategy.

    A coarse pass over ``coarse = (lo, hi, step)`` is followed by a finer
    pass of width one coarse step either side of the coarse winner, clipped
    to ``[lo, hi]``. The step-5 response is nearly discontinuous in the gap,
    so the coarse grid alone straddles the targets.
    """
    lo, hi, step = coarse
    steps = max(targets)
    rows: list[dict] = []

    def evaluate(gaps, stage):
        for collapse in COLLAPSES:
            for gap in gaps:
                cfg = replace(base, anchor_gap=float(gap), collapse=collapse)
                traj = wrong_trajectory(cfg, steps)
                row = {"stage": stage, "anchor_gap": float(gap), "collapse": collapse,
                       "error": calibration_error(traj, targets)}
                row.update({f"p_wrong_step{k}": traj[k] for k in sorted(targets)})
                rows.append(row)

    def winner():
        r = min(rows, key=lambda r: (r["error"], r["anchor_gap"], r["collapse"]))
        return replace(base, anchor_gap=r["anchor_gap"], collapse=r["collapse"]), r["error"]

    n = int(round((hi - lo) / step))
    evaluate(np.round(lo + step * np.arange(n + 1), 10), "coarse")
    best, _ = winner()
    n_fine = int(round(2 * step / fine_step))
    fine = np.round(best.anchor_gap - step + fine_step * np.arange(n_fine + 1), 10)
    evaluate(fine[(fine >= lo) & (fine <= hi)], "fine")
    best, err = winner()
    return CalibrationResult(best, err, tuple(rows))
