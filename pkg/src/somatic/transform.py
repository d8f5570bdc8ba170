"""The somatic transform between a discrete label belief and a Gaussian
sentiment belief on one EPA dimension.

The coupling between label ``x`` and sentiment ``y`` is a Gaussian kernel
centred on the label's anchor ``M(x)`` with standard deviation ``gamma``::

    K(y; x) = exp(-(y - M(x))**2 / (2 * gamma**2))

Normalizing constants are never formed; every posterior is renormalized in
log space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.special import logsumexp

PROB_TOL = 1e-9
_LOG_2PI = math.log(2.0 * math.pi)


class MissingAnchorError(ValueError):
    def __init__(self, label: str):
        super().__init__(f"no anchor for label {label!r}")
        self.label = label


class NumericalError(ArithmeticError):
    """Raised when a posterior has no finite mass to normalize."""


def _normal_logpdf(x, mean, var):
    return -0.5 * (_LOG_2PI + np.log(var) + (x - mean) ** 2 / var)


@dataclass(frozen=True)
class CategoricalBelief:
    labels: tuple[str, ...]
    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        labels = tuple(self.labels)
        probs = tuple(float(p) for p in self.probs)
        if len(labels) != len(probs):
            raise ValueError("labels and probs differ in length")
        if not labels:
            raise ValueError("belief needs at least one label")
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate labels in belief: {labels}")
        if any(not (0.0 <= p <= 1.0) for p in probs):
            raise ValueError(f"probabilities must lie in [0, 1], got {probs}")
        if abs(math.fsum(probs) - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities sum to {math.fsum(probs)!r}, not 1")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_items(cls, items: Iterable[tuple[str, float]]) -> "CategoricalBelief":
        items = list(items)
        return cls(tuple(k for k, _ in items), tuple(v for _, v in items))

    @classmethod
    def from_weights(cls, labels: Sequence[str], weights) -> "CategoricalBelief":
        """Normalize nonnegative ``weights`` into a belief over ``labels``."""
        w = np.asarray(weights, dtype=float)
        total = w.sum()
        if not np.isfinite(total) or total <= 0:
            raise NumericalError("belief weights have no positive finite mass")
        w = w / total
        # clip the last ulp so the [0, 1] invariant survives rounding
        return cls(tuple(labels), tuple(np.clip(w, 0.0, 1.0)))

    @classmethod
    def uniform(cls, labels: Sequence[str]) -> "CategoricalBelief":
        return cls.from_weights(labels, np.ones(len(labels)))

    def __getitem__(self, label: str) -> float:
        try:
            return self.probs[self.labels.index(label)]
        except ValueError:
            raise KeyError(label) from None

    def __len__(self) -> int:
        return len(self.labels)

    def items(self) -> list[tuple[str, float]]:
        return list(zip(self.labels, self.probs))

    def as_array(self) -> np.ndarray:
        return np.array(self.probs)

    def argmax(self) -> str:
        return self.labels[int(np.argmax(self.probs))]


@dataclass(frozen=True)
class GaussianBelief:
    mean: float
    sd: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.mean):
            raise ValueError(f"mean must be finite, got {self.mean!r}")
        if not (self.sd > 0 and math.isfinite(self.sd)):
            raise ValueError(f"sd must be positive, got {self.sd!r}")

    @property
    def var(self) -> float:
        return self.sd * self.sd

    def pdf(self, y):
        return np.exp(_normal_logpdf(np.asarray(y, dtype=float), self.mean, self.var))


@dataclass(frozen=True)
class GaussianMixture:
    """Weighted sum of 1-D Gaussians; components are ``(weight, mean, sd)``."""

    components: tuple[tuple[float, float, float], ...]

    def __post_init__(self) -> None:
        comps = tuple((float(w), float(m), float(s)) for w, m, s in self.components)
        if not comps:
            raise ValueError("mixture needs at least one component")
        for w, m, s in comps:
            if not (0.0 <= w <= 1.0):
                raise ValueError(f"mixture weight {w!r} outside [0, 1]")
            if not (s > 0 and math.isfinite(s)) or not math.isfinite(m):
                raise ValueError(f"invalid component mean={m!r} sd={s!r}")
        total = math.fsum(w for w, _, _ in comps)
        if abs(total - 1.0) > PROB_TOL:
            raise ValueError(f"mixture weights sum to {total!r}, not 1")
        object.__setattr__(self, "components", comps)

    @classmethod
    def single(cls, belief: GaussianBelief) -> "GaussianMixture":
        return cls(((1.0, belief.mean, belief.sd),))

    @classmethod
    def from_arrays(cls, weights, means, sds) -> "GaussianMixture":
        w = np.asarray(weights, dtype=float)
        w = np.clip(w / w.sum(), 0.0, 1.0)
        return cls(tuple(zip(w.tolist(), np.asarray(means, float).tolist(),
                             np.asarray(sds, float).tolist())))

    def __len__(self) -> int:
        return len(self.components)

    @property
    def weights(self) -> np.ndarray:
        return np.array([c[0] for c in self.components])

    @property
    def means(self) -> np.ndarray:
        return np.array([c[1] for c in self.components])

    @property
    def sds(self) -> np.ndarray:
        return np.array([c[2] for c in self.components])

    def pdf(self, y):
        y = np.asarray(y, dtype=float)
        dens = np.zeros_like(y)
        for w, m, s in self.components:
            dens = dens + w * np.exp(_normal_logpdf(y, m, s * s))
        return dens

    def mean(self) -> float:
        return float(self.weights @ self.means)

    def variance(self) -> float:
        w, m, s = self.weights, self.means, self.sds
        mu = w @ m
        return float(w @ (s * s + (m - mu) ** 2))

    def moment_match(self) -> GaussianBelief:
        """Single Gaussian with the mixture's mean and variance."""
        return GaussianBelief(self.mean(), math.sqrt(self.variance()))


@dataclass(frozen=True)
class SomaticPotential:
    anchors: Mapping[str, float]
    gamma: float

    def __post_init__(self) -> None:
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise ValueError(f"gamma must be positive, got {self.gamma!r}")
        anchors = {str(k): float(v) for k, v in dict(self.anchors).items()}
        for label, value in anchors.items():
            if not math.isfinite(value):
                raise ValueError(f"anchor for {label!r} is not finite")
        object.__setattr__(self, "anchors", anchors)

    def anchor(self, label: str) -> float:
        try:
            return self.anchors[label]
        except KeyError:
            raise MissingAnchorError(label) from None

    def anchor_array(self, labels: Sequence[str]) -> np.ndarray:
        return np.array([self.anchor(label) for label in labels])


def log_kernel_evidence(pot: SomaticPotential, label: str, prior_y: GaussianBelief) -> float:
    return float(_normal_logpdf(prior_y.mean, pot.anchor(label), prior_y.var + pot.gamma ** 2))


def kernel_evidence(pot: SomaticPotential, label: str, prior_y: GaussianBelief) -> float:
    """Expected coupling of ``label`` under the sentiment prior.

    Equal to the density of the prior mean under N(M(label), sd_y**2 + gamma**2).
    """
    return math.exp(log_kernel_evidence(pot, label, prior_y))


def _normalize_log(logw: np.ndarray) -> np.ndarray:
    if not np.any(np.isfinite(logw)):
        raise NumericalError("posterior has zero total mass")
    return np.exp(logw - logsumexp(logw))


def _joint_log_weights(prior_x: CategoricalBelief, prior_y: GaussianMixture,
                       pot: SomaticPotential) -> np.ndarray:
    """Unnormalized log joint weights, shape (n_y_components, n_labels)."""
    anchors = pot.anchor_array(prior_x.labels)
    g2 = pot.gamma ** 2
    with np.errstate(divide="ignore"):
        log_px = np.log(prior_x.as_array())
        log_wy = np.log(prior_y.weights)
    w, m, s = log_wy[:, None], prior_y.means[:, None], prior_y.sds[:, None]
    return w + log_px[None, :] + _normal_logpdf(m, anchors[None, :], s * s + g2)


def joint_transform(prior_x: CategoricalBelief, prior_y: GaussianMixture,
                    pot: SomaticPotential) -> tuple[CategoricalBelief, GaussianMixture]:
    """Both marginal posteriors for a mixture sentiment prior.

    Each prior component is crossed with each label; the resulting mixture
    is ordered component-major, label-minor.
    """
    logw = _joint_log_weights(prior_x, prior_y, pot)
    joint = _normalize_log(logw.ravel()).reshape(logw.shape)
    post_x = CategoricalBelief.from_weights(prior_x.labels, joint.sum(axis=0))

    anchors = pot.anchor_array(prior_x.labels)[None, :]
    g2 = pot.gamma ** 2
    m = prior_y.means[:, None]
    v = (prior_y.sds ** 2)[:, None]
    means = (m * g2 + anchors * v) / (v + g2)
    sds = np.sqrt(v * g2 / (v + g2)) * np.ones_like(means)
    post_y = GaussianMixture.from_arrays(joint.ravel(), means.ravel(), sds.ravel())
    return post_x, post_y


def posterior_x(prior_x: CategoricalBelief, prior_y: GaussianBelief,
                pot: SomaticPotential) -> CategoricalBelief:
    """Label posterior: prior times the expected kernel under the sentiment prior."""
    logw = np.array([np.log(p) if p > 0 else -np.inf for p in prior_x.probs])
    logw = logw + np.array([log_kernel_evidence(pot, x, prior_y) for x in prior_x.labels])
    return CategoricalBelief.from_weights(prior_x.labels, _normalize_log(logw))


def posterior_y(prior_x: CategoricalBelief, prior_y: GaussianBelief,
                pot: SomaticPotential) -> GaussianMixture:
    """Sentiment posterior: one conjugate-shrunk component per label."""
    return joint_transform(prior_x, GaussianMixture.single(prior_y), pot)[1]


def entropy(b: CategoricalBelief) -> float:
    """Shannon entropy in nats, with 0 log 0 = 0."""
    p = b.as_array()
    p = p[p > 0]
    return float(-(p * np.log(p)).sum()) + 0.0  # avoid -0.0


def expected_anchor(prior_x: CategoricalBelief, pot: SomaticPotential) -> float:
    """Sentiment implied by the label prior alone: sum of P(x) M(x)."""
    return math.fsum(p * pot.anchor(x) for x, p in prior_x.items())


def act_limit_label(point_y: float, pot: SomaticPotential) -> str:
    """Zero-temperature limit: the label whose anchor is nearest ``point_y``."""
    if not pot.anchors:
        raise ValueError("potential has no anchors")
    return min(pot.anchors, key=lambda label: (abs(point_y - pot.anchors[label]), label))


def density_grid(m: GaussianMixture, y_min: float, y_max: float, n: int) -> list[tuple[float, float]]:
    if not (math.isfinite(y_min) and math.isfinite(y_max)) or y_min >= y_max:
        raise ValueError(f"invalid grid range [{y_min}, {y_max}]")
    if n < 2:
        raise ValueError(f"grid needs at least 2 points, got {n}")
    ys = np.linspace(y_min, y_max, n)
    return list(zip(ys.tolist(), m.pdf(ys).tolist()))
