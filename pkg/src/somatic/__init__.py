"""Bayesian coupling between discrete labels and continuous EPA sentiment."""

from .epa import (
    EmptyLexiconError,
    EpaVector,
    Lexicon,
    LexiconEntry,
    distance,
    emotion_deflection,
    nearest_label,
)
from .lexicon_io import LexiconFileReport, LexiconFormatError, load_lexicon, save_lexicon
from .sequential import (
    InferenceState,
    ObservationModel,
    bayes_obs_update,
    conformity_step,
    sigma_mixture_posterior,
)
from .transform import (
    CategoricalBelief,
    GaussianBelief,
    GaussianMixture,
    MissingAnchorError,
    NumericalError,
    SomaticPotential,
    act_limit_label,
    density_grid,
    entropy,
    kernel_evidence,
    posterior_x,
    posterior_y,
)

__version__ = "0.1.0"
