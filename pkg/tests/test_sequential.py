import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from somatic.sequential import (
    DEFAULT_CONFORMITY,
    PEER_OTHER,
    PEER_SAME,
    ConformityConfig,
    InferenceState,
    ObservationModel,
    bayes_obs_update,
    calibrate_conformity,
    conformity_observation_model,
    conformity_step,
    prune,
    run_chain,
    sigma_mixture_posterior,
    wrong_trajectory,
)
from somatic.transform import (
    CategoricalBelief,
    GaussianBelief,
    GaussianMixture,
    NumericalError,
    SomaticPotential,
    posterior_x,
)

from oracles import pure_bayes_wrong

RIGHT_WRONG = ("right", "wrong")


def belief(p_right):
    return CategoricalBelief(RIGHT_WRONG, (p_right, 1 - p_right))


# --- observation updates ----------------------------------------------------------

def test_bayes_update_hand_computed():
    post = bayes_obs_update(belief(0.9), conformity_observation_model(0.85), PEER_SAME)
    # 0.9 * 0.85 vs 0.1 * 0.15
    assert post["right"] == pytest.approx(0.765 / 0.78)
    post = bayes_obs_update(belief(0.9), conformity_observation_model(0.85), PEER_OTHER)
    assert post["right"] == pytest.approx(0.135 / 0.22)
    assert post["wrong"] == pytest.approx(0.085 / 0.22)


def test_bayes_update_right_0_614_example():
    m = ObservationModel({("o", "right"): 0.15, ("o", "wrong"): 0.85,
                          ("n", "right"): 0.85, ("n", "wrong"): 0.15})
    post = bayes_obs_update(belief(0.9), m, "o")
    assert post.probs == pytest.approx((0.6136363636363636, 0.3863636363636364))


def test_bayes_update_uniform_and_exclusion():
    m = ObservationModel({("o", "right"): 0.3, ("o", "wrong"): 0.3})
    assert bayes_obs_update(belief(0.9), m, "o").probs == pytest.approx((0.9, 0.1))
    m = ObservationModel({("o", "right"): 0.5, ("o", "wrong"): 0.0, ("p", "wrong"): 1.0})
    assert bayes_obs_update(belief(0.9), m, "o").probs == (1.0, 0.0)


def test_bayes_update_errors():
    m = ObservationModel({("o", "right"): 0.0, ("o", "wrong"): 1.0, ("p", "right"): 1.0})
    with pytest.raises(NumericalError):
        bayes_obs_update(belief(1.0), m, "o")
    with pytest.raises(ValueError, match="unknown observation"):
        bayes_obs_update(belief(0.5), m, "q")


def test_observation_model_invariants():
    with pytest.raises(ValueError):
        ObservationModel({("o", "a"): 1.2})
    with pytest.raises(ValueError, match="positive"):
        ObservationModel({("o", "a"): 0.0, ("o", "b"): 1.0})


# --- pruning -----------------------------------------------------------------------

def test_prune_drops_light_and_caps():
    m = GaussianMixture.from_arrays([0.5, 1e-10, 0.3, 0.2 - 1e-10], [0, 1, 2, 3], [1, 1, 1, 1])
    p = prune(m)
    assert len(p) == 3 and list(p.means) == [0, 2, 3]
    p = prune(m, cap=2)
    assert list(p.means) == [0, 2]
    assert math.fsum(p.weights) == pytest.approx(1.0)


# --- conformity chain -----------------------------------------------------------------

def test_zero_observations_is_noop():
    cfg = DEFAULT_CONFORMITY
    s = cfg.initial_state()
    states = run_chain(s, cfg.potential(), conformity_observation_model(), [])
    assert states == [s]


def test_decoupled_chain_is_pure_bayes():
    cfg = replace(ConformityConfig(), gamma=1e6)
    traj = wrong_trajectory(cfg, 5)
    assert traj[5] == pytest.approx(0.9985, abs=1e-4)
    assert traj[5] == pytest.approx(pure_bayes_wrong(0.1, 0.85, 5), abs=1e-9)


@pytest.mark.parametrize("collapse", ["exact", "moment_match"])
def test_decoupled_commutes_with_plain_updates(collapse):
    cfg = replace(ConformityConfig(), gamma=1e6, collapse=collapse, anchor_gap=1.7)
    m = conformity_observation_model()
    b = cfg.initial_state().belief_x
    for k, st_ in enumerate(cfg.run(8)):
        assert st_.belief_x.probs == pytest.approx(b.probs, abs=1e-6)
        b = bayes_obs_update(b, m, PEER_OTHER)


@pytest.mark.parametrize("collapse", ["exact", "moment_match"])
def test_frozen_calibration_hits_targets(collapse):
    traj = wrong_trajectory(replace(DEFAULT_CONFORMITY, collapse=collapse), 10)
    assert traj[0] == pytest.approx(0.1)
    assert abs(traj[5] - 0.67) <= 0.05
    assert abs(traj[10] - 0.995) <= 0.01


def test_calibration_reproduces_frozen_default():
    result = calibrate_conformity()
    assert result.best == DEFAULT_CONFORMITY
    coarse = [r for r in result.rows if r["stage"] == "coarse"]
    assert len(coarse) == 2 * 61
    # no coarse grid point is within tolerance at step 5 for either strategy
    assert all(abs(r["p_wrong_step5"] - 0.67) > 0.05 for r in coarse)


def test_exact_and_moment_agree_after_one_step():
    for gap in (0.2, 0.51, 1.5):
        a = conformity_step(replace(DEFAULT_CONFORMITY, anchor_gap=gap, collapse="exact").initial_state(),
                            SomaticPotential({"right": gap, "wrong": -gap}, 0.3),
                            conformity_observation_model(), PEER_OTHER, "exact")
        b = conformity_step(replace(DEFAULT_CONFORMITY, anchor_gap=gap).initial_state(),
                            SomaticPotential({"right": gap, "wrong": -gap}, 0.3),
                            conformity_observation_model(), PEER_OTHER, "moment_match")
        assert a.belief_x.probs == b.belief_x.probs
        assert len(b.belief_y) == 1
        assert b.belief_y.mean() == pytest.approx(a.belief_y.mean())
        assert b.belief_y.variance() == pytest.approx(a.belief_y.variance())


def test_exact_mixture_grows_then_caps():
    cfg = replace(DEFAULT_CONFORMITY, collapse="exact", anchor_gap=0.3)
    states = cfg.run(10)
    assert [len(s.belief_y) for s in states[:4]] == [1, 2, 4, 8]
    assert all(len(s.belief_y) <= 64 for s in states)
    assert [s.step for s in states] == list(range(11))


def test_unknown_collapse():
    cfg = DEFAULT_CONFORMITY
    with pytest.raises(ValueError):
        conformity_step(cfg.initial_state(), cfg.potential(), conformity_observation_model(),
                        PEER_OTHER, "median")


# Monotone growth of P(wrong) holds while the per-step connotative pull toward
# "right" is weaker than the 0.85/0.15 observation ratio. The pull grows as
# gamma shrinks: with moment matching the first non-monotone gap is about 0.47
# at gamma=0.2 and 0.54 at gamma=0.3, so gap <= 0.4 keeps inside the regime.
# Stronger anchors reverse the trend (see test_strong_anchors_resist_conformity).
@settings(max_examples=40, deadline=None)
@given(gap=st.floats(0.0, 0.4), gamma=st.floats(0.2, 3.0),
       collapse=st.sampled_from(["exact", "moment_match"]))
def test_monotone_conformity_weak_coupling(gap, gamma, collapse):
    traj = wrong_trajectory(ConformityConfig(anchor_gap=gap, gamma=gamma, collapse=collapse), 10)
    assert all(b >= a - 1e-12 for a, b in zip(traj, traj[1:]))


def test_strong_anchors_resist_conformity():
    traj = wrong_trajectory(ConformityConfig(anchor_gap=1.0), 5)
    assert traj[5] < traj[0]


def test_sharp_kernel_breaks_monotonicity_at_moderate_gap():
    traj = wrong_trajectory(ConformityConfig(anchor_gap=0.5, gamma=0.2, collapse="moment_match"), 10)
    assert traj[2] < traj[1] and traj[10] < traj[0]


@settings(max_examples=60, deadline=None)
@given(gap=st.floats(0.0, 3.5), gamma=st.floats(0.05, 5.0), sigma=st.floats(0.1, 3.0),
       prior_wrong=st.floats(0.01, 0.99))
def test_first_step_bracketing(gap, gamma, sigma, prior_wrong):
    """After one step P(wrong) lies between the gamma->0 lock and pure Bayes."""
    cfg = ConformityConfig(anchor_gap=gap, gamma=gamma, sigma_y=sigma, prior_wrong=prior_wrong)
    got = wrong_trajectory(cfg, 1)[1]
    upper = pure_bayes_wrong(prior_wrong, 0.85, 1)
    lock = wrong_trajectory(replace(cfg, gamma=1e-6), 1)[1]
    assert lock - 1e-12 <= got <= upper + 1e-12


def test_later_steps_can_exceed_pure_bayes():
    # once the sentiment belief carries a "wrong" mode its evidence can favour
    # "wrong"; the excess over pure Bayes is tiny but real
    cfg = ConformityConfig(anchor_gap=0.5668636332703443, gamma=0.40961155293915347)
    traj = wrong_trajectory(cfg, 10)
    excess = max(t - pure_bayes_wrong(0.1, 0.85, k) for k, t in enumerate(traj))
    assert 0 < excess < 1e-5


# --- dispersion types ---------------------------------------------------------------------

GOOD_BAD = SomaticPotential({"good": 1.32, "bad": -0.67}, 0.3)
PRIOR_BAD = CategoricalBelief(("good", "bad"), (0.2, 0.8))


def test_sigma_mixture_reported_value():
    types = [(1 / 3, 0.5), (1 / 3, 1.23), (1 / 3, 2.0)]
    got = sigma_mixture_posterior(types, PRIOR_BAD, 2.0, GOOD_BAD, "bad")
    assert abs(got - 0.32) <= 0.01
    # the three individually reported posteriors average to 0.327
    assert (0.00024 + 0.34 + 0.64) / 3 == pytest.approx(0.3267, abs=1e-4)
    assert abs(got - (0.00024 + 0.34 + 0.64) / 3) < 0.01


def test_sigma_mixture_single_type():
    got = sigma_mixture_posterior([(1.0, 1.23)], PRIOR_BAD, 2.0, GOOD_BAD, "bad")
    assert got == posterior_x(PRIOR_BAD, GaussianBelief(2.0, 1.23), GOOD_BAD)["bad"]


def test_sigma_mixture_bad_weights():
    with pytest.raises(ValueError):
        sigma_mixture_posterior([(0.5, 1.0), (0.2, 2.0)], PRIOR_BAD, 2.0, GOOD_BAD, "bad")
