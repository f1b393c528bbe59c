import itertools
import math

import numpy as np
import pytest

from oracles import phase_device_by_loops, random_unitary
from trifringe.device import coupling_unitary, ideal_device_unitary, ideal_tritter
from trifringe.errors import UndefinedVisibilityError, ValidationError
from trifringe.interference import (PAIR_OUTCOMES, DelayProfile, FockState,
                                    classical_pair_probability,
                                    multi_photon_distribution,
                                    multi_photon_probability,
                                    pair_distribution, pair_probability,
                                    pair_probability_delayed,
                                    predicted_visibility,
                                    single_photon_distribution)

# 50/50 coupler between the first two arms, third arm idle
COUPLER = coupling_unitary((math.pi / 4.0, 0.0, 0.0))

DISTINCT_PAIRS = ((0, 1), (0, 2), (1, 2))


def test_fock_state_parsing_and_accessors():
    s = FockState.parse("110")
    assert s.occupations == (1, 1, 0)
    assert s.total == 2
    assert s.modes() == (0, 1)
    assert str(s) == "110"
    assert FockState((0, 2, 1)).modes() == (1, 1, 2)
    with pytest.raises(ValidationError):
        FockState.parse("abc")
    with pytest.raises(ValidationError):
        FockState((0, 0, 0))
    with pytest.raises(ValidationError):
        FockState((1, 1))


def test_single_photon_identity_and_tritter():
    probs = single_photon_distribution(np.eye(3), 1)
    assert np.array_equal(probs, [0.0, 1.0, 0.0])
    assert np.allclose(single_photon_distribution(ideal_tritter(), 2), 1.0 / 3.0, atol=1e-15)


def test_single_photon_normalization_seeded():
    rng = np.random.default_rng(17)
    for _ in range(200):
        u = random_unitary(rng)
        for port in range(3):
            probs = single_photon_distribution(u, port)
            assert abs(probs.sum() - 1.0) < 1e-12


def test_single_photon_vs_loop_oracle():
    u = ideal_device_unitary(0.94)
    ref = np.abs(phase_device_by_loops(0.94)[0, :]) ** 2
    assert np.max(np.abs(single_photon_distribution(u, 0) - ref)) < 1e-13


def test_pair_probability_hom_suppression():
    assert pair_probability(COUPLER, (0, 1), (0, 1)) < 1e-30


def test_pair_probability_tritter_values():
    t = ideal_tritter()
    for pair in DISTINCT_PAIRS:
        assert pair_probability(t, (0, 1), pair) == pytest.approx(1.0 / 9.0, abs=1e-12)
    for mode in range(3):
        assert pair_probability(t, (0, 1), (mode, mode)) == pytest.approx(2.0 / 9.0, abs=1e-12)


def test_pair_probability_identity():
    assert pair_probability(np.eye(3), (0, 1), (0, 1)) == pytest.approx(1.0)
    for outcome in PAIR_OUTCOMES:
        if set(outcome) != {0, 1}:
            assert pair_probability(np.eye(3), (0, 1), outcome) == pytest.approx(0.0, abs=1e-30)


def test_pair_probability_rejects_bunched_input():
    with pytest.raises(ValidationError):
        pair_probability(np.eye(3), (1, 1), (0, 1))


def test_pair_distribution_normalization_seeded():
    rng = np.random.default_rng(101)
    for _ in range(300):
        u = coupling_unitary(rng.uniform(0.0, 2.0, size=3))
        total = sum(pair_distribution(u, (0, 2)).values())
        assert abs(total - 1.0) < 1e-12


def test_classical_pair_distribution_normalization():
    rng = np.random.default_rng(55)
    for _ in range(100):
        u = random_unitary(rng)
        total = sum(classical_pair_probability(u, (1, 2), outcome)
                    for outcome in PAIR_OUTCOMES)
        assert abs(total - 1.0) < 1e-12


def test_pair_probability_agrees_with_permanent_oracle():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        u = random_unitary(rng)
        inputs = (0, 1) if rng.uniform() < 0.5 else (1, 2)
        for outcome in PAIR_OUTCOMES:
            direct = pair_probability(u, inputs, outcome)
            via_permanent = multi_photon_probability(u, inputs, outcome)
            worst = max(worst, abs(direct - via_permanent))
    assert worst < 1e-12


def test_delay_limits_and_halving():
    rng = np.random.default_rng(7)
    kappa = 34.657
    for _ in range(50):
        u = random_unitary(rng)
        quantum = pair_probability(u, (0, 1), (0, 2))
        classical = classical_pair_probability(u, (0, 1), (0, 2))
        at_zero = pair_probability_delayed(u, (0, 1), (0, 2), DelayProfile(kappa, 0.0))
        far = pair_probability_delayed(u, (0, 1), (0, 2),
                                       DelayProfile(kappa, 1e6 / math.sqrt(kappa)))
        assert abs(at_zero - quantum) < 1e-12
        assert abs(far - classical) < 1e-12
        # overlap factor exactly 1/2 when kappa tau^2 / 2 = ln 2
        tau_half = math.sqrt(2.0 * math.log(2.0) / kappa)
        halfway = pair_probability_delayed(u, (0, 1), (0, 2), DelayProfile(kappa, tau_half))
        assert halfway - classical == pytest.approx(0.5 * (at_zero - classical), abs=1e-14)


def test_delay_textbook_coupler_and_tritter():
    kappa = 10.0
    far = DelayProfile(kappa, 1e4)
    zero = DelayProfile(kappa, 0.0)
    assert pair_probability_delayed(COUPLER, (0, 1), (0, 1), zero) == pytest.approx(0.0, abs=1e-15)
    assert pair_probability_delayed(COUPLER, (0, 1), (0, 1), far) == pytest.approx(0.5, abs=1e-12)
    t = ideal_tritter()
    assert pair_probability_delayed(t, (0, 1), (0, 1), zero) == pytest.approx(1.0 / 9.0, abs=1e-12)
    assert pair_probability_delayed(t, (0, 1), (0, 1), far) == pytest.approx(2.0 / 9.0, abs=1e-12)


def test_delay_rejects_bunched_outputs_and_bad_profiles():
    with pytest.raises(ValidationError):
        pair_probability_delayed(ideal_tritter(), (0, 1), (2, 2), DelayProfile(1.0, 0.0))
    with pytest.raises(ValidationError):
        DelayProfile(0.0, 1.0)
    with pytest.raises(ValidationError):
        DelayProfile(1.0, np.inf)


def test_visibility_textbook_cases():
    # exact +1: both classical paths equal, interference fully destructive
    assert predicted_visibility(COUPLER, (0, 1), (0, 1)) == 1.0
    for pair in DISTINCT_PAIRS:
        v = predicted_visibility(ideal_tritter(), (0, 1), pair)
        assert v == pytest.approx(0.5, abs=1e-12)
    assert predicted_visibility(np.eye(3), (0, 1), (0, 1)) == pytest.approx(0.0, abs=1e-30)


def test_visibility_bounded_seeded():
    rng = np.random.default_rng(13)
    for _ in range(500):
        u = random_unitary(rng)
        for pair in DISTINCT_PAIRS:
            assert abs(predicted_visibility(u, (0, 1), pair)) <= 1.0 + 1e-12


def test_visibility_matches_finite_scan_contrast():
    rng = np.random.default_rng(29)
    kappa = 34.657
    far = DelayProfile(kappa, 1e6 / math.sqrt(kappa))
    zero = DelayProfile(kappa, 0.0)
    for _ in range(200):
        u = random_unitary(rng)
        baseline = pair_probability_delayed(u, (0, 1), (1, 2), far)
        if baseline < 1e-6:
            continue
        dip = pair_probability_delayed(u, (0, 1), (1, 2), zero)
        from_scan = (baseline - dip) / baseline
        assert from_scan == pytest.approx(predicted_visibility(u, (0, 1), (1, 2)), abs=1e-9)


def test_visibility_undefined_when_baseline_dark():
    with pytest.raises(UndefinedVisibilityError):
        predicted_visibility(np.eye(3), (0, 1), (0, 2))
    with pytest.raises(ValidationError):
        predicted_visibility(ideal_tritter(), (0, 1), (1, 1))


def test_multi_photon_single_reduces_to_intensities():
    rng = np.random.default_rng(61)
    u = random_unitary(rng)
    probs = single_photon_distribution(u, 2)
    for mode in range(3):
        assert multi_photon_probability(u, (2,), (mode,)) == pytest.approx(probs[mode], abs=1e-14)


def test_multi_photon_distributions_normalize():
    t = ideal_tritter()
    bunched = multi_photon_distribution(t, (0, 0))
    assert abs(sum(bunched.values()) - 1.0) < 1e-12
    rng = np.random.default_rng(71)
    u = random_unitary(rng)
    three = multi_photon_distribution(u, (0, 1, 2))
    assert abs(sum(three.values()) - 1.0) < 1e-12
    assert len(three) == 10  # multisets of size 3 over 3 modes


def test_multi_photon_rejects_mismatched_totals():
    with pytest.raises(ValidationError):
        multi_photon_probability(np.eye(3), (0, 1), (0,))
