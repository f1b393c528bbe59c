import math

import numpy as np
import pytest

from trifringe.device import coupling_unitary
from trifringe.errors import (IllConditionedFitError, UndefinedVisibilityError,
                              ValidationError)
from trifringe.homscan import (HomScanDataset, VisibilityRecord, fit_scan,
                               subtract_accidentals)
from trifringe.interference import (DelayProfile, classical_pair_probability,
                                    pair_probability_delayed,
                                    predicted_visibility)
from trifringe.synth import (DEFAULT_KAPPA, CouplingLaw, RunConfig, ScanJob,
                             SyntheticDeviceSpec, generate_hom_scans)

DELAYS = tuple(np.linspace(-1.5, 1.5, 41))


def constant_spec(couplings, eta=1.0, pair_rate=5000.0, kappa=DEFAULT_KAPPA,
                  seed=0, window_ns=1.0):
    laws = tuple(CouplingLaw(c) for c in couplings)
    return SyntheticDeviceSpec(coupling_laws=laws, k_true=0.626,
                               heater_resistance=100.0,
                               eta_in=(eta,) * 3, eta_out=(eta,) * 3,
                               source_rate=1e5, pair_rate=pair_rate,
                               kappa=kappa, coincidence_window_ns=window_ns,
                               rng_seed=seed)


def one_scan(spec, outputs=(0, 1), noise_free=False, delays=DELAYS,
             integration_s=1.0):
    cfg = RunConfig(voltages=(1.0,), delays_ps=delays,
                    scan_integration_s=integration_s,
                    scans=(ScanJob(voltage=1.0, input_pair=(0, 1),
                                   output_pair=outputs),))
    return generate_hom_scans(spec, cfg, noise_free=noise_free)[0]


def direct_scan(counts, delays=DELAYS, **overrides):
    kwargs = dict(input_pair=(0, 1), output_pair=(0, 1), voltage=1.0,
                  current=0.01, integration_s=1.0, window_ns=1.0,
                  delays_ps=np.asarray(delays),
                  coincidences=np.asarray(counts, dtype=float),
                  singles_m=None, singles_n=None)
    kwargs.update(overrides)
    return HomScanDataset(**kwargs)


def test_dataset_validation():
    flat = np.full(41, 100.0)
    with pytest.raises(ValidationError):
        direct_scan(flat[:10], delays=DELAYS[:10])
    with pytest.raises(ValidationError):
        direct_scan(flat, delays=np.zeros(41))
    with pytest.raises(ValidationError):
        direct_scan(flat, output_pair=(1, 1))
    with pytest.raises(ValidationError):
        direct_scan(flat, window_ns=0.0)
    with pytest.raises(ValidationError):
        direct_scan(-flat)
    with pytest.raises(ValidationError):
        direct_scan(flat, singles_m=np.ones(5), singles_n=np.ones(41))


def test_subtract_accidentals_recovers_pure_signal():
    spec = constant_spec((0.9, 0.7, 0.5), eta=0.6, window_ns=50.0)
    scan = one_scan(spec, noise_free=True)
    corrected = subtract_accidentals(scan)
    assert corrected.accidentals_subtracted
    u = coupling_unitary((0.9, 0.7, 0.5))
    losses = (0.6 * 0.6) ** 2
    for tau, count in zip(corrected.delays_ps, corrected.coincidences):
        p = pair_probability_delayed(u, (0, 1), (0, 1),
                                     DelayProfile(spec.kappa, tau))
        assert count == pytest.approx(losses * spec.pair_rate * p, rel=1e-9)
    # second call is a no-op
    again = subtract_accidentals(corrected)
    assert np.array_equal(again.coincidences, corrected.coincidences)


def test_subtract_accidentals_passthrough_without_singles():
    scan = direct_scan(np.full(41, 50.0))
    assert subtract_accidentals(scan) is scan
    assert not scan.accidentals_subtracted


def test_fit_scan_recovers_predicted_visibility_noiseless():
    rng = np.random.default_rng(314)
    outputs = ((0, 1), (0, 2), (1, 2))
    worst = 0.0
    for trial in range(30):
        g = rng.uniform(0.2, 1.2, size=3)
        out = outputs[trial % 3]
        spec = constant_spec(tuple(g), seed=trial)
        scan = one_scan(spec, outputs=out, noise_free=True)
        predicted = predicted_visibility(coupling_unitary(g), (0, 1), out)
        record = fit_scan(scan, theta=0.625)
        worst = max(worst, abs(record.visibility - predicted))
        assert record.theta == 0.625
        assert abs(record.dip_center) < 1e-6
        assert record.dip_width == pytest.approx(1.0 / math.sqrt(spec.kappa), rel=1e-3)
    assert worst < 1e-6


def test_fit_scan_dip_and_peak_signs():
    dip_g = 0.18 + 1.2 / 3.0
    peak_g = 0.18 + 2.1 / 3.0
    dip = fit_scan(one_scan(constant_spec((dip_g,) * 3), noise_free=True))
    peak = fit_scan(one_scan(constant_spec((peak_g,) * 3), noise_free=True))
    assert dip.visibility > 0.3
    assert dip.extremum < dip.baseline
    assert peak.visibility < -0.1
    assert peak.extremum > peak.baseline


def test_fit_scan_sigma_tracks_poisson_spread():
    fitted = []
    sigmas = []
    for seed in range(100):
        spec = constant_spec((0.7, 0.7, 0.7), pair_rate=5000.0, seed=seed)
        record = fit_scan(one_scan(spec))
        fitted.append(record.visibility)
        sigmas.append(record.visibility_sigma)
    ratio = np.std(fitted) / np.mean(sigmas)
    assert 0.7 < ratio < 1.3


def test_visibility_record_rejects_unphysical_fit():
    with pytest.raises(ValidationError):
        VisibilityRecord(input_pair=(0, 1), output_pair=(0, 1), theta=0.0,
                         visibility=1.5, visibility_sigma=0.01,
                         baseline=100.0, extremum=-50.0,
                         dip_center=0.0, dip_width=0.2)


def test_fit_scan_undefined_on_dark_scan():
    with pytest.raises(UndefinedVisibilityError):
        fit_scan(direct_scan(np.zeros(41)))


def test_fit_scan_ill_conditioned_when_feature_fills_scan():
    # kappa = 0.5 gives a ~1.4 ps wide feature; +-1.5 ps leaves no baseline
    spec = constant_spec((0.7, 0.7, 0.7), kappa=0.5)
    with pytest.raises(IllConditionedFitError):
        fit_scan(one_scan(spec, noise_free=True))


def test_distinguishable_limit_is_flat_at_classical_level():
    # kappa tau^2 / 2 > 50 at every sampled delay
    delays = tuple(np.linspace(-1.5, 1.5, 40))  # grid skips tau = 0
    kappa = 2.0 * 50.0 / min(abs(d) for d in delays) ** 2
    spec = constant_spec((0.9, 0.7, 0.5), kappa=kappa)
    scan = one_scan(spec, noise_free=True, delays=delays)
    classical = classical_pair_probability(coupling_unitary((0.9, 0.7, 0.5)),
                                           (0, 1), (0, 1))
    pure = subtract_accidentals(scan).coincidences
    assert np.allclose(pure, spec.pair_rate * classical, rtol=1e-10)
