import math

import numpy as np
import pandas as pd
import pytest

from ..noise import (AffineNoiseModel, NoiseCurve, fit_affine_noise_model,
                     gate_from_sigma, noise_curve, quality_gate,
                     saturation_mask, sigma_blurred_reference, sigma_clean,
                     sigma_direct, sigma_noisy, sigma_noisy_avg,
                     sigma_standard)
from ..raster import (Domain, InsufficientSupportError, InvalidParameterError,
                      MultiImage)
from ..synthetic import (add_gaussian_noise, add_signal_dependent_noise,
                         checkerboard_image, constant_image, make_rng,
                         noisy_triple, ramp_image, textured_image)


def _patterns(shape=(3, 4, 4)):
    '''
    Two orthogonal zero-mean +/-1 patterns.
    '''
    y, x = np.indices(shape[1:])
    checker = np.where((x + y) % 2, 1., -1.)
    rows = np.where(y % 2, 1., -1.)
    return (np.broadcast_to(checker, shape), np.broadcast_to(rows, shape))


def _image(planes):
    return MultiImage(planes, Domain.ALIGNED8)


def _pair(pair_variance):
    '''
    Reference and clean images with ``var(ref - clean) == pair_variance``.
    '''
    d = math.sqrt(pair_variance) * _patterns()[0]
    return _image(128. + 0.5 * d), _image(128. - 0.5 * d)


def test_sigma_clean():
    ref, clean = _pair(18.)
    estimate = sigma_clean(ref, clean)
    assert estimate.method == 'clean_pair'
    assert np.allclose(estimate.sigma, 3.)
    assert math.isclose(estimate.pooled_sigma, 3.)
    assert not estimate.negative_radicand
    assert sigma_clean(ref, ref).pooled_sigma == 0


def test_sigma_clean_symmetric():
    rng = make_rng(0)
    gt = textured_image(64, 64, rng, 40., 200., domain=Domain.ALIGNED8)
    triple = noisy_triple(gt, 3., 3., 10., rng)
    assert np.array_equal(sigma_clean(triple.ref, triple.clean).sigma,
                          sigma_clean(triple.clean, triple.ref).sigma)


def test_sigma_noisy():
    '''
    Test ``var(n - r) = 109`` and ``var(r - c) = 18`` give 10.
    '''
    ref, clean = _pair(18.)
    noisy = _image(ref.planes + math.sqrt(109.) * _patterns()[1])
    estimate = sigma_noisy(noisy, ref, clean)
    assert estimate.method == 'noisy_vs_ref'
    assert np.allclose(estimate.sigma, 10.)
    assert math.isclose(estimate.pooled_sigma, 10.)


def test_sigma_noisy_avg():
    '''
    Test ``var(n - a) = 104.5`` and ``var(r - c) = 18`` give 10.
    '''
    ref, clean = _pair(18.)
    noisy = _image(128. + math.sqrt(104.5) * _patterns()[1])
    estimate = sigma_noisy_avg(noisy, ref, clean)
    assert estimate.method == 'noisy_vs_avg'
    assert math.isclose(estimate.pooled_sigma, 10.)


def test_negative_radicand():
    '''
    Test a noisy image no noisier than the clean pair is clamped and flagged.
    '''
    ref, clean = _pair(18.)
    estimate = sigma_noisy(ref, ref, clean)
    assert estimate.negative_radicand
    assert estimate.pooled_sigma == 0
    assert np.all(estimate.sigma == 0)


def test_saturation_mask():
    planes = np.full((3, 4, 4), 100.)
    planes[1, 0, 0] = 255.
    planes[2, 3, 3] = 0.
    image = _image(planes)
    mask = saturation_mask(image)
    assert mask.sum() == 14
    assert not mask[0, 0] and not mask[3, 3]
    assert saturation_mask(_image(np.full((3, 4, 4), 100.))).all()
    assert not saturation_mask(image, _image(np.full((3, 4, 4),
                                                     255.))).any()
    with pytest.raises(InvalidParameterError):
        saturation_mask()


@pytest.fixture
def triple():
    rng = make_rng(7)
    gt = textured_image(512, 512, rng, 40., 200., domain=Domain.ALIGNED8)
    return gt, noisy_triple(gt, 3., 3., 10., rng)


def test_estimators_monte_carlo(triple):
    '''
    Test estimates of known noise levels on a quarter megapixel.
    '''
    gt, (noisy, ref, clean) = triple
    mask = saturation_mask(noisy, ref, clean)
    assert math.isclose(sigma_clean(ref, clean, mask).pooled_sigma, 3.,
                        rel_tol=0.01)
    ours = sigma_noisy(noisy, ref, clean, mask).pooled_sigma
    assert math.isclose(ours, 10., rel_tol=0.01)
    avg = sigma_noisy_avg(noisy, ref, clean, mask).pooled_sigma
    assert math.isclose(avg, ours, rel_tol=0.005)
    direct = sigma_direct(noisy, gt, mask)
    assert direct.method == 'direct_vs_gt'
    assert math.isclose(direct.pooled_sigma, 10., rel_tol=0.01)
    # Standard estimate includes the reference noise.
    standard = sigma_standard(noisy, ref, mask).pooled_sigma
    assert math.isclose(standard, math.sqrt(109.), rel_tol=0.01)


def test_sigma_noisy_monotonic(triple):
    '''
    Test more noise in the noisy image gives a larger estimate.
    '''
    gt, (noisy, ref, clean) = triple
    noisier = add_gaussian_noise(noisy, math.sqrt(21.), make_rng(8))
    mask = saturation_mask(noisier, ref, clean)
    assert (sigma_noisy(noisier, ref, clean, mask).pooled_sigma >
            sigma_noisy(noisy, ref, clean, mask).pooled_sigma)


@pytest.mark.slow
def test_estimators_megapixel():
    '''
    Test mean relative errors over 50 one-megapixel trials.
    '''
    rng = make_rng(11)
    gt = textured_image(1024, 1024, rng, 40., 200., domain=Domain.ALIGNED8)
    errors = []
    for i in range(50):
        noisy, ref, clean = noisy_triple(gt, 3., 3., 10., rng)
        mask = saturation_mask(noisy, ref, clean)
        errors.append([sigma_noisy(noisy, ref, clean, mask).pooled_sigma / 10
                       - 1, sigma_clean(ref, clean, mask).pooled_sigma / 3 -
                       1])
    mean_errors = np.abs(np.mean(errors, axis=0))
    assert mean_errors[0] < 0.005
    assert mean_errors[1] < 0.005


def test_sigma_blurred_reference():
    '''
    Test self-referential estimate on a flat noisy surface.
    '''
    flat = constant_image(512, 512, 128., domain=Domain.ALIGNED8)
    noisy = add_gaussian_noise(flat, 5., make_rng(3))
    estimate = sigma_blurred_reference(noisy, noisy)
    assert estimate.method == 'blurred_ref'
    assert math.isclose(estimate.pooled_sigma, 5., rel_tol=0.02)

    blurred = noisy.with_planes(np.stack([np.full((8, 8), 1.)] * 3))
    assert sigma_blurred_reference(blurred, blurred).pooled_sigma < 1e-9


def test_sigma_blurred_reference_texture():
    '''
    Test texture inflates the blurred-reference estimate.
    '''
    gt = checkerboard_image(128, 128)
    noisy = add_gaussian_noise(gt, 5., make_rng(4))
    assert (sigma_blurred_reference(noisy, gt).pooled_sigma >
            sigma_direct(noisy, gt).pooled_sigma)


def _ramp_triple(law=None, sigma_noisy=8., low=40., high=215., seed=0):
    rng = make_rng(seed)
    gt = ramp_image(600, 1000, low, high)
    ref = add_gaussian_noise(gt, 0.5, rng)
    clean = add_gaussian_noise(gt, 0.5, rng)
    if law is None:
        noisy = add_gaussian_noise(gt, sigma_noisy, rng)
    else:
        noisy = add_signal_dependent_noise(gt, law.a, law.b, rng)
    return noisy, ref, clean


def test_noise_curve_flat():
    '''
    Test a flat noise level is recovered in every bin.
    '''
    noisy, ref, clean = _ramp_triple()
    curve = noise_curve(noisy, ref, clean, min_support=10000)
    assert curve.method == 'pair'
    assert curve.channel == 'pooled'
    assert list(curve.bins.columns) == ['intensity_center', 'sigma',
                                        'variance', 'support']
    assert len(curve.bins) > 50
    assert (curve.bins['support'] >= 10000).all()
    assert np.allclose(curve.bins['sigma'], 8., rtol=0.03)
    assert np.all(np.diff(curve.bins['intensity_center']) > 0)


def test_noise_curve_pooling():
    '''
    Test support-weighted bin variances match the global estimate.
    '''
    noisy, ref, clean = _ramp_triple()
    bins = noise_curve(noisy, ref, clean, min_support=1).bins
    pooled = np.average(bins['variance'], weights=bins['support'])
    assert math.isclose(pooled,
                        sigma_noisy_avg(noisy, ref, clean).pooled_sigma ** 2,
                        rel_tol=0.02)


def test_noise_curve_affine():
    '''
    Test an affine variance law is recovered on a full-range ramp.
    '''
    law = AffineNoiseModel(0.05, 2.)
    noisy, ref, clean = _ramp_triple(law, low=20., high=235.)
    curve = noise_curve(noisy, ref, clean, min_support=10000)
    expected = law.variance(curve.bins['intensity_center'])
    assert np.allclose(curve.bins['variance'], expected, rtol=0.05)
    model = fit_affine_noise_model(curve)
    assert math.isclose(model.a, 0.05, rel_tol=0.05)
    assert math.isclose(model.b, 2., rel_tol=0.1)


def test_noise_curve_variants():
    noisy, ref, clean = _ramp_triple()
    for channel in ('gray', 'red', 'blue'):
        assert noise_curve(noisy, ref, clean, channel=channel,
                           min_support=2000).channel == channel
    assert noise_curve(noisy, ref, clean, channel=1,
                       min_support=2000).channel == 'green'
    standard = noise_curve(noisy, ref, clean, method='standard',
                           min_support=10000)
    assert np.allclose(standard.bins['sigma'], 8., rtol=0.03)
    with pytest.raises(InvalidParameterError):
        noise_curve(noisy, ref, clean, channel='alpha')
    with pytest.raises(InvalidParameterError):
        noise_curve(noisy, ref, clean, method='direct')
    with pytest.raises(InvalidParameterError):
        noise_curve(noisy, ref, clean, bin_width=0)


def test_noise_curve_zero_noise():
    gt = ramp_image(100, 200)
    curve = noise_curve(gt, gt, gt, min_support=100)
    assert (curve.bins['sigma'] == 0).all()


def test_noise_curve_insufficient():
    gt = ramp_image(10, 10)
    with pytest.raises(InsufficientSupportError):
        noise_curve(gt, gt, gt)


def _curve(t, variance, support=1000):
    bins = pd.DataFrame({'intensity_center': t, 'sigma': np.sqrt(variance),
                         'variance': variance,
                         'support': np.full(len(t), support)})
    return NoiseCurve(bins, 2., 'pair', 'pooled', None)


def test_fit_affine_exact():
    t = np.arange(21., 235., 2.)
    model = fit_affine_noise_model(_curve(t, 0.05 * t + 2))
    assert math.isclose(model.a, 0.05, abs_tol=1e-9)
    assert math.isclose(model.b, 2., abs_tol=1e-7)
    model = fit_affine_noise_model(_curve(t, np.full(t.size, 64.)))
    assert abs(model.a) < 1e-9
    assert math.isclose(model.b, 64.)
    assert np.allclose(model.sigma([0, 255]), 8.)
    with pytest.raises(InsufficientSupportError):
        fit_affine_noise_model(_curve(t[:1], [1.]))


def test_fit_affine_non_negative():
    '''
    Test the fitted law is non-negative over the observed intensities.
    '''
    t = np.arange(11., 101., 2.)
    variance = np.maximum(0.1 * t - 5, 0.)
    model = fit_affine_noise_model(_curve(t, variance))
    assert model.variance(t).min() >= -1e-12
    assert model.a > 0


def test_gate_from_sigma():
    verdict = gate_from_sigma(4.5337)
    assert math.isclose(verdict.clean_pair_psnr, 35., abs_tol=0.01)
    assert verdict.passed
    verdict = gate_from_sigma(7.)
    assert math.isclose(verdict.clean_pair_psnr, 31.23, abs_tol=0.01)
    assert not verdict.passed
    assert not gate_from_sigma(255.).passed
    assert gate_from_sigma(255.).clean_pair_psnr == 0
    assert gate_from_sigma(0.).passed
    assert gate_from_sigma(0.).clean_pair_psnr == 99.
    assert gate_from_sigma(7., threshold_db=30.).passed


def test_quality_gate():
    '''
    Test the gate PSNR follows the pooled clean-pair sigma.
    '''
    ref, clean = _pair(2 * 4.5337 ** 2)
    verdict = quality_gate(ref, clean)
    assert math.isclose(verdict.sigma, 4.5337)
    assert verdict.passed
    assert verdict.threshold == 34.

    ref, clean = _pair(2 * 7. ** 2)
    assert not quality_gate(ref, clean).passed
    assert quality_gate(ref, ref).clean_pair_psnr == 99.


def test_quality_gate_channel_order(triple):
    _, (_, ref, clean) = triple
    order = [2, 0, 1]
    permuted = quality_gate(ref.with_planes(ref.planes[order]),
                            clean.with_planes(clean.planes[order]))
    verdict = quality_gate(ref, clean)
    assert permuted.passed == verdict.passed
    assert math.isclose(permuted.clean_pair_psnr, verdict.clean_pair_psnr)
