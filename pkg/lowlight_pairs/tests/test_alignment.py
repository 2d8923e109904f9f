import math

import numpy as np
import pytest

from ..alignment import (BRACKET, NOISE_BOUND, AlignmentError,
                         align_image, align_scene, alignment_diagnostics,
                         alignment_objective, compute_reference_gamma,
                         estimate_alpha, golden_section_search,
                         intensity_histograms, reference_planes)
from ..raster import (DegenerateImageError, Domain, InsufficientSupportError,
                      InvalidParameterError, MultiImage, gaussian_blur,
                      gradient_magnitude, scale_clamp)
from ..scene import SceneBundle
from ..synthetic import make_rng, raw_from_gt8, textured_image


def _raw(value, shape=(3, 8, 8)):
    return MultiImage(np.full(shape, value, dtype=float), Domain.RAW16)


def test_reference_gamma():
    '''
    Test the anchor percentile is mapped onto the anchor value.
    '''
    assert math.isclose(compute_reference_gamma(_raw(23000.)).gamma, 0.01)
    assert math.isclose(compute_reference_gamma(_raw(230.)).gamma, 1.)
    gamma = compute_reference_gamma(_raw(1000.), 50., 128.)
    assert gamma.anchor_percentile == 50.
    assert math.isclose(gamma.gamma, 0.128)


def test_reference_gamma_saturation():
    '''
    Test at most 1% of the scaled reference samples exceed the anchor value.
    '''
    raw = MultiImage(make_rng(2).uniform(0, 40000, size=(3, 100, 100)),
                     Domain.RAW16)
    ref8 = scale_clamp(raw, compute_reference_gamma(raw).gamma)
    assert (ref8.planes > 230 + 1e-9).mean() <= 0.01


def test_reference_gamma_errors():
    with pytest.raises(DegenerateImageError):
        compute_reference_gamma(_raw(0.))
    for anchor_value in (0., 300.):
        with pytest.raises(InvalidParameterError):
            compute_reference_gamma(_raw(100.), anchor_value=anchor_value)


def test_alignment_objective():
    '''
    Test clamped least-squares objective on single pixels.
    '''
    reference, raw, mask = [[100.]], [[50.]], [[True]]
    assert alignment_objective(reference, raw, mask, 1.) == 2500
    # `10 * 50` clamps to 255.
    assert alignment_objective(reference, raw, mask, 10.) == 24025
    assert alignment_objective([[100.]], [[50.]], mask, 2.) == 0
    with pytest.raises(InsufficientSupportError):
        alignment_objective(reference, raw, [[False]], 1.)
    for alpha in (0., -1.):
        with pytest.raises(InvalidParameterError):
            alignment_objective(reference, raw, mask, alpha)


def test_golden_section_search():
    result = golden_section_search(lambda x: (x - 3) ** 2, 0., 10.)
    assert result.converged
    assert abs(result.x - 3) < 1e-4
    assert result.fx <= 1e-8

    # Minimum at the lower endpoint.
    result = golden_section_search(lambda x: x, 1., 2.)
    assert result.x == 1.
    assert result.fx == 1.

    result = golden_section_search(lambda x: (x - 3) ** 2, 0., 10.,
                                   max_iterations=3)
    assert not result.converged
    assert result.iterations == 3


def test_reference_masks(gt8):
    '''
    Test masks select low-gradient pixels of the blurred reference.
    '''
    reference = reference_planes(gt8)
    for blurred_i, mask_i, plane_i in zip(reference.blurred, reference.masks,
                                          gt8.planes):
        assert np.allclose(blurred_i, gaussian_blur(plane_i, 5.))
        assert np.array_equal(mask_i, gradient_magnitude(blurred_i) < 1.)
        assert mask_i.sum() >= 1000


def _grid_minimizer(ref8, raw, channel):
    reference = reference_planes(ref8)
    mask = reference.masks[channel]
    ref_samples = reference.blurred[channel][mask]
    raw_samples = gaussian_blur(raw.planes[channel], 5.)[mask]
    alpha_0 = ref_samples.mean() / raw_samples.mean()
    alphas = np.linspace(BRACKET[0] * alpha_0, BRACKET[1] * alpha_0, 10 ** 4)
    values = [np.sum((ref_samples - np.clip(alpha * raw_samples, 0, 255)) ** 2)
              for alpha in alphas]
    return alphas[int(np.argmin(values))], alphas[1] - alphas[0]


def test_estimate_alpha_exact(gt8):
    '''
    Test recovery of a known gain and agreement with a grid search.
    '''
    raw = raw_from_gt8(gt8, 0.013)
    estimate = estimate_alpha(gt8, raw, 0)
    assert estimate.converged
    assert estimate.channel == 0
    assert estimate.mask_size >= 1000
    assert math.isclose(estimate.alpha, 0.013, rel_tol=1e-4)
    alpha_grid, step = _grid_minimizer(gt8, raw, 0)
    assert abs(estimate.alpha - alpha_grid) <= step


def test_estimate_alpha_noisy(gt8):
    raw = raw_from_gt8(gt8, 0.013, make_rng(4), sigma=10.)
    for channel in range(3):
        estimate = estimate_alpha(gt8, raw, channel)
        assert math.isclose(estimate.alpha, 0.013, rel_tol=0.01)


@pytest.mark.parametrize('seed', range(20))
def test_estimate_alpha_random(seed):
    '''
    Test per-channel gains in [0.005, 0.05] with noise up to 10 levels.
    '''
    rng = make_rng(100 + seed)
    gt8 = textured_image(128, 128, rng, low=40., high=200.,
                         domain=Domain.ALIGNED8)
    gains = rng.uniform(0.005, 0.05, size=3)
    raw = raw_from_gt8(gt8, gains, rng, sigma=rng.uniform(0, 10.))
    aligned, estimates = align_image(gt8, raw)
    assert aligned.domain == Domain.ALIGNED8
    for gain_i, estimate_i in zip(gains, estimates):
        assert math.isclose(estimate_i.alpha, gain_i, rel_tol=0.01)
    alpha_grid, step = _grid_minimizer(gt8, raw, 0)
    assert abs(estimates[0].alpha - alpha_grid) <= step + 1e-5 * alpha_grid


def test_estimate_alpha_scale_invariance(gt8):
    raw = raw_from_gt8(gt8, 0.02)
    raw_2 = raw.with_planes(2 * raw.planes)
    for channel in range(3):
        assert math.isclose(estimate_alpha(gt8, raw, channel).alpha,
                            2 * estimate_alpha(gt8, raw_2, channel).alpha,
                            rel_tol=1e-4)


def test_align_idempotent(gt8):
    '''
    Test re-aligning an aligned image yields unit gains.
    '''
    aligned, _ = align_image(gt8, raw_from_gt8(gt8, 0.013))
    for channel in range(3):
        assert math.isclose(estimate_alpha(gt8, aligned, channel).alpha, 1.,
                            rel_tol=1e-4)


def test_align_joint(gt8):
    aligned, estimates = align_image(gt8, raw_from_gt8(gt8, 0.02),
                                     joint=True)
    assert len(estimates) == 1
    assert estimates[0].channel is None
    assert math.isclose(estimates[0].alpha, 0.02, rel_tol=1e-4)
    assert np.allclose(aligned.planes, gt8.planes, atol=1e-6)


def test_estimate_alpha_errors(gt8):
    raw = raw_from_gt8(gt8, 0.02)
    with pytest.raises(InsufficientSupportError):
        estimate_alpha(gt8, raw, 0, min_support=10 ** 6)
    with pytest.raises(DegenerateImageError):
        estimate_alpha(gt8, raw.with_planes(np.zeros((3, 128, 128))), 0)
    with pytest.raises(InvalidParameterError):
        estimate_alpha(gt8, raw.crop(0, 0, 64, 64), 0)


def _bundle(gt8, gains=(0.01, 0.02, 0.05)):
    return SceneBundle([raw_from_gt8(gt8, gains[0])],
                       [raw_from_gt8(gt8, gains[1])],
                       [raw_from_gt8(gt8, gains[2])], scene_id='synthetic')


def test_align_scene(gt8):
    '''
    Test aligned images match the reference within half a level per bin.
    '''
    aligned = align_scene(_bundle(gt8))
    assert [label for label, _ in aligned.images()] == ['reference', 'clean',
                                                        'noisy_0']
    assert list(aligned.estimates) == ['clean', 'noisy_0']
    for label, diagnostics in aligned.diagnostics.items():
        assert math.isclose(diagnostics.noise_bound, 12.57, abs_tol=0.01)
        assert diagnostics.drift_bins == 0
        bins = diagnostics.bins
        assert len(bins) == 64
        assert bins['bin_center'].iloc[0] == 2
        assert bins['bin_center'].iloc[-1] == 254
        populated = bins[bins['count'] > 0]
        assert (populated['mean_diff'].abs() <= 0.5).all()
        assert bins['count'].sum() == 3 * gt8.size
    assert np.allclose(aligned.gt_estimate().planes, aligned.reference.planes,
                       atol=1e-6)
    summary = aligned.to_dict()
    assert math.isclose(summary['gamma'], aligned.gamma.gamma)
    assert summary['images']['clean']['converged']
    assert len(summary['images']['noisy_0']['alpha']) == 3


def test_align_scene_averages_groups(gt8):
    '''
    Test groups are averaged in the raw domain before the gamma is derived.
    '''
    bundle = _bundle(gt8)
    low, high = (raw_from_gt8(gt8, gain) for gain in (0.008, 0.0133333))
    averaged = SceneBundle([low, high], bundle.clean, bundle.noisy)
    expected = compute_reference_gamma(MultiImage.average([low, high]))
    assert math.isclose(align_scene(averaged).gamma.gamma, expected.gamma)


def test_align_scene_crop(gt8):
    bundle = _bundle(gt8)
    cropped = SceneBundle(bundle.reference, bundle.clean, bundle.noisy,
                          crop={'x': 0, 'y': 0, 'w': 100, 'h': 90})
    aligned = align_scene(cropped)
    assert aligned.reference.shape == (90, 100)
    assert aligned.noisy[0].shape == (90, 100)


def test_align_scene_errors(gt8):
    '''
    Test failures name the image that could not be aligned.
    '''
    bundle = _bundle(gt8)
    zeros = MultiImage(np.zeros((3, 128, 128)), Domain.RAW16)
    with pytest.raises(AlignmentError) as exc_info:
        align_scene(SceneBundle([zeros], bundle.clean, bundle.noisy))
    assert exc_info.value.image == 'reference'
    with pytest.raises(AlignmentError) as exc_info:
        align_scene(SceneBundle(bundle.reference, bundle.clean,
                                bundle.noisy + [zeros]))
    assert exc_info.value.image == 'noisy_1'
    with pytest.raises(AlignmentError) as exc_info:
        align_scene(bundle, min_support=10 ** 6)
    assert exc_info.value.image == 'clean'


def test_alignment_diagnostics_drift(gt8):
    shifted = gt8.with_planes(np.clip(gt8.planes + 20, 0, 255))
    diagnostics = alignment_diagnostics(shifted, gt8)
    assert diagnostics.noise_bound == NOISE_BOUND
    assert diagnostics.drift_bins > 0


def test_intensity_histograms(gt8):
    df = intensity_histograms([('reference', gt8)])
    assert len(df) == 3 * 256
    assert list(df.columns) == ['image', 'channel', 'intensity', 'count']
    assert (df.groupby('channel')['count'].sum() == gt8.size).all()
    image = MultiImage(np.full((3, 2, 2), 2.5), Domain.ALIGNED8)
    df = intensity_histograms([('x', image)])
    assert df.loc[df['intensity'] == 3, 'count'].tolist() == [4, 4, 4]
