import pytest

from ..raster import Domain
from ..synthetic import make_rng, raw_from_gt8, textured_image
from ..scene import SceneBundle


@pytest.fixture
def rng():
    return make_rng(0)


@pytest.fixture
def gt8():
    '''
    128x128 8-bit scene of flat patches in ``[40, 200]``.
    '''
    return textured_image(128, 128, make_rng(1), low=40., high=200.,
                          domain=Domain.ALIGNED8)


def make_bundle(gt8, rng, sigma_ref=3., sigma_clean=3., sigma_noisy=(10., ),
                gains=(0.01, 0.012, 0.04), scene_id='scene', camera_tag=''):
    '''
    Raw scene whose images align to ``gt8`` with the given gains.

    ``gains`` are the reference, clean and noisy gains (all noisy images use
    the last one); noise levels are in 8-bit levels of ``gt8``.
    '''
    reference = raw_from_gt8(gt8, gains[0], rng, sigma_ref)
    clean = raw_from_gt8(gt8, gains[1], rng, sigma_clean)
    noisy = [raw_from_gt8(gt8, gains[2], rng, sigma_i)
             for sigma_i in sigma_noisy]
    return SceneBundle([reference], [clean], noisy, scene_id=scene_id,
                       camera_tag=camera_tag)
