'''
Scene bundles: the reference / clean / noisy image groups of one capture
sequence.
'''
from collections import namedtuple
import logging

from .raster import InvalidParameterError, MultiImage, check_compatible


logger = logging.getLogger(__name__)

Crop = namedtuple('Crop', 'x y width height')


class SceneBundle(object):
    '''
    Images of one scene, grouped by role.

    Parameters
    ----------
    reference : list of MultiImage
        One or more long exposures averaged into the reference ``I^r``.
    clean : list of MultiImage
        One or more long exposures averaged into the clean image ``I^c``.
    noisy : list of MultiImage, optional
        Short-exposure images ``I^n``.  May be empty when the bundle is only
        used for gating.
    crop : Crop or dict, optional
        Rectangle applied to every image.
    scene_id : str, optional
    camera_tag : str, optional
    '''
    def __init__(self, reference, clean, noisy=None, crop=None,
                 scene_id='scene', camera_tag=''):
        self.reference = list(reference)
        self.clean = list(clean)
        self.noisy = list(noisy or [])
        if not self.reference or not self.clean:
            raise InvalidParameterError('Scene `%s` requires at least one '
                                        'reference and one clean image.' %
                                        scene_id)
        if isinstance(crop, dict):
            crop = Crop(crop['x'], crop['y'], crop['w'], crop['h'])
        self.crop = crop
        self.scene_id = scene_id
        self.camera_tag = camera_tag
        first = self.reference[0]
        for image_i in self.images[1:]:
            check_compatible(first, image_i)

    @property
    def images(self):
        return self.reference + self.clean + self.noisy

    def __repr__(self):
        return ('<SceneBundle %s (%s): %d reference, %d clean, %d noisy>' %
                (self.scene_id, self.camera_tag, len(self.reference),
                 len(self.clean), len(self.noisy)))

    def cropped(self):
        '''
        Returns
        -------
        SceneBundle
            Copy with the crop rectangle applied to every image (or ``self``
            if no crop is set).
        '''
        if self.crop is None:
            return self

        def _crop(images):
            return [image_i.crop(*self.crop) for image_i in images]

        return SceneBundle(_crop(self.reference), _crop(self.clean),
                           _crop(self.noisy), crop=None,
                           scene_id=self.scene_id, camera_tag=self.camera_tag)

    def reference_image(self):
        return MultiImage.average(self.reference)

    def clean_image(self):
        return MultiImage.average(self.clean)
