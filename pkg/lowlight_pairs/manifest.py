'''
JSON scene manifests.

A manifest describes one batch of scenes::

    {"schema_version": 1,
     "scenes": [{"scene_id": "s01",
                 "camera_tag": "T3i",
                 "reference": ["s01/ref.ppm"],
                 "clean": ["s01/clean.ppm"],
                 "noisy": ["s01/noisy-0.ppm", "s01/noisy-1.ppm"],
                 "crop": {"x": 0, "y": 0, "w": 640, "h": 480},
                 "alignment": {"anchor_percentile": 99,
                               "anchor_value": 230,
                               "joint_alpha": false}}],
     "denoisers": [{"name": "gauss", "kind": "builtin_gaussian"}]}

Relative image paths are resolved against the directory of the manifest.

.. versionadded:: 0.1
'''
from collections import OrderedDict
import copy
import json
import logging

from logging_helpers import _L
import jsonschema
import path_helpers as ph

from .image_io import read_pnm16
from .raster import RasterError
from .scene import SceneBundle


logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

DEFINITIONS_SCHEMA = {
    'definitions':
    {'paths': {'type': 'array', 'items': {'type': 'string', 'minLength': 1}},
     'crop':
     {'description': 'Rectangle applied to every image of the scene',
      'type': 'object',
      'properties': {'x': {'type': 'integer', 'minimum': 0},
                     'y': {'type': 'integer', 'minimum': 0},
                     'w': {'type': 'integer', 'minimum': 1},
                     'h': {'type': 'integer', 'minimum': 1}},
      'required': ['x', 'y', 'w', 'h'],
      'additionalProperties': False},
     'alignment':
     {'description': 'Per-scene alignment overrides',
      'type': 'object',
      'properties':
      {'anchor_percentile': {'type': 'number', 'exclusiveMinimum': True,
                             'minimum': 0, 'maximum': 100},
       'anchor_value': {'type': 'number', 'exclusiveMinimum': True,
                        'minimum': 0, 'maximum': 255},
       'joint_alpha': {'type': 'boolean'}},
      'additionalProperties': False},
     'scene':
     {'description': 'Images of one scene, grouped by role',
      'type': 'object',
      'properties':
      {'scene_id': {'type': 'string', 'minLength': 1},
       'camera_tag': {'type': 'string', 'default': ''},
       'reference': {'allOf': [{'$ref': '#/definitions/paths'},
                               {'minItems': 1}]},
       'clean': {'allOf': [{'$ref': '#/definitions/paths'},
                           {'minItems': 1}]},
       'noisy': {'$ref': '#/definitions/paths'},
       'crop': {'$ref': '#/definitions/crop'},
       'alignment': {'$ref': '#/definitions/alignment'}},
      'required': ['scene_id', 'reference', 'clean'],
      'additionalProperties': False},
     'denoiser':
     {'description': 'Denoiser evaluated by the `eval` command',
      'type': 'object',
      'properties':
      {'name': {'type': 'string', 'minLength': 1},
       'kind': {'type': 'string',
                'enum': ['builtin_gaussian', 'builtin_median', 'external']},
       'command': {'type': 'string'},
       'timeout': {'type': 'number', 'exclusiveMinimum': True, 'minimum': 0},
       'reentrant': {'type': 'boolean'}},
      'required': ['name', 'kind'],
      'additionalProperties': False},
     'manifest':
     {'description': 'Batch of scenes',
      'type': 'object',
      'properties':
      {'schema_version': {'type': 'integer', 'enum': [SCHEMA_VERSION]},
       'scenes': {'type': 'array', 'items': {'$ref': '#/definitions/scene'}},
       'denoisers': {'type': 'array',
                     'items': {'$ref': '#/definitions/denoiser'}}},
      'required': ['schema_version', 'scenes']}},
}

MANIFEST_SCHEMA = copy.deepcopy(DEFINITIONS_SCHEMA)
MANIFEST_SCHEMA['allOf'] = [{'$ref': '#/definitions/manifest'}]
SCENE_SCHEMA = copy.deepcopy(DEFINITIONS_SCHEMA)
SCENE_SCHEMA['allOf'] = [{'$ref': '#/definitions/scene'}]

VALIDATORS = {'manifest': jsonschema.Draft4Validator(MANIFEST_SCHEMA),
              'scene': jsonschema.Draft4Validator(SCENE_SCHEMA)}

ROLES = ('reference', 'clean', 'noisy')


class ManifestError(Exception):
    '''
    Attributes
    ----------
    scene_id : str
        Scene the error relates to (``None`` for batch-level errors).
    '''
    def __init__(self, message, scene_id=None):
        super(ManifestError, self).__init__(message)
        self.scene_id = scene_id


class SceneManifest(object):
    '''
    File-level description of one scene.

    Parameters
    ----------
    scene_id : str
    reference, clean : list of str
        At least one path each.
    noisy : list of str, optional
    camera_tag : str, optional
    crop : dict, optional
        ``{'x', 'y', 'w', 'h'}`` rectangle.
    alignment : dict, optional
        Overrides of ``anchor_percentile``, ``anchor_value`` and
        ``joint_alpha``.
    root : str, optional
        Directory relative paths are resolved against.
    '''
    def __init__(self, scene_id, reference, clean, noisy=None, camera_tag='',
                 crop=None, alignment=None, root=None):
        self.scene_id = scene_id
        self.camera_tag = camera_tag
        self.reference = list(reference)
        self.clean = list(clean)
        self.noisy = list(noisy or [])
        self.crop = crop
        self.alignment = dict(alignment or {})
        self.root = ph.path(root or '.')
        if not self.reference or not self.clean:
            raise ManifestError('Scene `%s` requires at least one reference '
                                'and one clean path.' % scene_id, scene_id)
        paths = self.reference + self.clean + self.noisy
        if len(set(self.resolve(p) for p in paths)) != len(paths):
            raise ManifestError('Scene `%s` lists the same file more than '
                                'once.' % scene_id, scene_id)

    def __repr__(self):
        return '<SceneManifest %s (%s)>' % (self.scene_id, self.camera_tag)

    @classmethod
    def from_dict(cls, scene_dict, root=None):
        '''
        Raises
        ------
        ManifestError
            If ``scene_dict`` does not match the scene schema.
        '''
        try:
            VALIDATORS['scene'].validate(scene_dict)
        except jsonschema.ValidationError as exception:
            raise ManifestError('Invalid scene: %s' % exception.message,
                                scene_dict.get('scene_id')
                                if isinstance(scene_dict, dict) else None)
        return cls(scene_dict['scene_id'], scene_dict['reference'],
                   scene_dict['clean'], scene_dict.get('noisy'),
                   scene_dict.get('camera_tag', ''), scene_dict.get('crop'),
                   scene_dict.get('alignment'), root=root)

    def to_dict(self):
        scene_dict = OrderedDict([('scene_id', self.scene_id),
                                  ('camera_tag', self.camera_tag)])
        for role_i in ROLES:
            scene_dict[role_i] = list(getattr(self, role_i))
        if self.crop is not None:
            scene_dict['crop'] = OrderedDict((k, self.crop[k])
                                             for k in 'xywh')
        if self.alignment:
            scene_dict['alignment'] = dict(self.alignment)
        return scene_dict

    def resolve(self, path):
        path = ph.path(path)
        return path if path.isabs() else self.root.joinpath(path).normpath()

    def load_bundle(self):
        '''
        Read every image of the scene.

        Returns
        -------
        SceneBundle

        Raises
        ------
        ManifestError
            If the crop rectangle does not fit the images.
        '''
        images = dict((role_i, [read_pnm16(self.resolve(p))
                                for p in getattr(self, role_i)])
                      for role_i in ROLES)
        if self.crop is not None:
            first = images['reference'][0]
            if (self.crop['x'] + self.crop['w'] > first.width or
                    self.crop['y'] + self.crop['h'] > first.height):
                raise ManifestError('Crop rectangle of scene `%s` exceeds '
                                    'the %dx%d image.' % (self.scene_id,
                                                          first.width,
                                                          first.height),
                                    self.scene_id)
        try:
            return SceneBundle(images['reference'], images['clean'],
                               images['noisy'], crop=self.crop,
                               scene_id=self.scene_id,
                               camera_tag=self.camera_tag)
        except RasterError as exception:
            raise ManifestError('Scene `%s`: %s' % (self.scene_id,
                                                    exception),
                                self.scene_id)


class Manifest(object):
    '''
    Batch of :class:`SceneManifest` plus optional denoiser definitions.
    '''
    def __init__(self, scenes=None, denoisers=None, filepath=None):
        self.scenes = list(scenes or [])
        self.denoisers = list(denoisers or [])
        self.filepath = filepath
        scene_ids = [scene_i.scene_id for scene_i in self.scenes]
        duplicates = sorted(set(s for s in scene_ids
                                if scene_ids.count(s) > 1))
        if duplicates:
            raise ManifestError('Duplicate scene ids: %s' %
                                ', '.join(duplicates))

    @classmethod
    def from_dict(cls, manifest_dict, root=None, filepath=None):
        try:
            VALIDATORS['manifest'].validate(manifest_dict)
        except jsonschema.ValidationError as exception:
            _L().debug('manifest validation failed', exc_info=True)
            raise ManifestError('Invalid manifest: %s' % exception.message)
        return cls([SceneManifest.from_dict(scene_i, root=root)
                    for scene_i in manifest_dict['scenes']],
                   manifest_dict.get('denoisers'), filepath=filepath)

    def to_dict(self):
        manifest_dict = OrderedDict([('schema_version', SCHEMA_VERSION),
                                     ('scenes', [scene_i.to_dict()
                                                 for scene_i in
                                                 self.scenes])])
        if self.denoisers:
            manifest_dict['denoisers'] = self.denoisers
        return manifest_dict


def load_manifest(filepath):
    '''
    Parameters
    ----------
    filepath : str
        Path to a JSON manifest.

    Returns
    -------
    Manifest

    Raises
    ------
    ManifestError
        If the file is not valid JSON or does not match the schema.
    '''
    filepath = ph.path(filepath).abspath()
    try:
        with open(filepath, 'r') as input_:
            manifest_dict = json.load(input_)
    except ValueError as exception:
        raise ManifestError('`%s` is not valid JSON: %s' % (filepath,
                                                            exception))
    return Manifest.from_dict(manifest_dict, root=filepath.parent,
                              filepath=filepath)


def write_manifest(manifest, filepath):
    '''
    Write a manifest as indented JSON.

    Parameters
    ----------
    manifest : Manifest or list of SceneManifest

    Returns
    -------
    path_helpers.path
        Absolute path of the written file.
    '''
    if not isinstance(manifest, Manifest):
        manifest = Manifest(manifest)
    filepath = ph.path(filepath).abspath()
    filepath.parent.makedirs_p()
    with open(filepath, 'w') as output:
        json.dump(manifest.to_dict(), output, indent=2)
        output.write('\n')
    return filepath
