import logging

from configobj import ConfigObj, flatten_errors
from validate import Validator
import path_helpers as ph

from logging_helpers import _L


logger = logging.getLogger(__name__)


class ValidationError(Exception):
    pass


class Config(object):
    '''
    Pipeline configuration backed by an ``ini`` file.

    Missing keys (or a missing file) fall back to the defaults of
    :attr:`spec`.
    '''
    default_config_directory = ph.path('~').expanduser().joinpath(
        '.lowlight_pairs')
    default_config_path = default_config_directory.joinpath(
        'lowlight_pairs.ini')

    spec = """
        [alignment]
        # percentile of the raw reference mapped to `anchor_value`
        anchor_percentile = float(min=0, max=100, default=99)
        anchor_value = float(min=0, max=255, default=230)
        # blur applied before gain estimation
        blur_sigma = float(min=0, default=5)
        gradient_threshold = float(min=0, default=1.0)
        min_mask_support = integer(min=1, default=1000)
        rel_tol = float(min=0, default=1e-5)
        max_iterations = integer(min=1, default=200)
        # gain search bracket, relative to the ratio of means
        bracket_low = float(min=0, default=0.25)
        bracket_high = float(min=0, default=4.0)
        # single gain for all channels
        joint_alpha = boolean(default=False)
        diagnostic_bin_width = float(min=0, default=4)

        [noise]
        exclude_saturated = boolean(default=True)
        curve_bin_width = float(min=0, default=2)
        curve_min_support = integer(min=1, default=1000)
        curve_channel = option('pooled', 'red', 'green', 'blue', 'gray', default='pooled')
        curve_method = option('pair', 'standard', 'blurred_ref', default='pair')
        blur_sigma = float(min=0, default=20)

        [gate]
        threshold_db = float(default=34)

        [calibration]
        anchor_percentile = float(min=0, max=100, default=50)
        anchor_value = float(min=0, max=255, default=128)
        blur_sigma = float(min=0, default=20)

        [pipeline]
        workers = integer(min=1, default=1)
        seed = integer(min=0, default=0)
        write_bmp = boolean(default=True)
        write_pnm = boolean(default=True)

        [denoise]
        # timeout of one external denoiser invocation, in seconds
        timeout = float(min=0, default=600)
        sigma_grid = float_list(default=list(5, 10, 15, 20, 25, 50))
        """

    def __init__(self, filename=None):
        self.load(filename)

    def __getitem__(self, i):
        return self.data[i]

    def load(self, filename=None):
        """
        Load configuration from a file.

        Parameters
        ----------
        filename : str, optional
            Path to an ``ini`` file.  If ``None``, load the default location
            if it exists, otherwise use the default options.

        Raises
        ------
        IOError
            If ``filename`` does not exist.
        configobj.ConfigObjError
            If the file cannot be parsed.
        ValidationError
            If one or more fields are invalid.
        """
        logger = _L()  # use logger with method context
        if filename is None:
            self.filename = self.default_config_path
            if not self.filename.isfile():
                logger.debug('Using default configuration.')
                self.data = ConfigObj(configspec=self.spec.split("\n"))
                self._validate()
                return
        elif not ph.path(filename).exists():
            raise IOError('Config file `%s` does not exist.' % filename)
        else:
            self.filename = ph.path(filename)
        logger.info('Loading config file from %s', self.filename)
        self.data = ConfigObj(self.filename, configspec=self.spec.split("\n"))
        self._validate()

    def save(self, filename=None):
        if filename is None:
            filename = self.filename
        # make sure that the parent directory exists
        ph.path(filename).realpath().parent.makedirs_p()
        with open(filename, 'wb') as f:
            self.data.write(outfile=f)

    def _validate(self):
        logger = _L()  # use logger with method context
        validator = Validator()
        results = self.data.validate(validator, copy=True)
        if results is not True:
            logger.error('Config file validation failed!')
            for (section_list, key, _) in flatten_errors(self.data, results):
                if key is not None:
                    logger.error('The "%s" key in the section "%s" failed '
                                 'validation', key, ', '.join(section_list))
                else:
                    logger.error('The following section was missing: %s',
                                 ', '.join(section_list))
            raise ValidationError('Invalid configuration in `%s`.' %
                                  self.filename)
        self.data.filename = self.filename

    def alignment_options(self):
        '''
        Returns
        -------
        dict
            Keyword arguments of
            :func:`~lowlight_pairs.alignment.align_scene`.
        '''
        section = self.data['alignment']
        return {'anchor_percentile': section['anchor_percentile'],
                'anchor_value': section['anchor_value'],
                'joint': section['joint_alpha'],
                'diagnostic_bin_width': section['diagnostic_bin_width'],
                'blur_sigma': section['blur_sigma'],
                'gradient_threshold': section['gradient_threshold'],
                'min_support': section['min_mask_support'],
                'rel_tol': section['rel_tol'],
                'max_iterations': section['max_iterations'],
                'bracket': (section['bracket_low'], section['bracket_high'])}

    def curve_options(self):
        '''
        Returns
        -------
        dict
            Keyword arguments of :func:`~lowlight_pairs.noise.noise_curve`.
        '''
        section = self.data['noise']
        return {'bin_width': section['curve_bin_width'],
                'min_support': section['curve_min_support'],
                'channel': section['curve_channel'],
                'method': section['curve_method'],
                'blur_sigma': section['blur_sigma']}
