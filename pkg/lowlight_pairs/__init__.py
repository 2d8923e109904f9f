'''
Construction and validation of low-light noisy/clean image-pair datasets.
'''
from argparse import ArgumentParser

from path_helpers import path


__version__ = '0.1.0'

LOG_LEVELS = ('critical', 'error', 'warning', 'info', 'debug')

#: Options shared by every command-line program.
LOWLIGHT_PARSER = ArgumentParser(description='Low-light image pair toolkit.',
                                 add_help=False)
LOWLIGHT_PARSER.add_argument('-c', '--config', type=path, default=None,
                             help='Configuration file (`ini` format).')
LOWLIGHT_PARSER.add_argument('-l', '--log-level', choices=LOG_LEVELS,
                             default='warning')
