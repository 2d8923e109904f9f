'''
Show the pipeline configuration.

Usage::

    python -m lowlight_pairs.bin.config locate
    python -m lowlight_pairs.bin.config show --get alignment.anchor_value
    python -m lowlight_pairs.bin.config show --yaml
'''
import argparse
import io
import json
import sys

import configobj
import pydash
import yaml

import lowlight_pairs as lp
import lowlight_pairs.config


def _config_parser():
    parser = argparse.ArgumentParser(parents=[lp.LOWLIGHT_PARSER],
                                     add_help=False)

    subparsers = parser.add_subparsers(dest='command', help='commands')
    subparsers.required = True

    subparsers.add_parser('locate', help='Show path to configuration '
                          'source')

    show = subparsers.add_parser('show', help='Show configuration')
    show.add_argument('--get', metavar='KEY', help='Dotted key, e.g., '
                      '`gate.threshold_db`.')
    show_format = show.add_mutually_exclusive_group()
    show_format.add_argument('--json', action='store_true')
    show_format.add_argument('--yaml', action='store_true')
    return parser


CONFIG_PARSER = _config_parser()


def parse_args(args=None):
    """Parses arguments, returns ``argparse.Namespace``."""
    if args is None:
        args = sys.argv[1:]

    parser = argparse.ArgumentParser(parents=[CONFIG_PARSER])
    return parser.parse_args(args)


def main(args=None):
    '''
    Wrap :func:`config` with integer return code.

    Parameters
    ----------
    args : argparse.Namespace, optional
        Arguments as parsed by :func:`parse_args`.
    '''
    config(args)
    return 0


def config(args=None, output=None):
    '''
    Parameters
    ----------
    args : argparse.Namespace, optional
        Arguments as parsed by :func:`parse_args`.
    output : file-like, optional
        Stream to print to (default: ``sys.stdout``).

    Returns
    -------
    lowlight_pairs.config.Config
        Loaded (and validated) configuration.
    '''
    if args is None:
        args = parse_args()
    if output is None:
        output = sys.stdout

    config = lp.config.Config(args.config)

    if args.command == 'locate':
        exists = config.filename.isfile()
        print('%s%s' % (config.filename, '' if exists else ' (not found; '
                        'using defaults)'), file=output)
    elif args.command == 'show':
        if args.get:
            data = pydash.get(config.data.dict(), args.get)
        else:
            data = config.data.dict()

        if args.json:
            # Output in JSON.
            json.dump(obj=data, fp=output, indent=4)
            print(file=output)
        elif args.yaml:
            # Output in YAML format.
            print(yaml.safe_dump(data, default_flow_style=False), end='',
                  file=output)
        elif isinstance(data, dict):
            # Output in `ini` format.
            buffer_ = io.BytesIO()
            configobj.ConfigObj(data).write(buffer_)
            print(buffer_.getvalue().decode('utf8'), end='', file=output)
        else:
            print(data, file=output)
    return config


if __name__ == '__main__':
    sys.exit(main(parse_args()))
