import os
import pkg_resources
import sys

from paver.easy import task, needs, path
from paver.setuputils import setup

sys.path.insert(0, path('.').abspath())
import lowlight_pairs


install_requires = ['blinker', 'configobj', 'jsonschema', 'logging-helpers',
                    'numpy', 'pandas>=1.5', 'path-helpers>=0.2.post4',
                    'paver>=1.2.4', 'pydash', 'pyyaml', 'scipy']

setup(name='lowlight-pairs',
      version=lowlight_pairs.__version__,
      description='Alignment, noise estimation and quality gating of '
      'low-light noisy/clean image pairs',
      keywords='low-light denoising noise estimation dataset psnr ssim',
      license='BSD',
      long_description='\n%s\n' % open('README.md', 'rt').read(),
      packages=['lowlight_pairs', 'lowlight_pairs.bin',
                'lowlight_pairs.tests'],
      include_package_data=True,
      install_requires=install_requires,
      extras_require={'test': ['pytest']},
      entry_points={'console_scripts':
                    ['lowlight-pairs = lowlight_pairs.bin.cli:main']})


@task
def create_requirements():
    package_list = [p.split('>=')[0] for p in install_requires]
    requirements_path = os.path.join('lowlight_pairs', 'requirements.txt')
    with open(requirements_path, 'w') as output:
        output.write('\n'.join(['%s==%s' %
                                (p, pkg_resources.get_distribution(p).version)
                                for p in package_list]))


@task
def test():
    import pytest

    raise SystemExit(pytest.main(['-m', 'not slow']))


@task
@needs('generate_setup', 'minilib', 'create_requirements',
       'setuptools.command.sdist')
def sdist():
    """Overrides sdist to make sure that our setup.py is generated."""
    pass
