import sys

from .bin.cli import main


sys.exit(main())
