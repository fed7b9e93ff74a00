import sys

from .exp.cli import main

sys.exit(main())
