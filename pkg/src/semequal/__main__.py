"""Run the command-line interface with `python -m semequal`."""

import sys

from semequal.cli import main

sys.exit(main())
