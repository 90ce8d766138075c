"""Allow ``python -m sphmean``."""

import sys

from .cli import main

sys.exit(main())
