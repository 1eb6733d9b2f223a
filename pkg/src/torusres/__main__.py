"""Allow running the CLI as ``python -m torusres``."""

import sys

from torusres.cli import main

if __name__ == "__main__":
    sys.exit(main())
