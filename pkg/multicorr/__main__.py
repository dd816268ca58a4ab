"""Module execution entry point for multicorr."""

# Authors: The Multicorr developers
# SPDX-License-Identifier: BSD-3-Clause

import sys

from multicorr.main import main

if __name__ == "__main__":
    sys.exit(main())
