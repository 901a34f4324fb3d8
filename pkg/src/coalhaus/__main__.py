from __future__ import annotations

import sys

from coalhaus.cli import main

sys.exit(main())
