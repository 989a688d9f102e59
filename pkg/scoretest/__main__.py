import sys

from scoretest.cli import main

sys.exit(main())
