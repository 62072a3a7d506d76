import sys

from robust_scan.cli import main

sys.exit(main())
