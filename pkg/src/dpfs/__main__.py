import sys

from dpfs.cli import main

sys.exit(main())
