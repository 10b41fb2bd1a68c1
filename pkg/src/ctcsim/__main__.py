import sys

from ctcsim.cli import main

sys.exit(main())
