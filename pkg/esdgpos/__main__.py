import sys

from esdgpos.cli import main

sys.exit(main())
