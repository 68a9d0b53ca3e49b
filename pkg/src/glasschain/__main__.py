import sys

from glasschain.cli import main

sys.exit(main())
