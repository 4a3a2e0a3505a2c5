import sys

from divbound.frontend.cli import main

sys.exit(main())
