import sys
from divbound.frontend.cli import main

if __name__ == "__main__":
    # Same entry point as `python -m divbound`
    sys.exit(main())
