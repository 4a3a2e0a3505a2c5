# Tests package initialization
# Import all test modules for discovery
from . import test_extended_real
from . import test_convex_core
from . import test_measures
from . import test_divergences
from . import test_cgf
from . import test_bounds
from . import test_vajda
from . import test_pipeline
from . import test_cli
from . import test_utils
