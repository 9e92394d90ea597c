"""Entry point for python -m bayes_attrib"""

import sys

from .main import main

sys.exit(main())
