"""Run the spde_lab command line."""
import sys

from .cli import main

sys.exit(main())
