"""Configuration settings for the dyntomo command-line jobs."""

import logging
import os

from dotenv import load_dotenv

from dyntomo import get_config

# Load environment variables
load_dotenv(override=True)

# Exit codes
EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_INPUT = 2
EXIT_BUDGET = 3

ALGORITHMS = ("markov", "ilp", "rolling", "pathfit", "tomofit", "tomopathfit", "twoway", "displace")
MOTIONS = ("static", "straight-line", "polynomial", "affine-field", "crossing", "adversarial")

FORMAT_VERSION = 1
PLOT_DIV_ID = "dyntomo-plot"
DEFAULT_BOX = int(os.getenv("DYNTOMO_BOX", "12"))


def setup_logging(level=None):
    """Configure root logging for a job run."""
    level = level or get_config().LOG_LEVEL
    logging.basicConfig(level=getattr(logging, str(level).upper(), logging.INFO),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
