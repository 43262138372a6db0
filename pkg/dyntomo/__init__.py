# dyntomo/__init__.py
import os
from dotenv import load_dotenv

# Load environment variables from .env (if available)
load_dotenv()

from config import config


def get_config(env=None):
    """Return the configuration class for the current environment.

    Reads DYNTOMO_ENV when no environment name is passed and runs the
    class's init_app() hook if it defines one.
    """
    env = env or os.getenv('DYNTOMO_ENV', 'default')
    cfg = config.get(env, config['default'])
    if hasattr(cfg, 'init_app'):
        cfg.init_app()
    return cfg
