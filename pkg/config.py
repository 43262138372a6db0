import os


def _int_env(name, default):
    value = os.getenv(name)
    return int(value) if value not in (None, "") else default


class Config:
    """Base configuration shared across environments."""
    # Branch-and-bound node budget; CLI --budget overrides
    NODE_BUDGET = _int_env('DYNTOMO_NODE_BUDGET', 200000)

    # Enumeration oracles refuse grids larger than this
    ENUMERATION_BOUND = _int_env('DYNTOMO_ENUMERATION_BOUND', 24)
    ORACLE_GRID_BOUND = _int_env('DYNTOMO_ORACLE_GRID_BOUND', 16)
    ORACLE_MAX_N = _int_env('DYNTOMO_ORACLE_MAX_N', 6)
    ORACLE_MAX_T = _int_env('DYNTOMO_ORACLE_MAX_T', 4)

    TWO_WAY_MAX_ROUNDS = _int_env('DYNTOMO_TWO_WAY_MAX_ROUNDS', 100)
    # Largest sample size k accepted by the fitting heuristics
    MAX_SAMPLE_SIZE = _int_env('DYNTOMO_MAX_SAMPLE_SIZE', 4)

    WORKERS = _int_env('DYNTOMO_WORKERS', 1)
    LOG_LEVEL = os.getenv('DYNTOMO_LOG_LEVEL', 'INFO')


class DevelopmentConfig(Config):
    """Development-specific configuration."""
    LOG_LEVEL = os.getenv('DYNTOMO_LOG_LEVEL', 'DEBUG')


class TestingConfig(Config):
    """Small budgets so runaway searches fail fast under pytest."""
    NODE_BUDGET = _int_env('DYNTOMO_NODE_BUDGET', 20000)
    TWO_WAY_MAX_ROUNDS = 20


class ProductionConfig(Config):
    """Production-specific configuration."""

    @classmethod
    def init_app(cls):
        """Ensure numeric settings are usable before any solver runs."""
        positive = ['NODE_BUDGET', 'ENUMERATION_BOUND', 'ORACLE_GRID_BOUND',
                    'TWO_WAY_MAX_ROUNDS', 'MAX_SAMPLE_SIZE', 'WORKERS']
        for var in positive:
            if getattr(cls, var) <= 0:
                raise ValueError(f"Setting {var} must be positive, got {getattr(cls, var)}")


# Dictionary to easily load configurations
config = {
    'development': DevelopmentConfig,
    'testing': TestingConfig,
    'production': ProductionConfig,
    'default': Config
}
