"""
config.py
Configuration management using environment variables
"""

import os
from dataclasses import dataclass, replace, asdict
from typing import Optional
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


class ConfigError(Exception):
    """Raised for invalid resolutions or tolerances"""
    pass


def _env_float(name: str, default: float) -> float:
    return float(os.getenv(name, default))


def _env_int(name: str, default: int) -> int:
    return int(os.getenv(name, default))


class Config:
    """Application configuration"""

    APP_NAME: str = os.getenv("APP_NAME", "floquet-ap")
    APP_VERSION: str = os.getenv("APP_VERSION", "1.0.0")

    # Deployment
    ENVIRONMENT: str = os.getenv("ENVIRONMENT", "development")
    DEBUG_MODE: bool = os.getenv("DEBUG_MODE", "false").lower() == "true"

    # Logging
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")

    # Worker pool (unset = physical core count, see health_monitor.worker_count)
    FLOQUET_AP_THREADS: Optional[str] = os.getenv("FLOQUET_AP_THREADS")

    # Resolution
    COLLOCATION_NODES: int = _env_int("COLLOCATION_NODES", 32)
    SUBSTEPS: int = _env_int("SUBSTEPS", 256)
    OUTPUT_STEP: float = _env_float("OUTPUT_STEP", 1.0 / 512.0)
    N_GAMMA: int = _env_int("N_GAMMA", 64)

    # Tolerances
    FREQ_MERGE_TOL: float = _env_float("FREQ_MERGE_TOL", 1e-10)
    ANGLE_MERGE_TOL: float = _env_float("ANGLE_MERGE_TOL", 1e-9)
    UNIT_BAND_TOL: float = _env_float("UNIT_BAND_TOL", 1e-6)
    RESONANCE_TOL: float = _env_float("RESONANCE_TOL", 1e-3)
    SOLVE_TOL: float = _env_float("SOLVE_TOL", 1e-8)
    RESOLVENT_GUARD: float = _env_float("RESOLVENT_GUARD", 1e-8)
    SPLIT_GUARD: float = _env_float("SPLIT_GUARD", 1e-3)

    # Verification
    VERIFY_HORIZON_T: float = _env_float("VERIFY_HORIZON_T", 200.0)
    LEAKAGE_TOL: float = _env_float("LEAKAGE_TOL", 1e-4)
    AP_SEARCH_HORIZON: float = _env_float("AP_SEARCH_HORIZON", 1e4)
    GAMMA_ORACLE_TOL: float = _env_float("GAMMA_ORACLE_TOL", 0.05)

    # Artifacts: computed numbers are rounded before they are written
    OUTPUT_DIGITS: int = _env_int("OUTPUT_DIGITS", 10)
    OUTPUT_DECIMALS: int = _env_int("OUTPUT_DECIMALS", 11)
    ARTIFACT_RTOL: float = 10.0 ** (1 - OUTPUT_DIGITS)

    @classmethod
    def is_production(cls) -> bool:
        """Check if running in production"""
        return cls.ENVIRONMENT == "production"

    @classmethod
    def print_config(cls):
        """Log current configuration (for debugging)"""
        from logger import logger

        logger.debug("=" * 50)
        logger.debug("CONFIGURATION")
        logger.debug("=" * 50)
        logger.debug(f"Environment: {cls.ENVIRONMENT}")
        logger.debug(f"Debug Mode: {cls.DEBUG_MODE}")
        logger.debug(f"Version: {cls.APP_VERSION}")
        logger.debug(f"Threads: {cls.FLOQUET_AP_THREADS or 'auto'}")
        logger.debug(f"Resolution: m={cls.COLLOCATION_NODES}, substeps={cls.SUBSTEPS}")
        logger.debug(f"Unit band tol: {cls.UNIT_BAND_TOL}")
        logger.debug(f"Resonance tol: {cls.RESONANCE_TOL}")
        logger.debug("=" * 50)


def canonical_float(value: float) -> float:
    """
    value rounded to OUTPUT_DECIMALS decimals, then to OUTPUT_DIGITS significant digits

    Last-bit differences between runs vanish, and magnitudes below the decimal
    resolution become 0.0 (never -0.0).
    """
    value = round(float(value), Config.OUTPUT_DECIMALS)
    return float(f"{value:.{Config.OUTPUT_DIGITS}g}") or 0.0


@dataclass(frozen=True)
class NumericsConfig:
    """Resolution and tolerance bundle passed as ``cfg`` to the numerical modules"""

    m: int = Config.COLLOCATION_NODES
    substeps: int = Config.SUBSTEPS
    output_step: float = Config.OUTPUT_STEP
    n_gamma: int = Config.N_GAMMA
    freq_merge_tol: float = Config.FREQ_MERGE_TOL
    angle_merge_tol: float = Config.ANGLE_MERGE_TOL
    unit_band_tol: float = Config.UNIT_BAND_TOL
    resonance_tol: float = Config.RESONANCE_TOL
    solve_tol: float = Config.SOLVE_TOL
    resolvent_guard: float = Config.RESOLVENT_GUARD
    guard: float = Config.SPLIT_GUARD
    verify_T: float = Config.VERIFY_HORIZON_T
    leakage_tol: float = Config.LEAKAGE_TOL
    search_horizon: float = Config.AP_SEARCH_HORIZON
    force: bool = False
    confirm_unit_circle: bool = True

    def __post_init__(self):
        if not 2 <= self.m <= 128:
            raise ConfigError(f"m must lie in [2, 128], got {self.m}")
        if not 16 <= self.substeps <= 4096:
            raise ConfigError(f"substeps must lie in [16, 4096], got {self.substeps}")
        if self.n_gamma < 1:
            raise ConfigError(f"n_gamma must be positive, got {self.n_gamma}")
        for name in ("output_step", "freq_merge_tol", "angle_merge_tol", "unit_band_tol",
                     "resonance_tol", "solve_tol", "resolvent_guard", "guard",
                     "verify_T", "leakage_tol", "search_horizon"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")

    @classmethod
    def from_env(cls) -> "NumericsConfig":
        """Build the bundle from the environment-backed Config defaults"""
        return cls()

    def with_overrides(self, **overrides) -> "NumericsConfig":
        """Return a copy with the non-None overrides applied"""
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def refined(self, factor: int = 2, substeps: bool = False) -> "NumericsConfig":
        """Return a copy with m (and optionally substeps) multiplied by factor"""
        return replace(
            self,
            m=min(self.m * factor, 128),
            substeps=min(self.substeps * factor, 4096) if substeps else self.substeps,
        )

    def stepper(self):
        """StepperConfig for the propagator"""
        from propagator import StepperConfig

        return StepperConfig(substeps=self.substeps, output_step=self.output_step)

    def to_dict(self) -> dict:
        return asdict(self)


# Create singleton instance
config = Config()


if __name__ == "__main__":
    """Test configuration"""
    print(NumericsConfig.from_env())
