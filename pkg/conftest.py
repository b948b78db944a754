"""
conftest.py
Shared fixtures: numerics bundle, fleet models and a seeded generator
"""

import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

import fleet  # noqa: E402
from config import NumericsConfig  # noqa: E402
from health_monitor import health_monitor  # noqa: E402

MODELS_DIR = ROOT / "models"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: fleet-wide checks that take more than a few seconds")


@pytest.fixture
def cfg() -> NumericsConfig:
    return NumericsConfig()


@pytest.fixture
def stepper(cfg):
    return cfg.stepper()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240613)


@pytest.fixture
def models_dir() -> Path:
    return MODELS_DIR


@pytest.fixture(autouse=True)
def _reset_counters():
    health_monitor.reset()
    yield


@pytest.fixture(scope="session")
def decay_model():
    return fleet.decay()


@pytest.fixture(scope="session")
def periodic_decay_model():
    return fleet.periodic_decay()


@pytest.fixture(scope="session")
def unit_delay_model():
    return fleet.unit_delay()


@pytest.fixture(scope="session")
def quarter_turn_model():
    return fleet.quarter_turn()


@pytest.fixture(scope="session")
def forced_decay_model():
    return fleet.forced_decay()


@pytest.fixture(scope="session")
def forced_delay_model():
    return fleet.forced_delay()


@pytest.fixture(scope="session")
def forced_decay_solution(forced_decay_model):
    from solver import solve_ap

    return solve_ap(forced_decay_model, NumericsConfig())


@pytest.fixture(scope="session")
def forced_delay_solution(forced_delay_model):
    from solver import solve_ap

    return solve_ap(forced_delay_model, NumericsConfig())
