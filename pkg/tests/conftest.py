"""
Pytest configuration and shared fixtures for the mabcs test suite.

Provides the two ablation instances, their analyses, and helpers for
writing instance files and experiment configs into temporary directories.
"""

import json
import logging
import os
import sys
from pathlib import Path

import pytest

# Add parent directory to Python path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from core.instance import BanditInstance, analyze, format_instance
from core.structured_logging import clear_context

PROJECT_ROOT = Path(__file__).parent.parent
DATA_DIR = PROJECT_ROOT / "data"

NU1_MEANS = (0.15, 0.24, 0.96, 0.95, 0.99, 0.98, 0.97)
NU2_MEANS = (0.44, 0.46, 0.48, 0.7, 0.71, 0.704, 0.714, 0.702, 0.716, 0.708, 0.712, 0.706)


@pytest.fixture(autouse=True)
def restore_logging():
    """Keep handler changes made by setup_structured_logging inside one test."""
    root = logging.getLogger()
    handlers = list(root.handlers)
    level = root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)
    clear_context()


@pytest.fixture
def nu1() -> BanditInstance:
    """Exclusive-sampling ablation instance, alpha = 0.8."""
    return BanditInstance(means=NU1_MEANS, costs=tuple(range(1, 8)), alpha=0.8)


@pytest.fixture
def nu2() -> BanditInstance:
    """Combining-samples ablation instance, alpha = 0.3."""
    return BanditInstance(means=NU2_MEANS, costs=tuple(range(1, 13)), alpha=0.3)


@pytest.fixture
def nu1_analysis(nu1):
    return analyze(nu1)


@pytest.fixture
def nu2_analysis(nu2):
    return analyze(nu2)


@pytest.fixture
def two_arm() -> BanditInstance:
    """Smallest instance: a cheap infeasible arm and a clearly better expensive one."""
    return BanditInstance(means=(0.2, 0.9), costs=(1.0, 2.0), alpha=0.1)


@pytest.fixture
def write_instance(tmp_path):
    """Write an instance file and return its path."""
    def _write(instance: BanditInstance, name: str = "instance.txt") -> Path:
        path = tmp_path / name
        path.write_text(format_instance(instance), encoding="utf-8")
        return path
    return _write


@pytest.fixture
def write_config(tmp_path):
    """Write an experiment config JSON document and return its path."""
    def _write(data: dict, name: str = "experiment.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return path
    return _write


def pytest_configure(config):
    """Configure pytest with custom markers."""
    config.addinivalue_line("markers", "slow: marks tests as slow (deselect with '-m \"not slow\"')")
    config.addinivalue_line("markers", "integration: marks tests as integration tests")
    config.addinivalue_line("markers", "statistical: seeded Monte Carlo checks over many runs")
