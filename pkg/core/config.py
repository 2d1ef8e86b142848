"""
Configuration Management
========================

Two layers of configuration:

- `Settings`: toolkit-wide defaults (logging, workers, checkpoint density),
  read from `.mabcs.yaml` with environment overrides.
- `ExperimentConfig`: one simulation sweep, read from a single JSON document.
  Unknown keys are rejected.
"""

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from core.errors import InvalidConfigError, MissingConfigError
from core.policy import Algorithm

# Load environment overrides from the toolkit root only, never from the
# directory a sweep happens to be launched in
_toolkit_root = Path(__file__).parent.parent
load_dotenv(dotenv_path=_toolkit_root / ".env")

# 0.01, 0.05, 0.10, ..., 0.60
DEFAULT_ALPHAS: List[float] = [0.01] + [round(0.05 * i, 2) for i in range(1, 13)]


@dataclass
class LoggingConfig:
    """Configuration for log output."""
    level: str = field(default_factory=lambda: os.getenv("MABCS_LOG_LEVEL", "INFO"))
    format: str = field(default_factory=lambda: os.getenv("MABCS_LOG_FORMAT", "dev"))  # "json" or "dev"
    log_file: Optional[str] = None


@dataclass
class SimulationConfig:
    """Defaults applied when an experiment config leaves a value out."""
    workers: int = field(default_factory=lambda: int(os.getenv("MABCS_WORKERS", "1")))
    checkpoint_count: int = 200
    etc_budget_fraction: float = 0.2
    reward_block_size: int = 4096  # rewards drawn per generator call


@dataclass
class OutputConfig:
    """Configuration for result files."""
    default_output_dir: str = "results"


@dataclass
class Settings:
    """Main settings class."""
    logging: LoggingConfig = field(default_factory=LoggingConfig)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    @classmethod
    def load_from_file(cls, config_path: Path) -> 'Settings':
        """
        Load settings from YAML file.

        Args:
            config_path: Path to YAML settings file

        Returns:
            Settings instance with values from file merged with defaults
        """
        if not config_path.exists():
            raise MissingConfigError(str(config_path))

        with open(config_path, 'r') as f:
            data = yaml.safe_load(f) or {}

        settings = cls()

        if 'logging' in data:
            if 'level' in data['logging']:
                settings.logging.level = data['logging']['level']
            if 'format' in data['logging']:
                settings.logging.format = data['logging']['format']
            if 'log_file' in data['logging']:
                settings.logging.log_file = data['logging']['log_file']

        if 'simulation' in data:
            if 'workers' in data['simulation']:
                settings.simulation.workers = int(data['simulation']['workers'])
            if 'checkpoint_count' in data['simulation']:
                settings.simulation.checkpoint_count = int(data['simulation']['checkpoint_count'])
            if 'etc_budget_fraction' in data['simulation']:
                settings.simulation.etc_budget_fraction = float(data['simulation']['etc_budget_fraction'])
            if 'reward_block_size' in data['simulation']:
                settings.simulation.reward_block_size = int(data['simulation']['reward_block_size'])

        if 'output' in data:
            if 'default_output_dir' in data['output']:
                settings.output.default_output_dir = data['output']['default_output_dir']

        if settings.simulation.workers < 1:
            raise InvalidConfigError("simulation.workers", settings.simulation.workers, "must be >= 1")

        return settings

    @classmethod
    def load_default(cls) -> 'Settings':
        """
        Load default settings.

        Looks for settings files in this order:
        1. .mabcs.yaml in current directory
        2. .mabcs.yaml in home directory
        3. Default values (no file)
        """
        current_dir_config = Path('.mabcs.yaml')
        if current_dir_config.exists():
            return cls.load_from_file(current_dir_config)

        home_config = Path.home() / '.mabcs.yaml'
        if home_config.exists():
            return cls.load_from_file(home_config)

        return cls()

    def to_yaml(self) -> str:
        """Convert settings to YAML string."""
        data = {
            'logging': {
                'level': self.logging.level,
                'format': self.logging.format,
                'log_file': self.logging.log_file,
            },
            'simulation': {
                'workers': self.simulation.workers,
                'checkpoint_count': self.simulation.checkpoint_count,
                'etc_budget_fraction': self.simulation.etc_budget_fraction,
                'reward_block_size': self.simulation.reward_block_size,
            },
            'output': {
                'default_output_dir': self.output.default_output_dir,
            },
        }
        return yaml.dump(data, default_flow_style=False, sort_keys=False)


class ExperimentConfig(BaseModel):
    """One sweep: algorithms x alphas x independent runs on a single instance."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    instance_path: Path = Field(..., description="Instance file in the plain-text grammar")
    algorithms: List[Algorithm] = Field(..., min_length=1, description="Policies to simulate")
    alphas: List[float] = Field(default_factory=lambda: list(DEFAULT_ALPHAS), min_length=1)
    horizon: int = Field(..., ge=2, description="Samples per run (T)")
    num_runs: int = Field(..., ge=1, description="Independent runs per (algorithm, alpha)")
    master_seed: int = Field(0, description="Root of every derived run seed")
    delta_override: Optional[float] = Field(None, gt=0.0, lt=1.0, description="Replaces K^2/T^2")
    checkpoint_count: Optional[int] = Field(None, ge=2, description="Log-spaced checkpoints per run")
    output_dir: Optional[Path] = Field(
        None, description="Where curves, events and aggregates go (default: settings output dir / instance stem)"
    )
    workers: Optional[int] = Field(None, ge=1)
    etc_budget_fraction: Optional[float] = Field(None, gt=0.0, lt=1.0)
    write_run_files: bool = True

    @field_validator("alphas")
    @classmethod
    def _alphas_open_interval(cls, alphas: List[float]) -> List[float]:
        for alpha in alphas:
            if not 0.0 < alpha < 1.0:
                raise ValueError(f"alpha {alpha} outside (0, 1)")
        return alphas


def load_experiment_config(path: Path) -> ExperimentConfig:
    """
    Read an experiment config JSON document.

    Relative `instance_path` and `output_dir` values are resolved against the
    directory holding the config file.

    Raises:
        MissingConfigError: file does not exist
        InvalidConfigError: bad JSON, unknown key or out-of-range value
    """
    path = Path(path)
    if not path.exists():
        raise MissingConfigError(str(path))

    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise InvalidConfigError(str(path), "<document>", f"not valid JSON: {e}")

    if not isinstance(data, dict):
        raise InvalidConfigError(str(path), "<document>", "top level must be an object")

    try:
        config = ExperimentConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        key = ".".join(str(part) for part in first["loc"]) or "<document>"
        raise InvalidConfigError(key, first.get("input"), first["msg"])

    base = path.parent
    updates = {}
    if not config.instance_path.is_absolute():
        updates["instance_path"] = base / config.instance_path
    if config.output_dir is not None and not config.output_dir.is_absolute():
        updates["output_dir"] = base / config.output_dir
    return config.model_copy(update=updates) if updates else config
