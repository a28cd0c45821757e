"""Configuration management for graphpoincare."""

import json
import os
from pathlib import Path

from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator

load_dotenv()

DATA_DIR = Path(os.environ.get("GRAPHPOINCARE_DATA_DIR", Path(__file__).parent.parent / "data"))
CONFIG_FILE = Path(os.environ.get("GRAPHPOINCARE_CONFIG", DATA_DIR / "config.json"))
OUTPUT_DIR = Path(os.environ.get("GRAPHPOINCARE_OUTPUT_DIR", "results"))

# Relative tolerance for every theorem verdict
THEOREM_TOLERANCE = 1e-9
# Agreement required between estimator and certifier
CERTIFIER_TOLERANCE = 1e-6
# Bracket consistency lower <= upper
BRACKET_TOLERANCE = 1e-7
# Kirchhoff residual, relative to mu(x)
KIRCHHOFF_TOLERANCE = 1e-12
# Closed forms against direct sums
CLOSED_FORM_TOLERANCE = 1e-12

DEFAULT_SEED = 0
DEFAULT_RESTARTS = 50
DEFAULT_ITERATIONS = 400
DEFAULT_TRIALS = 500
DEFAULT_WORKERS = int(os.environ.get("GRAPHPOINCARE_WORKERS", "1"))

# Certifier limits: undirected edges touching E, faces visited
CERTIFIER_MAX_EDGES = 14
CERTIFIER_FACE_BUDGET = 200_000

# Window budgets
MAX_WINDOW_VERTICES = 500_000
MAX_WINDOW_EDGES = 2_000_000

# Asymptotic checks
SLOPE_TOLERANCE = 0.15
EXPONENTIAL_SLOPE_TOLERANCE = 0.1
MIN_R_SQUARED = 0.98
BOUNDED_RATIO_LIMIT = 4.0

# Exponents sampled by the randomized suites
SAMPLED_EXPONENTS = ("1", "1.5", "2", "3", "inf")

# Default sweep grids per reproduce family
DEFAULT_GRIDS = {
    "ex31": {"k": [8, 16, 32, 64, 128, 256], "p": ["1.5", "2", "4"]},
    "ex32": {"k": [2**i for i in range(6, 17)], "p": ["1", "2"]},
    "prop34": {"r": list(range(4, 13)), "p": ["1", "inf"]},
    "thm35": {"r": list(range(4, 13)), "p": ["1", "inf"]},
    "flow": {"p": list(SAMPLED_EXPONENTS)},
}


def load_config(path: Path | None = None) -> dict:
    """Load user configuration from disk."""
    path = path or CONFIG_FILE
    if not path.exists():
        return {}
    try:
        with open(path) as f:
            return json.load(f)
    except (json.JSONDecodeError, OSError):
        return {}


class RunConfig(BaseModel):
    """Merged settings for one command invocation."""

    command: str
    seed: int = DEFAULT_SEED
    p_list: list[str] = Field(default_factory=list)
    k_values: list[int] = Field(default_factory=list)
    r_values: list[int] = Field(default_factory=list)
    trials: int = DEFAULT_TRIALS
    out: Path = OUTPUT_DIR
    tolerance: float = THEOREM_TOLERANCE
    workers: int = DEFAULT_WORKERS
    restarts: int = DEFAULT_RESTARTS
    iterations: int = DEFAULT_ITERATIONS
    verbose: bool = False

    @field_validator("trials", "restarts", "iterations")
    @classmethod
    def _non_negative(cls, value: int) -> int:
        if value < 0:
            raise ValueError("must be non-negative")
        return value

    @field_validator("workers")
    @classmethod
    def _positive(cls, value: int) -> int:
        if value < 1:
            raise ValueError("must be at least 1")
        return value


def build_run_config(command: str, flags: dict, config_path: Path | None = None) -> RunConfig:
    """Merge built-in defaults, the JSON config file, then flags.

    Args:
        command: Command name; the config file may hold a section per command
        flags: Parsed command-line values; None means "not given"
        config_path: Optional config file overriding CONFIG_FILE

    Returns:
        Validated RunConfig
    """
    stored = load_config(config_path)
    merged = {key: value for key, value in stored.items() if not isinstance(value, dict)}
    merged.update(stored.get(command, {}))
    merged.update({key: value for key, value in flags.items() if value is not None})
    merged["command"] = command
    return RunConfig.model_validate(merged)
