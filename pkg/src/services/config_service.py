"""
Configuration service for graphpq.

This module handles loading and accessing tool settings: solver
defaults, audit grid sizes, worker caps and the log level. Configuration is
stored as JSON in ~/.config/graphpq/config.json following the XDG Base
Directory Specification. The file is optional; missing keys fall back to
DEFAULT_CONFIG.
"""

import copy
import json
import os
from pathlib import Path
from typing import Any, Dict, Optional

from src.services.logging_service import get_logger

# Default configuration directory following XDG Base Directory Specification
DEFAULT_CONFIG_DIR = Path.home() / ".config" / "graphpq"
DEFAULT_CONFIG_FILE = DEFAULT_CONFIG_DIR / "config.json"

# Environment variable capping the number of worker threads
THREADS_ENV_VAR = "GRAPHPQ_THREADS"

# Default configuration values
DEFAULT_CONFIG: Dict[str, Any] = {
    "log_level": "INFO",
    # Worker threads for concurrent restarts; None means one per start
    "threads": None,
    # Channel W-norm at or below which a channel counts as zero
    "triviality_tolerance": 1e-8,
    "solver": {
        "max_iters": 100000,
        "grad_tol": 1e-9,
        "armijo_c": 1e-4,
        "armijo_shrink": 0.5,
        "init_step": 1.0,
        "path_nodes": 41,
        "path_sweeps": 2000,
        "restarts": 8,
        "seed": 0,
        "spectral_steps": True,
    },
    "audit": {
        # Half-width of the sampled (s, t) box
        "span": 10.0,
        # Points per axis of the regular part of the grid
        "points": 41,
        # Extra uniformly random (x, s, t) triples
        "random_points": 2000,
        "seed": 0,
    },
}


class ConfigService:
    """
    Service for managing tool configuration.

    Handles loading and accessing configuration values.
    Provides sensible defaults when the config file is missing or corrupted.
    """

    def __init__(self, config_path: Optional[Path] = None) -> None:
        """
        Initialize the ConfigService.

        Args:
            config_path: Optional path to config file. Defaults to
                        ~/.config/graphpq/config.json
        """
        self._logger = get_logger(__name__)
        self._config_path = Path(config_path) if config_path else DEFAULT_CONFIG_FILE
        self._config: Dict[str, Any] = {}

        self._load()

    def _load(self) -> None:
        """Load configuration from file, using defaults if needed."""
        self._config = copy.deepcopy(DEFAULT_CONFIG)

        if not self._config_path.exists():
            self._logger.debug(
                f"Config file not found at {self._config_path}. Using defaults."
            )
            return

        try:
            with open(self._config_path, "r", encoding="utf-8") as f:
                loaded_config = json.load(f)

            if isinstance(loaded_config, dict):
                self._deep_merge(self._config, loaded_config)
                self._logger.info(f"Configuration loaded from {self._config_path}")
            else:
                raise ValueError("Config file does not contain a valid JSON object")

        except (json.JSONDecodeError, ValueError) as e:
            self._logger.warning(
                f"Config file corrupted or invalid: {e}. Using defaults."
            )
            self._config = copy.deepcopy(DEFAULT_CONFIG)

        except (OSError, PermissionError) as e:
            self._logger.warning(
                f"Could not read config file: {e}. Using defaults."
            )

    def _deep_merge(self, base: Dict, override: Dict) -> None:
        """Recursively merge override dict into base dict."""
        for key, value in override.items():
            if key in base and isinstance(base[key], dict) and isinstance(value, dict):
                self._deep_merge(base[key], value)
            else:
                base[key] = value

    def get(self, key: str, default: Any = None) -> Any:
        """
        Get a configuration value.

        Args:
            key: The configuration key to retrieve.
            default: Default value if key doesn't exist.

        Returns:
            The configuration value, or default if not found.
        """
        return self._config.get(key, default)

    # ─── Logging ──────────────────────────────────────────────────────────

    @property
    def log_level(self) -> str:
        """Get the configured log level name."""
        return str(self.get("log_level", "INFO")).upper()

    # ─── Numerics ─────────────────────────────────────────────────────────

    @property
    def solver_defaults(self) -> Dict[str, Any]:
        """Get the SolveOptions defaults."""
        return dict(self.get("solver", DEFAULT_CONFIG["solver"]))

    @property
    def audit_defaults(self) -> Dict[str, Any]:
        """Get the audit grid defaults."""
        return dict(self.get("audit", DEFAULT_CONFIG["audit"]))

    @property
    def triviality_tolerance(self) -> float:
        """Get the channel W-norm threshold for semi-trivial detection."""
        return float(self.get("triviality_tolerance", 1e-8))

    @property
    def threads(self) -> Optional[int]:
        """
        Get the worker cap for concurrent restarts.

        GRAPHPQ_THREADS takes precedence over the config file.
        """
        env_value = os.environ.get(THREADS_ENV_VAR)
        if env_value:
            try:
                return max(1, int(env_value))
            except ValueError:
                self._logger.warning(
                    f"Ignoring non-integer {THREADS_ENV_VAR}={env_value!r}"
                )
        value = self.get("threads")
        return int(value) if value else None
