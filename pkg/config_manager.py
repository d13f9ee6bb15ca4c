"""
Configuration manager for numerical defaults and per-run settings
"""
import os
import json
import logging
from dataclasses import dataclass, field, fields, asdict
from pathlib import Path
from typing import Dict, Any, Optional

logger = logging.getLogger(__name__)

# environment variable -> (config key, parser)
ENV_OVERRIDES = {
    'MCOAL_DEPTH': ('depth', int),
    'MCOAL_QMAX': ('qmax', float),
    'MCOAL_WINDOWS': ('windows', int),
    'MCOAL_REPLICAS': ('replicas', int),
    'MCOAL_FORMAT': ('format', str),
}


class ConfigManager:
    """Manages persistent numerical defaults"""

    def __init__(self, config_dir: Optional[Path] = None):
        if config_dir is None:
            config_dir = Path(os.environ.get('MCOAL_HOME', Path.home() / '.mcoalescents'))
        self.config_dir = Path(config_dir)
        self.config_file = self.config_dir / 'config.json'

    def get_config(self) -> Dict[str, Any]:
        """Get current configuration, defaults filled in"""
        config = self._get_default_config()
        if not self.config_file.exists():
            return config

        try:
            with open(self.config_file, 'r') as f:
                stored = json.load(f)
            if not isinstance(stored, dict):
                raise ValueError("config root must be an object")
        except Exception as e:
            logger.error(f"Error loading config: {e}")
            return config

        unknown = set(stored) - set(config)
        if unknown:
            logger.warning(f"Ignoring unknown config keys: {sorted(unknown)}")
        config.update({key: value for key, value in stored.items() if key in config})
        return config

    def save_config(self, config: Dict[str, Any]) -> bool:
        """Save configuration"""
        try:
            self.config_dir.mkdir(parents=True, exist_ok=True)
            with open(self.config_file, 'w') as f:
                json.dump(config, f, indent=2, sort_keys=True)

            logger.info("Configuration saved successfully")
            return True

        except Exception as e:
            logger.error(f"Error saving config: {e}")
            return False

    def _get_default_config(self) -> Dict[str, Any]:
        """Get default configuration"""
        return {
            # coming-down-from-infinity numerics
            'depth': 10000,
            'qmax': 1e6,
            'windows': 20,
            'ratio_threshold': 0.99,
            'decisive_windows': 5,

            # Monte Carlo
            'replicas': 10000,
            'show_progress': True,

            # quadrature
            'quad_tolerance': 1e-10,
            'quad_max_subdivisions': 1000000,
            'lebesgue_nodes': 16,

            # output
            'format': 'json',
        }

    def get_env_overrides(self) -> Dict[str, Any]:
        """Values set through MCOAL_* environment variables"""
        overrides = {}
        for variable, (key, parse) in ENV_OVERRIDES.items():
            raw = os.environ.get(variable)
            if raw is None:
                continue
            try:
                overrides[key] = parse(raw)
            except ValueError:
                logger.error(f"Ignoring {variable}={raw!r}: not a valid {parse.__name__}")
        return overrides

    def get_env_dict(self) -> Dict[str, str]:
        """Get configuration as environment variables"""
        config = self.get_config()
        return {variable: str(config[key]) for variable, (key, _) in ENV_OVERRIDES.items()}

    def resolve(self, **flags) -> Dict[str, Any]:
        """defaults < config file < environment < flags (None flags are unset)"""
        config = self.get_config()
        config.update(self.get_env_overrides())
        config.update({key: value for key, value in flags.items() if value is not None})
        return config


@dataclass
class RunConfig:
    """Resolved settings of one CLI invocation"""
    subcommand: str
    lambda0: Optional[str] = None
    lambda1: Optional[str] = None
    nu0: Optional[str] = None
    nu1: Optional[str] = None
    n: Optional[int] = None
    t: Optional[float] = None
    replicas: int = 10000
    seed: Optional[int] = None
    depth: int = 10000
    qmax: float = 1e6
    windows: int = 20
    ratio_threshold: float = 0.99
    decisive_windows: int = 5
    show_progress: bool = True
    quad_tolerance: float = 1e-10
    quad_max_subdivisions: int = 1000000
    lebesgue_nodes: int = 16
    out: Optional[str] = None
    format: str = 'json'
    extra: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_config(cls, config: Dict[str, Any], **settings) -> 'RunConfig':
        """Every key of a resolved config, with explicit settings taking precedence"""
        names = {f.name for f in fields(cls)}
        merged = {key: value for key, value in config.items() if key in names}
        merged.update(settings)
        return cls(**merged)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)
