from typing import Any, Dict, Optional, Union
import copy
import json
import logging
import os
from pathlib import Path

from dotenv import load_dotenv

CONFIG_ENV = 'ISOCLOCK_CONFIG'
NUCLIDES_ENV = 'ISOCLOCK_NUCLIDES'

DEFAULT_SETTINGS: Dict[str, Any] = {
    'nuclides': {
        'data_file': None,
    },
    'logging': {
        'directory': 'logs',
        'file': 'isoclock.log',
        'level': 'INFO',
    },
    'burnup': {
        'depth': 2,
        'grid_points': 300,
        'negligible_threshold': 0.05,
        'confluence_tolerance': 1e-12,
    },
    'hfclock': {
        'alpha': 0.05,
        'max_iterations': 100,
        'tolerance': 1e-12,
        'pulse_area_tolerance': 0.01,
        'fringe_points': 9,
        'fringe_span': 0.8,
    },
    'ladder': {
        'zeno_budget': 0.01,
        'bootstrap_resamples': 1000,
        'horizon_lifetimes': 50,
    },
    'campaign': {
        'max_workers': 4,
    },
    'performance': {
        'slow_threshold_s': 2.0,
    },
    'database': {
        'url': 'sqlite:///logs/runs.db',
        'record_runs': False,
    },
}


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


class ConfigManager:
    def __init__(self, config_file: Optional[Union[str, Path]] = None):
        load_dotenv()
        self.config_file = Path(config_file or os.environ.get(CONFIG_ENV, Path('config') / 'settings.json'))
        self.settings = self.load_settings()

    def load_settings(self) -> Dict[str, Any]:
        """Load settings from the JSON file merged over the defaults"""
        settings = copy.deepcopy(DEFAULT_SETTINGS)
        if self.config_file.exists():
            try:
                with open(self.config_file, 'r', encoding='utf-8') as f:
                    settings = _merge(settings, json.load(f))
            except (OSError, json.JSONDecodeError) as e:
                logging.error(f"Error reading settings from {self.config_file}: {str(e)}")
        if os.environ.get(NUCLIDES_ENV):
            settings['nuclides']['data_file'] = os.environ[NUCLIDES_ENV]
        return settings

    def save_settings(self, settings: Optional[Dict[str, Any]] = None) -> bool:
        """Write settings as JSON"""
        try:
            self.config_file.parent.mkdir(parents=True, exist_ok=True)
            with open(self.config_file, 'w', encoding='utf-8') as f:
                json.dump(settings if settings is not None else self.settings, f, indent=2)
            return True
        except OSError as e:
            logging.error(f"Error saving settings: {str(e)}")
            return False

    def get_setting(self, key: str, default: Any = None) -> Any:
        """Get a setting value by dotted key"""
        keys = key.split('.')
        value = self.settings
        try:
            for k in keys:
                value = value[k]
            return value
        except (KeyError, TypeError):
            return default

    def set_setting(self, key: str, value: Any) -> bool:
        """Set a setting value by dotted key and persist"""
        keys = key.split('.')
        target = self.settings
        for k in keys[:-1]:
            target = target.setdefault(k, {})
        target[keys[-1]] = value
        return self.save_settings(self.settings)
