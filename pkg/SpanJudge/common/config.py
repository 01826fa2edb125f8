import copy
import logging
from pathlib import Path
from typing import Any, Union

import yaml

logger = logging.getLogger(__name__)

def deep_update(base: dict, override: dict) -> dict:
    """Recursively merge override into a copy of base"""
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_update(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged

class Config(object):
    """Read in the default settings YAML and optionally a user YAML on top of it

    Parameters
    ----------
    path : str or None
        User config file. Keys that are present override the shipped defaults
    seed : int or None
        Overrides the top-level seed (e.g. from --seed)
    """
    def __init__(self, path: Union[str, Path, None] = None, seed: Union[int, None] = None) -> None:
        defaults_file = Path(__file__).parent / "defaults.yaml"
        with defaults_file.open() as fh:
            self.settings = yaml.safe_load(fh)

        if path is not None:
            with open(path) as fh:
                try:
                    custom = yaml.safe_load(fh) or {}
                except yaml.YAMLError as e:
                    raise ValueError("{} is not a valid config file: {}".format(path, e))
            if not isinstance(custom, dict):
                raise ValueError("{} must contain a mapping".format(path))
            self.settings = deep_update(self.settings, custom)

        if seed is not None:
            self.settings["seed"] = seed

        seed = self.settings["seed"]
        if not isinstance(seed, int) or seed < 0 or seed >= 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer, not {}".format(seed))

    @property
    def seed(self) -> int:
        return self.settings["seed"]

    def section(self, name: str) -> dict[str, Any]:
        """Copy of one section with the top-level seed filled in if absent"""
        values = copy.deepcopy(self.settings.get(name, {}))
        values.setdefault("seed", self.seed)
        return values

    @property
    def n_jobs(self) -> int:
        return int(self.settings.get("matcher", {}).get("n_jobs", 1))

default_config = Config()
