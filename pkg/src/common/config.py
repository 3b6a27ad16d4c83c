# // Copyright (c) 2025 Bytedance Ltd. and/or its affiliates
# //
# // Licensed under the Apache License, Version 2.0 (the "License");
# // you may not use this file except in compliance with the License.
# // You may obtain a copy of the License at
# //
# //     http://www.apache.org/licenses/LICENSE-2.0
# //
# // Unless required by applicable law or agreed to in writing, software
# // distributed under the License is distributed on an "AS IS" BASIS,
# // WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# // See the License for the specific language governing permissions and
# // limitations under the License.

"""
Configuration utility functions

Every numeric default of the toolkit lives in configs/main.yaml. Library
functions accept ``None`` for tunables and resolve them here.
"""

import os
from typing import Any, Callable, List, Optional, Union
from omegaconf import DictConfig, ListConfig, OmegaConf

from ..utils.constants import get_default_config_path

_ACTIVE_CONFIG: Optional[DictConfig] = None


def load_config(path: str, argv: List[str] = None) -> Union[DictConfig, ListConfig]:
    """
    Load a configuration. Will resolve inheritance.

    Args:
        path: YAML file to load
        argv: Optional dotlist overrides such as ``["convexity.oracle_pairs=200"]``
    """
    config = OmegaConf.load(path)
    base_dir = os.path.dirname(os.path.abspath(path))
    config = resolve_recursive(config, lambda c: resolve_inheritance(c, base_dir))
    if argv:
        config = OmegaConf.merge(config, OmegaConf.from_dotlist(list(argv)))
    return config


def resolve_recursive(
    config: Any,
    resolver: Callable[[Union[DictConfig, ListConfig]], Union[DictConfig, ListConfig]],
) -> Any:
    config = resolver(config)
    if isinstance(config, DictConfig):
        for k in config.keys():
            v = config.get(k)
            if isinstance(v, (DictConfig, ListConfig)):
                config[k] = resolve_recursive(v, resolver)
    if isinstance(config, ListConfig):
        for i in range(len(config)):
            v = config.get(i)
            if isinstance(v, (DictConfig, ListConfig)):
                config[i] = resolve_recursive(v, resolver)
    return config


def resolve_inheritance(config: Union[DictConfig, ListConfig], base_dir: str = ".") -> Any:
    """
    Recursively resolve inheritance if the config contains:
    __inherit__: path/to/parent.yaml or a ListConfig of such paths.
    Relative parent paths are resolved against the child's directory.
    """
    if isinstance(config, DictConfig):
        inherit = config.pop("__inherit__", None)

        if inherit:
            inherit_list = inherit if isinstance(inherit, ListConfig) else [inherit]

            parent_config = None
            for parent_path in inherit_list:
                if not isinstance(parent_path, str):
                    raise ValueError(f"__inherit__ entries must be paths, got {parent_path!r}")
                if not os.path.isabs(parent_path):
                    parent_path = os.path.join(base_dir, parent_path)
                parent_config = (
                    load_config(parent_path)
                    if parent_config is None
                    else OmegaConf.merge(parent_config, load_config(parent_path))
                )

            if len(config.keys()) > 0:
                config = OmegaConf.merge(parent_config, config)
            else:
                config = parent_config
    return config


def get_config() -> DictConfig:
    """The active configuration, loading the shipped defaults on first use."""
    global _ACTIVE_CONFIG
    if _ACTIVE_CONFIG is None:
        _ACTIVE_CONFIG = load_config(get_default_config_path())
    return _ACTIVE_CONFIG


def set_config(config: Optional[DictConfig]) -> None:
    """Install a configuration for subsequent calls; ``None`` restores the defaults."""
    global _ACTIVE_CONFIG
    _ACTIVE_CONFIG = config


def section(name: str) -> DictConfig:
    """One top-level section of the active configuration, e.g. ``section("order")``."""
    config = get_config()
    if name not in config:
        raise KeyError(f"Configuration has no section '{name}'")
    return config[name]


def pick(value: Any, section_name: str, key: str) -> Any:
    """Return ``value`` unless it is None, else the configured default."""
    if value is not None:
        return value
    resolved = section(section_name)[key]
    if isinstance(resolved, (DictConfig, ListConfig)):
        return OmegaConf.to_object(resolved)
    return resolved
