"""Configuration, catalog file I/O and the ``[re, im]`` wire format."""

import json
import logging
import math
import os
import re
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np
import yaml

logger = logging.getLogger(__name__)

DEFAULT_CATALOG_PATH = 'fiducials.json'
PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

_ENV_REF = re.compile(r'\$\{([A-Za-z0-9_]+)\}')


def load_env_file(env_file_path: str) -> int:
    """Export ``KEY=value`` lines of a .env file into ``os.environ``.

    Variables already set in the environment are left alone.

    Args:
        env_file_path: The path to the .env file. A missing file is not an error.

    Returns:
        Number of variables exported.
    """
    if not os.path.isfile(env_file_path):
        return 0
    exported = 0
    with open(env_file_path, 'r', encoding='utf-8') as f:
        for raw in f:
            line = raw.strip()
            if not line or line.startswith('#') or '=' not in line:
                continue
            key, value = line.removeprefix('export ').split('=', 1)
            key, value = key.strip(), value.strip().strip('\'"')
            if key not in os.environ:
                os.environ[key] = value
                exported += 1
    logger.debug(f"Exported {exported} variables from {env_file_path}")
    return exported


def load_data(data_path: str) -> Any:
    """Read a JSON document (catalog, vector file or record).

    Raises:
        ValueError: If the file is not valid JSON.
    """
    with open(data_path, 'r', encoding='utf-8') as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as e:
            raise ValueError(f"{data_path} is not valid JSON: {e}")


def save_data(data: Any, data_path: str) -> None:
    """Write ``data`` as indented JSON, creating parent directories."""
    ensure_dir_exists(os.path.dirname(os.path.abspath(data_path)))
    with open(data_path, 'w', encoding='utf-8') as f:
        json.dump(data, f, indent=2)
        f.write('\n')


def _replace_env_vars(obj: Any) -> Any:
    """Substitute ``${VAR}`` references from the environment, recursively.

    References to unset variables are kept verbatim so callers can detect them.
    """
    if isinstance(obj, dict):
        return {k: _replace_env_vars(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_replace_env_vars(item) for item in obj]
    if isinstance(obj, str):
        return _ENV_REF.sub(lambda m: os.environ.get(m.group(1), m.group(0)), obj)
    return obj


def is_unresolved(value: Any) -> bool:
    """Whether a config value still holds an unexpanded ${VAR} reference."""
    return isinstance(value, str) and _ENV_REF.search(value) is not None


def load_yaml_file(file_path: str, key_path: Optional[str] = None) -> Any:
    """Load a YAML file with environment substitution, optionally descending a dotted key.

    Raises:
        FileNotFoundError: If the file doesn't exist.
        ValueError: If the YAML file cannot be parsed.
        KeyError: If ``key_path`` doesn't exist.
    """
    if not os.path.isfile(file_path):
        raise FileNotFoundError(f"File not found: {file_path}")
    with open(file_path, 'r', encoding='utf-8') as file:
        try:
            data = _replace_env_vars(yaml.safe_load(file) or {})
        except yaml.YAMLError as e:
            raise ValueError(f"YAML parsing error in {file_path}: {e}")
    for key in key_path.split('.') if key_path else []:
        if not isinstance(data, dict) or key not in data:
            raise KeyError(f"Key '{key_path}' not found in {file_path}")
        data = data[key]
    return data


def load_config(config_path: Optional[str] = None, key_path: Optional[str] = None) -> Any:
    """Load ``config.yaml``.

    Without ``config_path`` the project-level ``.env`` is exported first and the
    project-level ``config.yaml`` is read; an installed package without one gets ``{}``.
    """
    if config_path is None:
        load_env_file(os.path.join(PROJECT_ROOT, '.env'))
        config_path = os.path.join(PROJECT_ROOT, 'config.yaml')
        if not os.path.isfile(config_path):
            logger.debug(f"No project config at {config_path}")
            return {}
    return load_yaml_file(config_path, key_path)


def config_value(config: Dict[str, Any], key_path: str, default: Any = None) -> Any:
    """Look up a dotted key in a loaded config, falling back to ``default``.

    Unset ``${VAR}`` placeholders count as missing.
    """
    node: Any = config
    for key in key_path.split('.'):
        if not isinstance(node, dict) or key not in node:
            return default
        node = node[key]
    if node is None or is_unresolved(node):
        return default
    return node


def resolve_catalog_path(flag_value: Optional[str] = None, config: Optional[Dict[str, Any]] = None) -> str:
    """Pick the catalog file: flag, then SICLAB_CATALOG, then config, then ./fiducials.json."""
    if flag_value:
        return flag_value
    env_value = os.environ.get('SICLAB_CATALOG')
    if env_value:
        return env_value
    return config_value(config or {}, 'catalog.path', DEFAULT_CATALOG_PATH)


def ensure_dir_exists(directory_path: str) -> None:
    """Create ``directory_path`` and its parents; empty paths mean the working directory."""
    if directory_path:
        os.makedirs(directory_path, exist_ok=True)


def complex_to_pairs(values: Iterable[complex]) -> List[List[float]]:
    """Encode complex numbers as ``[re, im]`` pairs of plain floats."""
    return [[float(np.real(v)), float(np.imag(v))] for v in values]


def pairs_to_complex(pairs: Sequence[Sequence[float]]) -> np.ndarray:
    """Decode ``[re, im]`` pairs (or bare reals) into a complex array.

    Raises:
        ValueError: If an entry is neither a number nor a pair.
    """
    out = []
    for item in pairs:
        if isinstance(item, (int, float)):
            out.append(complex(item, 0.0))
        elif isinstance(item, (list, tuple)) and len(item) == 2:
            out.append(complex(float(item[0]), float(item[1])))
        else:
            raise ValueError(f"Cannot read complex entry: {item!r}")
    return np.asarray(out, dtype=complex)


def format_float(value: float) -> str:
    """Format a float with 17 significant digits."""
    return '%.17g' % value


def format_json_float(value: float) -> str:
    """17 significant digits, kept recognisably a float; non-finite values as ``json`` writes them."""
    if not math.isfinite(value):
        return json.dumps(value)
    text = format_float(value)
    return text if any(c in text for c in '.e') else text + '.0'


def dumps_json(data: Any, indent: int = 2, _level: int = 0) -> str:
    """``json.dumps`` layout with every float written by :func:`format_json_float`."""
    pad = ' ' * (indent * (_level + 1))
    close = ' ' * (indent * _level)
    if isinstance(data, dict):
        if not data:
            return '{}'
        items = [f"{pad}{json.dumps(str(k))}: {dumps_json(v, indent, _level + 1)}" for k, v in data.items()]
        return '{\n' + ',\n'.join(items) + '\n' + close + '}'
    if isinstance(data, (list, tuple)):
        if not data:
            return '[]'
        items = [pad + dumps_json(v, indent, _level + 1) for v in data]
        return '[\n' + ',\n'.join(items) + '\n' + close + ']'
    if isinstance(data, float):
        return format_json_float(data)
    return json.dumps(data)
