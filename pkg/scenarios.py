"""
Scenario configuration: named presets, JSON scenario files and environment defaults.

A scenario is a flat JSON object. Each subcommand accepts a fixed set of
keys; values are layered as command defaults, then the preset, then the
scenario file given on the command line.
"""

import json
import logging
import math
import os
from pathlib import Path
from typing import Any, Dict, Optional

from errors import ScenarioError
from omit import OmitParams
from params import InitialMoments, PtDimerParams, SystemParams

logger = logging.getLogger(__name__)

PRESET_DIR = Path(__file__).resolve().parent / 'scenarios'
PRESETS = ('fig2', 'fig3', 'fig5', 'fig6')

REQUIRED = object()

_SYSTEM = {k: REQUIRED for k in ('omega_m', 'kappa', 'gamma', 'delta', 'g_lin', 'n_th')}
_DIMER = {'omega': REQUIRED, 'gamma_loss': REQUIRED, 'gamma_gain': REQUIRED, 'mu': REQUIRED,
          'n_th_loss': 0.0, 'n_th_gain': 0.0}

# Accepted keys and their defaults per subcommand
COMMANDS: Dict[str, Dict[str, Any]] = {
    'gain-sweep': {
        'omega_m': 1.0, 'kappa': REQUIRED, 'n_th': REQUIRED, 'deltas': REQUIRED, 'gammas': REQUIRED,
        'g_min': 0.0, 'g_max': REQUIRED, 'g_points': 201,
        # accepted so that a full fig2 scenario file can be reused
        'gamma': None, 'delta': None, 'g_lin': None,
    },
    'evolve': {
        **_SYSTEM,
        'init_n_b': None, 'init_n_a': 0.0, 'init_ab': 0.0,
        't_end': 500.0, 'dt': 0.01, 'sample_every': 100, 'transient': 50.0,
        'fidelity_g_grid': [], 'fidelity_delta_grid': [],
    },
    'pt-spectrum': {**_DIMER, 'mu': 0.0, 'mu_min': 0.0, 'mu_max': REQUIRED, 'mu_points': 1000},
    'omit': {
        'delta': REQUIRED, 'omega_m': REQUIRED, 'mu': REQUIRED, 'kappa': REQUIRED,
        'gamma': REQUIRED, 'gamma_gain': REQUIRED, 'g0': REQUIRED, 'drive': REQUIRED,
        'probe_min': REQUIRED, 'probe_max': REQUIRED, 'probe_points': 2501,
        'target_depth': 0.9, 'g_hi': 0.02, 'g0_grid': [], 'gamma_m_grid': [],
    },
    'entangle': {
        **_DIMER, 'r': 0.05, 't_end': 200.0, 'dt': 0.01, 'sample_every': 100,
        'gamma_eff_grid': [],
    },
    'oracle-check': {
        'omega_m': 1.0, 'kappa': 1.0, 'gamma': 0.01, 'delta': 3.0, 'g_lin': 0.05, 'n_th': 0.0,
        'beta': 0.5, 'cutoff_a': 12, 'cutoff_b': 12, 'optomech_t_end': 5.0,
        'omega': 1.0, 'gamma_loss': 0.004, 'gamma_gain': 0.004, 'mu': 0.02,
        'n_th_loss': 0.0, 'n_th_gain': -1.0, 'r': 0.05, 'cutoff_dimer': 10, 'dimer_t_end': 50.0,
        'dt': 0.01, 'sample_every': 10,
    },
}

DEFAULT_PRESET = {
    'gain-sweep': 'fig2', 'evolve': 'fig2', 'pt-spectrum': 'fig3',
    'omit': 'fig5', 'entangle': 'fig6', 'oracle-check': None,
}


# ======================================================================
# 1) Loading
# ======================================================================

def _read_json(path: Path) -> Dict[str, Any]:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except FileNotFoundError as e:
        raise ScenarioError(f"scenario file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ScenarioError(f"malformed scenario file {path}: {e}") from e
    if not isinstance(data, dict):
        raise ScenarioError(f"scenario file {path} must hold a JSON object")
    return data


def load_preset(name: str) -> Dict[str, Any]:
    """Load a named preset shipped under scenarios/."""
    if name not in PRESETS:
        raise ScenarioError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return _read_json(PRESET_DIR / f"{name}.json")


def load_scenario(path) -> Dict[str, Any]:
    return _read_json(Path(path))


def resolve(command: str, preset: Optional[str] = None, path=None) -> Dict[str, Any]:
    """Merged configuration of one subcommand.

    Preset keys the command does not use are dropped; unknown keys in a
    scenario file are an error.
    """
    if command not in COMMANDS:
        raise ScenarioError(f"unknown command {command!r}")
    schema = COMMANDS[command]
    config = dict(schema)

    preset = preset or DEFAULT_PRESET[command]
    if preset is not None:
        config.update({k: v for k, v in load_preset(preset).items() if k in schema})
    if path is not None:
        overrides = load_scenario(path)
        unknown = sorted(set(overrides) - set(schema))
        if unknown:
            raise ScenarioError(f"unknown keys for {command}: {', '.join(unknown)}")
        config.update(overrides)

    missing = sorted(k for k, v in config.items() if v is REQUIRED)
    if missing:
        raise ScenarioError(f"{command} needs values for: {', '.join(missing)}")
    logger.debug("Resolved %s scenario (preset=%s, file=%s): %s", command, preset, path, config)
    return config


# ======================================================================
# 2) Typed views
# ======================================================================

def number(config: Dict[str, Any], key: str) -> float:
    value = config[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{key} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise ScenarioError(f"{key} must be finite, got {value!r}")
    return float(value)


def integer(config: Dict[str, Any], key: str, minimum: int = 1) -> int:
    value = config[key]
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ScenarioError(f"{key} must be an integer >= {minimum}, got {value!r}")
    return value


def number_list(config: Dict[str, Any], key: str) -> list:
    values = config[key]
    if not isinstance(values, list):
        raise ScenarioError(f"{key} must be a list of numbers, got {values!r}")
    return [number({key: v}, key) for v in values]


def system_params(config: Dict[str, Any]) -> SystemParams:
    return SystemParams(**{k: number(config, k) for k in _SYSTEM})


def initial_moments(config: Dict[str, Any]) -> InitialMoments:
    """Cavity empty, oscillator coherent-like with <b^dag b> = init_n_b (default n_th)."""
    n_b = config['init_n_b']
    n_b = number(config, 'n_th') if n_b is None else number(config, 'init_n_b')
    if n_b < 0:
        raise ScenarioError(f"init_n_b must be >= 0, got {n_b}")
    b = math.sqrt(n_b)
    return InitialMoments(b_mean=complex(b), n_b=n_b, bb=complex(b * b),
                          n_a=number(config, 'init_n_a'), ab=complex(number(config, 'init_ab')))


def dimer_params(config: Dict[str, Any]) -> PtDimerParams:
    return PtDimerParams(**{k: number(config, k) for k in _DIMER})


def omit_params(config: Dict[str, Any]) -> OmitParams:
    keys = ('delta', 'omega_m', 'mu', 'kappa', 'gamma', 'gamma_gain', 'g0', 'drive')
    return OmitParams(**{k: number(config, k) for k in keys})


# ======================================================================
# 3) Environment
# ======================================================================

def env_threads() -> int:
    raw = os.environ.get('PTGAIN_THREADS')
    if raw is None:
        return os.cpu_count() or 1
    try:
        threads = int(raw)
    except ValueError as e:
        raise ScenarioError(f"PTGAIN_THREADS must be an integer, got {raw!r}") from e
    if threads < 1:
        raise ScenarioError(f"PTGAIN_THREADS must be >= 1, got {threads}")
    return threads


def env_out_dir() -> str:
    return os.environ.get('PTGAIN_OUT', 'out')


def env_log_level() -> str:
    return os.environ.get('PTGAIN_LOG_LEVEL', 'WARNING').upper()
