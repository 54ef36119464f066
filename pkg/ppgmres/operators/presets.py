"""
Named test matrices addressable from the command line
"""

import logging
from typing import Callable, Dict

import numpy as np

from ..errors import ConfigurationError
from . import LinearOperator, bidiagonal_operator, diagonal_operator, hatano_nelson_operator, ray_spectrum_operator

logger = logging.getLogger(__name__)


def _steps(start: float, stop: float, step: float) -> np.ndarray:
    """Inclusive arithmetic sequence that is exact for decimal steps"""
    count = int(round((stop - start) / step)) + 1
    return np.round(start + step * np.arange(count), 10)


def example1_spectrum() -> np.ndarray:
    """-2500..-1, 1..2500"""
    return np.concatenate([_steps(-2500, -1, 1), _steps(1, 2500, 1)])


def example2_spectrum() -> np.ndarray:
    """-100..-1, 1..4900"""
    return np.concatenate([_steps(-100, -1, 1), _steps(1, 4900, 1)])


def example3_spectrum() -> np.ndarray:
    """-100..-1, 1..9850, 9860..10350 by tens (n = 10000)"""
    return np.concatenate([_steps(-100, -1, 1), _steps(1, 9850, 1), _steps(9860, 10350, 10)])


def example4_spectrum() -> np.ndarray:
    """-1000..-100, 0.1..0.9, 1..4090"""
    return np.concatenate([_steps(-1000, -100, 1), _steps(0.1, 0.9, 0.1), _steps(1, 4090, 1)])


def example7_spectrum() -> np.ndarray:
    """
    -500..-100 by hundreds, 0.001, 0.01..0.09, 0.1..0.9, 1..4971, 5000,
    5100..5400 by hundreds

    The decimal grid is read as a monotone sequence so that n = 5000.
    """
    return np.concatenate([
        _steps(-500, -100, 100),
        [0.001],
        _steps(0.01, 0.09, 0.01),
        _steps(0.1, 0.9, 0.1),
        _steps(1, 4971, 1),
        [5000.0],
        _steps(5100, 5400, 100),
    ])


def example9_spectrum() -> np.ndarray:
    """1..500, 500.2..520 by 0.2, 521..4920"""
    return np.concatenate([_steps(1, 500, 1), _steps(500.2, 520, 0.2), _steps(521, 4920, 1)])


PRESETS: Dict[str, Callable[[int], LinearOperator]] = {
    'example1': lambda seed: bidiagonal_operator(example1_spectrum(), 1.0, name='example1'),
    'example2': lambda seed: bidiagonal_operator(example2_spectrum(), 1.0, name='example2'),
    'example3': lambda seed: bidiagonal_operator(example3_spectrum(), 1.0, name='example3'),
    'example4': lambda seed: diagonal_operator(example4_spectrum(), name='example4'),
    'example7': lambda seed: bidiagonal_operator(example7_spectrum(), 0.1, name='example7'),
    'example9': lambda seed: diagonal_operator(example9_spectrum(), name='example9'),
    'hatano': lambda seed: hatano_nelson_operator(2500, 0.5, seed=seed, periodic=True),
}

RAY_PREFIX = 'rays:'


def preset_names():
    """Names accepted by make_preset"""
    return sorted(PRESETS) + [f"{RAY_PREFIX}<angle>"]


def make_preset(name: str, seed: int = 0) -> LinearOperator:
    """
    Build a named test operator

    Args:
        name: One of the preset names or 'rays:<angle in degrees>'
        seed: Seed for generators with random content

    Returns:
        LinearOperator
    """
    key = name.strip().lower()
    if key.startswith(RAY_PREFIX):
        try:
            angle = float(key[len(RAY_PREFIX):])
        except ValueError:
            raise ConfigurationError(f"invalid ray angle in preset {name!r}")
        op = ray_spectrum_operator(2000, 50, angle, 20, seed=seed, name=f"rays{angle:g}")
    elif key in PRESETS:
        op = PRESETS[key](seed)
    else:
        raise ConfigurationError(f"unknown preset {name!r}; choose from {', '.join(preset_names())}")
    logger.info(f"Preset {name}: n={op.n}")
    return op
