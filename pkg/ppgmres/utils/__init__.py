"""
Utility functions for ppgmres
"""

import re
import logging
from typing import Iterable, List, Tuple

import numpy as np

logger = logging.getLogger(__name__)

# Named random streams; every consumer of randomness draws from its own stream
STREAM_RHS = 0
STREAM_POLYNOMIAL = 1
STREAM_GENERATOR = 2
STREAM_EIGEN = 3
STREAM_OUTER = 4


def make_generator(seed: int, stream: int = 0) -> np.random.Generator:
    """
    Create a counter-based generator for one named stream of a seed

    Args:
        seed: Experiment seed
        stream: Stream index (see the STREAM_* constants)

    Returns:
        Philox generator; the same (seed, stream) always yields the same numbers
    """
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(sequence))


def random_unit_vector(n: int, rng: np.random.Generator) -> np.ndarray:
    """
    Draw a random normal vector scaled to norm one

    Args:
        n: Length
        rng: Random generator

    Returns:
        Unit-norm float64 vector
    """
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


def conjugate_partner(values: np.ndarray, index: int, used: Iterable[int] = ()) -> int:
    """
    Find the entry that is the complex conjugate of values[index]

    Args:
        values: Complex array
        index: Entry whose partner is wanted
        used: Indices that may not be returned

    Returns:
        Index of the closest conjugate among the remaining entries
    """
    target = np.conj(values[index])
    blocked = set(used) | {index}
    best, best_dist = -1, np.inf
    for i, value in enumerate(values):
        if i in blocked:
            continue
        dist = abs(value - target)
        if dist < best_dist:
            best, best_dist = i, dist
    return best


def is_conjugate_closed(values: np.ndarray, rtol: float = 1e-12) -> bool:
    """
    Check that non-real entries come in conjugate pairs

    Args:
        values: Complex array
        rtol: Relative matching tolerance

    Returns:
        True if every non-real value has a distinct conjugate partner
    """
    values = np.asarray(values, dtype=complex)
    used: set = set()
    for i, value in enumerate(values):
        if i in used or value.imag == 0:
            continue
        j = conjugate_partner(values, i, used)
        if j < 0 or abs(values[j] - np.conj(value)) > rtol * max(abs(value), 1.0):
            return False
        used.update((i, j))
    return True


def pair_structure(values: np.ndarray) -> List[Tuple[int, ...]]:
    """
    Group an ordered, conjugate-closed array into application units

    Real entries become 1-tuples; a non-real entry followed by its conjugate
    becomes a 2-tuple. A non-real entry without an adjacent partner is
    returned as a 1-tuple.

    Args:
        values: Complex array with conjugate pairs adjacent

    Returns:
        List of index tuples covering every entry once
    """
    units: List[Tuple[int, ...]] = []
    i = 0
    while i < len(values):
        value = values[i]
        if value.imag != 0 and i + 1 < len(values) and values[i + 1] == np.conj(value):
            units.append((i, i + 1))
            i += 2
        else:
            units.append((i,))
            i += 1
    return units


def sanitize_filename(filename: str) -> str:
    """
    Sanitize a string to be safe for use as a filename

    Args:
        filename: Original filename

    Returns:
        Sanitized filename
    """
    # Replace invalid characters with underscores
    sanitized = re.sub(r'[^\w\-_\.]', '_', filename)
    # Remove multiple consecutive underscores
    sanitized = re.sub(r'_+', '_', sanitized)
    # Remove leading/trailing underscores
    sanitized = sanitized.strip('_')
    return sanitized[:100]  # Limit length


def format_count(count: int) -> str:
    """
    Format a matvec count the way result tables print it

    Args:
        count: Integer count

    Returns:
        String such as "812", "95.3k" or "2.60M"
    """
    if count < 1000:
        return str(count)
    if count < 1_000_000:
        return f"{count / 1000:.1f}k"
    return f"{count / 1_000_000:.2f}M"


def complex_to_pair(value: complex) -> List[float]:
    """Serialize a complex number as [re, im]"""
    return [float(np.real(value)), float(np.imag(value))]


def pair_to_complex(pair) -> complex:
    """Inverse of complex_to_pair"""
    return complex(float(pair[0]), float(pair[1]))
