"""Deterministic random substreams derived from one master seed."""

from enum import IntEnum

import numpy as np


class Purpose(IntEnum):
    """What a substream is used for inside one trial."""

    CHANNEL = 0
    BITS = 1
    OBSERVE = 2
    BIAS = 3
    KAPPA = 10
    THEORY = 11
    EPSILON = 12


def substream(master_seed: int, *key: int) -> np.random.Generator:
    """Return an independent generator for ``(master_seed, *key)``.

    The key is folded into the ``spawn_key`` of a ``SeedSequence`` and fed to
    a Philox counter-based bit generator, so the draw for a given key does not
    depend on which worker evaluates it or in which order.

    Args:
        master_seed: Non-negative master seed of the experiment
        *key: Non-negative integers identifying the substream, e.g.
            ``(point_index, trial_index, Purpose.CHANNEL)``

    Returns:
        A fresh ``numpy.random.Generator``
    """
    if master_seed < 0:
        raise ValueError(f"master seed must be non-negative, got {master_seed}")
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))
