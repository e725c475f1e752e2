"""Random number generation.

Every random draw in the package goes through :func:`make_rng`, which
wraps numpy's counter-based ``Philox`` bit generator. Seeds for individual
experiment cells are derived from a master seed and the cell coordinates
with :func:`derive_seed`, so extending a grid never changes existing cells.
"""

import numpy as np

#: Name and version of the pinned generator, recorded in every report.
GENERATOR = f"numpy.random.Philox (numpy {np.__version__})"


def make_rng(seed):
    """Return a ``numpy.random.Generator`` backed by Philox.

    ``seed`` may be an int, a ``SeedSequence`` or an existing generator
    (returned unchanged).
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is not None and not isinstance(seed, np.random.SeedSequence):
        seed = int(seed)
        if seed < 0:
            raise ValueError("seed must be non-negative")
    return np.random.Generator(np.random.Philox(seed))


def derive_seed(master, *coords):
    """Deterministic 64-bit subseed for the cell ``coords`` under ``master``."""
    key = tuple(int(c) for c in coords)
    ss = np.random.SeedSequence(int(master), spawn_key=key)
    return int(ss.generate_state(1, np.uint64)[0])
