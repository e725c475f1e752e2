"""Local distinguishability of pure states.

For states ``psi, phi`` on ``n`` qudits and a set ``A`` of ``k`` qudits,
every ``k``-local Hermitian ``h`` with ``||h|| <= 1`` acting on ``A``
satisfies ``<psi|h|phi> = Tr(h_A M_A)`` with ``M_A = Tr_{not A} |phi><psi|``.
Writing ``M = X + iY`` with ``X, Y`` Hermitian,
``max_h Re(e^{i theta} <psi|h|phi>) = || cos(theta) X - sin(theta) Y ||_1``,
so maximising the trace norm over angles and subsets gives the maximum of
``|<psi|h|phi>|`` over all such ``h``.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from ..qcircuit import evolve

DEFAULT_GRID = 64


def reduced_operator(ket, bra, subset, n, d):
    """``Tr_{not A} |ket><bra|`` on the qudits in ``subset`` (0-based, any order)."""
    subset = list(subset)
    rest = [q for q in range(n) if q not in subset]
    k = len(subset)
    K = np.asarray(ket).reshape((d,) * n).transpose(subset + rest).reshape(d**k, -1)
    B = np.asarray(bra).reshape((d,) * n).transpose(subset + rest).reshape(d**k, -1)
    return K @ B.conj().T


def trace_norm_hermitian(X):
    return float(np.sum(np.abs(np.linalg.eigvalsh(X))))


@dataclass
class OverlapResult:
    """Maximum of ``|<psi|h|phi>|`` over ``k``-local ``h`` with unit norm.

    ``value`` is the grid maximum; it lies within a factor
    ``cos(resolution / 2)`` of the true maximum. ``envelope`` is the
    largest ``sqrt(||X||_1^2 + ||Y||_1^2)`` over subsets, an upper bound.
    """

    value: float
    subset: tuple
    theta: float
    grid_size: int
    resolution: float
    envelope: float


def _check_state(v, dim, name):
    v = np.asarray(v, dtype=complex)
    if v.shape != (dim,):
        raise ValidationError(f"{name} has shape {v.shape}, expected ({dim},)")
    nrm = np.linalg.norm(v)
    if abs(nrm - 1.0) > 1e-10:
        raise ValidationError(f"{name} is not normalised (norm {nrm!r})")
    return v


def maximize_over_local(operators, grid_size=DEFAULT_GRID):
    """Grid maximisation of ``||cos t X_A - sin t Y_A||_1`` over ``(subset, M_A)`` pairs."""
    if grid_size < 4:
        raise ValidationError(f"theta grid needs at least 4 points, got {grid_size}")
    thetas = np.pi * np.arange(grid_size) / grid_size
    best = (-1.0, None, 0.0)
    envelope = 0.0
    for subset, M in operators:
        X = 0.5 * (M + M.conj().T)
        Y = (M - M.conj().T) / 2j
        envelope = max(envelope, math.hypot(trace_norm_hermitian(X), trace_norm_hermitian(Y)))
        for th in thetas:
            val = trace_norm_hermitian(math.cos(th) * X - math.sin(th) * Y)
            if val > best[0]:
                best = (val, tuple(subset), float(th))
    return OverlapResult(best[0], best[1], best[2], grid_size, math.pi / grid_size, envelope)


def local_cross_overlap_max(psi, phi, k, n, d, grid_size=DEFAULT_GRID):
    """``max |<psi|h|phi>|`` over ``k``-local Hermitian ``h`` with ``||h|| <= 1``.

    Parameters
    ----------
    psi, phi : array, shape (d**n,)
        Normalised states.
    k : int
        Locality, ``1 <= k <= n``.
    grid_size : int
        Number of phase angles in ``[0, pi)``.
    """
    if not 1 <= k <= n:
        raise ValidationError(f"need 1 <= k <= n, got k={k}, n={n}")
    psi = _check_state(psi, d**n, "psi")
    phi = _check_state(phi, d**n, "phi")
    ops = ((A, reduced_operator(phi, psi, A, n, d)) for A in itertools.combinations(range(n), k))
    return maximize_over_local(ops, grid_size)


def difference_overlap_max(psi_pair, phi_pair, k, n, d, grid_size=DEFAULT_GRID):
    """``max_h |<psi_a|h|psi_b> - <phi_a|h|phi_b>|`` over ``k``-local unit-norm ``h``.

    The two cross operators are subtracted before the maximisation.
    """
    psi_a, psi_b = (_check_state(v, d**n, "psi") for v in psi_pair)
    phi_a, phi_b = (_check_state(v, d**n, "phi") for v in phi_pair)
    ops = ((A, reduced_operator(psi_b, psi_a, A, n, d) - reduced_operator(phi_b, phi_a, A, n, d))
           for A in itertools.combinations(range(n), k))
    return maximize_over_local(ops, grid_size)


def fh_decay_profile(circuit, k, checkpoints, lag=0, grid_size=DEFAULT_GRID, initial=None, flipped=None):
    """Local distinguishability of two trajectories driven by the same circuit.

    At each checkpoint depth ``t`` the functional
    ``f_h = <psi_t|h|psi_{t+lag}> - <phi_t|h|phi_{t+lag}>`` is maximised
    over ``k``-local unit-norm ``h``, where ``psi`` starts in ``|0^n>`` and
    ``phi`` in ``|0^{n-1}1>``.

    Returns
    -------
    dict
        ``depths``, ``raw`` (the maxima of ``|f_h|``) and ``values``, which
        are half the raw maxima; with ``lag = 0`` these are the largest
        ``k``-site trace distances, equal to 1 at depth 0.
    """
    n, d = circuit.n, circuit.d
    reg = circuit.register
    psi = evolve(circuit, reg.zero_state() if initial is None else initial)
    phi = evolve(circuit, reg.flipped_state() if flipped is None else flipped)
    depths, raw = [], []
    for t in checkpoints:
        t = int(t)
        if not (0 <= t and t + lag <= circuit.T):
            raise ValidationError(f"checkpoint {t} (lag {lag}) outside 0..{circuit.T}")
        res = difference_overlap_max((psi[t], psi[t + lag]), (phi[t], phi[t + lag]), k, n, d, grid_size)
        depths.append(t)
        raw.append(res.value)
    raw = np.array(raw)
    return {"depths": np.array(depths), "raw": raw, "values": 0.5 * raw, "k": k, "lag": lag}


def haar_state(dim, rng):
    """Haar-random unit vector."""
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)
