"""Frame potentials of unitary ensembles and design-depth formulas."""

import itertools
import math
from bisect import bisect_left
from dataclasses import asdict, dataclass

import mpmath
import numpy as np

from ..errors import ValidationError
from ..qcircuit import haar_unitaries
from ..rng import make_rng

#: Constants of the three design-order variants.
DESIGN_ORDER_CONSTANTS = {"s1_lemma8": 11050, "s_lemma9": 1400, "s_appendix": 1900}

_PREC = 60


@dataclass(frozen=True)
class DesignEnsembleSpec:
    """An ensemble of ``d**n``-dimensional unitaries.

    ``kind='haar'`` draws Haar unitaries; ``kind='local_random_circuit'``
    draws local random circuits of ``depth`` gates. ``samples`` pairs are
    drawn for a frame potential estimate.
    """

    kind: str
    n: int
    d: int
    depth: int = 0
    samples: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("haar", "local_random_circuit"):
            raise ValidationError(f"unknown ensemble kind {self.kind!r}")
        if self.samples < 2:
            raise ValidationError("at least 2 samples are needed for an error estimate")
        if self.kind == "local_random_circuit" and self.n < 2:
            raise ValidationError("local random circuits need n >= 2")


def random_circuit_unitaries(n, d, depth, count, rng):
    """``count`` independent local-random-circuit unitaries of ``depth`` gates.

    All circuits are advanced together: at every step each circuit draws
    its own site and Haar gate, and circuits sharing a site are updated in
    one batched contraction.
    """
    rng = make_rng(rng)
    dim = d**n
    U = np.broadcast_to(np.eye(dim, dtype=complex), (count, dim, dim)).copy()
    for _ in range(depth):
        sites = rng.integers(1, n, size=count)
        gates = haar_unitaries(d * d, count, rng)
        for s in range(1, n):
            idx = np.nonzero(sites == s)[0]
            if idx.size == 0:
                continue
            left, right = d ** (s - 1), d ** (n - s - 1)
            block = U[idx].reshape(idx.size, left, d * d, right, dim)
            block = np.einsum("bij,bljrc->blirc", gates[idx], block)
            U[idx] = block.reshape(idx.size, dim, dim)
    return U


def sample_ensemble(spec, count, rng):
    if spec.kind == "haar":
        return haar_unitaries(spec.d**spec.n, count, rng)
    return random_circuit_unitaries(spec.n, spec.d, spec.depth, count, rng)


def frame_potential(spec, s):
    """Monte Carlo estimate of ``E |Tr(U^H V)|^(2s)`` over independent pairs.

    Returns a dict with ``estimate``, ``stderr`` and the Haar reference
    value for the same dimension.
    """
    if s not in (1, 2, 3):
        raise ValidationError(f"frame potentials are supported for s in 1..3, got {s}")
    rng = make_rng(spec.seed)
    N = spec.samples
    U = sample_ensemble(spec, N, rng)
    V = sample_ensemble(spec, N, rng)
    tr = np.einsum("bij,bij->b", U.conj(), V)
    vals = np.abs(tr) ** (2 * s)
    return {
        "estimate": float(vals.mean()),
        "stderr": float(vals.std(ddof=1) / math.sqrt(N)),
        "haar_value": haar_frame_potential(spec.d**spec.n, s),
        "s": s,
        "spec": asdict(spec),
    }


def _longest_increasing(perm):
    tails = []
    for x in perm:
        i = bisect_left(tails, x)
        if i == len(tails):
            tails.append(x)
        else:
            tails[i] = x
    return len(tails)


def haar_frame_potential(dim, s):
    """Haar value of ``E |Tr U|^(2s)`` on ``U(dim)``.

    Equals the number of permutations of ``s`` items without an increasing
    subsequence longer than ``dim``; this is ``s!`` whenever ``dim >= s``.
    """
    if dim >= s:
        return math.factorial(s)
    return sum(1 for p in itertools.permutations(range(s)) if _longest_increasing(p) <= dim)


def ceil_log(base, x):
    """Smallest integer ``j >= 0`` with ``base**j >= x`` (exact for integers)."""
    j, v = 0, 1
    while v < x:
        v *= base
        j += 1
    return j


def bhh_design_length(n, d, s, eps):
    """Circuit length after which local random circuits form ``eps``-approximate ``s``-designs.

    ``425 n ceil(log_d(4s))^2 d^2 s^5 s^(3.1/ln d) (2 n s ln d + ln(1/eps))``,
    evaluated with 60-digit arithmetic and rounded up.
    """
    if min(n, d, s) <= 0:
        raise ValidationError("n, d and s must be positive")
    if not 0 < eps < 1:
        raise ValidationError(f"eps must lie in (0, 1), got {eps}")
    with mpmath.workdps(_PREC):
        lnd = mpmath.log(d)
        c = ceil_log(d, 4 * s)
        val = (425 * n * c**2 * d**2 * mpmath.mpf(s) ** 5 * mpmath.power(s, mpmath.mpf("3.1") / lnd)
               * (2 * n * s * lnd + mpmath.log(1 / mpmath.mpf(eps))))
        return int(mpmath.ceil(val))


def design_order(r, n, d, variant="s_appendix"):
    """``floor((r / (c n^2 ln d))^(1/11))`` with the variant's constant ``c``.

    The eleventh root is evaluated with 60-digit arithmetic; a result
    within a relative ``1e-12`` of an integer is snapped to it so that
    exact powers are not lost to rounding of ``ln d``.
    """
    if variant not in DESIGN_ORDER_CONSTANTS:
        raise ValidationError(f"unknown variant {variant!r}; choose from {sorted(DESIGN_ORDER_CONSTANTS)}")
    if r <= 0 or n <= 0 or d < 2:
        raise ValidationError("design_order needs r > 0, n > 0 and d >= 2")
    c = DESIGN_ORDER_CONSTANTS[variant]
    with mpmath.workdps(_PREC):
        root = mpmath.root(mpmath.mpf(r) / (c * n**2 * mpmath.log(d)), 11)
        k = int(mpmath.nint(root))
        if k > 0 and abs(root - k) <= mpmath.mpf("1e-12") * k:
            return k
        return int(mpmath.floor(root))
