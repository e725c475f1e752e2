"""Predicates on history-state amplitude profiles.

Two alternative conditions are checked. Case 1 asks that the mass after a
burn-in time ``r`` is not too small and only weakly coupled to the mass
before it. Case 2 asks for a thin slice of time with very little mass
that splits the rest into two non-negligible parts. Reports contain every
intermediate sum so a verdict can be audited.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np

from ..errors import ValidationError

#: Constant in front of the burn-in length required by the concentration argument.
BURN_IN_CONSTANT = 11050


@dataclass
class AmplitudeCheckParams:
    """Parameters for :func:`check_amplitudes_case1` and :func:`check_amplitudes_case2`.

    Attributes
    ----------
    r, r1 : int
        Burn-in length and separation window.
    theta : float
        Energy-approximation exponent (``>= 1``).
    C : float
        Exponent in the ``n**C`` branch of the burn-in requirement.
    q : int
        Size bound of junk circuits.
    ratio_constant : float
        Case 1 ratio threshold is ``ratio_constant / n`` unless
        ``ratio_threshold`` overrides it.
    constant_scale : float, optional
        Scaled burn-in requirement; ``None`` uses the literal value
        ``11050 n^2 log(d) max((4 q d^4)^11, n^C)``.
    n, d : int, optional
        Default to the values recorded in the history state.
    """

    r: int
    r1: int = 0
    theta: float = 2.0
    C: float = 1.0
    q: int = 1
    ratio_constant: float = 1.0
    ratio_threshold: float = None
    tail_threshold: float = None
    slice_threshold: float = None
    constant_scale: float = None
    n: int = None
    d: int = None

    def __post_init__(self):
        if int(self.r) < 0 or int(self.r1) < 0:
            raise ValidationError("r and r1 must be non-negative")
        if self.theta < 1:
            raise ValidationError(f"theta must be >= 1, got {self.theta}")


def literal_burn_in(n, d, q, C):
    """``11050 n^2 log(d) max((4 q d^4)^11, n^C)``, evaluated in floating point."""
    return BURN_IN_CONSTANT * n**2 * math.log(d) * max(float(4 * q * d**4) ** 11, float(n) ** C)


def _scale_report(p, n, d):
    literal = literal_burn_in(n, d, p.q, p.C)
    out = {
        "literal_scale": literal,
        "literal_clears": bool(p.r >= literal and p.r1 >= literal),
        "constant_scale": p.constant_scale,
    }
    out["scaled_clears"] = None if p.constant_scale is None else bool(
        p.r >= p.constant_scale and p.r1 >= p.constant_scale)
    return out


def check_amplitudes_case1(hs, params):
    """Evaluate the burn-in condition on the amplitudes of ``hs``.

    With ``R = {p : t_p >= r+1}`` and ``R2 = {p : r+1 <= t_p <= r+r1}``
    the ratio is ``sum_{R2} sum_{P \\ R} |a_p||a_p'| / sum_R |a_p|^2`` and the
    tail mass is ``sum_R |a_p|^2``. The verdict ``pass`` requires
    ``ratio <= ratio_constant / n`` and ``tail >= n^(1 - theta)``.
    """
    p = params
    n = hs.n if p.n is None else int(p.n)
    d = hs.d if p.d is None else int(p.d)
    T = hs.poset.T
    r, r1 = int(p.r), int(p.r1)
    if r + r1 > T:
        raise ValidationError(f"need r + r1 <= T, got r={r}, r1={r1}, T={T}")
    tp = hs.poset.t_p_array()
    a = np.abs(hs.amplitudes)
    in_R = tp >= r + 1
    in_R2 = (tp >= r + 1) & (tp <= r + r1)
    numerator = math.fsum(a[in_R2]) * math.fsum(a[~in_R])
    denominator = math.fsum(a[in_R] ** 2)
    ratio = numerator / denominator if denominator > 0 else math.inf
    ratio_thr = p.ratio_constant / n if p.ratio_threshold is None else p.ratio_threshold
    tail_thr = n ** (1.0 - p.theta) if p.tail_threshold is None else p.tail_threshold
    report = {
        "case": 1,
        "n": n, "d": d, "T": T, "r": r, "r1": r1, "theta": p.theta,
        "size_R": int(in_R.sum()), "size_R2": int(in_R2.sum()),
        "numerator": numerator, "denominator": denominator,
        "ratio": ratio, "tail_mass": denominator,
        "ratio_threshold": ratio_thr, "tail_threshold": tail_thr,
        "ratio_pass": bool(ratio <= ratio_thr),
        "tail_pass": bool(denominator >= tail_thr),
    }
    report["pass"] = report["ratio_pass"] and report["tail_pass"]
    report.update(_scale_report(p, n, d))
    report["pass_literal"] = report["pass"] and report["literal_clears"]
    report["pass_scaled"] = None if report["scaled_clears"] is None else (report["pass"] and report["scaled_clears"])
    report["params"] = asdict(p)
    return report


def slice_exponent(T, r):
    """``u = floor(log(T/2) / log r) - 1`` computed exactly: ``u + 1`` is the
    largest ``j`` with ``2 r^j <= T``."""
    j = 0
    while 2 * r ** (j + 1) <= T:
        j += 1
    return j - 1


def check_amplitudes_case2(hs, params):
    """Search for a thin low-mass slice of time.

    Slices are ``A_1 = {no t_p} + {0 <= t_p <= r-1}`` and
    ``A_x = {(x-1) r <= t_p <= x r - 1}``; cuts are ``B_x = {t_p >= x r}``.
    Candidate ``x0`` runs over ``2 .. 2 r^u - 1`` and must satisfy

    * ``mass(A_x0 + A_{x0+1}) <= r^-u``,
    * ``mass(P \\ B_x0) >= r^-kappa`` and ``mass(B_x0) >= r^-kappa``

    with ``kappa = min(2u - 2, (theta - 1) log n / log r)``. Candidates whose
    slices reach past ``T`` are reported as inadmissible.
    """
    p = params
    n = hs.n if p.n is None else int(p.n)
    d = hs.d if p.d is None else int(p.d)
    T = hs.poset.T
    r = int(p.r)
    if r < 2:
        raise ValidationError(f"case 2 needs r >= 2, got r={r}")
    if T < 2 * r:
        raise ValidationError(f"case 2 needs T >= 2r, got T={T}, r={r}")
    u = slice_exponent(T, r)
    kappa = min(2 * u - 2, (p.theta - 1.0) * math.log(n) / math.log(r))
    slice_thr = float(r) ** (-u) if p.slice_threshold is None else p.slice_threshold
    split_thr = float(r) ** (-kappa)
    tp = hs.poset.t_p_array()
    m = hs.masses()

    def slice_mask(x):
        if x == 1:
            return (tp < 0) | (tp <= r - 1)
        return (tp >= (x - 1) * r) & (tp <= x * r - 1)

    x_max = 2 * r**u - 1 if u >= 0 else 1
    candidates = []
    for x0 in range(2, x_max + 1):
        admissible = (x0 + 1) * r - 1 <= T
        sl = math.fsum(m[slice_mask(x0) | slice_mask(x0 + 1)])
        upper = tp >= x0 * r
        lam = math.fsum(m[~upper])
        rest = math.fsum(m[upper])
        row = {
            "x0": x0, "admissible": bool(admissible),
            "slice_mass": sl, "lower_mass": lam, "upper_mass": rest,
            "slice_pass": bool(sl <= slice_thr),
            "lower_pass": bool(lam >= split_thr),
            "upper_pass": bool(rest >= split_thr),
        }
        row["pass"] = bool(admissible and row["slice_pass"] and row["lower_pass"] and row["upper_pass"])
        candidates.append(row)
    found = [c["x0"] for c in candidates if c["pass"]]
    report = {
        "case": 2,
        "n": n, "d": d, "T": T, "r": r, "theta": p.theta,
        "u": u, "kappa": kappa,
        "slice_threshold": slice_thr, "split_threshold": split_thr,
        "x0_range": [2, x_max],
        "slice_masses": [c["slice_mass"] for c in candidates],
        "candidates": candidates,
        "x0_found": found,
        "pass": bool(found),
    }
    report.update(_scale_report(p, n, d))
    report["pass_literal"] = report["pass"] and report["literal_clears"]
    report["pass_scaled"] = None if report["scaled_clears"] is None else (report["pass"] and report["scaled_clears"])
    report["params"] = asdict(p)
    return report


# -- amplitude profile fixtures ---------------------------------------------

def uniform_profile(T):
    return np.full(T + 1, 1.0 / math.sqrt(T + 1))


def geometric_profile(T, rate=1.0):
    """``a_t`` proportional to ``exp(-rate * t)``."""
    a = np.exp(-rate * np.arange(T + 1))
    return a / np.linalg.norm(a)


def zero_window_profile(T, start, width):
    """Uniform except for a run of ``width`` zero amplitudes starting at ``start``."""
    a = np.ones(T + 1)
    a[start:start + width] = 0.0
    return a / np.linalg.norm(a)


def endpoint_profile(T):
    """Half the mass on ``t = 0`` and half on ``t = T``."""
    a = np.zeros(T + 1)
    a[0] = a[T] = math.sqrt(0.5)
    return a
