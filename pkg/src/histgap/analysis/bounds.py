"""Closed-form bound evaluators.

Counts and rational quantities are kept exact (``int`` or
``fractions.Fraction``); expressions with irrational parts are evaluated
with 60-digit ``mpmath`` arithmetic. Every probability bound is also
reported as ``log10`` so that astronomically large or small values remain
printable.
"""

import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import mpmath

from ..errors import ValidationError
from .designs import design_order

_PREC = 60
#: Largest exponent for which exact rational powers are formed.
EXACT_EXPONENT_LIMIT = 4096


def _exact(x):
    """``int``/``Fraction`` unchanged; floats converted exactly; strings parsed as rationals."""
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise ValidationError(f"cannot convert {x!r} to an exact rational")


def _mpf(x):
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


def _power(base, exponent):
    """Exact ``base**exponent`` when small enough, otherwise ``None``."""
    if exponent <= EXACT_EXPONENT_LIMIT:
        return base**exponent
    return None


def net_sizes(m, k, d, eps_net, n=None, r_circ=None):
    """Cardinality bounds of epsilon-nets.

    * Hamiltonian net on ``k``-local terms of ``m`` qudits:
      ``C(m, k) (3/eps)^(d^(2k))``.
    * Circuit net of ``r_circ`` two-qudit gates on ``n`` qudits:
      ``C(n, 2)^r (6 r / eps)^(r d^4)``.

    Parameters
    ----------
    eps_net : int, Fraction, float or str
        Converted exactly; ``'1/4'`` and ``0.25`` give the same result.

    Returns
    -------
    dict
        ``hamiltonian_net_bound`` and ``circuit_net_bound`` as ``Fraction``
        (integers when the value is integral, ``None`` when the exponent
        exceeds :data:`EXACT_EXPONENT_LIMIT`), plus ``*_log10`` values.
    """
    eps = _exact(eps_net)
    if not 0 < eps < 1:
        raise ValidationError(f"eps_net must lie in (0, 1), got {eps}")
    if not 1 <= k <= m:
        raise ValidationError(f"need 1 <= k <= m, got k={k}, m={m}")
    out = {}
    e_ham = d ** (2 * k)
    ham = _power(3 / eps, e_ham)
    ham = None if ham is None else _integral(math.comb(m, k) * ham)
    out["hamiltonian_net_bound"] = ham
    with mpmath.workdps(_PREC):
        out["hamiltonian_net_log10"] = float(mpmath.log10(math.comb(m, k))
                                             + e_ham * mpmath.log10(_mpf(3 / eps)))
    if n is not None and r_circ is not None:
        if n < 2 or r_circ < 0:
            raise ValidationError("circuit net needs n >= 2 and r_circ >= 0")
        e_circ = r_circ * d**4
        base = _power(6 * r_circ / eps, e_circ)
        circ = None if base is None else _integral(Fraction(math.comb(n, 2)) ** r_circ * base)
        out["circuit_net_bound"] = circ
        with mpmath.workdps(_PREC):
            out["circuit_net_log10"] = float(r_circ * mpmath.log10(math.comb(n, 2))
                                             + (e_circ * mpmath.log10(_mpf(6 * r_circ / eps)) if r_circ else 0))
    return out


def _integral(x):
    return int(x) if x.denominator == 1 else x


def low_tail_bound(C, a, alpha_poly, mu, eps_design, m_half, delta):
    """``delta^(-2m) (C (m/a)^m + 2 eps (alpha + |mu|)^(2m))`` with ``m = m_half``.

    ``m_half`` is the moment order of the tail bound; it is unrelated to
    the qudit count. Returns an ``mpmath.mpf`` at 60 digits.
    """
    if a <= 0 or m_half < 1 or delta <= 0:
        raise ValidationError("low_tail_bound needs a > 0, m_half >= 1 and delta > 0")
    with mpmath.workdps(_PREC):
        m = _mpf(m_half)
        first = _mpf(C) * (m / _mpf(a)) ** m
        second = 2 * _mpf(eps_design) * (_mpf(alpha_poly) + abs(_mpf(mu))) ** (2 * m)
        return (first + second) / _mpf(delta) ** (2 * m)


def concentration_plugin(n, d, s1, delta):
    """Tail bound at threshold ``delta`` with the constants used for the trajectory functional.

    ``C = 2``, ``a = d^n / 48``, ``m = s1 / 2``, ``alpha = d^(4n)``,
    ``mu = d^(-n)`` and the design error chosen so that both terms agree;
    the result equals ``4 (24 s1 / (d^n delta^2))^(s1/2)``.
    """
    with mpmath.workdps(_PREC):
        D = mpmath.mpf(d) ** n
        m = mpmath.mpf(s1) / 2
        alpha, mu = D**4, 1 / D
        eps = (24 * mpmath.mpf(s1) / ((alpha + mu) ** 2 * D)) ** m
        return low_tail_bound(2, D / 48, alpha, mu, eps, m, delta)


@dataclass
class BoundParams:
    """Parameters of the two failure-probability bounds.

    ``q`` and ``q1`` are the circuit-size and poset-size polynomials
    already evaluated at ``n``; ``alpha_mass`` is the truncated mass and
    ``cross_sum`` the amplitude cross sum entering the first energy
    bound. ``delta``, ``gamma`` and ``alpha_mass`` may be ``Fraction`` to
    keep the energy bounds exact.
    """

    n: int
    d: int
    k: int
    m: int
    T: int
    q: int
    q1: int
    r: int
    r1: int
    delta: object
    gamma: object = 1
    eps_design: float = 0.0
    alpha_mass: object = 0
    cross_sum: object = 0
    lemma7_prefactor: int = 16
    s_variant: str = "s_appendix"

    def __post_init__(self):
        for name in ("n", "d", "k", "m", "T", "q", "q1", "r", "r1"):
            if int(getattr(self, name)) <= 0:
                raise ValidationError(f"{name} must be positive")
        if not 0 < self.delta <= Fraction(1, 2):
            raise ValidationError(f"delta must lie in (0, 1/2], got {self.delta}")
        if not 0 <= self.alpha_mass < 1:
            raise ValidationError(f"alpha_mass must lie in [0, 1), got {self.alpha_mass}")
        if self.k > self.m:
            raise ValidationError("k cannot exceed m")

    @property
    def s1(self):
        return design_order(self.r1, self.n, self.d, "s1_lemma8")

    @property
    def s(self):
        return design_order(self.r, self.n, self.d, self.s_variant)


def plugin_delta(p):
    """``(1 - alpha) / ((q1 + m) T)``, exact when ``alpha_mass`` is rational."""
    return (1 - _exact(p.alpha_mass)) / ((p.q1 + p.m) * p.T)


def truncation_energy_rhs(gamma, q1, m, n, d, delta, alpha, cross_sum):
    """Floating-point energy bounds ``(rhs7, rhs9)`` of the two truncation steps.

    ``rhs7 = (2 gamma cross_sum + 2 gamma q1 (d^(-n/2) + delta)) / (1 - alpha)``
    and ``rhs9 = (q1 + m) gamma delta``.
    """
    g, dl, a, c = (float(x) for x in (gamma, delta, alpha, cross_sum))
    rhs7 = (2 * g * c + 2 * g * q1 * (d ** (-n / 2) + dl)) / (1 - a)
    return rhs7, (q1 + m) * g * dl


def _net_factor_log10(p, delta):
    """``log10`` of ``C(n,2)^(2q) (48q/delta)^(2q d^4) C(m,k) (12/delta)^(d^(2k))``."""
    dl = _mpf(delta)
    return (2 * p.q * mpmath.log10(math.comb(p.n, 2))
            + 2 * p.q * p.d**4 * mpmath.log10(48 * p.q / dl)
            + mpmath.log10(math.comb(p.m, p.k))
            + p.d ** (2 * p.k) * mpmath.log10(12 / dl))


def lemma_failure_bounds(p):
    """Failure probabilities and energy right-hand sides of the two truncation bounds.

    Returns
    -------
    dict
        ``lemma7_bound`` and ``lemma9_bound`` (``mpmath.mpf``; may overflow
        to huge values) with their ``*_log10``; ``lemma7_energy_rhs`` and
        ``lemma9_energy_rhs`` as ``Fraction`` when every input is rational
        and as float otherwise; and the design orders ``s1`` and ``s``.
    """
    with mpmath.workdps(_PREC):
        delta = _mpf(_exact(p.delta))
        D = mpmath.mpf(p.d) ** p.n
        s1, s = p.s1, p.s
        net = _net_factor_log10(p, p.delta)
        tail7 = (s1 / mpmath.mpf(2)) * mpmath.log10(96 * s1 / (D * delta**2)) if s1 else mpmath.mpf(0)
        tail9 = (s / mpmath.mpf(2)) * mpmath.log10(6144 * s / (D * delta**2)) if s else mpmath.mpf(0)
        log7 = mpmath.log10(p.lemma7_prefactor * p.q1**2) + net + tail7
        log9 = mpmath.log10(8 * (p.q1**2 + p.m * p.q1**2)) + net + tail9
        out = {
            "s1": s1, "s": s,
            "lemma7_bound_log10": float(log7),
            "lemma9_bound_log10": float(log9),
            "lemma7_bound": mpmath.power(10, log7),
            "lemma9_bound": mpmath.power(10, log9),
        }
    try:
        gamma, delta_q = _exact(p.gamma), _exact(p.delta)
        alpha, cross = _exact(p.alpha_mass), _exact(p.cross_sum)
        exact = True
    except ValidationError:
        exact = False
    if exact:
        out["lemma9_energy_rhs"] = (p.q1 + p.m) * gamma * delta_q
        # d^{-n/2} is irrational for odd n with non-square d
        half = Fraction(1, p.d ** (p.n // 2)) if p.n % 2 == 0 else None
        if half is not None:
            out["lemma7_energy_rhs"] = (2 * gamma * cross + 2 * gamma * p.q1 * (half + delta_q)) / (1 - alpha)
        else:
            out["lemma7_energy_rhs"] = float((2 * gamma * cross + 2 * gamma * p.q1
                                              * (Fraction(p.d ** (-p.n / 2)) + delta_q)) / (1 - alpha))
    else:
        out["lemma7_energy_rhs"], out["lemma9_energy_rhs"] = truncation_energy_rhs(
            p.gamma, p.q1, p.m, p.n, p.d, p.delta, p.alpha_mass, p.cross_sum)
    out["params"] = asdict(p)
    return out
