"""Qudit circuits built from nearest-neighbour two-qudit gates.

Conventions
-----------
Qudits are numbered ``1..n`` in gate specifications, matching the usual
notation for local random circuits: a gate with ``site = i`` acts on qudits
``i`` and ``i + 1``. Gate time indices run ``1..T``. State vectors use
row-major (C) ordering with qudit 1 as the most significant digit, so
``|0...01>`` is basis index 1.

Gates are applied by contracting the two target indices of the state
tensor; the full ``d**n x d**n`` matrix of a gate is never formed.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ResourceError, ValidationError
from .rng import make_rng

#: Largest state-space dimension accepted by default (2**22 amplitudes).
DEFAULT_DIM_CAP = 2**22

UNITARITY_TOL = 1e-12


@dataclass(frozen=True)
class QuditRegister:
    """``n`` computational qudits of local dimension ``d``."""

    n: int
    d: int
    dim_cap: int = field(default=DEFAULT_DIM_CAP, compare=False, repr=False)

    def __post_init__(self):
        if int(self.n) < 1:
            raise ValidationError(f"need at least one qudit, got n={self.n}")
        if int(self.d) < 2:
            raise ValidationError(f"local dimension must be >= 2, got d={self.d}")
        if self.d**self.n > self.dim_cap:
            raise ResourceError("register dimension exceeds the memory budget",
                                required=self.d**self.n, available=self.dim_cap)

    @property
    def dim(self):
        return self.d**self.n

    def basis_state(self, digits):
        """Computational basis vector for the given digit string (qudit 1 first)."""
        digits = tuple(int(x) for x in digits)
        if len(digits) != self.n or any(not 0 <= x < self.d for x in digits):
            raise ValidationError(f"invalid basis label {digits} for n={self.n}, d={self.d}")
        v = np.zeros(self.dim, dtype=complex)
        v[np.ravel_multi_index(digits, (self.d,) * self.n)] = 1.0
        return v

    def zero_state(self):
        return self.basis_state((0,) * self.n)

    def flipped_state(self):
        """``|0...01>``, orthogonal to :meth:`zero_state`."""
        return self.basis_state((0,) * (self.n - 1) + (1,))


def _unitarity_defect(u):
    return np.linalg.norm(u @ u.conj().T - np.eye(u.shape[0]), ord=2)


@dataclass(frozen=True, eq=False)
class Gate:
    t: int
    site: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"gate {self.t}: matrix must be square, got {m.shape}")
        defect = _unitarity_defect(m)
        if defect > UNITARITY_TOL:
            raise ValidationError(f"gate {self.t} is not unitary (defect {defect:.2e})")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __eq__(self, other):
        if not isinstance(other, Gate):
            return NotImplemented
        return (self.t == other.t and self.site == other.site
                and np.array_equal(self.matrix, other.matrix))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Circuit:
    """An ordered sequence of nearest-neighbour gates on a register."""

    register: QuditRegister
    gates: tuple
    seed: int = None

    def __post_init__(self):
        gates = tuple(self.gates)
        object.__setattr__(self, "gates", gates)
        n, d = self.register.n, self.register.d
        for k, g in enumerate(gates, start=1):
            if g.t != k:
                raise ValidationError(f"gate time indices must be 1..T in order; position {k} has t={g.t}")
            if not 1 <= g.site <= n - 1:
                raise ValidationError(f"gate {k}: site {g.site} outside 1..{n - 1}")
            if g.matrix.shape != (d * d, d * d):
                raise DimensionError(f"gate {k}: expected {d * d}x{d * d} matrix, got {g.matrix.shape}")

    @property
    def T(self):
        return len(self.gates)

    @property
    def n(self):
        return self.register.n

    @property
    def d(self):
        return self.register.d

    def __eq__(self, other):
        if not isinstance(other, Circuit):
            return NotImplemented
        return (self.register == other.register and self.seed == other.seed
                and len(self.gates) == len(other.gates)
                and all(a == b for a, b in zip(self.gates, other.gates)))

    __hash__ = None

    def prefix(self, T):
        """The circuit made of the first ``T`` gates."""
        return Circuit(self.register, self.gates[:T], self.seed)

    def to_dict(self):
        return {
            "n": self.register.n,
            "d": self.register.d,
            "T": self.T,
            "seed": self.seed,
            "gates": [
                {
                    "t": g.t,
                    "site": g.site,
                    "u_re": [[float(x).hex() for x in row] for row in g.matrix.real],
                    "u_im": [[float(x).hex() for x in row] for row in g.matrix.imag],
                }
                for g in self.gates
            ],
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data):
        register = QuditRegister(int(data["n"]), int(data["d"]))
        gates = []
        for g in data["gates"]:
            re = np.array([[float.fromhex(x) for x in row] for row in g["u_re"]])
            im = np.array([[float.fromhex(x) for x in row] for row in g["u_im"]])
            gates.append(Gate(int(g["t"]), int(g["site"]), re + 1j * im))
        if "T" in data and int(data["T"]) != len(gates):
            raise ValidationError(f"header says T={data['T']} but {len(gates)} gates were given")
        seed = data.get("seed")
        return cls(register, tuple(gates), None if seed is None else int(seed))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def haar_unitary(dim, rng):
    """Sample a ``dim x dim`` unitary from the Haar measure.

    Uses QR factorisation of a complex Ginibre matrix, with the phases of
    ``R``'s diagonal moved into ``Q`` so that the result is exactly Haar
    distributed rather than biased by the QR sign convention.
    """
    dim = int(dim)
    if dim < 1:
        raise DimensionError(f"invalid dimension {dim}")
    return haar_unitaries(dim, 1, rng)[0]


def haar_unitaries(dim, count, rng):
    """Stack of ``count`` independent Haar unitaries, shape ``(count, dim, dim)``."""
    if dim < 1:
        raise DimensionError(f"invalid dimension {dim}")
    rng = make_rng(rng)
    z = (rng.standard_normal((count, dim, dim))
         + 1j * rng.standard_normal((count, dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=1, axis2=2)
    phases = diag / np.abs(diag)
    return q * phases[:, None, :]


def sample_local_random_circuit(register, T, rng, seed=None):
    """Draw a local random circuit of ``T`` gates.

    Each gate picks a site uniformly from ``1..n-1`` and a Haar-random
    unitary on ``U(d**2)``. Pass an integer as ``rng`` (or set ``seed``) to
    record the seed in the returned circuit.
    """
    if register.n < 2:
        raise ValidationError("a local random circuit needs n >= 2 (no valid site)")
    if int(T) < 1:
        raise ValidationError(f"T must be >= 1, got {T}")
    if seed is None and isinstance(rng, (int, np.integer)):
        seed = int(rng)
    rng = make_rng(rng)
    sites = rng.integers(1, register.n, size=T)
    mats = haar_unitaries(register.d**2, T, rng)
    gates = tuple(Gate(t + 1, int(s), m) for t, (s, m) in enumerate(zip(sites, mats)))
    return Circuit(register, gates, seed)


def identity_circuit(register, T, sites=None):
    """A circuit of ``T`` identity gates (sites cycle through 1..n-1 by default)."""
    if register.n < 2:
        raise ValidationError("circuits need n >= 2 qudits to place a gate")
    eye = np.eye(register.d**2, dtype=complex)
    if sites is None:
        sites = [(t % (register.n - 1)) + 1 for t in range(T)]
    return Circuit(register, tuple(Gate(t + 1, int(s), eye) for t, s in enumerate(sites)))


def apply_two_site(matrix, psi, site, n, d):
    """Apply a ``d**2 x d**2`` matrix to qudits ``site, site+1`` (1-based).

    ``psi`` has shape ``(d**n,)`` or ``(d**n, k)``; trailing axes are
    carried along, which lets a whole unitary be evolved column-wise.
    """
    left = d ** (site - 1)
    right = d ** (n - site - 1)
    extra = psi.shape[1:]
    t = psi.reshape((left, d * d, right) + extra)
    out = np.tensordot(matrix, t, axes=([1], [1]))
    out = np.moveaxis(out, 0, 1)
    return out.reshape(psi.shape)


def apply_circuit(circuit, psi, start=0, stop=None):
    """Apply gates ``start+1 .. stop`` of ``circuit`` to ``psi``."""
    n, d = circuit.n, circuit.d
    for g in circuit.gates[start:stop]:
        psi = apply_two_site(g.matrix, psi, g.site, n, d)
    return psi


def evolve(circuit, initial):
    """Trajectory ``[psi_0, ..., psi_T]`` with ``psi_t = U_t psi_{t-1}``."""
    psi = np.asarray(initial, dtype=complex)
    if psi.shape != (circuit.register.dim,):
        raise DimensionError(f"initial state has shape {psi.shape}, expected ({circuit.register.dim},)")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-12:
        raise ValidationError(f"initial state not normalised (norm {norm!r})")
    traj = [psi.copy()]
    n, d = circuit.n, circuit.d
    for g in circuit.gates:
        psi = apply_two_site(g.matrix, psi, g.site, n, d)
        traj.append(psi)
    return traj


def circuit_unitary(circuit):
    """Dense ``d**n x d**n`` unitary implemented by the whole circuit."""
    eye = np.eye(circuit.register.dim, dtype=complex)
    return apply_circuit(circuit, eye)
