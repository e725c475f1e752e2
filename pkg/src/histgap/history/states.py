"""History states over a (possibly partially ordered) set of time labels.

A :class:`HistoryState` is ``sum_p alpha_p |p> (x) |psi_p>`` where each
clock label ``|p>`` is a computational basis product state of a clock
register with local dimensions ``clock_dims`` and ``psi_p`` lives on a
computational register with local dimensions ``comp_dims``. Vectors are
laid out clock register first, matching :func:`~histgap.hamiltonian.fk_layout`.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from ..errors import (DegenerateError, DimensionError, IncompleteSpecificationError,
                      ValidationError)
from ..qcircuit import Circuit, apply_two_site, evolve
from .poset import TimePoset

NORM_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class JunkUnitary:
    """The unitary ``V_p`` producing the state of a non-chain label.

    ``flavor='independent'`` carries a full ``d**n x d**n`` matrix that does
    not depend on the encoded computation. ``flavor='circuit'`` carries a
    short list of nearest-neighbour gates ``(site, matrix)`` (1-based sites)
    and records its gate count as the size bound.
    """

    flavor: str
    matrix: np.ndarray = None
    gates: tuple = ()

    def __post_init__(self):
        if self.flavor not in ("independent", "circuit"):
            raise ValidationError(f"unknown junk flavor {self.flavor!r}")
        if self.flavor == "independent" and self.matrix is None:
            raise ValidationError("an independent junk unitary needs a matrix")
        object.__setattr__(self, "gates", tuple(self.gates))

    @classmethod
    def identity(cls, dim):
        return cls("independent", np.eye(dim, dtype=complex))

    @property
    def size(self):
        return len(self.gates) if self.flavor == "circuit" else 0

    def apply(self, psi, n, d):
        if self.flavor == "independent":
            return self.matrix @ psi
        for site, mat in self.gates:
            psi = apply_two_site(np.asarray(mat), psi, int(site), n, d)
        return psi

    def to_dict(self):
        if self.flavor == "independent":
            m = np.asarray(self.matrix)
            return {"flavor": self.flavor, "u_re": _hex(m.real), "u_im": _hex(m.imag)}
        return {"flavor": self.flavor,
                "gates": [{"site": int(s), "u_re": _hex(np.real(m)), "u_im": _hex(np.imag(m))}
                          for s, m in self.gates]}

    @classmethod
    def from_dict(cls, data):
        if data["flavor"] == "independent":
            return cls("independent", _unhex(data["u_re"]) + 1j * _unhex(data["u_im"]))
        return cls("circuit", gates=[(g["site"], _unhex(g["u_re"]) + 1j * _unhex(g["u_im"]))
                                     for g in data["gates"]])


def _hex(a):
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        return [float(x).hex() for x in a]
    return [_hex(row) for row in a]


def _unhex(a):
    return np.array(_unhex_list(a), dtype=float)


def _unhex_list(a):
    if isinstance(a, list):
        return [_unhex_list(x) for x in a]
    return float.fromhex(a)


class HistoryState:
    """``sum_p alpha_p |p>|psi_p>`` with orthogonal product clock labels.

    Parameters
    ----------
    poset : TimePoset
    amplitudes : array_like, shape (len(poset),)
        Ordered like ``poset.elements``; normalised to 1 within ``1e-10``.
    clock_dims : tuple of int
    clock_labels : sequence of digit tuples, one per poset element
    comp_dims : tuple of int
    comp_states : array_like, shape (len(poset), prod(comp_dims))
    n, d : int
        Size of the encoded computation.
    circuit, initial, junk :
        Provenance used to rebuild trajectories from other inputs.
    """

    def __init__(self, poset, amplitudes, clock_dims, clock_labels, comp_dims, comp_states,
                 n, d, circuit=None, initial=None, junk=None, check=True):
        self.poset = poset
        self.amplitudes = np.asarray(amplitudes, dtype=complex)
        self.clock_dims = tuple(int(x) for x in clock_dims)
        self.clock_labels = [tuple(int(x) for x in lab) for lab in clock_labels]
        self.comp_dims = tuple(int(x) for x in comp_dims)
        self.comp_states = np.asarray(comp_states, dtype=complex)
        self.n, self.d = int(n), int(d)
        self.circuit = circuit
        self.initial = None if initial is None else np.asarray(initial, dtype=complex)
        self.junk = dict(junk or {})
        if check:
            self.validate()

    def __repr__(self):
        return (f"HistoryState(labels={len(self.poset)}, clock_dims={self.clock_dims}, "
                f"comp_dims={self.comp_dims})")

    def validate(self):
        size = len(self.poset)
        if self.amplitudes.shape != (size,):
            raise DimensionError(f"expected {size} amplitudes, got shape {self.amplitudes.shape}")
        mass = math.fsum(np.abs(self.amplitudes) ** 2)
        if abs(mass - 1.0) > NORM_TOL:
            raise ValidationError(f"amplitudes are not normalised (sum |alpha|^2 = {mass!r})")
        if len(self.clock_labels) != size:
            raise DimensionError("one clock label per poset element is required")
        for lab in self.clock_labels:
            if len(lab) != len(self.clock_dims) or any(not 0 <= x < c for x, c in zip(lab, self.clock_dims)):
                raise ValidationError(f"clock label {lab} does not fit clock dims {self.clock_dims}")
        if len(set(self.clock_labels)) != size:
            raise ValidationError("clock labels must be pairwise distinct")
        if self.comp_states.shape != (size, self.comp_dim):
            raise DimensionError(f"comp_states must have shape ({size}, {self.comp_dim})")
        norms = np.linalg.norm(self.comp_states, axis=1)
        bad = np.abs(norms - 1.0) > NORM_TOL
        if bad.any():
            p = self.poset.elements[int(np.argmax(bad))]
            raise ValidationError(f"computational state of label {p!r} is not normalised")

    @property
    def clock_dim(self):
        return math.prod(self.clock_dims)

    @property
    def comp_dim(self):
        return math.prod(self.comp_dims)

    @property
    def dims(self):
        """Local dimensions of the joint register, clock factors first."""
        return self.clock_dims + self.comp_dims

    @property
    def dim(self):
        return self.clock_dim * self.comp_dim

    def clock_index(self):
        """Flat clock-register index of each label."""
        return np.array([np.ravel_multi_index(lab, self.clock_dims) for lab in self.clock_labels],
                        dtype=np.int64)

    def to_vector(self):
        out = np.zeros((self.clock_dim, self.comp_dim), dtype=complex)
        idx = self.clock_index()
        np.add.at(out, idx, self.amplitudes[:, None] * self.comp_states)
        return out.reshape(-1)

    def masses(self):
        return np.abs(self.amplitudes) ** 2

    def with_amplitudes(self, amplitudes, check=True):
        return HistoryState(self.poset, amplitudes, self.clock_dims, self.clock_labels, self.comp_dims,
                            self.comp_states, self.n, self.d, self.circuit, self.initial, self.junk,
                            check=check)

    def with_states(self, comp_states, initial=None):
        return HistoryState(self.poset, self.amplitudes, self.clock_dims, self.clock_labels,
                            self.comp_dims, comp_states, self.n, self.d, self.circuit,
                            initial, self.junk)

    def restrict(self, mask):
        """Renormalised restriction to the labels selected by the boolean ``mask``."""
        mask = np.asarray(mask, dtype=bool)
        kept = math.fsum(self.masses()[mask])
        if kept == 0.0:
            raise DegenerateError("restriction keeps no amplitude")
        amps = np.where(mask, self.amplitudes, 0.0) / math.sqrt(kept)
        return self.with_amplitudes(amps)

    def to_dict(self):
        return {
            "poset": self.poset.to_dict(),
            "n": self.n,
            "d": self.d,
            "alpha_re": _hex(self.amplitudes.real),
            "alpha_im": _hex(self.amplitudes.imag),
            "clock_dims": list(self.clock_dims),
            "clock_labels": [list(lab) for lab in self.clock_labels],
            "comp_dims": list(self.comp_dims),
            "psi_re": _hex(self.comp_states.real),
            "psi_im": _hex(self.comp_states.imag),
            "circuit": None if self.circuit is None else self.circuit.to_dict(),
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data):
        poset = TimePoset.from_dict(data["poset"])
        circuit = None if data.get("circuit") is None else Circuit.from_dict(data["circuit"])
        return cls(poset, _unhex(data["alpha_re"]) + 1j * _unhex(data["alpha_im"]),
                   data["clock_dims"], data["clock_labels"], data["comp_dims"],
                   _unhex(data["psi_re"]) + 1j * _unhex(data["psi_im"]),
                   data["n"], data["d"], circuit=circuit)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def uniform_amplitudes(size):
    return np.full(size, 1.0 / math.sqrt(size), dtype=complex)


def trajectory_states(circuit, poset, initial, junk=None, explicit=None):
    """Computational states for every poset label.

    Chain labels follow the circuit; a non-chain label ``p`` gets
    ``V_p psi_{t_p}`` (identity when no junk unitary is given) or, when
    ``t_p`` does not exist, the state supplied in ``explicit``.
    """
    junk = junk or {}
    explicit = explicit or {}
    n, d = circuit.n, circuit.d
    traj = evolve(circuit, initial)
    states = np.empty((len(poset), circuit.register.dim), dtype=complex)
    for i, p in enumerate(poset.elements):
        t = poset.time_of(p)
        if t is not None:
            states[i] = traj[t]
            continue
        tp = poset.t_p(p)
        if tp is None:
            if p not in explicit:
                raise IncompleteSpecificationError(
                    f"label {p!r} has no earlier chain time and no explicit state")
            states[i] = np.asarray(explicit[p], dtype=complex)
            continue
        v = junk.get(p)
        states[i] = traj[tp] if v is None else v.apply(traj[tp], n, d)
    return states


def clock_encoding(poset, clock):
    """Clock dims and labels: one ``|P|``-level qudit, or unary strings ``1^j 0^(|P|-1-j)``."""
    size = len(poset)
    if clock == "register":
        return (size,), [(j,) for j in range(size)]
    if clock == "unary":
        width = size - 1
        return (2,) * width, [(1,) * j + (0,) * (width - j) for j in range(size)]
    raise ValidationError(f"unknown clock {clock!r}; expected 'register' or 'unary'")


def standard_history_state(circuit, amplitudes=None, initial=None, poset=None, junk=None,
                           clock="register", explicit=None):
    """History state of ``circuit``.

    Parameters
    ----------
    circuit : Circuit
    amplitudes : array_like, optional
        One amplitude per poset element; uniform by default.
    initial : array_like, optional
        Initial computational state; ``|0^n>`` by default.
    poset : TimePoset, optional
        Defaults to the chain ``0 < 1 < ... < T``. Its chain must have
        ``T + 1`` elements.
    junk : dict, optional
        Maps non-chain labels to :class:`JunkUnitary`.
    clock : {'register', 'unary'}
        Clock label encoding; with the default chain poset both match the
        layout of :func:`~histgap.hamiltonian.compile_feynman_kitaev`.
    explicit : dict, optional
        States for labels with no earlier chain element.
    """
    poset = TimePoset.chain_only(circuit.T) if poset is None else poset
    if poset.T != circuit.T:
        raise ValidationError(f"poset chain has T={poset.T} but the circuit has T={circuit.T}")
    initial = circuit.register.zero_state() if initial is None else np.asarray(initial, dtype=complex)
    amplitudes = uniform_amplitudes(len(poset)) if amplitudes is None else np.asarray(amplitudes, dtype=complex)
    states = trajectory_states(circuit, poset, initial, junk, explicit)
    clock_dims, labels = clock_encoding(poset, clock)
    return HistoryState(poset, amplitudes, clock_dims, labels, (circuit.d,) * circuit.n, states,
                        circuit.n, circuit.d, circuit=circuit, initial=initial, junk=junk)


def truncation_mask(hs, r):
    """Labels ``p`` with ``t_p >= r + 1``."""
    return hs.poset.t_p_array() >= r + 1


def truncated_states(hs, r, flipped_initial=None):
    """Truncated history states used as low-energy witnesses.

    Returns ``(psi_trunc, phi_trunc, alpha)``: the renormalised restriction
    of ``hs`` to labels with ``t_p >= r + 1``, the same restriction of the
    history state started from ``flipped_initial`` (``|0...01>`` by
    default) through the same gates and junk unitaries, and the discarded
    mass ``alpha``. ``phi_trunc`` is orthogonal to ``hs`` because the two
    initial states are orthogonal and every label sees the same unitary.
    """
    if hs.circuit is None:
        raise IncompleteSpecificationError("truncation needs the circuit that produced the history state")
    r = int(r)
    if not 0 <= r <= hs.poset.T:
        raise ValidationError(f"truncation point r={r} outside 0..{hs.poset.T}")
    mask = truncation_mask(hs, r)
    kept = math.fsum(hs.masses()[mask])
    if kept == 0.0:
        raise DegenerateError(f"all amplitude lies at t_p <= {r}")
    alpha = math.fsum(hs.masses()[~mask])
    psi_trunc = hs.restrict(mask)
    flipped = hs.circuit.register.flipped_state() if flipped_initial is None else np.asarray(flipped_initial, dtype=complex)
    init = hs.initial if hs.initial is not None else hs.circuit.register.zero_state()
    if abs(np.vdot(init, flipped)) > 1e-12:
        raise ValidationError("flipped initial state must be orthogonal to the original initial state")
    # labels outside the kept set may lack a computable state; use placeholders there
    explicit = {p: init for p in hs.poset.elements if hs.poset.t_p(p) is None}
    phi_states = trajectory_states(hs.circuit, hs.poset, flipped, hs.junk, explicit)
    phi_trunc = psi_trunc.with_states(phi_states, initial=flipped)
    return psi_trunc, phi_trunc, alpha


def cut_mask(hs, cut):
    """Labels ``p`` with ``t_p >= cut`` (labels without ``t_p`` are excluded)."""
    return hs.poset.t_p_array() >= int(cut)


def xi_split(hs, x0, r):
    """Split ``hs = sqrt(lam) xi0 + sqrt(1 - lam) xi1`` at the cut ``t_p >= x0 * r``.

    Returns ``(xi0, xi1, lam)`` where ``xi1`` is the renormalised
    restriction to labels at or after the cut and ``lam`` is the mass
    before it.
    """
    upper = cut_mask(hs, int(x0) * int(r))
    masses = hs.masses()
    lam = math.fsum(masses[~upper])
    upper_mass = math.fsum(masses[upper])
    if lam == 0.0 or upper_mass == 0.0:
        raise DegenerateError(f"cut at t = {int(x0) * int(r)} leaves one side empty")
    return hs.restrict(~upper), hs.restrict(upper), lam
