"""Generalised history states on sector-structured sites and their reduction
to standard history states.

Each site ``i`` carries a Hilbert space that is a direct sum of sectors,
one per symbol of its alphabet. A label ``p`` assigns one symbol to every
site; the ``n`` computational qudits live on the sites listed in
``active[p]`` (whose sectors are ``C^d``) and every other site sits in a
one-dimensional sector. Sites are 0-based here; the basis of a site lists
the sectors in alphabet order.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ..errors import DimensionError, ResourceError, StructureError, ValidationError
from ..hamiltonian import DEFAULT_DIM_CAP, LocalHamiltonian, LocalTerm, assemble
from ..qcircuit import QuditRegister, sample_local_random_circuit
from ..rng import make_rng
from .poset import TimePoset
from .states import (NORM_TOL, HistoryState, JunkUnitary, trajectory_states,
                     uniform_amplitudes)


@dataclass(frozen=True)
class SiteSectors:
    """Alphabet of one site and the dimension of each symbol's sector."""

    symbols: tuple
    dims: tuple

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(self.symbols))
        object.__setattr__(self, "dims", tuple(int(x) for x in self.dims))
        if len(self.symbols) != len(self.dims) or not self.symbols:
            raise StructureError("each site needs a non-empty alphabet with one dimension per symbol")
        if len(set(self.symbols)) != len(self.symbols):
            raise StructureError(f"repeated symbol in alphabet {self.symbols}")
        if any(x < 1 for x in self.dims):
            raise StructureError("sector dimensions must be positive")

    @property
    def dim(self):
        return sum(self.dims)

    def offset(self, symbol):
        j = self.symbols.index(symbol)
        return sum(self.dims[:j])

    def dim_of(self, symbol):
        return self.dims[self.symbols.index(symbol)]

    def extended(self, symbol, dim):
        return SiteSectors(self.symbols + (symbol,), self.dims + (int(dim),))


class GeneralizedHistoryState:
    """``sum_p alpha_p |psi_{x(p)}>`` on ``H = (x)_i (+)_{x in Sigma_i} H_x``.

    Parameters
    ----------
    sites : sequence of SiteSectors
    poset : TimePoset
    assignments : sequence of tuples
        ``assignments[j]`` is the symbol string ``x(p)`` of the ``j``-th
        poset element (one symbol per site).
    active : sequence of tuples
        ``active[j][q]`` is the site carrying computational qudit ``q``.
    comp_states : array, shape (len(poset), d**n)
    amplitudes : array, shape (len(poset),)
    n, d : int
    circuit, junk :
        Provenance.
    """

    def __init__(self, sites, poset, assignments, active, comp_states, amplitudes, n, d,
                 circuit=None, junk=None, name=""):
        self.sites = tuple(sites)
        self.poset = poset
        self.assignments = [tuple(x) for x in assignments]
        self.active = [tuple(int(s) for s in a) for a in active]
        self.comp_states = np.asarray(comp_states, dtype=complex)
        self.amplitudes = np.asarray(amplitudes, dtype=complex)
        self.n, self.d = int(n), int(d)
        self.circuit = circuit
        self.junk = dict(junk or {})
        self.name = name
        self.validate()

    def __repr__(self):
        return f"GeneralizedHistoryState({self.name or 'custom'}, N={self.N}, dim={self.dim})"

    @property
    def N(self):
        return len(self.sites)

    @property
    def site_dims(self):
        return tuple(s.dim for s in self.sites)

    @property
    def dim(self):
        return math.prod(self.site_dims)

    def validate(self):
        size = len(self.poset)
        if len(self.assignments) != size or len(self.active) != size:
            raise DimensionError("one assignment and one active-site tuple per label are required")
        if len(set(self.assignments)) != size:
            raise StructureError("symbol strings x(p) must be pairwise distinct")
        if self.amplitudes.shape != (size,):
            raise DimensionError("one amplitude per label is required")
        if abs(math.fsum(np.abs(self.amplitudes) ** 2) - 1.0) > NORM_TOL:
            raise ValidationError("amplitudes are not normalised")
        if self.comp_states.shape != (size, self.d**self.n):
            raise DimensionError(f"comp_states must have shape ({size}, {self.d**self.n})")
        for p, x, act in zip(self.poset.elements, self.assignments, self.active):
            if len(x) != self.N:
                raise DimensionError(f"label {p!r}: symbol string has length {len(x)}, expected {self.N}")
            if len(act) != self.n or len(set(act)) != self.n:
                raise StructureError(f"label {p!r}: need {self.n} distinct active sites, got {act}")
            for i, (site, sym) in enumerate(zip(self.sites, x)):
                if sym not in site.symbols:
                    raise StructureError(f"label {p!r}: symbol {sym!r} not in the alphabet of site {i}")
                want = self.d if i in act else 1
                if site.dim_of(sym) != want:
                    kind = "active" if i in act else "inactive"
                    raise StructureError(f"label {p!r}: {kind} site {i} holds symbol {sym!r} "
                                         f"of dimension {site.dim_of(sym)}, expected {want}")

    def active_symbols(self):
        """``Xi_i``: symbols that carry a computational qudit at site ``i`` for some label."""
        xi = [set() for _ in self.sites]
        for x, act in zip(self.assignments, self.active):
            for i in act:
                xi[i].add(x[i])
        return [tuple(s for s in site.symbols if s in xi[i]) for i, site in enumerate(self.sites)]

    def used_symbols(self):
        used = [set() for _ in self.sites]
        for x in self.assignments:
            for i, sym in enumerate(x):
                used[i].add(sym)
        return [tuple(s for s in site.symbols if s in used[i]) for i, site in enumerate(self.sites)]

    def label_vector(self, j):
        """Embedding of ``|psi_{x(p_j)}>`` (unit norm, no amplitude) into the full space."""
        x, act = self.assignments[j], self.active[j]
        out = np.zeros(self.site_dims, dtype=complex)
        order = sorted(range(self.n), key=lambda q: act[q])
        psi = self.comp_states[j].reshape((self.d,) * self.n).transpose(order)
        index = []
        for i, (site, sym) in enumerate(zip(self.sites, x)):
            off = site.offset(sym)
            index.append(slice(off, off + self.d) if i in act else off)
        out[tuple(index)] = psi
        return out.reshape(-1)

    def to_vector(self):
        vec = np.zeros(self.dim, dtype=complex)
        for j, a in enumerate(self.amplitudes):
            if a != 0:
                vec += a * self.label_vector(j)
        return vec

    def with_unused_symbol(self, site, symbol, dim):
        sites = list(self.sites)
        sites[site] = sites[site].extended(symbol, dim)
        return GeneralizedHistoryState(sites, self.poset, self.assignments, self.active,
                                       self.comp_states, self.amplitudes, self.n, self.d,
                                       self.circuit, self.junk, self.name)


# -- shape fixtures ----------------------------------------------------------

def _chain_states(circuit, poset, junk=None):
    return trajectory_states(circuit, poset, circuit.register.zero_state(), junk)


def _amps(amplitudes, size):
    return uniform_amplitudes(size) if amplitudes is None else np.asarray(amplitudes, dtype=complex)


def tdim_clock_shape(circuit, amplitudes=None):
    """Computational sites ``0..n-1`` with one ``C^d`` sector, then one clock site
    whose ``T+1`` symbols are one-dimensional."""
    n, d, T = circuit.n, circuit.d, circuit.T
    poset = TimePoset.chain_only(T)
    sites = [SiteSectors(("q",), (d,))] * n + [SiteSectors(tuple(range(T + 1)), (1,) * (T + 1))]
    assignments = [("q",) * n + (t,) for t in range(T + 1)]
    active = [tuple(range(n))] * (T + 1)
    return GeneralizedHistoryState(sites, poset, assignments, active, _chain_states(circuit, poset),
                                   _amps(amplitudes, T + 1), n, d, circuit, name="tdim_clock")


def unary_clock_shape(circuit, amplitudes=None):
    """Computational sites ``0..n-1``, then ``T`` clock qubits holding ``1^t 0^(T-t)``."""
    n, d, T = circuit.n, circuit.d, circuit.T
    poset = TimePoset.chain_only(T)
    bit = SiteSectors((0, 1), (1, 1))
    sites = [SiteSectors(("q",), (d,))] * n + [bit] * T
    assignments = [("q",) * n + (1,) * t + (0,) * (T - t) for t in range(T + 1)]
    active = [tuple(range(n))] * (T + 1)
    return GeneralizedHistoryState(sites, poset, assignments, active, _chain_states(circuit, poset),
                                   _amps(amplitudes, T + 1), n, d, circuit, name="unary_clock")


def location_encoded_shape(circuit, amplitudes=None):
    """Time encoded in the position of the computational window on a chain.

    ``N = n + T`` sites with alphabet ``{L, A, R}``; ``A`` is ``C^d`` and the
    others are one-dimensional. At time ``t`` qudit ``q`` sits on site
    ``t + q``, sites to the left hold ``L`` and sites to the right ``R``.
    """
    n, d, T = circuit.n, circuit.d, circuit.T
    poset = TimePoset.chain_only(T)
    N = n + T
    site = SiteSectors(("L", "A", "R"), (1, d, 1))
    assignments, active = [], []
    for t in range(T + 1):
        assignments.append(("L",) * t + ("A",) * n + ("R",) * (N - n - t))
        active.append(tuple(range(t, t + n)))
    return GeneralizedHistoryState([site] * N, poset, assignments, active,
                                   _chain_states(circuit, poset), _amps(amplitudes, T + 1), n, d,
                                   circuit, name="location_encoded")


def gate_downsets(circuit):
    """Downward-closed gate sets under the order "earlier gate sharing a qudit".

    Returned as sorted tuples of 0-based gate positions.
    """
    T = circuit.T
    touches = [{g.site - 1, g.site} for g in circuit.gates]
    preds = [frozenset(j for j in range(t) if touches[j] & touches[t]) for t in range(T)]
    found = {frozenset()}
    frontier = [frozenset()]
    while frontier:
        nxt = []
        for D in frontier:
            for t in range(T):
                if t not in D and preds[t] <= D:
                    E = D | {t}
                    if E not in found:
                        found.add(E)
                        nxt.append(E)
        frontier = nxt
    return sorted((tuple(sorted(D)) for D in found), key=lambda D: (len(D), D))


def spacetime_shape(circuit, amplitudes=None, max_labels=4096):
    """Every qudit carries its own clock; labels are valid time configurations.

    ``N = 2n`` interleaved sites: site ``2q`` holds qudit ``q`` (one ``C^d``
    sector) and site ``2q + 1`` counts the gates already applied to qudit
    ``q``. Labels are the downsets of the gate order ordered by inclusion;
    the chain consists of the circuit prefixes. A non-chain label applies
    the extra gates of its downset as a junk circuit.
    """
    n, d, T = circuit.n, circuit.d, circuit.T
    downsets = gate_downsets(circuit)
    if len(downsets) > max_labels:
        raise ResourceError("too many time configurations", required=len(downsets), available=max_labels)
    prefixes = [tuple(range(t)) for t in range(T + 1)]
    relations = [(a, b) for a in downsets for b in downsets
                 if len(b) == len(a) + 1 and set(a) <= set(b)]
    poset = TimePoset(downsets, relations, prefixes)
    counts = [0] * n
    for g in circuit.gates:
        counts[g.site - 1] += 1
        counts[g.site] += 1
    sites = []
    for q in range(n):
        sites.append(SiteSectors(("q",), (d,)))
        sites.append(SiteSectors(tuple(range(counts[q] + 1)), (1,) * (counts[q] + 1)))
    junk, assignments = {}, []
    for D in downsets:
        local = [0] * n
        for t in D:
            s = circuit.gates[t].site
            local[s - 1] += 1
            local[s] += 1
        x = []
        for q in range(n):
            x += ["q", local[q]]
        assignments.append(tuple(x))
        if not poset.in_chain(D):
            tp = poset.t_p(D)
            extra = [t for t in D if t >= tp]
            junk[D] = JunkUnitary("circuit", gates=[(circuit.gates[t].site, circuit.gates[t].matrix)
                                                    for t in extra])
    active = [tuple(range(0, 2 * n, 2))] * len(downsets)
    states = _chain_states(circuit, poset, junk)
    return GeneralizedHistoryState(sites, poset, assignments, active, states,
                                   _amps(amplitudes, len(downsets)), n, d, circuit, junk,
                                   name="spacetime")


SHAPES = {
    "tdim_clock": tdim_clock_shape,
    "unary_clock": unary_clock_shape,
    "location_encoded": location_encoded_shape,
    "spacetime": spacetime_shape,
}


# -- random instances --------------------------------------------------------

def annihilating_term(vec, dims, support, rng, rank=None):
    """Random PSD term of unit norm on ``support`` that annihilates ``vec``.

    The term lives on the kernel of the reduced density matrix of ``vec``
    on ``support``, so ``vec`` stays a zero-energy eigenvector.
    """
    support = tuple(sorted(support))
    local = math.prod(dims[q] for q in support)
    psi = np.moveaxis(vec.reshape(dims), support, range(len(support))).reshape(local, -1)
    rho = psi @ psi.conj().T
    w, v = np.linalg.eigh(rho)
    kernel = v[:, w <= 1e-10 * max(w.max(), 1.0)]
    if kernel.shape[1] == 0:
        return None
    rank = kernel.shape[1] if rank is None else min(rank, kernel.shape[1])
    g = rng.standard_normal((kernel.shape[1], rank)) + 1j * rng.standard_normal((kernel.shape[1], rank))
    h = kernel @ (g @ g.conj().T) @ kernel.conj().T
    h = 0.5 * (h + h.conj().T)
    h /= np.max(np.linalg.eigvalsh(h))
    return LocalTerm(support, h, "annihilating")


def frustration_free_hamiltonian(gen, rng, k=3, extra_terms=None):
    """Random ``k``-local Hamiltonian (w.r.t. sites) with ``gen`` as a zero-energy ground state.

    One annihilating term is placed on every set of exactly ``k`` sites
    (or ``N`` sites when ``N < k``), followed by ``extra_terms`` terms on
    random smaller supports.
    """
    rng = make_rng(rng)
    vec = gen.to_vector()
    dims = gen.site_dims
    N = gen.N
    width = min(k, N)
    terms = []
    for support in itertools.combinations(range(N), width):
        t = annihilating_term(vec, dims, support, rng)
        if t is not None:
            terms.append(t)
    extra_terms = N if extra_terms is None else extra_terms
    for _ in range(extra_terms):
        size = int(rng.integers(1, width + 1))
        support = tuple(sorted(rng.choice(N, size=size, replace=False).tolist()))
        t = annihilating_term(vec, dims, support, rng)
        if t is not None:
            terms.append(t)
    return LocalHamiltonian(dims, terms)


def random_generalized_instance(rng, max_dim=1024, k=3):
    """Random (state, Hamiltonian) pair for testing the reduction.

    Picks one of the four shapes with a small random circuit, random
    positive amplitudes and a few unused symbols (some one-dimensional,
    some ``C^d``), then builds a frustration-free ``k``-local Hamiltonian
    with the state as ground state.
    """
    rng = make_rng(rng)
    names = sorted(SHAPES)
    for _ in range(100):
        name = names[int(rng.integers(len(names)))]
        n = int(rng.integers(2, 4))
        T = int(rng.integers(1, 5))
        circuit = sample_local_random_circuit(QuditRegister(n, 2), T, rng)
        try:
            gen = SHAPES[name](circuit)
        except ResourceError:
            continue
        amps = rng.uniform(0.2, 1.0, size=len(gen.poset))
        gen = GeneralizedHistoryState(gen.sites, gen.poset, gen.assignments, gen.active,
                                      gen.comp_states, amps / np.linalg.norm(amps), n, 2,
                                      circuit, gen.junk, gen.name)
        for _extra in range(int(rng.integers(0, 3))):
            site = int(rng.integers(gen.N))
            dim = 1 if rng.random() < 0.5 else gen.d
            gen = gen.with_unused_symbol(site, f"u{_extra}", dim)
        if gen.dim > max_dim:
            continue
        return gen, frustration_free_hamiltonian(gen, rng, k=k)
    raise ResourceError("could not draw an instance within the dimension budget", available=max_dim)


# -- reduction to a standard history state -----------------------------------

@dataclass
class ReductionMap:
    """Per-site isometries from the reduced factors into the original sites.

    The reduced space has ``2N`` factors: clock factors ``0..N-1`` of
    dimension ``clock_dims[i]`` (number of symbols used at site ``i``) and
    data factors ``N..2N-1`` of dimension ``data_dims[i]`` (``d`` when the
    site ever carries a qudit, else 1).
    """

    site_dims: tuple
    clock_dims: tuple
    data_dims: tuple
    isometries: list

    @property
    def dims(self):
        return self.clock_dims + self.data_dims

    def embed(self, vec):
        """Map a reduced-space vector into the original space."""
        N = len(self.site_dims)
        t = np.asarray(vec, dtype=complex).reshape(self.dims)
        order = [x for i in range(N) for x in (i, N + i)]
        t = t.transpose(order)
        for i, W in enumerate(self.isometries):
            shape = t.shape
            t = t.reshape(shape[:i] + (shape[i] * shape[i + 1],) + shape[i + 2:])
            t = np.moveaxis(np.tensordot(W, t, axes=([1], [i])), 0, i)
        return t.reshape(-1)


def _site_isometry(site, used, xi, data_dim):
    W = np.zeros((site.dim, len(used) * data_dim), dtype=complex)
    for a, sym in enumerate(used):
        off = site.offset(sym)
        if sym in xi:
            for j in range(data_dim):
                W[off + j, a * data_dim + j] = 1.0
        else:
            W[off, a * data_dim] = 1.0
    return W


def _sorted_term(factors, local_dims, matrix, label):
    """Reorder a term's tensor factors into increasing factor index and drop
    one-dimensional factors. Returns ``None`` for a scalar."""
    keep = [j for j, dim in enumerate(local_dims) if dim > 1]
    if not keep:
        return None
    factors = [factors[j] for j in keep]
    dims = [local_dims[j] for j in keep]
    size = math.prod(dims)
    order = list(np.argsort(factors))
    k = len(factors)
    h = matrix.reshape(dims + dims).transpose(order + [k + j for j in order])
    return LocalTerm(tuple(sorted(factors)), h.reshape(size, size), label)


def reduce_to_standard(gen, H):
    """Reduce a generalised history state and its Hamiltonian to standard form.

    Each site ``i`` is replaced by a clock factor spanned by the symbols
    used at that site and a data factor ``C^d`` (or ``C`` when the site never
    carries a qudit). Every term ``h`` becomes ``W^H h W`` for the product
    isometry ``W`` into the original sites, acting on at most twice as many
    factors. Where a used one-dimensional symbol shares a site with data, a
    one-site penalty ``lam * |x><x| (x) (1 - |0><0|)`` with
    ``lam = 2 * sum ||h_j|| + 1`` lifts the directions that have no
    counterpart in the original space.

    Returns
    -------
    H_reduced : LocalHamiltonian
        On ``2N`` factors, clock factors first.
    psi_reduced : HistoryState
        ``sum_p alpha_p |p>|psi_p>`` with product clock labels.
    reduction : ReductionMap
    """
    if tuple(H.dims) != gen.site_dims:
        raise DimensionError(f"Hamiltonian dims {H.dims} do not match site dims {gen.site_dims}")
    H.check_hermitian()
    N, d = gen.N, gen.d
    used = gen.used_symbols()
    xi = gen.active_symbols()
    for i, site in enumerate(gen.sites):
        for sym in used[i]:
            if sym not in xi[i] and site.dim_of(sym) > 1:
                raise StructureError(f"site {i}: symbol {sym!r} of dimension {site.dim_of(sym)} "
                                     f"appears but never carries a qudit")
    clock_dims = tuple(len(u) for u in used)
    data_dims = tuple(d if xi[i] else 1 for i in range(N))
    isos = [_site_isometry(site, used[i], xi[i], data_dims[i]) for i, site in enumerate(gen.sites)]
    red = ReductionMap(gen.site_dims, clock_dims, data_dims, isos)

    terms = []
    scalar = 0.0
    for term in H.terms:
        W = np.ones((1, 1), dtype=complex)
        factors, local = [], []
        for i in term.support:
            W = np.kron(W, isos[i])
            factors += [i, N + i]
            local += [clock_dims[i], data_dims[i]]
        h = W.conj().T @ term.matrix @ W
        t = _sorted_term(factors, local, h, term.label)
        if t is None:
            scalar += float(np.real(h[0, 0]))
        else:
            terms.append(t)
    lam = 2.0 * sum(t.norm() for t in H.terms) + 1.0
    for i in range(N):
        if data_dims[i] == 1:
            continue
        extra = [a for a, sym in enumerate(used[i]) if sym not in xi[i]]
        if not extra:
            continue
        clock_proj = np.zeros((clock_dims[i], clock_dims[i]))
        clock_proj[extra, extra] = 1.0
        not_zero = np.eye(d)
        not_zero[0, 0] = 0.0
        mat = lam * np.kron(clock_proj, not_zero)
        t = _sorted_term([i, N + i], [clock_dims[i], d], mat, f"lift[{i}]")
        terms.append(t)
    if scalar != 0.0:
        anchor = next((f for f, dim in enumerate(red.dims) if dim > 1), None)
        if anchor is None:
            raise StructureError("reduced space is one-dimensional")
        terms.append(LocalTerm((anchor,), scalar * np.eye(red.dims[anchor]), "constant"))
    H_red = LocalHamiltonian(red.dims, terms)

    labels = [tuple(used[i].index(x[i]) for i in range(N)) for x in gen.assignments]
    states = np.empty((len(gen.poset), math.prod(data_dims)), dtype=complex)
    for j, act in enumerate(gen.active):
        tensor = np.zeros(data_dims, dtype=complex)
        order = sorted(range(gen.n), key=lambda q: act[q])
        psi = gen.comp_states[j].reshape((d,) * gen.n).transpose(order)
        index = tuple(slice(None) if i in act else 0 for i in range(N))
        tensor[index] = psi
        states[j] = tensor.reshape(-1)
    psi_red = HistoryState(gen.poset, gen.amplitudes, clock_dims, labels, data_dims, states,
                           gen.n, d, circuit=gen.circuit, junk=gen.junk)
    return H_red, psi_red, red


def _raw_gap(H, cap):
    from ..spectral import ground_and_gap
    res = ground_and_gap(assemble(H, cap), levels=2)
    return float(res.eigenvalues[0]), float(res.eigenvalues[1] - res.eigenvalues[0])


def reduction_report(gen, H, cap=DEFAULT_DIM_CAP):
    """Compare the spectra of ``H`` and its reduction.

    Returns a dict with the ground energies and gaps (second eigenvalue
    minus the first, with multiplicity) of both Hamiltonians, the
    localities, the energy of the reduced state and the distance between
    the embedded reduced state and the original state.
    """
    H_red, psi_red, red = reduce_to_standard(gen, H)
    E0, gap = _raw_gap(H, cap)
    E0_red, gap_red = _raw_gap(H_red, cap)
    v = psi_red.to_vector()
    return {
        "shape": gen.name, "N": gen.N, "dim": gen.dim, "reduced_dim": H_red.dim,
        "E0": E0, "gap": gap, "reduced_E0": E0_red, "reduced_gap": gap_red,
        "locality": H.locality, "reduced_locality": H_red.locality,
        "gap_inequality_pass": bool(gap <= gap_red + 1e-10),
        "locality_pass": bool(H_red.locality <= 2 * H.locality),
        "reduced_state_energy": float(np.vdot(v, H_red.apply(v)).real),
        "embedding_error": float(np.linalg.norm(red.embed(v) - gen.to_vector())),
    }
