"""Local Hamiltonians: data model, normalisation checks, Feynman-Kitaev
compilation and sparse assembly.

Qudits of a :class:`LocalHamiltonian` are indexed ``0..m-1`` and include
any clock qudits. Basis ordering is row-major with qudit 0 most significant.
A term's matrix acts on the tensor product of its support qudits taken in
increasing index order.
"""

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import DimensionError, HermiticityError, ResourceError, ValidationError
from .qcircuit import DEFAULT_DIM_CAP

HERMITIAN_TOL = 1e-12


def hermitian_norm(matrix):
    """Spectral norm of a Hermitian matrix.

    Rows and columns are grouped into connected blocks of the nonzero
    pattern, which are diagonalised separately; large clock terms are
    block sparse.
    """
    if matrix.shape[0] <= 64:
        return float(np.max(np.abs(np.linalg.eigvalsh(matrix)), initial=0.0))
    pattern = sp.csr_matrix(np.abs(matrix) > 0)
    count, labels = connected_components(pattern, directed=False)
    sizes = np.bincount(labels, minlength=count)
    single = sizes[labels] == 1
    best = float(np.max(np.abs(np.diagonal(matrix)[single]), initial=0.0))
    for c in np.nonzero(sizes > 1)[0]:
        idx = np.nonzero(labels == c)[0]
        block = matrix[np.ix_(idx, idx)]
        best = max(best, float(np.max(np.abs(np.linalg.eigvalsh(block)))))
    return best


@dataclass(frozen=True, eq=False)
class LocalTerm:
    support: tuple
    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        support = tuple(int(q) for q in self.support)
        if not support:
            raise ValidationError("term support must be non-empty")
        if list(support) != sorted(set(support)):
            raise ValidationError(f"support {support} must be sorted and duplicate-free")
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"term matrix must be square, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "matrix", m)

    @property
    def k(self):
        return len(self.support)

    def hermiticity_defect(self):
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0))

    def norm(self):
        """Operator norm, from Hermitian eigendecompositions of the matrix's decoupled blocks."""
        return hermitian_norm(self.matrix)

    def scaled(self, c):
        return LocalTerm(self.support, self.matrix * c, self.label)


class LocalHamiltonian:
    """A sum of local terms over qudits with local dimensions ``dims``."""

    def __init__(self, dims, terms=()):
        self.dims = tuple(int(x) for x in dims)
        if any(x < 1 for x in self.dims):
            raise ValidationError(f"local dimensions must be positive: {self.dims}")
        self.terms = tuple(terms)
        for j, term in enumerate(self.terms):
            if term.support[-1] >= len(self.dims):
                raise ValidationError(f"term {j}: support {term.support} outside 0..{len(self.dims) - 1}")
            expected = math.prod(self.dims[q] for q in term.support)
            if term.matrix.shape[0] != expected:
                raise DimensionError(f"term {j}: matrix dimension {term.matrix.shape[0]} does not match "
                                     f"support dimension {expected}")

    def __repr__(self):
        return f"LocalHamiltonian(m={self.m}, dim={self.dim}, terms={len(self.terms)})"

    @property
    def m(self):
        return len(self.dims)

    @property
    def dim(self):
        return math.prod(self.dims)

    @property
    def locality(self):
        return max((t.k for t in self.terms), default=0)

    def check_hermitian(self, tol=HERMITIAN_TOL):
        for j, term in enumerate(self.terms):
            dev = term.hermiticity_defect()
            if dev > tol:
                raise HermiticityError(j, dev)

    def with_terms(self, terms):
        return LocalHamiltonian(self.dims, tuple(self.terms) + tuple(terms))

    def scaled(self, c):
        return LocalHamiltonian(self.dims, [t.scaled(c) for t in self.terms])

    def apply(self, vec):
        """Matrix-free ``H @ vec`` by contracting each term on its support."""
        vec = np.asarray(vec, dtype=complex)
        if vec.shape != (self.dim,):
            raise DimensionError(f"vector has shape {vec.shape}, expected ({self.dim},)")
        psi = vec.reshape(self.dims)
        out = np.zeros_like(psi)
        for term in self.terms:
            out += apply_term(term, psi, self.dims)
        return out.reshape(-1)

    def compress(self, configs):
        """Matrix of ``H`` restricted to the span of the given basis configurations.

        ``configs`` is a sequence of digit tuples (one digit per qudit). Works
        without forming vectors of the full space, so it is usable for sectors
        of very large systems.
        """
        configs = [tuple(int(x) for x in c) for c in configs]
        arr = np.array(configs, dtype=np.int64)
        out = np.zeros((len(configs), len(configs)), dtype=complex)
        for term in self.terms:
            supp = list(term.support)
            rest = [q for q in range(self.m) if q not in term.support]
            local = np.ravel_multi_index(arr[:, supp].T, [self.dims[q] for q in supp])
            same = np.all(arr[:, None, rest] == arr[None, :, rest], axis=-1)
            out += np.where(same, term.matrix[local[:, None], local[None, :]], 0.0)
        return out

    def to_dict(self):
        return {
            "dims": list(self.dims),
            "terms": [
                {
                    "support": list(t.support),
                    "label": t.label,
                    "h_re": [[float(x).hex() for x in row] for row in t.matrix.real],
                    "h_im": [[float(x).hex() for x in row] for row in t.matrix.imag],
                }
                for t in self.terms
            ],
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data):
        terms = []
        for t in data["terms"]:
            re = np.array([[float.fromhex(x) for x in row] for row in t["h_re"]], dtype=float)
            im = np.array([[float.fromhex(x) for x in row] for row in t["h_im"]], dtype=float)
            terms.append(LocalTerm(tuple(t["support"]), re + 1j * im, t.get("label", "")))
        return cls(data["dims"], terms)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def apply_term(term, psi, dims):
    """Contract ``term`` into the state tensor ``psi`` (shape ``dims``)."""
    k = term.k
    local = [dims[q] for q in term.support]
    h = term.matrix.reshape(local + local)
    out = np.tensordot(h, psi, axes=(list(range(k, 2 * k)), list(term.support)))
    return np.moveaxis(out, list(range(k)), list(term.support))


def permute_qudits(H, perm):
    """Relabel qudit ``q`` as ``perm[q]``, reordering term tensor factors as needed."""
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(H.m)):
        raise ValidationError(f"{perm} is not a permutation of 0..{H.m - 1}")
    dims = [0] * H.m
    for q, p in enumerate(perm):
        dims[p] = H.dims[q]
    terms = []
    for term in H.terms:
        new = [perm[q] for q in term.support]
        order = np.argsort(new)
        local = [H.dims[q] for q in term.support]
        k = term.k
        h = term.matrix.reshape(local + local)
        h = h.transpose(list(order) + [k + i for i in order])
        size = term.matrix.shape[0]
        terms.append(LocalTerm(tuple(sorted(new)), h.reshape(size, size), term.label))
    return LocalHamiltonian(dims, terms)


# -- normalisation ---------------------------------------------------------

@dataclass
class NormalizationReport:
    """Per-qudit interaction strengths.

    ``per_qudit[q]`` is the sum of operator norms of all terms touching
    qudit ``q``. When ``epsilon`` is set, ``weighted[q]`` carries the same
    sum with each term weighted by ``exp(k**(1 + epsilon))`` and ``gamma``
    is the maximum of the weighted sums; otherwise ``gamma`` is the
    maximum of ``per_qudit``.
    """

    gamma: float
    per_qudit: np.ndarray
    weighted: np.ndarray = None
    epsilon: float = None

    def to_csv(self, fh=None):
        buf = io.StringIO() if fh is None else fh
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["qudit_index", "sum", "weighted_sum"])
        for q, s in enumerate(self.per_qudit):
            ws = "" if self.weighted is None else repr(float(self.weighted[q]))
            w.writerow([q, repr(float(s)), ws])
        if fh is None:
            return buf.getvalue()


def _term_norms(H):
    H.check_hermitian()
    return [t.norm() for t in H.terms]


def gamma_norm(H):
    """Maximum over qudits of the summed operator norms of the terms touching it."""
    norms = _term_norms(H)
    per = np.zeros(H.m)
    for term, nrm in zip(H.terms, norms):
        per[list(term.support)] += nrm
    return NormalizationReport(float(per.max(initial=0.0)), per)


def quasi_local_norm(H, epsilon):
    """Like :func:`gamma_norm` but each term is weighted by ``exp(k**(1+epsilon))``."""
    if not epsilon > 0:
        raise ValidationError(f"epsilon must be positive, got {epsilon}")
    norms = _term_norms(H)
    per = np.zeros(H.m)
    weighted = np.zeros(H.m)
    for term, nrm in zip(H.terms, norms):
        per[list(term.support)] += nrm
        weighted[list(term.support)] += nrm * math.exp(term.k ** (1.0 + epsilon))
    return NormalizationReport(float(weighted.max(initial=0.0)), per, weighted, float(epsilon))


# -- sparse assembly -------------------------------------------------------

@dataclass(eq=False)
class SparseOperator:
    """Hermitian operator assembled in CSR form."""

    dim: int
    matrix: sp.csr_matrix
    dims: tuple = None

    def __matmul__(self, vec):
        return self.matrix @ vec

    def toarray(self):
        return self.matrix.toarray()

    def hermiticity_defect(self):
        diff = self.matrix - self.matrix.conj().T
        return float(abs(diff).max()) if diff.nnz else 0.0


def _strides(dims):
    strides = np.ones(len(dims), dtype=np.int64)
    for q in range(len(dims) - 2, -1, -1):
        strides[q] = strides[q + 1] * dims[q + 1]
    return strides


def assemble(H, cap=DEFAULT_DIM_CAP):
    """Assemble ``sum_Z h_Z (x) 1`` as a sparse Hermitian matrix.

    Terms are inserted in list order, so the result is deterministic.
    """
    dim = H.dim
    if dim > cap:
        raise ResourceError("Hilbert space too large to assemble", required=dim, available=cap)
    H.check_hermitian()
    strides = _strides(H.dims)
    rows, cols, vals = [], [], []
    for term in H.terms:
        supp = list(term.support)
        local = [H.dims[q] for q in supp]
        digits = np.array(np.unravel_index(np.arange(term.matrix.shape[0]), local))
        offset = strides[supp] @ digits
        rest = np.zeros(1, dtype=np.int64)
        for q in range(H.m):
            if q not in term.support:
                rest = (rest[:, None] + np.arange(H.dims[q]) * strides[q]).ravel()
        a, b = np.nonzero(term.matrix)
        rows.append((rest[:, None] + offset[a][None, :]).ravel())
        cols.append((rest[:, None] + offset[b][None, :]).ravel())
        vals.append(np.tile(term.matrix[a, b], rest.size))
    if rows:
        mat = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                            shape=(dim, dim)).tocsr()
    else:
        mat = sp.csr_matrix((dim, dim), dtype=complex)
    mat.sum_duplicates()
    op = SparseOperator(dim, mat, H.dims)
    defect = op.hermiticity_defect()
    if defect > HERMITIAN_TOL:
        raise HermiticityError(-1, defect)
    return op


# -- Feynman-Kitaev compiler -------------------------------------------------

def _proj(dim, idx):
    p = np.zeros((dim, dim), dtype=complex)
    p[idx, idx] = 1.0
    return p


def _ket_bra(dim, i, j):
    p = np.zeros((dim, dim), dtype=complex)
    p[i, j] = 1.0
    return p


def _propagation_matrix(clock_dim, now, before, gate):
    """``1/2 (|now><now| + |before><before|) (x) 1 - 1/2 (|now><before| (x) U + h.c.)``."""
    eye = np.eye(gate.shape[0])
    diag = _proj(clock_dim, now) + _proj(clock_dim, before)
    hop = np.kron(_ket_bra(clock_dim, now, before), gate)
    return 0.5 * np.kron(diag, eye) - 0.5 * (hop + hop.conj().T)


@dataclass(frozen=True)
class FKLayout:
    """Where the clock and computational qudits sit in a compiled Hamiltonian."""

    clock: str
    clock_qudits: tuple
    comp_qudits: tuple
    dims: tuple

    def clock_label(self, t, T):
        """Digits of the clock state encoding time ``t``."""
        if self.clock == "register":
            return (t,)
        return (1,) * t + (0,) * (T - t)


def fk_layout(circuit, clock="register"):
    n, d, T = circuit.n, circuit.d, circuit.T
    if clock == "register":
        return FKLayout(clock, (0,), tuple(range(1, n + 1)), (T + 1,) + (d,) * n)
    if clock == "unary":
        return FKLayout(clock, tuple(range(T)), tuple(range(T, T + n)), (2,) * T + (d,) * n)
    raise ValidationError(f"unknown clock {clock!r}; expected 'register' or 'unary'")


def compile_feynman_kitaev(circuit, clock="register", include_input_penalty=True,
                           witness=None, rescale="none", propagation=True,
                           cap=DEFAULT_DIM_CAP):
    """Compile a circuit into a Feynman-Kitaev history-state Hamiltonian.

    Parameters
    ----------
    circuit : Circuit
    clock : {'register', 'unary'}
        ``'register'`` uses one ``(T+1)``-level clock qudit (qudit 0).
        ``'unary'`` uses ``T`` clock qubits (qudits ``0..T-1``) with time
        ``t`` encoded as ``1^t 0^(T-t)`` plus clock-validity penalties.
        Computational qudits follow the clock qudits.
    include_input_penalty : bool
        Penalise non-``|0>`` inputs at time 0 on every non-witness site.
    witness : sequence of bool, optional
        Mask over computational qudits marking witness (unconstrained) inputs.
    rescale : {'none', 'by_T'}
        ``'by_T'`` divides every term by ``T``.
    propagation : bool
        Emit the propagation terms (disable only for diagnostics).
    cap : int
        Refuse to build systems whose total dimension exceeds this.

    Returns
    -------
    LocalHamiltonian
        Frustration-free; with input penalties on all sites its unique
        ground state is the uniform history state with energy 0.
    """
    n, d, T = circuit.n, circuit.d, circuit.T
    layout = fk_layout(circuit, clock)
    total = math.prod(layout.dims)
    if total > cap:
        raise ResourceError("compiled Hamiltonian exceeds the memory budget", required=total, available=cap)
    if rescale not in ("none", "by_T"):
        raise ValidationError(f"unknown rescale {rescale!r}")
    witness = [False] * n if witness is None else [bool(w) for w in witness]
    if len(witness) != n:
        raise ValidationError(f"witness mask has length {len(witness)}, expected {n}")
    if include_input_penalty and all(witness):
        warnings.warn("every site is a witness: the input is unconstrained", stacklevel=2)

    comp = layout.comp_qudits
    terms = []
    if propagation:
        for g in circuit.gates:
            s = comp[g.site - 1], comp[g.site]
            if clock == "register":
                mat = _propagation_matrix(T + 1, g.t, g.t - 1, g.matrix)
                terms.append(LocalTerm((0,) + s, mat, f"prop[{g.t}]"))
                continue
            t = g.t
            if T == 1:
                cq, now, before, cdim = (0,), 1, 0, 2
            elif t == 1:
                cq, now, before, cdim = (0, 1), 0b10, 0b00, 4
            elif t == T:
                cq, now, before, cdim = (T - 2, T - 1), 0b11, 0b10, 4
            else:
                cq, now, before, cdim = (t - 2, t - 1, t), 0b110, 0b100, 8
            mat = _propagation_matrix(cdim, now, before, g.matrix)
            terms.append(LocalTerm(cq + s, mat, f"prop[{t}]"))
    if clock == "unary":
        illegal = _proj(4, 0b01)
        for t in range(T - 1):
            terms.append(LocalTerm((t, t + 1), illegal, f"clock[{t + 1},{t + 2}]"))
    if include_input_penalty and T >= 0:
        not_zero = np.eye(d) - _proj(d, 0)
        if clock == "register":
            c0, cdim, zero = 0, T + 1, 0
        else:
            c0, cdim, zero = 0, 2, 0
        for j in range(n):
            if witness[j]:
                continue
            if clock == "unary" and T == 0:
                terms.append(LocalTerm((comp[j],), not_zero, f"input[{j + 1}]"))
                continue
            mat = np.kron(_proj(cdim, zero), not_zero)
            terms.append(LocalTerm((c0, comp[j]), mat, f"input[{j + 1}]"))
    H = LocalHamiltonian(layout.dims, terms)
    if rescale == "by_T" and T > 0:
        H = H.scaled(1.0 / T)
    return H


# -- counterexample fixtures -------------------------------------------------

def duplicated_terms(H, copies):
    """Every term repeated ``copies`` times: the spectrum (and gap) scales by ``copies``."""
    return LocalHamiltonian(H.dims, [t for t in H.terms for _ in range(int(copies))])


def ancilla_amplified(H, copies):
    """``sum_Z sum_i h_Z (x) |0><0|_{a_i}`` on ``copies`` extra ancilla qubits.

    Each copy acts on a different ancilla, so no two terms share a support,
    yet the block with all ancillas in ``|0>`` is ``copies * H``.
    """
    m = H.m
    dims = H.dims + (2,) * int(copies)
    p0 = _proj(2, 0)
    terms = []
    for term in H.terms:
        for i in range(int(copies)):
            terms.append(LocalTerm(term.support + (m + i,), np.kron(term.matrix, p0), term.label))
    return LocalHamiltonian(dims, terms)


def hypercube_clock_hamiltonian(log2_T):
    """Random walk on the ``log2_T``-dimensional hypercube with a one-hot clock.

    Vertex ``v`` of the hypercube is the clock state with only qubit ``v``
    excited. Each edge contributes the hopping term
    ``1/2 (|10><10| + |01><01| - |10><01| - |01><10|)`` on its two endpoint
    qubits, so every clock qubit is touched by ``log2_T`` unit-norm terms.
    Restricted to the one-hot sector the operator is half the graph
    Laplacian, whose gap is 1 for every dimension.
    """
    k = int(log2_T)
    T = 2**k
    hop = np.zeros((4, 4), dtype=complex)
    hop[1, 1] = hop[2, 2] = 0.5
    hop[1, 2] = hop[2, 1] = -0.5
    terms = []
    for v in range(T):
        for b in range(k):
            w = v ^ (1 << b)
            if v < w:
                terms.append(LocalTerm((v, w), hop, f"edge[{v},{w}]"))
    return LocalHamiltonian((2,) * T, terms)


def one_hot_configs(size):
    """Basis configurations of ``size`` qubits with exactly one excitation."""
    configs = []
    for v in range(size):
        c = [0] * size
        c[v] = 1
        configs.append(tuple(c))
    return configs


def input_bonus_hamiltonian(circuit):
    """Register-clock Kitaev Hamiltonian with an energy bonus on the input.

    ``H = H_FK - |0><0|_clock (x) |0^n><0^n|``. The bonus term acts on the
    clock and all computational qudits. Its ground state is a history state
    whose amplitudes decay geometrically (ratio 1/3) along the clock, and
    its gap stays bounded away from zero as ``T`` grows.
    """
    H = compile_feynman_kitaev(circuit, clock="register")
    T, n, d = circuit.T, circuit.n, circuit.d
    bonus = -np.kron(_proj(T + 1, 0), _proj(d**n, 0))
    return H.with_terms([LocalTerm(tuple(range(n + 1)), bonus, "bonus")])


def initial_projector_hamiltonian(circuit):
    """``1 - |0><0|_clock (x) |0^n><0^n|``: gapped, with a trivial ground state."""
    T, n, d = circuit.T, circuit.n, circuit.d
    dim = (T + 1) * d**n
    mat = np.eye(dim) - np.kron(_proj(T + 1, 0), _proj(d**n, 0))
    return LocalHamiltonian((T + 1,) + (d,) * n, [LocalTerm(tuple(range(n + 1)), mat, "projector")])
