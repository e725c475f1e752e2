"""Ground energies, spectral gaps and low-energy counts.

Small operators are diagonalised densely. Larger ones use a restarted
Lanczos iteration with full reorthogonalisation; further eigenpairs are
found one at a time by deflating the converged vectors.
"""

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ConvergenceError, ValidationError
from .hamiltonian import LocalHamiltonian, SparseOperator, assemble
from .rng import make_rng

DENSE_LIMIT = 4096
DEGENERACY_TOL = 1e-10
RESIDUAL_TOL = 1e-8


@dataclass
class SpectrumResult:
    """Lowest part of a Hermitian spectrum.

    ``gap`` is ``E1 - E0`` with ``E1`` the second eigenvalue counted with
    multiplicity; it is reported as exactly 0 (with ``degenerate=True``)
    when ``E1 - E0 <= 1e-10``. ``level_gap`` is the distance from ``E0`` to
    the next distinct level and ``degeneracy`` the multiplicity of ``E0``;
    both are ``None`` when the computed levels do not reach past the
    ground level.
    """

    E0: float
    gap: float
    ground_vector: np.ndarray
    method: str
    eigenvalues: np.ndarray
    residuals: np.ndarray
    degenerate: bool = False
    degeneracy: int = None
    level_gap: float = None
    shift: float = 0.0
    iterations: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self, include_vector=False):
        out = {
            "E0": self.E0,
            "gap": self.gap,
            "degenerate": self.degenerate,
            "degeneracy": self.degeneracy,
            "level_gap": self.level_gap,
            "method": self.method,
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "residuals": [float(x) for x in self.residuals],
            "shift": self.shift,
            "iterations": self.iterations,
        }
        if include_vector:
            out["ground_vector_re"] = [float(x) for x in self.ground_vector.real]
            out["ground_vector_im"] = [float(x) for x in self.ground_vector.imag]
        return out

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    def to_csv(self, fh=None):
        buf = io.StringIO() if fh is None else fh
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "value", "residual"])
        for i, (v, r) in enumerate(zip(self.eigenvalues, self.residuals)):
            w.writerow([i, repr(float(v)), repr(float(r))])
        if fh is None:
            return buf.getvalue()


def _as_operator(A):
    """Normalise the accepted inputs to a sparse matrix or dense array."""
    if isinstance(A, LocalHamiltonian):
        A = assemble(A)
    if isinstance(A, SparseOperator):
        return A.matrix
    if sp.issparse(A):
        return A.tocsr()
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError(f"operator must be square, got shape {A.shape}")
    return A


def gershgorin_bounds(A):
    """Interval ``[lo, hi]`` containing the spectrum of the Hermitian ``A``."""
    if sp.issparse(A):
        absA = abs(A)
        radius = np.asarray(absA.sum(axis=1)).ravel()
        diag = A.diagonal().real
    else:
        radius = np.abs(A).sum(axis=1)
        diag = np.diag(A).real
    radius = radius - np.abs(diag)
    return float(np.min(diag - radius)), float(np.max(diag + radius))


def _orthogonalize(w, bases):
    # two passes of classical Gram-Schmidt
    for _ in range(2):
        for B in bases:
            if B is not None and B.shape[1]:
                w = w - B @ (B.conj().T @ w)
    return w


def lanczos_lowest(A, locked=None, tol=RESIDUAL_TOL, krylov_dim=80, max_restarts=200,
                   rng=0, shift=0.0):
    """Lowest eigenpair of ``A`` on the orthogonal complement of ``locked``.

    Each cycle builds a Krylov basis of up to ``krylov_dim`` vectors with
    full reorthogonalisation, then restarts from the lowest Ritz vector.

    Returns
    -------
    value, vector, residual, cycles
        ``residual = ||A v - value v||`` is computed explicitly.
    """
    dim = A.shape[0]
    locked = np.zeros((dim, 0), dtype=complex) if locked is None else locked
    free = dim - locked.shape[1]
    if free <= 0:
        raise ValidationError("no directions left after deflation")
    rng = make_rng(rng)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    v = _orthogonalize(v, [locked])
    v /= np.linalg.norm(v)
    m = min(krylov_dim, free)
    scale = max(abs(shift), 1.0)
    best = math.inf
    for cycle in range(1, max_restarts + 1):
        V = np.zeros((dim, m), dtype=complex)
        alpha = np.zeros(m)
        beta = np.zeros(m)
        V[:, 0] = v
        size = m
        for j in range(m):
            w = A @ V[:, j] - shift * V[:, j]
            alpha[j] = np.vdot(V[:, j], w).real
            w = _orthogonalize(w, [locked, V[:, :j + 1]])
            b = np.linalg.norm(w)
            if j + 1 == m:
                break
            if b <= 1e-14 * scale:
                size = j + 1
                break
            beta[j] = b
            V[:, j + 1] = w / b
        tri = np.diag(alpha[:size]) + np.diag(beta[:size - 1], 1) + np.diag(beta[:size - 1], -1)
        theta, S = np.linalg.eigh(tri)
        y = V[:, :size] @ S[:, 0]
        y = _orthogonalize(y, [locked])
        y /= np.linalg.norm(y)
        value = np.vdot(y, A @ y).real
        residual = float(np.linalg.norm(A @ y - value * y))
        best = min(best, residual)
        if residual <= tol:
            return value, y, residual, cycle
        v = y
    raise ConvergenceError(f"Lanczos did not converge in {max_restarts} restarts", residual=best)


def _dense_levels(A, count):
    M = A.toarray() if sp.issparse(A) else np.asarray(A)
    if np.max(np.abs(M - M.conj().T), initial=0.0) > 1e-12:
        raise ValidationError("operator is not Hermitian")
    w, v = np.linalg.eigh(M)
    count = min(count, len(w))
    vecs = v[:, :count]
    res = np.linalg.norm(M @ vecs - vecs * w[:count], axis=0)
    return w, vecs, res


def _summarise(values, vector, residuals, method, shift=0.0, iterations=0, all_values=None):
    values = np.asarray(values, dtype=float)
    E0 = float(values[0])
    E1 = float(values[1]) if len(values) > 1 else math.nan
    raw_gap = E1 - E0
    degenerate = bool(raw_gap <= DEGENERACY_TOL)
    spectrum = values if all_values is None else np.asarray(all_values, dtype=float)
    above = spectrum[spectrum > E0 + DEGENERACY_TOL]
    degeneracy = int(np.sum(spectrum <= E0 + DEGENERACY_TOL)) if len(above) else None
    level_gap = float(above[0] - E0) if len(above) else None
    return SpectrumResult(E0=E0, gap=0.0 if degenerate else float(raw_gap), ground_vector=vector,
                          method=method, eigenvalues=values, residuals=np.asarray(residuals),
                          degenerate=degenerate, degeneracy=degeneracy, level_gap=level_gap,
                          shift=shift, iterations=iterations)


def ground_and_gap(A, method="auto", levels=2, tol=RESIDUAL_TOL, krylov_dim=80, max_restarts=200,
                   seed=0):
    """Ground energy and spectral gap of a Hermitian operator.

    Parameters
    ----------
    A : SparseOperator, LocalHamiltonian, scipy sparse matrix or ndarray
    method : {'auto', 'dense', 'krylov'}
        ``'auto'`` uses dense diagonalisation up to dimension 4096.
    levels : int
        Number of eigenpairs to compute with the Krylov method (at least
        2); raise it to resolve the gap above a degenerate ground level.
    tol : float
        Residual tolerance ``||A v - lambda v||`` for each Krylov eigenpair.
    """
    M = _as_operator(A)
    dim = M.shape[0]
    if method == "auto":
        method = "dense" if dim <= DENSE_LIMIT else "krylov"
    if method == "dense":
        if dim > DENSE_LIMIT:
            raise ValidationError(f"dense method limited to dimension {DENSE_LIMIT}, got {dim}")
        w, vecs, res = _dense_levels(M, max(levels, 2))
        return _summarise(w[:max(levels, 2)], vecs[:, 0], res, "dense", all_values=w)
    if method != "krylov":
        raise ValidationError(f"unknown method {method!r}")
    lo, _hi = gershgorin_bounds(M)
    values, vectors, residuals = [], [], []
    locked = np.zeros((dim, 0), dtype=complex)
    cycles = 0
    for k in range(min(max(levels, 2), dim)):
        val, vec, res, c = lanczos_lowest(M, locked, tol, krylov_dim, max_restarts, rng=seed + k, shift=lo)
        cycles += c
        values.append(val)
        vectors.append(vec)
        residuals.append(res)
        locked = np.column_stack(vectors)
    order = np.argsort(values)
    values = np.array(values)[order]
    residuals = np.array(residuals)[order]
    ground = vectors[int(order[0])]
    return _summarise(values, ground, residuals, "krylov", shift=lo, iterations=cycles)


def energy(v, H):
    """``<v|H|v>`` for a unit vector, by term-wise contraction when ``H`` is local."""
    v = np.asarray(v, dtype=complex)
    nrm = np.linalg.norm(v)
    if abs(nrm - 1.0) > 1e-10:
        raise ValidationError(f"state is not normalised (norm {nrm!r})")
    if isinstance(H, LocalHamiltonian):
        Hv = H.apply(v)
    else:
        Hv = _as_operator(H) @ v
    e = np.vdot(v, Hv)
    if abs(e.imag) > 1e-10:
        raise ValidationError(f"energy has imaginary part {e.imag:.3e}; operator not Hermitian")
    return float(e.real)


def low_energy_dimension(A, threshold, method="auto", cap=64, tol=RESIDUAL_TOL, seed=0):
    """Number of eigenvalues ``<= threshold``.

    Returns ``(count, partial)``. With the Krylov method eigenpairs are
    found by repeated deflation; when ``cap`` of them all lie below the
    threshold the count is a lower bound and ``partial`` is ``True``.
    """
    M = _as_operator(A)
    dim = M.shape[0]
    if method == "auto":
        method = "dense" if dim <= DENSE_LIMIT else "krylov"
    if method == "dense":
        w, _v, _r = _dense_levels(M, 1)
        if threshold < w[0] - 1e-12:
            raise ValidationError(f"threshold {threshold} lies below the ground energy {w[0]}")
        return int(np.sum(w <= threshold)), False
    lo, _hi = gershgorin_bounds(M)
    vectors = []
    locked = np.zeros((dim, 0), dtype=complex)
    count = 0
    for k in range(min(cap, dim)):
        val, vec, _res, _c = lanczos_lowest(M, locked, tol, rng=seed + k, shift=lo)
        if k == 0 and threshold < val - 1e-12:
            raise ValidationError(f"threshold {threshold} lies below the ground energy {val}")
        if val > threshold:
            return count, False
        count += 1
        vectors.append(vec)
        locked = np.column_stack(vectors)
    return count, count < dim
