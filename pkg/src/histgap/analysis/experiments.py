"""Seeded experiment drivers and their reports.

Each experiment is a grid of independent cells. A cell's seed is derived
from the master seed and the cell coordinates, so cells can be run in any
order (or in parallel) and adding cells leaves existing ones unchanged.
Rows are always emitted in sorted cell order.
"""

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

import mpmath
import numpy as np
from scipy import stats

from .. import __version__
from ..errors import ConvergenceError, HistgapError, ValidationError
from ..hamiltonian import DEFAULT_DIM_CAP, assemble, compile_feynman_kitaev, gamma_norm, input_bonus_hamiltonian
from ..history.amplitudes import endpoint_profile, geometric_profile, uniform_profile, zero_window_profile
from ..history.states import standard_history_state, truncated_states, xi_split
from ..qcircuit import QuditRegister, identity_circuit, sample_local_random_circuit
from ..rng import GENERATOR, derive_seed, make_rng
from ..spectral import ground_and_gap, energy
from .bounds import truncation_energy_rhs
from .designs import DesignEnsembleSpec, frame_potential
from .overlap import DEFAULT_GRID, fh_decay_profile, haar_state, local_cross_overlap_max

THREADS_ENV = "HISTGAP_THREADS"

GAP_COLUMNS = [
    "T", "seed_index", "seed", "E0", "gap", "level_gap", "degeneracy", "phi_energy_gap",
    "psi_energy", "phi_psi_overlap", "alpha", "gamma", "variational_pass", "bound_rhs",
    "bound_pass", "method", "max_residual", "error",
]
SPLIT_COLUMNS = [
    "seed_index", "seed", "x0", "r", "lam", "D0", "D1", "cross_re", "psi_energy", "E0",
    "identity_residual", "product_coefficient_residual", "split_lhs", "slice_term", "far_term",
    "split_bound_pass", "witness_count", "witness_target", "error",
]
WITNESS_COLUMNS = ["index", "energy", "excess", "below_threshold"]
FH_COLUMNS = ["seed_index", "seed", "depth", "value", "raw"]
DESIGN_COLUMNS = ["kind", "n", "d", "depth", "samples", "s", "seed", "estimate", "stderr", "haar_value",
                  "relative_error"]


def thread_count(threads=None):
    """Worker count: the argument, else ``$HISTGAP_THREADS``, else 1."""
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1"))
    if threads < 1:
        raise ValidationError(f"thread count must be >= 1, got {threads}")
    return threads


def _run_cells(fn, cells, threads):
    if thread_count(threads) == 1:
        return [fn(c) for c in cells]
    with ThreadPoolExecutor(max_workers=thread_count(threads)) as pool:
        return list(pool.map(fn, cells))


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, mpmath.mpf):
        return mpmath.nstr(x, 30)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def _csv_value(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(_jsonable(v))


@dataclass
class ExperimentReport:
    """Rows and aggregates of one experiment run.

    The JSON form holds the resolved configuration, package version and
    generator name so the run can be repeated bit for bit; the CSV form
    holds one row per cell with the fixed column order ``columns``.
    """

    kind: str
    config: dict
    columns: list
    rows: list
    aggregates: dict = field(default_factory=dict)
    version: str = __version__
    generator: str = GENERATOR
    created: str = None

    def to_dict(self):
        out = {
            "kind": self.kind, "version": self.version, "generator": self.generator,
            "config": self.config, "columns": self.columns, "rows": self.rows,
            "aggregates": self.aggregates,
        }
        if self.created is not None:
            out["created"] = self.created
        return _jsonable(out)

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_csv_value(row.get(c)) for c in self.columns])
        return buf.getvalue()

    def write(self, out_dir, stem, formats=("json", "csv")):
        """Write ``stem.json`` and/or ``stem.csv``; returns the paths written."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = []
        for fmt in formats:
            if fmt == "json":
                text = self.to_json()
            elif fmt == "csv":
                text = self.to_csv()
            else:
                raise ValidationError(f"unknown output format {fmt!r}")
            path = out_dir / f"{stem}.{fmt}"
            path.write_text(text if text.endswith("\n") else text + "\n")
            paths.append(path)
        return paths


def _stamp(deterministic):
    return None if deterministic else datetime.now(timezone.utc).isoformat()


class _Config:
    """Mixin: build from a mapping, rejecting unknown keys."""

    @classmethod
    def from_dict(cls, data):
        names = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ValidationError(f"unknown {cls.__name__} keys: {unknown}")
        return cls(**data)

    def to_dict(self):
        return asdict(self)


def _median(values):
    vals = [v for v in values if v is not None and not (isinstance(v, float) and math.isnan(v))]
    return float(np.median(vals)) if vals else None


def power_law_fit(x, y):
    """Least-squares fit of ``log y = a log x + b``; returns ``(a, r^2)`` or ``(None, None)``."""
    pts = [(a, b) for a, b in zip(x, y) if a is not None and b is not None and a > 0 and b > 0]
    if len(pts) < 2:
        return None, None
    lx, ly = np.log([p[0] for p in pts]), np.log([p[1] for p in pts])
    fit = stats.linregress(lx, ly)
    return float(fit.slope), float(fit.rvalue**2)


# -- gap experiment -----------------------------------------------------------

@dataclass
class GapConfig(_Config):
    """Gap-versus-T experiment.

    ``r`` (truncation point) defaults to ``T // 4`` and ``r1`` to ``r``.
    ``delta`` defaults to ``(1 - alpha) / ((T + 1 + m) T)``; ``rhs_scale``
    multiplies the combined energy bound before the pass/fail comparison.
    """

    n: int = 4
    d: int = 2
    T: list = field(default_factory=lambda: [8, 16, 32, 64])
    seeds: int = 5
    master_seed: int = 0
    r: int = None
    r1: int = None
    circuit: str = "random"
    clock: str = "register"
    rescale: str = "none"
    include_input_penalty: bool = True
    propagation: bool = True
    method: str = "auto"
    delta: float = None
    rhs_scale: float = 1.0
    cap: int = DEFAULT_DIM_CAP

    def __post_init__(self):
        self.T = [int(t) for t in self.T]
        if not self.T or min(self.T) < 1:
            raise ValidationError("T list must be non-empty with T >= 1")
        if self.seeds < 1:
            raise ValidationError("seeds must be >= 1")
        if self.circuit not in ("random", "identity"):
            raise ValidationError(f"unknown circuit kind {self.circuit!r}")


def cell_circuit(kind, n, d, T, seed):
    reg = QuditRegister(n, d)
    if kind == "identity":
        return identity_circuit(reg, T)
    return sample_local_random_circuit(reg, T, seed)


def _gap_cell(cfg, T, j):
    seed = derive_seed(cfg.master_seed, T, j)
    row = {c: None for c in GAP_COLUMNS}
    row.update(T=T, seed_index=j, seed=seed)
    circuit = cell_circuit(cfg.circuit, cfg.n, cfg.d, T, seed)
    H = compile_feynman_kitaev(circuit, clock=cfg.clock, include_input_penalty=cfg.include_input_penalty,
                               rescale=cfg.rescale, propagation=cfg.propagation, cap=cfg.cap)
    A = assemble(H, cfg.cap)
    try:
        res = ground_and_gap(A, method=cfg.method, seed=seed % (2**32))
    except ConvergenceError as exc:
        row.update(error=f"ConvergenceError: {exc}", method=cfg.method)
        return row
    r = T // 4 if cfg.r is None else int(cfg.r)
    r1 = r if cfg.r1 is None else int(cfg.r1)
    hs = standard_history_state(circuit, clock=cfg.clock)
    psi_t, phi_t, alpha = truncated_states(hs, r)
    psi = hs.to_vector()
    phi = phi_t.to_vector()
    e_phi = energy(phi, A)
    e_psi = energy(psi, A)
    gam = gamma_norm(H).gamma
    a = np.abs(hs.amplitudes)
    tp = hs.poset.t_p_array()
    cross = math.fsum(a[(tp >= r + 1) & (tp <= r + r1)]) * math.fsum(a[tp <= r])
    q1, m = len(hs.poset), H.m
    delta = (1 - alpha) / ((q1 + m) * T) if cfg.delta is None else cfg.delta
    rhs7, rhs9 = truncation_energy_rhs(gam, q1, m, cfg.n, cfg.d, delta, alpha, cross)
    rhs = cfg.rhs_scale * (rhs7 + rhs9)
    row.update(
        E0=res.E0, gap=res.gap, level_gap=res.level_gap, degeneracy=res.degeneracy,
        phi_energy_gap=e_phi - res.E0, psi_energy=e_psi,
        phi_psi_overlap=float(abs(np.vdot(phi, psi))), alpha=alpha, gamma=gam,
        variational_pass=bool(res.gap <= e_phi - res.E0 + 1e-9),
        bound_rhs=rhs, bound_pass=bool(abs(e_psi - e_phi) <= rhs),
        method=res.method, max_residual=float(np.max(res.residuals)),
    )
    return row


def gap_experiment(config, threads=None, deterministic=True):
    """Spectral gap, truncated-witness energy and bound check on a (T, seed) grid.

    ``phi_energy_gap`` is the energy of the truncated history state started
    from the flipped input minus the ground energy; it upper-bounds the gap.
    Aggregates hold per-T medians and a log-log fit of the median gap
    against ``T``; for a degenerate ground level the distance to the next
    distinct level is used in the fit.
    """
    cfg = config if isinstance(config, GapConfig) else GapConfig.from_dict(dict(config))
    cells = [(T, j) for T in sorted(set(cfg.T)) for j in range(cfg.seeds)]
    rows = _run_cells(lambda c: _gap_cell(cfg, *c), cells, threads)
    medians = {}
    fit_x, fit_y = [], []
    for T in sorted(set(cfg.T)):
        sub = [r for r in rows if r["T"] == T and r["error"] is None]
        med_gap = _median([r["gap"] for r in sub])
        med_fit = _median([r["level_gap"] if r["degeneracy"] and r["degeneracy"] > 1 else r["gap"] for r in sub])
        medians[str(T)] = {"gap": med_gap, "fit_gap": med_fit,
                           "phi_energy_gap": _median([r["phi_energy_gap"] for r in sub])}
        fit_x.append(T)
        fit_y.append(med_fit)
    slope, r2 = power_law_fit(fit_x, fit_y)
    good = [r for r in rows if r["error"] is None]
    agg = {
        "medians": medians, "fit_exponent": slope, "fit_r2": r2,
        "variational_all": all(r["variational_pass"] for r in good),
        "max_phi_psi_overlap": max((r["phi_psi_overlap"] for r in good), default=None),
        "bound_pass_fraction": (sum(r["bound_pass"] for r in good) / len(good)) if good else None,
        "errors": sum(r["error"] is not None for r in rows),
    }
    return ExperimentReport("gap", cfg.to_dict(), GAP_COLUMNS, rows, agg, created=_stamp(deterministic))


# -- split experiment ---------------------------------------------------------

PROFILES = {
    "uniform": lambda T, **kw: uniform_profile(T),
    "geometric": lambda T, rate=1.0: geometric_profile(T, rate),
    "zero_window": lambda T, start=1, width=1: zero_window_profile(T, start, width),
    "endpoint": lambda T: endpoint_profile(T),
}


def amplitude_profile(T, profile, params=None, rng=None):
    """Amplitudes of length ``T + 1`` from a profile name or an explicit list.

    ``'random'`` draws positive amplitudes uniformly from ``[low, 1]``
    (``low`` defaults to 0.2) with ``rng`` and normalises them.
    """
    if isinstance(profile, str) and profile == "random":
        low = float((params or {}).get("low", 0.2))
        a = make_rng(rng).uniform(low, 1.0, size=T + 1)
        return a / np.linalg.norm(a)
    if isinstance(profile, str):
        if profile not in PROFILES:
            raise ValidationError(f"unknown profile {profile!r}; choose from {sorted(PROFILES) + ['random']}")
        return PROFILES[profile](T, **(params or {}))
    a = np.asarray(profile, dtype=complex)
    if a.shape != (T + 1,):
        raise ValidationError(f"explicit profile needs {T + 1} amplitudes, got {a.shape}")
    return a / np.linalg.norm(a)


def bonus_ground_amplitudes(circuit, cap=DEFAULT_DIM_CAP):
    """Clock amplitudes ``a_t = ||(<t| (x) 1) g||`` of the ground state ``g`` of the input-bonus Hamiltonian.

    The bonus on ``|0>|0^n>`` makes the ground state decay geometrically
    along the clock, so these amplitudes concentrate on the first steps.
    """
    res = ground_and_gap(assemble(input_bonus_hamiltonian(circuit), cap))
    return np.linalg.norm(res.ground_vector.reshape(circuit.T + 1, -1), axis=1)


@dataclass
class SplitConfig(_Config):
    """Energy split of a history state at the cut ``t_p >= x0 r``."""

    n: int = 3
    d: int = 2
    T: int = 16
    r: int = 4
    x0: int = 2
    profile: object = "uniform"
    profile_params: dict = field(default_factory=dict)
    seeds: int = 5
    master_seed: int = 0
    clock: str = "register"
    rescale: str = "none"
    witness_rider: bool = True
    witness_r: int = None
    witness_c: float = None
    cap: int = DEFAULT_DIM_CAP


def label_matrix(hs, H):
    """``G[p, p'] = <p, psi_p| H |p', psi_p'>`` over the labels of ``hs``."""
    size = len(hs.poset)
    vecs = []
    for j in range(size):
        e = np.zeros(size)
        e[j] = 1.0
        vecs.append(hs.with_amplitudes(e, check=False).to_vector())
    V = np.column_stack(vecs)
    HV = np.column_stack([H @ V[:, j] for j in range(size)])
    return V.conj().T @ HV


def split_report(hs, H, x0, r, gamma):
    """Energies of the two halves of ``hs`` and the audit of the split bound."""
    xi0, xi1, lam = xi_split(hs, x0, r)
    v0, v1 = xi0.to_vector(), xi1.to_vector()
    D0, D1 = energy(v0, H), energy(v1, H)
    X = complex(np.vdot(v0, H @ v1))
    psi = hs.to_vector()
    e_psi = energy(psi, H)
    corrected = lam * D0 + (1 - lam) * D1 + 2 * math.sqrt(lam * (1 - lam)) * X.real
    product_variant = lam * D0 + (1 - lam) * D1 + 2 * lam * (1 - lam) * X.real
    G = label_matrix(hs, H)
    a = np.abs(hs.amplitudes)
    tp = hs.poset.t_p_array()
    cut = int(x0) * int(r)
    lower, upper = tp < cut, tp >= cut
    # slices A_x0 and A_{x0+1} on either side of the cut
    left = (tp >= cut - r) & lower
    right = (tp <= cut + r - 1) & upper
    slice_term = 2 * gamma * math.fsum(a[left]) * math.fsum(a[right])
    far = np.abs(np.subtract.outer(tp, tp)) > r
    W = np.outer(a, a) * np.abs(G)
    far_term = 2 * float(np.sum(W[np.ix_(lower, upper)] * far[np.ix_(lower, upper)]))
    lhs = lam * (D0 - e_psi) + (1 - lam) * (D1 - e_psi)
    return {
        "x0": int(x0), "r": int(r), "lam": lam, "D0": D0, "D1": D1, "cross_re": X.real,
        "psi_energy": e_psi,
        "identity_residual": abs(e_psi - corrected),
        "product_coefficient_residual": abs(e_psi - product_variant),
        "split_lhs": lhs, "slice_term": slice_term, "far_term": far_term,
        "split_bound_pass": bool(abs(lhs) <= slice_term + far_term + 1e-10),
    }


def calibrated_witness_constant(T):
    """``(T + 1)^2 (1 - cos(pi / (T + 1)))``: the clock-chain gap times ``(T + 1)^2``, tending to ``pi^2 / 2``."""
    return (T + 1) ** 2 * (1 - math.cos(math.pi / (T + 1)))


def low_energy_witnesses(circuit, r, c=None, max_count=16, H=None, clock="register", rescale="none"):
    """Truncated history states from distinct basis inputs and their energies.

    For each of the first ``min(max_count, d^n)`` computational basis
    inputs the history state of ``circuit`` is restricted to ``t >= r+1``.
    These states are mutually orthogonal; the report counts those with
    energy at most ``E0 + c / T``.
    """
    T, n, d = circuit.T, circuit.n, circuit.d
    H = compile_feynman_kitaev(circuit, clock=clock, rescale=rescale) if H is None else H
    A = assemble(H)
    E0 = ground_and_gap(A).E0
    c = calibrated_witness_constant(T) if c is None else float(c)
    count = min(int(max_count), d**n)
    reg = circuit.register
    vecs, energies = [], []
    for x in range(count):
        digits = np.unravel_index(x, (d,) * n)
        hs = standard_history_state(circuit, initial=reg.basis_state(digits), clock=clock)
        v = hs.restrict(hs.poset.t_p_array() >= r + 1).to_vector()
        vecs.append(v)
        energies.append(energy(v, A))
    V = np.column_stack(vecs)
    gram = V.conj().T @ V
    off = float(np.max(np.abs(gram - np.eye(count)))) if count > 1 else 0.0
    threshold = E0 + c / T
    rows = [{"index": i, "energy": e, "excess": e - E0, "below_threshold": bool(e <= threshold)}
            for i, e in enumerate(energies)]
    return {
        "E0": E0, "c": c, "threshold": threshold, "target": count,
        "count": sum(r_["below_threshold"] for r_ in rows), "max_gram_offdiag": off, "rows": rows,
    }


def _split_cell(cfg, j):
    seed = derive_seed(cfg.master_seed, cfg.T, j)
    row = {c: None for c in SPLIT_COLUMNS}
    row.update(seed_index=j, seed=seed)
    circuit = sample_local_random_circuit(QuditRegister(cfg.n, cfg.d), cfg.T, seed)
    H = compile_feynman_kitaev(circuit, clock=cfg.clock, rescale=cfg.rescale, cap=cfg.cap)
    A = assemble(H, cfg.cap)
    amps = amplitude_profile(cfg.T, cfg.profile, cfg.profile_params, rng=derive_seed(seed, 1))
    hs = standard_history_state(circuit, amplitudes=amps, clock=cfg.clock)
    try:
        row.update(split_report(hs, A, cfg.x0, cfg.r, gamma_norm(H).gamma))
        row["E0"] = ground_and_gap(A, seed=seed % (2**32)).E0
        if cfg.witness_rider:
            wr = cfg.T // 4 if cfg.witness_r is None else cfg.witness_r
            w = low_energy_witnesses(circuit, wr, cfg.witness_c, H=H, clock=cfg.clock)
            row.update(witness_count=w["count"], witness_target=w["target"])
    except HistgapError as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def split_experiment(config, threads=None, deterministic=True):
    """Split identity and bound audit over seeded random circuits."""
    cfg = config if isinstance(config, SplitConfig) else SplitConfig.from_dict(dict(config))
    rows = _run_cells(lambda j: _split_cell(cfg, j), list(range(cfg.seeds)), threads)
    good = [r for r in rows if r["error"] is None]
    agg = {
        "max_identity_residual": max((r["identity_residual"] for r in good), default=None),
        "max_product_coefficient_residual": max((r["product_coefficient_residual"] for r in good), default=None),
        "split_bound_all": all(r["split_bound_pass"] for r in good),
        "witness_min_count": min((r["witness_count"] for r in good if r["witness_count"] is not None),
                                 default=None),
        "errors": len(rows) - len(good),
    }
    return ExperimentReport("split", cfg.to_dict(), SPLIT_COLUMNS, rows, agg, created=_stamp(deterministic))


# -- local indistinguishability -----------------------------------------------

@dataclass
class FHConfig(_Config):
    """Decay of local distinguishability along random-circuit trajectories."""

    n: int = 6
    d: int = 2
    k: int = 1
    depths: list = field(default_factory=lambda: [0, 25, 50, 100, 150, 200])
    seeds: int = 20
    master_seed: int = 0
    grid: int = DEFAULT_GRID
    lag: int = 0
    threshold: float = 0.1
    haar_samples: int = 20


def haar_cross_overlaps(n, d, k, samples, seed, grid=DEFAULT_GRID):
    """``local_cross_overlap_max`` of independent Haar state pairs."""
    rng = make_rng(seed)
    return [local_cross_overlap_max(haar_state(d**n, rng), haar_state(d**n, rng), k, n, d, grid).value
            for _ in range(samples)]


def _fh_cell(cfg, j):
    seed = derive_seed(cfg.master_seed, j)
    depths = sorted(int(t) for t in cfg.depths)
    T = max(max(depths) + cfg.lag, 1)
    circuit = sample_local_random_circuit(QuditRegister(cfg.n, cfg.d), T, seed)
    prof = fh_decay_profile(circuit, cfg.k, depths, lag=cfg.lag, grid_size=cfg.grid)
    return [{"seed_index": j, "seed": seed, "depth": int(t), "value": float(v), "raw": float(w)}
            for t, v, w in zip(prof["depths"], prof["values"], prof["raw"])]


def fh_experiment(config, threads=None, deterministic=True):
    """Median local distinguishability per depth and the independent-Haar reference."""
    cfg = config if isinstance(config, FHConfig) else FHConfig.from_dict(dict(config))
    per_seed = _run_cells(lambda j: _fh_cell(cfg, j), list(range(cfg.seeds)), threads)
    rows = [r for block in per_seed for r in block]
    depths = sorted(set(r["depth"] for r in rows))
    medians = {str(t): _median([r["value"] for r in rows if r["depth"] == t]) for t in depths}
    below = [t for t in depths if medians[str(t)] < cfg.threshold]
    haar = haar_cross_overlaps(cfg.n, cfg.d, cfg.k, cfg.haar_samples,
                               derive_seed(cfg.master_seed, 2**31), cfg.grid) if cfg.haar_samples else []
    agg = {
        "medians": medians, "threshold": cfg.threshold,
        "first_depth_below": below[0] if below else None,
        "haar_cross_median": _median(haar), "haar_cross_values": haar,
        "haar_reference": cfg.d ** (-cfg.n / 2),
    }
    return ExperimentReport("fh", cfg.to_dict(), FH_COLUMNS, rows, agg, created=_stamp(deterministic))


# -- design convergence ---------------------------------------------------------

@dataclass
class DesignConfig(_Config):
    kind: str = "local_random_circuit"
    n: int = 4
    d: int = 2
    depth: int = 500
    samples: int = 2000
    s: int = 2
    seed: int = 0


def design_experiment(config, threads=None, deterministic=True):
    """Frame-potential estimate of one ensemble against its Haar value."""
    cfg = config if isinstance(config, DesignConfig) else DesignConfig.from_dict(dict(config))
    spec = DesignEnsembleSpec(cfg.kind, cfg.n, cfg.d, cfg.depth, cfg.samples, cfg.seed)
    fp = frame_potential(spec, cfg.s)
    row = {**{k: v for k, v in asdict(cfg).items()}, "estimate": fp["estimate"], "stderr": fp["stderr"],
           "haar_value": fp["haar_value"],
           "relative_error": abs(fp["estimate"] - fp["haar_value"]) / fp["haar_value"]}
    agg = {"within_10_percent": bool(row["relative_error"] <= 0.1),
           "within_3_stderr": bool(abs(fp["estimate"] - fp["haar_value"]) <= 3 * fp["stderr"])}
    return ExperimentReport("design", cfg.to_dict(), DESIGN_COLUMNS, [row], agg, created=_stamp(deterministic))
