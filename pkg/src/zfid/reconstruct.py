"""Recover a full transition (or rate) matrix from moments on a zero forcing set.

The known set starts at the observed vertices. Each force ``k -> l`` of the
forcing sequence extends the known moments to ``l``:

1. ``M[k,l]`` from the row sum of ``k`` (1 for a transition matrix, 0 for a
   generator), because ``l`` is the only unknown neighbour of ``k``;
2. ``(M^n)[l,i]`` from ``(M^{n+1})[k,i] = sum_j M[k,j] (M^n)[j,i]``;
3. ``(M^n)[i,l]`` from ``(M^{n+1})[i,k] = sum_j (M^n)[i,j] M[j,k]``;
4. ``(M^n)[l,l]`` from ``(M^{n+1})[l,k] = sum_j (M^n)[l,j] M[j,k]``.

Every force loses one power for the new row and column and two for the new
diagonal entry. Moments are carried in dense ``(N, S, S)`` arrays where NaN
marks an unavailable value; :func:`required_power_horizon` runs the same
bookkeeping on booleans to find the smallest table that suffices.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ._validation import as_vertex_list
from .chain import (
    CONTINUOUS,
    DISCRETE,
    MomentTable,
    _moments,
    normalize_kind,
    validate_rate,
    validate_stochastic,
)
from .exceptions import (
    DegenerateChainError,
    HypothesisError,
    IdentificationError,
    InsufficientHorizonError,
    NotZeroForcingError,
)
from .graph import forcing_closure, is_connected

__all__ = [
    "ReconstructionResult",
    "ResidualReport",
    "required_power_horizon",
    "infer_neighbor",
    "reconstruct",
    "reconstruct_dtmc",
    "reconstruct_ctmc",
    "verify_reconstruction",
    "propagate_uncertainty",
]

OBSERVED = "observed"
NORMALIZATION = "normalization"
STRUCTURAL_ZERO = "structural_zero"
DIAGONAL_MISMATCH_TOL = 1e-6


def force_tag(step):
    return f"force:{step}"


@dataclass(frozen=True)
class ResidualReport:
    max: float
    mean: float


@dataclass(frozen=True)
class ReconstructionResult:
    """Recovered matrix with per-entry provenance and residual diagnostics.

    ``provenance[i][j]`` is one of ``"observed"``, ``"normalization"``,
    ``"structural_zero"`` or ``"force:f"`` (1-based step of the forcing
    sequence that produced the entry).
    """

    matrix: object
    provenance: tuple
    forcing_sequence: object
    residual_max: float
    residual_mean: float
    required_horizon: int
    diagnostics: dict = field(default_factory=dict)

    @property
    def kind(self):
        return self.matrix.kind

    def to_dict(self):
        return {
            "matrix": self.matrix.entries.tolist(),
            "kind": self.kind,
            "provenance": [list(row) for row in self.provenance],
            "forcing_order": [list(f) for f in self.forcing_sequence.forces],
            "residual_max": self.residual_max,
            "residual_mean": self.residual_mean,
            "required_horizon": self.required_horizon,
            "diagnostics": self.diagnostics,
        }


def _structural_zeros(pattern, N):
    # zero[n, i, j]: (M^{n+1})_{ij} vanishes for every matrix with this pattern
    D = pattern.distances.astype(float)
    D[D < 0] = np.inf
    powers = np.arange(1, N + 1)[:, None, None]
    return D[None, :, :] > powers


def _closed_known_neighbors(pattern, known, k):
    # 0-indexed known vertices j with M[k, j] allowed non-zero (j == k or adjacent)
    adj = pattern.adjacency[k + 1]
    return [j for j in known if j == k or (j + 1) in adj]


def _unknown_neighbors(pattern, known, k):
    known_labels = {j + 1 for j in known}
    return sorted(pattern.adjacency[k + 1] - known_labels)


def _fill_normalized_diagonals(M1_get, M1_set, pattern, known, base, on_fill=None):
    known_set = set(known)
    for v in known:
        if not np.isnan(M1_get(v, v)):
            continue
        nbrs = [w - 1 for w in pattern.adjacency[v + 1]]
        if not all(w in known_set for w in nbrs):
            continue
        row = [M1_get(v, w) for w in nbrs]
        if any(np.isnan(x) for x in row):
            continue
        M1_set(v, base - float(np.sum(row)))
        if on_fill is not None:
            on_fill(v)


def _force_step(T, known, k, l, pattern, kind, div_tol, zeros):
    """Apply one elimination step in place on the dense table ``T`` (0-indexed)."""
    base = 1.0 if kind == DISCRETE else 0.0
    nk = _closed_known_neighbors(pattern, known, k)
    kn = list(known)

    row_k = T[0, k, nk]
    m_kl = base - row_k.sum()
    if abs(m_kl) <= div_tol:
        raise DegenerateChainError(
            f"M[{k + 1},{l + 1}] = {m_kl:.3g} from the row sum is below div_tol={div_tol:g}; "
            "the edge is missing or the chain is degenerate"
        )
    T[0, k, l] = m_kl

    # (2) row of l
    rhs = T[1:, k, :][:, kn] - np.einsum("j,njc->nc", row_k, T[:-1][:, nk][:, :, kn])
    T[:-1, l, kn] = rhs / m_kl
    T[:, l, kn] = np.where(zeros[:, l, kn], 0.0, T[:, l, kn])
    m_lk = T[0, l, k]
    if abs(m_lk) <= div_tol:
        raise DegenerateChainError(
            f"M[{l + 1},{k + 1}] = {m_lk:.3g} is below div_tol={div_tol:g}; "
            "the edge is missing or the chain is degenerate"
        )

    # (3) column of l; the power-1 entry M[k, l] keeps its row-sum value
    col_k = T[0, nk, k]
    keep = T[0, k, l]
    rhs = T[1:, :, k][:, kn] - np.einsum("ncj,j->nc", T[:-1][:, kn][:, :, nk], col_k)
    T[:-1, kn, l] = rhs / m_lk
    T[:, kn, l] = np.where(zeros[:, kn, l], 0.0, T[:, kn, l])
    step3_kl = T[0, k, l]
    T[0, k, l] = keep

    # (4) diagonal of l
    if T.shape[0] >= 3:
        rhs = T[1:-1, l, k] - T[:-2][:, l, nk] @ col_k
        T[:-2, l, l] = rhs / m_lk
    return m_kl, m_lk, step3_kl


def _force_availability(B, known, k, l, pattern, zeros):
    """Boolean mirror of :func:`_force_step`: which entries become available."""
    nk = _closed_known_neighbors(pattern, known, k)
    kn = list(known)
    row_ok = bool(B[0, k, nk].all())
    B[0, k, l] = row_ok
    B[:-1, l, kn] = B[1:, k, :][:, kn] & B[:-1][:, nk][:, :, kn].all(axis=1) & row_ok
    B[:, l, kn] |= zeros[:, l, kn]
    lk_ok = bool(B[0, l, k])
    col_ok = bool(B[0, nk, k].all()) and lk_ok
    keep = B[0, k, l]
    B[:-1, kn, l] = B[1:, :, k][:, kn] & B[:-1][:, kn][:, :, nk].all(axis=2) & col_ok
    B[:, kn, l] |= zeros[:, kn, l]
    B[0, k, l] = keep
    if B.shape[0] >= 3:
        B[:-2, l, l] = B[1:-1, l, k] & B[:-2][:, l, nk].all(axis=1) & col_ok


def _availability(pattern, Z, forces, N):
    S = pattern.order
    zeros = _structural_zeros(pattern, N)
    B = np.zeros((N, S, S), dtype=bool)
    z = [v - 1 for v in Z]
    B[np.ix_(range(N), z, z)] = True
    B |= zeros & _known_square(S, z)[None]
    known = list(z)

    def get(v, w):
        return 0.0 if B[0, v, w] else np.nan

    def put(v, _):
        B[0, v, v] = True

    _fill_normalized_diagonals(get, put, pattern, known, 1.0)
    for k, l in forces:
        _force_availability(B, known, k - 1, l - 1, pattern, zeros)
        known.append(l - 1)
        _fill_normalized_diagonals(get, put, pattern, known, 1.0)
    return B


def _known_square(S, idx):
    m = np.zeros((S, S), dtype=bool)
    m[np.ix_(idx, idx)] = True
    return m


def _checked_forcing(pattern, Z):
    seq = forcing_closure(pattern, Z)
    if not seq.is_complete(pattern.order):
        raise NotZeroForcingError(seq.closure)
    return seq


def required_power_horizon(pattern, Z, max_horizon=None):
    """Smallest ``max_power`` for which moments on ``Z`` determine the matrix.

    Computed by running the elimination bookkeeping (including structural
    zeros of matrix powers and diagonals fixed by row sums) on the canonical
    forcing order for increasing table sizes.

    Raises
    ------
    NotZeroForcingError
        If ``Z`` does not force ``pattern``.
    """
    Z = as_vertex_list(Z, pattern.order, name="Z")
    if max_horizon is None:
        max_horizon = 4 * pattern.order + 4
    return _horizon(pattern, tuple(sorted(Z)), max_horizon)


@lru_cache(maxsize=256)
def _horizon(pattern, Z, max_horizon):
    seq = _checked_forcing(pattern, Z)
    for N in range(1, max_horizon + 1):
        if _availability(pattern, Z, seq.forces, N)[0].all():
            return N
    raise IdentificationError(f"no power horizon up to {max_horizon} suffices")


def _dense_from_table(table, S, N=None):
    N = table.max_power if N is None else N
    T = np.full((N, S, S), np.nan)
    idx = [v - 1 for v in table.known_states]
    T[np.ix_(range(min(N, table.max_power)), idx, idx)] = table.values[:N]
    return T, idx


def infer_neighbor(table, k, l, pattern, div_tol=1e-12):
    """Extend the moments on ``A`` to ``A + [l]`` using the force ``k -> l``.

    Returns a table with ``max_power`` reduced by one. Entries that the
    recursion cannot reach at that power (always ``(M^{N-1})[l,l]``) are NaN.
    """
    S = pattern.order
    A = list(table.known_states)
    (k, l) = as_vertex_list([k, l], S, name="force")
    if k not in A:
        raise HypothesisError(f"forcing vertex {k} is not in the known set")
    if l in A:
        raise HypothesisError(f"forced vertex {l} is already known")
    outside = _unknown_neighbors(pattern, [v - 1 for v in A], k - 1)
    if outside != [l]:
        raise HypothesisError(
            f"vertex {l} must be the only unknown neighbour of {k}; unknown neighbours are {outside}"
        )
    if table.max_power < 2:
        raise InsufficientHorizonError(2, table.max_power)
    T, idx = _dense_from_table(table, S)
    zeros = _structural_zeros(pattern, T.shape[0])
    sq = _known_square(S, idx)
    T[:, sq] = np.where(zeros[:, sq], 0.0, T[:, sq])
    _force_step(T, idx, k - 1, l - 1, pattern, table.kind, div_tol, zeros)
    new = idx + [l - 1]
    values = T[: table.max_power - 1][:, new][:, :, new]
    return MomentTable(table.kind, tuple(A) + (l,), values)


def _dense_reconstruct(pattern, Z, values, kind, div_tol, forces):
    """Core loop; returns the power-1 matrix (NaN where unavailable), provenance, cross-checks."""
    S = pattern.order
    N = values.shape[0]
    base = 1.0 if kind == DISCRETE else 0.0
    z = [v - 1 for v in Z]
    zeros = _structural_zeros(pattern, N)
    T = np.full((N, S, S), np.nan)
    T[np.ix_(range(N), z, z)] = values
    sq = _known_square(S, z)
    T[:, sq] = np.where(zeros[:, sq], 0.0, T[:, sq])

    prov = np.full((S, S), "", dtype=object)
    prov[np.ix_(z, z)] = OBSERVED
    known = list(z)
    step_kl_gap = 0.0

    def get(v, w):
        return T[0, v, w]

    def put(v, x):
        T[0, v, v] = x

    def tag_norm(v):
        prov[v, v] = NORMALIZATION

    _fill_normalized_diagonals(get, put, pattern, known, base, tag_norm)
    for f, (k, l) in enumerate(forces, start=1):
        k0, l0 = k - 1, l - 1
        _, _, step3_kl = _force_step(T, known, k0, l0, pattern, kind, div_tol, zeros)
        if not np.isnan(step3_kl):
            step_kl_gap = max(step_kl_gap, abs(step3_kl - T[0, k0, l0]))
        tag = force_tag(f)
        for i in known:
            prov[l0, i] = tag
            prov[i, l0] = tag
        if not np.isnan(T[0, l0, l0]):
            prov[l0, l0] = tag
        known.append(l0)
        _fill_normalized_diagonals(get, put, pattern, known, base, tag_norm)

    M = T[0].copy()
    offdiag_zero = ~pattern.adjacency_matrix()
    np.fill_diagonal(offdiag_zero, False)
    M[offdiag_zero] = 0.0
    for i, j in zip(*np.nonzero(offdiag_zero)):
        if prov[i, j] != OBSERVED:
            prov[i, j] = STRUCTURAL_ZERO
    return M, prov, step_kl_gap


def reconstruct(pattern, Z, table, kind=None, div_tol=None, row_tol=None):
    """Recover the full matrix from moments observed on the zero forcing set ``Z``.

    Parameters
    ----------
    pattern : SimpleGraph
        Graph of the (combinatorially symmetric) chain; must be connected.
    Z : sequence of int
        Observed vertices; must be a zero forcing set of ``pattern`` and
        must match ``table.known_states`` as a set.
    table : MomentTable
    kind : {"discrete", "continuous"}, optional
        Defaults to ``table.kind``.
    div_tol : float, optional
        Smallest admissible divisor. Defaults to ``1e-12`` for exact tables
        and ``max(1e-9, 10 * max stderr)`` for estimated ones.
    row_tol : float, optional
        Tolerance of the final matrix validation. Defaults to ``1e-6`` for
        exact tables and ``max(1e-6, 100 * max stderr)`` for estimated ones.

    Returns
    -------
    ReconstructionResult
    """
    kind = normalize_kind(kind or table.kind)
    if kind != table.kind:
        raise IdentificationError(f"table holds {table.kind} moments, {kind} requested")
    S = pattern.order
    Z = as_vertex_list(Z, S, name="Z")
    if set(Z) != set(table.known_states):
        raise IdentificationError(
            f"observed set {sorted(Z)} does not match table states {sorted(table.known_states)}"
        )
    if not is_connected(pattern):
        raise IdentificationError("pattern graph is not connected")
    seq = _checked_forcing(pattern, Z)
    required = required_power_horizon(pattern, Z)
    if table.max_power < required:
        raise InsufficientHorizonError(required, table.max_power)

    sigma = table.max_stderr()
    if div_tol is None:
        div_tol = max(1e-9, 10 * sigma) if table.stderr is not None else 1e-12
    if row_tol is None:
        row_tol = max(1e-6, 100 * sigma) if table.stderr is not None else 1e-6

    order = [table.index(v) for v in Z]
    values = table.values[:, order][:, :, order]
    M, prov, kl_gap = _dense_reconstruct(pattern, Z, values, kind, div_tol, seq.forces)
    if np.isnan(M).any():
        # the boolean horizon bookkeeping should have caught this
        raise InsufficientHorizonError(required + 1, table.max_power)

    base = 1.0 if kind == DISCRETE else 0.0
    off = M - np.diag(np.diag(M))
    norm_diag = base - off.sum(axis=1)
    diag_gap = float(np.max(np.abs(norm_diag - np.diag(M))))
    diagnostics = {
        "diagonal_mismatch": diag_gap,
        "row_sum_vs_column_mismatch": float(kl_gap),
        "warnings": [],
    }
    if diag_gap > DIAGONAL_MISMATCH_TOL:
        diagnostics["warnings"].append(
            f"diagonal entries differ from row normalization by {diag_gap:.3g}"
        )
    if kind == DISCRETE:
        matrix = validate_stochastic(M, row_tol=row_tol, neg_tol=row_tol)
    else:
        matrix = validate_rate(M, row_tol=row_tol, neg_tol=row_tol)

    report = _residual(matrix.entries, table, kind)
    return ReconstructionResult(
        matrix=matrix,
        provenance=tuple(tuple(row) for row in prov),
        forcing_sequence=seq,
        residual_max=report.max,
        residual_mean=report.mean,
        required_horizon=required,
        diagnostics=diagnostics,
    )


def reconstruct_dtmc(pattern, Z, table, div_tol=None, row_tol=None):
    return reconstruct(pattern, Z, table, DISCRETE, div_tol, row_tol)


def reconstruct_ctmc(pattern, Z, table, div_tol=None, row_tol=None):
    return reconstruct(pattern, Z, table, CONTINUOUS, div_tol, row_tol)


def _residual(M, table, kind):
    recomputed = _moments(M, table.known_states, table.max_power, kind).values
    diff = np.abs(recomputed - table.values)
    diff = diff[~np.isnan(diff)]
    if diff.size == 0:
        return ResidualReport(0.0, 0.0)
    return ResidualReport(float(diff.max()), float(diff.mean()))


def verify_reconstruction(result, table):
    """Max and mean deviation between ``table`` and the moments of ``result.matrix``."""
    if result.matrix.size < max(table.known_states):
        raise ValueError("table refers to states outside the recovered matrix")
    return _residual(result.matrix.entries, table, result.kind)


def propagate_uncertainty(pattern, Z, table, covariance=None, rel_step=1e-6):
    """Linearized standard deviation of each recovered entry.

    The Jacobian of the reconstruction with respect to the table values is
    taken by central differences and combined with ``covariance`` (default:
    ``table.covariance``, else the diagonal of ``table.stderr ** 2``).

    Returns
    -------
    ndarray of shape (S, S)
    """
    S = pattern.order
    Z = as_vertex_list(Z, S, name="Z")
    seq = _checked_forcing(pattern, Z)
    if covariance is None:
        covariance = table.covariance
    if covariance is None:
        if table.stderr is None:
            raise ValueError("table carries no uncertainty; pass covariance")
        covariance = np.diag(np.nan_to_num(table.stderr).ravel() ** 2)
    covariance = np.asarray(covariance, dtype=float)
    order = [table.index(v) for v in Z]
    base = table.values.ravel()
    J = np.zeros((S * S, base.size))
    for p in range(base.size):
        if np.isnan(base[p]):
            continue
        h = rel_step * max(1.0, abs(base[p]))
        cols = []
        for sgn in (1.0, -1.0):
            x = base.copy()
            x[p] += sgn * h
            vals = x.reshape(table.values.shape)[:, order][:, :, order]
            M, _, _ = _dense_reconstruct(pattern, Z, vals, table.kind, 0.0, seq.forces)
            cols.append(M.ravel())
        J[:, p] = (cols[0] - cols[1]) / (2 * h)
    var = np.einsum("ip,pq,iq->i", J, covariance, J)
    return np.sqrt(np.maximum(var, 0.0)).reshape(S, S)
