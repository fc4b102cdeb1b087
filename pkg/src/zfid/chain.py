"""Validated transition / rate matrices, exact moments, simulation and sampling."""

from dataclasses import dataclass, field
import math

import numpy as np

from ._validation import as_square_matrix, as_vertex_list
from .exceptions import HitTimeoutError, MatrixValidationError

__all__ = [
    "StochasticMatrix",
    "RateMatrix",
    "MomentTable",
    "Trajectory",
    "validate_stochastic",
    "validate_rate",
    "power_moments",
    "rate_moments",
    "simulate_trajectory",
    "estimate_moments",
    "ctmc_transition",
    "random_chain_with_graph",
]

DISCRETE = "discrete"
CONTINUOUS = "continuous"
KINDS = (DISCRETE, CONTINUOUS)
_KIND_ALIASES = {"dtmc": DISCRETE, "ctmc": CONTINUOUS, DISCRETE: DISCRETE, CONTINUOUS: CONTINUOUS}


def normalize_kind(kind):
    try:
        return _KIND_ALIASES[kind]
    except KeyError:
        raise ValueError(f"kind must be one of dtmc/ctmc/discrete/continuous, got {kind!r}") from None


def _frozen(arr):
    arr = np.array(arr, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class StochasticMatrix:
    """Row-stochastic transition matrix. Build through :func:`validate_stochastic`."""

    entries: np.ndarray
    kind = DISCRETE

    @property
    def size(self):
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


@dataclass(frozen=True)
class RateMatrix:
    """Generator with nonnegative off-diagonals and zero row sums."""

    entries: np.ndarray
    kind = CONTINUOUS

    @property
    def size(self):
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


@dataclass(frozen=True)
class Trajectory:
    states: np.ndarray
    seed: object = None


@dataclass(frozen=True)
class MomentTable:
    """Powers of a transition (or rate) matrix restricted to known states.

    Parameters
    ----------
    kind : {"discrete", "continuous"}
    known_states : tuple of int
        1-indexed labels, in the row/column order of ``values``.
    values : ndarray of shape (max_power, len(known_states), len(known_states))
        ``values[n - 1, a, b]`` is ``(M^n)[known_states[a], known_states[b]]``.
        NaN marks an entry that is not available.
    stderr : ndarray, optional
        Standard errors with the same shape as ``values``.
    covariance : ndarray, optional
        Covariance of ``values.ravel()`` (estimation mode).
    """

    kind: str
    known_states: tuple
    values: np.ndarray
    stderr: np.ndarray = None
    covariance: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", normalize_kind(self.kind))
        object.__setattr__(self, "known_states", tuple(int(v) for v in self.known_states))
        values = np.array(self.values, dtype=np.float64)
        a = len(self.known_states)
        if a == 0:
            raise ValueError("known_states must be nonempty")
        if values.ndim != 3 or values.shape[1:] != (a, a) or values.shape[0] < 1:
            raise ValueError(f"values must have shape (N, {a}, {a}) with N >= 1, got {values.shape}")
        if len(set(self.known_states)) != a:
            raise ValueError("known_states contains duplicates")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.stderr is not None:
            stderr = _frozen(self.stderr)
            if stderr.shape != values.shape:
                raise ValueError("stderr must match values in shape")
            object.__setattr__(self, "stderr", stderr)
        if self.covariance is not None:
            cov = _frozen(self.covariance)
            if cov.shape != (values.size, values.size):
                raise ValueError("covariance must be (values.size, values.size)")
            object.__setattr__(self, "covariance", cov)

    @property
    def max_power(self):
        return self.values.shape[0]

    def index(self, v):
        return self.known_states.index(v)

    def get(self, n, i, j):
        """``(M^n)_{ij}`` by vertex labels."""
        return self.values[n - 1, self.index(i), self.index(j)]

    def check_range(self, tol=1e-9):
        """Raise unless every available discrete-kind value lies in ``[0, 1]``."""
        if self.kind == DISCRETE:
            v = self.values[~np.isnan(self.values)]
            if v.size and (v.min() < -tol or v.max() > 1 + tol):
                raise MatrixValidationError("discrete moment values must lie in [0, 1]")
        return self

    def truncated(self, max_power):
        if not 1 <= max_power <= self.max_power:
            raise ValueError(f"cannot truncate table of max_power {self.max_power} to {max_power}")
        cov = None
        if self.covariance is not None:
            m = max_power * len(self.known_states) ** 2
            cov = self.covariance[:m, :m]
        stderr = None if self.stderr is None else self.stderr[:max_power]
        return MomentTable(self.kind, self.known_states, self.values[:max_power], stderr, cov)

    def max_stderr(self):
        if self.stderr is None:
            return 0.0
        s = self.stderr[~np.isnan(self.stderr)]
        return float(s.max()) if s.size else 0.0


def validate_stochastic(M, row_tol=1e-9, neg_tol=0.0):
    """Check that ``M`` is row stochastic; does not renormalize.

    Entries below ``-neg_tol`` or rows whose sum is more than ``row_tol``
    away from 1 raise :class:`MatrixValidationError`.
    """
    if isinstance(M, StochasticMatrix):
        return M
    M = as_square_matrix(M)
    if M.min() < -neg_tol:
        i, j = np.unravel_index(np.argmin(M), M.shape)
        raise MatrixValidationError(f"negative entry {M[i, j]:.3g} at ({i + 1},{j + 1})")
    dev = np.abs(M.sum(axis=1) - 1.0)
    if dev.max() > row_tol:
        r = int(np.argmax(dev))
        raise MatrixValidationError(f"row {r + 1} sums to {M[r].sum():.12g}, not 1")
    return StochasticMatrix(_frozen(M))


def validate_rate(M, row_tol=1e-9, neg_tol=0.0):
    """Check that ``M`` is a generator: off-diagonals >= 0, rows sum to 0."""
    if isinstance(M, RateMatrix):
        return M
    M = as_square_matrix(M)
    off = M - np.diag(np.diag(M))
    if off.min() < -neg_tol:
        i, j = np.unravel_index(np.argmin(off), off.shape)
        raise MatrixValidationError(f"negative off-diagonal rate {M[i, j]:.3g} at ({i + 1},{j + 1})")
    dev = np.abs(M.sum(axis=1))
    if dev.max() > row_tol:
        r = int(np.argmax(dev))
        raise MatrixValidationError(f"row {r + 1} sums to {M[r].sum():.12g}, not 0")
    return RateMatrix(_frozen(M))


def _moments(M, A, N, kind):
    M = np.asarray(M, dtype=np.float64)
    S = M.shape[0]
    A = as_vertex_list(A, S, name="A")
    if not A:
        raise ValueError("A must be nonempty")
    if N < 1:
        raise ValueError("N must be a positive integer")
    idx = np.array(A) - 1
    out = np.empty((N, len(A), len(A)))
    power = np.eye(S)
    for n in range(N):
        # full power first, restriction second
        power = power @ M
        out[n] = power[np.ix_(idx, idx)]
    return MomentTable(kind, tuple(A), out)


def power_moments(P, A, N):
    """Exact ``(P^n)`` restricted to ``A x A`` for ``n = 1..N``."""
    return _moments(validate_stochastic(P).entries, A, N, DISCRETE)


def rate_moments(Q, A, N):
    """Exact ``(Q^n)`` restricted to ``A x A`` for ``n = 1..N``."""
    return _moments(validate_rate(Q).entries, A, N, CONTINUOUS)


def _cumulative_rows(P):
    cum = np.cumsum(P, axis=1)
    cum[:, -1] = 1.0
    return cum


def simulate_trajectory(P, x0, steps, seed=None):
    """Sample ``X_0 = x0, X_1, ..., X_steps`` from the chain ``P``."""
    P = validate_stochastic(P).entries
    S = P.shape[0]
    (x0,) = as_vertex_list([x0], S, name="x0")
    if steps < 0:
        raise ValueError("steps must be >= 0")
    rng = np.random.default_rng(seed)
    cum = _cumulative_rows(P)
    u = rng.random(steps)
    states = np.empty(steps + 1, dtype=np.int64)
    s = x0 - 1
    states[0] = s
    for t in range(steps):
        s = int(np.searchsorted(cum[s], u[t], side="right"))
        if s >= S:
            s = S - 1
        states[t + 1] = s
    return Trajectory(states + 1, seed)


def _matrix_stepper(P):
    P = validate_stochastic(P).entries
    cum = _cumulative_rows(P)
    S = P.shape[0]

    def step(states, rng):
        u = rng.random(states.shape[0])
        nxt = (u[:, None] >= cum[states - 1]).sum(axis=1) + 1
        return np.minimum(nxt, S)

    return step, S


def estimate_moments(P, A, N, windows, seed=None, *, x0=None, n_chains=1024,
                     max_wait=10_000, n_states=None):
    """Estimate ``(P^n)_{ij}`` on ``A`` from sampled windows.

    For each anchor ``i`` in ``A`` the chain runs until it hits ``i``; the
    next ``N`` states are recorded, so one window scores the indicator of
    every ``j`` in ``A`` for every ``n <= N``. The next search starts at the
    end of the window (windows never overlap). ``n_chains`` independent
    copies of the chain run side by side to vectorize the sampling; every
    window still starts from a fresh hit of its anchor.

    Parameters
    ----------
    P : StochasticMatrix, array-like or callable
        A callable is treated as a black-box sampler ``step(states, rng)``
        mapping an int array of 1-indexed states to next states; then
        ``n_states`` is required.
    A : sequence of int
    N : int
    windows : int
        Windows per anchor.
    seed : int, optional
    x0 : int, optional
        Start state of every chain; defaults to the first state of ``A``.
    max_wait : int
        Maximum steps a chain may search for its anchor before
        :class:`HitTimeoutError` is raised.

    Returns
    -------
    MomentTable
        Empirical means, binomial standard errors and the covariance of the
        means (zero between different anchors).
    """
    if callable(P) and not isinstance(P, (StochasticMatrix, np.ndarray)):
        if n_states is None:
            raise ValueError("n_states is required for a callable sampler")
        step, S = P, int(n_states)
    else:
        step, S = _matrix_stepper(P)
    A = as_vertex_list(A, S, name="A")
    if not A:
        raise ValueError("A must be nonempty")
    if N < 1:
        raise ValueError("N must be a positive integer")
    if windows < 1:
        raise ValueError("windows must be a positive integer")
    (x0,) = as_vertex_list([A[0] if x0 is None else x0], S, name="x0")
    rng = np.random.default_rng(seed)
    a = len(A)
    A_arr = np.array(A)
    values = np.empty((N, a, a))
    stderr = np.empty((N, a, a))
    blocks = []
    for ai, anchor in enumerate(A):
        rec = _sample_windows(step, rng, anchor, N, windows,
                              x0, min(n_chains, windows), max_wait)
        # indicator[w, n, b] = 1 if window w is at A[b] after n+1 steps
        ind = (rec[:, :, None] == A_arr[None, None, :]).astype(np.float64)
        mean = ind.mean(axis=0)
        values[:, ai, :] = mean
        stderr[:, ai, :] = np.sqrt(mean * (1.0 - mean) / windows)
        flat = ind.reshape(windows, N * a) - mean.reshape(1, -1)
        blocks.append(flat.T @ flat / windows / windows)
    cov = np.zeros((N * a * a,) * 2)
    # flat index of values[n, ai, b] is (n * a + ai) * a + b
    for ai, block in enumerate(blocks):
        pos = np.array([(n * a + ai) * a + b for n in range(N) for b in range(a)])
        cov[np.ix_(pos, pos)] = block
    return MomentTable(DISCRETE, tuple(A), values, stderr, cov)


def _sample_windows(step, rng, anchor, N, windows, start, n_chains, max_wait):
    rec = np.empty((windows, N), dtype=np.int64)
    states = np.full(n_chains, start, dtype=np.int64)
    slot = np.full(n_chains, -1)       # window being recorded, -1 while searching
    offset = np.zeros(n_chains, dtype=np.int64)
    wait = np.zeros(n_chains, dtype=np.int64)
    active = np.ones(n_chains, dtype=bool)
    claimed = 0
    while active.any():
        hits = np.flatnonzero(active & (slot < 0) & (states == anchor))
        if hits.size:
            take = min(hits.size, windows - claimed)
            slot[hits[:take]] = np.arange(claimed, claimed + take)
            offset[hits[:take]] = 0
            wait[hits[:take]] = 0
            active[hits[take:]] = False
            claimed += take
        if claimed >= windows:
            active &= slot >= 0
            if not active.any():
                break
        run = np.flatnonzero(active)
        states[run] = step(states[run], rng)
        recording = run[slot[run] >= 0]
        rec[slot[recording], offset[recording]] = states[recording]
        offset[recording] += 1
        finished = recording[offset[recording] == N]
        slot[finished] = -1
        if claimed >= windows:
            active[finished] = False
        searching = run[slot[run] < 0]
        searching = searching[~np.isin(searching, finished)]
        wait[searching] += 1
        if searching.size and wait[searching].max() > max_wait:
            raise HitTimeoutError(
                f"no visit to state {anchor} within {max_wait} steps; "
                "the chain is likely reducible or the state is not in its support"
            )
    return rec


def ctmc_transition(Q, t, tol=1e-12):
    """``exp(Q t)`` by uniformization.

    With ``lam >= max |Q_ii|`` and ``U = I + Q / lam`` (a stochastic matrix),
    ``exp(Q t) = sum_k Poisson(k; lam t) U^k``. The series is truncated once
    the remaining Poisson mass drops below the per-piece tolerance. Long
    horizons are split into ``2^m`` pieces and squared back.
    """
    Q = validate_rate(Q).entries
    if t < 0:
        raise ValueError("t must be nonnegative")
    S = Q.shape[0]
    lam = float(np.max(-np.diag(Q))) if S else 0.0
    if lam == 0.0 or t == 0:
        return validate_stochastic(np.eye(S))
    m = max(0, math.ceil(math.log2(lam * t / 8.0))) if lam * t > 8.0 else 0
    h = t / 2**m
    piece_tol = tol / 2**m
    U = np.eye(S) + Q / lam
    mu = lam * h
    weight = math.exp(-mu)
    term = np.eye(S)
    P = weight * term
    mass = weight
    k = 0
    while 1.0 - mass > piece_tol and k < 10_000:
        k += 1
        weight *= mu / k
        term = term @ U
        P += weight * term
        mass += weight
    for _ in range(m):
        P = P @ P
    return validate_stochastic(P, row_tol=max(1e-9, 10 * tol), neg_tol=1e-15)


def random_chain_with_graph(G, kind=DISCRETE, seed=None, min_weight=0.05):
    """Random chain whose off-diagonal support is exactly the edges of ``G``.

    Discrete: edge weights (independently for ``(i,j)`` and ``(j,i)``) and the
    diagonal weight are uniform on ``[min_weight, 1]``, then each row is
    normalized. Continuous: edge rates uniform on ``[min_weight, 1]`` and the
    diagonal is minus the row sum.
    """
    kind = normalize_kind(kind)
    if min_weight <= 0:
        raise ValueError("min_weight must be positive")
    S = G.order
    max_deg = max(G.degree(v) for v in G.vertices)
    if min_weight > 1 or (kind == DISCRETE and min_weight * (max_deg + 1) >= 1):
        raise ValueError(
            f"min_weight {min_weight} is infeasible for maximum degree {max_deg}"
        )
    rng = np.random.default_rng(seed)
    mask = G.adjacency_matrix()
    W = np.where(mask, rng.uniform(min_weight, 1.0, size=(S, S)), 0.0)
    if kind == DISCRETE:
        W[np.diag_indices(S)] = rng.uniform(min_weight, 1.0, size=S)
        return validate_stochastic(W / W.sum(axis=1, keepdims=True))
    W[np.diag_indices(S)] = -W.sum(axis=1)
    return validate_rate(W)
