"""scikit-learn style wrappers around moment sampling and reconstruction.

``ObservedMoments`` turns a transition matrix into a moment table and
``ZeroForcingIdentifier`` fits a full matrix to a moment table, so the two
compose in a :class:`sklearn.pipeline.Pipeline`::

    pipe = make_pipeline(
        ObservedMoments(observed=[1], windows=100_000, random_state=0),
        ZeroForcingIdentifier(pattern=path_graph(3), observed=[1]),
    )
    pipe.fit(P)
    pipe[-1].transition_matrix_
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .chain import (
    CONTINUOUS,
    DISCRETE,
    MomentTable,
    _moments,
    estimate_moments,
    normalize_kind,
    power_moments,
    rate_moments,
)
from .exceptions import NotCombinatoriallySymmetricError
from .graph import SimpleGraph, graph_of_matrix, is_combinatorially_symmetric
from .reconstruct import (
    propagate_uncertainty,
    reconstruct,
    required_power_horizon,
    verify_reconstruction,
)


def resolve_pattern(pattern, zero_tol=0.0):
    """Accept a :class:`SimpleGraph` or a matrix whose pattern must be symmetric."""
    if isinstance(pattern, SimpleGraph):
        return pattern
    if not is_combinatorially_symmetric(pattern, zero_tol):
        raise NotCombinatoriallySymmetricError(
            "pattern matrix is not combinatorially symmetric; its non-zero pattern "
            "does not define an undirected graph"
        )
    return graph_of_matrix(pattern, zero_tol)


class ObservedMoments(TransformerMixin, BaseEstimator):
    """Moments of a chain on the observed states, exact or sampled.

    Parameters
    ----------
    observed : sequence of int
        Observed (1-indexed) states.
    max_power : int, optional
        Largest matrix power. Defaults to the horizon the reconstruction
        needs for the chain's own pattern.
    windows : int, optional
        Sampled windows per observed state. ``None`` gives exact moments.
    kind : {"dtmc", "ctmc"}
        Continuous chains only support exact moments.
    random_state : int, optional
    """

    def __init__(self, observed, max_power=None, windows=None, kind="dtmc",
                 random_state=None, zero_tol=0.0):
        self.observed = observed
        self.max_power = max_power
        self.windows = windows
        self.kind = kind
        self.random_state = random_state
        self.zero_tol = zero_tol

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        """Return the :class:`MomentTable` of the chain ``X``."""
        kind = normalize_kind(self.kind)
        X = np.asarray(X, dtype=float)
        N = self.max_power
        if N is None:
            N = required_power_horizon(resolve_pattern(X, self.zero_tol), self.observed)
        if kind == CONTINUOUS:
            if self.windows is not None:
                raise ValueError("sampled moments are only available for discrete chains")
            return rate_moments(X, self.observed, N)
        if self.windows is None:
            return power_moments(X, self.observed, N)
        return estimate_moments(X, self.observed, N, self.windows, seed=self.random_state)


class ZeroForcingIdentifier(BaseEstimator):
    """Recover a chain from moments observed on a zero forcing set.

    Parameters
    ----------
    pattern : SimpleGraph or array-like
        Graph of the chain, or a matrix carrying its non-zero pattern.
    observed : sequence of int
        The observed states; must force ``pattern``.
    kind : {"dtmc", "ctmc"}
    div_tol, row_tol : float, optional
        Passed to :func:`zfid.reconstruct.reconstruct`.

    Attributes
    ----------
    transition_matrix_ : ndarray of shape (S, S)
    result_ : ReconstructionResult
    provenance_ : tuple of tuple of str
    forcing_sequence_ : ForcingSequence
    residual_ : float
    uncertainty_ : ndarray of shape (S, S) or None
        Propagated standard deviations when the table carries errors.
    """

    def __init__(self, pattern, observed, kind="dtmc", div_tol=None, row_tol=None, zero_tol=0.0):
        self.pattern = pattern
        self.observed = observed
        self.kind = kind
        self.div_tol = div_tol
        self.row_tol = row_tol
        self.zero_tol = zero_tol

    def fit(self, X, y=None):
        """Fit to ``X``, a :class:`MomentTable` of the observed states."""
        if not isinstance(X, MomentTable):
            raise TypeError(f"expected a MomentTable, got {type(X).__name__}")
        G = resolve_pattern(self.pattern, self.zero_tol)
        result = reconstruct(G, self.observed, X, normalize_kind(self.kind),
                             self.div_tol, self.row_tol)
        self.pattern_ = G
        self.result_ = result
        self.transition_matrix_ = np.array(result.matrix.entries)
        self.provenance_ = result.provenance
        self.forcing_sequence_ = result.forcing_sequence
        self.residual_ = result.residual_max
        self.uncertainty_ = None
        if X.stderr is not None or X.covariance is not None:
            self.uncertainty_ = propagate_uncertainty(G, self.observed, X)
        return self

    def predict(self, states=None, max_power=1):
        """Moments of the fitted chain on ``states`` (default: all states)."""
        check_is_fitted(self, "transition_matrix_")
        S = self.transition_matrix_.shape[0]
        states = list(range(1, S + 1)) if states is None else states
        kind = DISCRETE if normalize_kind(self.kind) == DISCRETE else CONTINUOUS
        return _moments(self.transition_matrix_, states, max_power, kind)

    def score(self, X, y=None):
        """Negative maximum deviation between ``X`` and the fitted chain's moments."""
        check_is_fitted(self, "result_")
        return -verify_reconstruction(self.result_, X).max
