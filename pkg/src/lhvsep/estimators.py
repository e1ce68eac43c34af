"""scikit-learn style wrappers around the decomposition, verdict and frame-fit routines.

Samples are two-qubit states, passed either as an array of matrices of shape
``(n_samples, 4, 4)`` or as real Pauli correlation features of shape
``(n_samples, 16)`` (see :class:`PauliCorrelationTransformer`).
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .linalg import DensityOperator, PAULI_X, PAULI_Y, PAULI_Z, identity, tensor
from .reconstruction import default_frame, fit_unit_trace
from .separability import (
    DECOMPOSITION_TOL,
    ENTANGLED,
    K_SCHEDULE,
    SEPARABLE,
    UNDETERMINED,
    find_decomposition,
    locality_verdict,
    ppt_min_eigenvalue,
)

_PAULI_PRODUCTS = np.array(
    [tensor(a, b) for a in (identity(2), PAULI_X, PAULI_Y, PAULI_Z) for b in (identity(2), PAULI_X, PAULI_Y, PAULI_Z)]
)


def check_states(X):
    """Validate a batch of two-qubit states; returns ``(n, 4, 4)`` complex.

    Accepts a single matrix, a stack of matrices, a list of
    :class:`~lhvsep.linalg.DensityOperator`, or ``(n, 16)`` correlation
    features. Every sample must satisfy the density-operator invariants.
    """
    if isinstance(X, DensityOperator):
        X = [X]
    if isinstance(X, (list, tuple)) and X and isinstance(X[0], DensityOperator):
        X = np.array([x.matrix for x in X])
    arr = np.asarray(X)
    if arr.ndim == 2 and arr.shape == (4, 4) and np.iscomplexobj(arr):
        arr = arr[None]
    if arr.ndim == 2:
        feats = check_array(arr, dtype=np.float64)
        if feats.shape[1] != 16:
            raise ValueError(f"expected 16 correlation features, got {feats.shape[1]}")
        arr = np.einsum("nk,kij->nij", feats, _PAULI_PRODUCTS) / 4.0
    arr = np.asarray(arr, dtype=complex)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3 or arr.shape[1:] != (4, 4):
        raise ValueError(f"expected two-qubit states of shape (n, 4, 4), got {arr.shape}")
    for m in arr:
        DensityOperator(m, (2, 2))
    return arr


class PauliCorrelationTransformer(TransformerMixin, BaseEstimator):
    """Map two-qubit states to the 16 real numbers ``tr(rho sigma_i (x) sigma_j)`` and back."""

    def fit(self, X, y=None):
        check_states(X)
        self.n_features_in_ = 16
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        states = check_states(X)
        return np.einsum("nij,kji->nk", states, _PAULI_PRODUCTS).real

    def inverse_transform(self, X):
        check_is_fitted(self, "n_features_in_")
        return check_states(check_array(X, dtype=np.float64))


class LocalityClassifier(ClassifierMixin, BaseEstimator):
    """Label two-qubit states Separable, Entangled or Undetermined.

    Stateless: ``fit`` only records the label set. ``decision_function`` is
    the minimum partial-transpose eigenvalue (negative means entangled).
    """

    def __init__(self, restarts=32, tol=DECOMPOSITION_TOL, random_state=0, schedule=K_SCHEDULE, n_jobs=1):
        self.restarts = restarts
        self.tol = tol
        self.random_state = random_state
        self.schedule = schedule
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        check_states(X)
        self.classes_ = np.array([ENTANGLED, SEPARABLE, UNDETERMINED])
        return self

    def verdicts(self, X):
        check_is_fitted(self, "classes_")
        return [
            locality_verdict(DensityOperator(m, (2, 2)), restarts=self.restarts, seed=self.random_state,
                             tol=self.tol, schedule=tuple(self.schedule), n_jobs=self.n_jobs)
            for m in check_states(X)
        ]

    def predict(self, X):
        return np.array([v.kind for v in self.verdicts(X)])

    def decision_function(self, X):
        check_is_fitted(self, "classes_")
        return np.array([ppt_min_eigenvalue(DensityOperator(m, (2, 2))) for m in check_states(X)])


class ProductDecomposition(BaseEstimator):
    """Fit a product-state ensemble to one two-qubit state.

    ``n_terms="auto"`` walks the 1, 2, 4, 8, 16 schedule and keeps the first
    size that reaches ``tol``. Fitted attributes: ``ensemble_``,
    ``residual_``, ``n_terms_``, ``success_``.
    """

    def __init__(self, n_terms="auto", restarts=32, tol=DECOMPOSITION_TOL, max_iter=500, random_state=0, n_jobs=1):
        self.n_terms = n_terms
        self.restarts = restarts
        self.tol = tol
        self.max_iter = max_iter
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        states = check_states(X)
        if len(states) != 1:
            raise ValueError(f"ProductDecomposition fits a single state, got {len(states)}")
        rho = DensityOperator(states[0], (2, 2))
        sizes = K_SCHEDULE if self.n_terms == "auto" else (int(self.n_terms),)
        best = None
        for k in sizes:
            res = find_decomposition(rho, k, restarts=self.restarts, seed=self.random_state, tol=self.tol,
                                     max_iter=self.max_iter, n_jobs=self.n_jobs)
            if best is None or res.residual < best.residual:
                best = res
            if res.success:
                best = res
                break
        self.ensemble_ = best.ensemble
        self.residual_ = best.residual
        self.n_terms_ = best.n_terms
        self.success_ = best.success
        return self


class FrameTomography(TransformerMixin, BaseEstimator):
    """Turn projector-frame response vectors into density matrices.

    Each row of ``X`` lists responses over ``default_frame(dim)`` (rank-1
    first, then rank-2). ``transform`` returns the least-squares unit-trace
    fits, shape ``(n_samples, dim, dim)``; positivity is not enforced here,
    use :func:`~lhvsep.reconstruction.gleason_fit` for the checked path.
    """

    def __init__(self, dim=3):
        self.dim = dim

    def fit(self, X, y=None):
        self.frame_ = default_frame(self.dim)
        self.projectors_ = self.frame_.projectors()
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != len(self.projectors_):
            raise ValueError(f"expected {len(self.projectors_)} responses per sample, got {X.shape[1]}")
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "frame_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} responses per sample, got {X.shape[1]}")
        return np.array([fit_unit_trace(self.projectors_, row) for row in X])
