"""Sentence representations, the visual-space ridge projector, cross-modal scores."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.model_selection import KFold

from .core import Language, Sentence
from .errors import AllOovError, ConfigError, FormatError, ZeroVectorError
from .io import EmbeddingTable


def sentence_repr(sentence: Sentence, table: EmbeddingTable) -> np.ndarray:
    """Mean of the sentence's in-vocabulary word vectors (multiset mean)."""
    vectors = [table[t] for t in sentence.tokens if t in table]
    if not vectors:
        raise AllOovError(sentence.tokens)
    return np.mean(np.asarray(vectors, dtype=np.float64), axis=0)


class RidgeProjector(BaseEstimator, TransformerMixin):
    """Linear map from sentence representations into the visual feature space.

    Fit by ridge regression on (representation, visual vector) pairs.  A
    constant-1 bias coordinate is appended to the inputs and regularized like
    any other coordinate.  The normal equations are solved through a Cholesky
    factorization and the solve is rejected unless every output coordinate
    meets a 1e-8 relative residual bound.

    Follows the scikit-learn estimator protocol: ``fit``/``transform`` plus
    ``get_params``/``set_params``, so projectors compose with sklearn
    pipelines and model selection utilities.
    """

    def __init__(self, ridge_lambda: float = 1.0, language: Language = "target"):
        self.ridge_lambda = ridge_lambda
        self.language = language

    def fit(self, X, Y, sample_weight=None) -> "RidgeProjector":
        if self.ridge_lambda <= 0:
            raise ConfigError(f"ridge_lambda must be positive, got {self.ridge_lambda}")
        X = np.asarray(X, dtype=np.float64)
        Y = np.asarray(Y, dtype=np.float64)
        if X.ndim != 2 or Y.ndim != 2 or X.shape[0] != Y.shape[0] or X.shape[0] == 0:
            raise ConfigError("fit needs matching, non-empty X (n, d) and Y (n, d_v)")
        n, d = X.shape
        A = np.hstack([X, np.ones((n, 1))])
        if sample_weight is not None:
            w = np.asarray(sample_weight, dtype=np.float64)
            if w.shape != (n,) or np.any(w <= 0):
                raise ConfigError("sample_weight must hold one positive weight per pair")
            gram = A.T @ (A * w[:, None])
            rhs = A.T @ (Y * w[:, None])
        else:
            gram = A.T @ A
            rhs = A.T @ Y
        gram[np.diag_indices_from(gram)] += self.ridge_lambda
        weights = cho_solve(cho_factor(gram), rhs)

        residual = gram @ weights - rhs
        res_norm = np.linalg.norm(residual, axis=0)
        rhs_norm = np.linalg.norm(rhs, axis=0)
        bound = np.where(rhs_norm > 0, 1e-8 * rhs_norm, 1e-10)
        if np.any(res_norm > bound):
            worst = float((res_norm / np.maximum(rhs_norm, 1e-300)).max())
            raise RuntimeError(f"normal-equation solve failed its residual bound ({worst:.3e})")

        self.coef_ = np.ascontiguousarray(weights[:-1].T)
        self.intercept_ = weights[-1].copy()
        self.n_features_in_ = d
        return self

    def transform(self, X) -> np.ndarray:
        if not hasattr(self, "coef_"):
            raise ConfigError("projector is not fitted")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features_in_:
            raise ConfigError(
                f"expected (n, {self.n_features_in_}) input, got shape {X.shape}"
            )
        return X @ self.coef_.T + self.intercept_

    @property
    def visual_dim(self) -> int:
        return len(self.intercept_)


def train_projector(
    pairs: Sequence[tuple[np.ndarray, np.ndarray]],
    ridge_lambda: float,
    language: Language = "target",
    sample_weight: Sequence[float] | None = None,
) -> RidgeProjector:
    """Fit a projector from (sentence representation, visual vector) pairs."""
    if not pairs:
        raise ConfigError("no training pairs")
    X = np.asarray([p[0] for p in pairs], dtype=np.float64)
    Y = np.asarray([p[1] for p in pairs], dtype=np.float64)
    projector = RidgeProjector(ridge_lambda=ridge_lambda, language=language)
    return projector.fit(X, Y, sample_weight=sample_weight)


def project(projector: RidgeProjector, representation: np.ndarray) -> np.ndarray:
    """Map one sentence representation into the visual feature space."""
    representation = np.asarray(representation, dtype=np.float64)
    return projector.transform(representation.reshape(1, -1))[0]


def select_lambda_cv(
    X,
    Y,
    grid: Sequence[float] = (0.01, 0.1, 1.0, 10.0, 100.0),
    folds: int = 5,
    seed: int = 0,
    sample_weight: Sequence[float] | None = None,
) -> float:
    """Pick the ridge strength with the best k-fold held-out squared error."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if len(X) < folds:
        raise ConfigError(f"{folds}-fold selection needs at least {folds} pairs")
    weights = None if sample_weight is None else np.asarray(sample_weight, dtype=np.float64)
    splitter = KFold(n_splits=folds, shuffle=True, random_state=seed)
    best_lambda, best_error = None, np.inf
    for lam in grid:
        error = 0.0
        for train_idx, test_idx in splitter.split(X):
            projector = RidgeProjector(ridge_lambda=lam).fit(
                X[train_idx],
                Y[train_idx],
                sample_weight=None if weights is None else weights[train_idx],
            )
            diff = projector.transform(X[test_idx]) - Y[test_idx]
            error += float((diff**2).sum())
        if error < best_error:
            best_lambda, best_error = lam, error
    return float(best_lambda)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity in [-1, 1]; zero vectors are rejected."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ZeroVectorError("cosine similarity of a zero vector is undefined")
    return float(np.clip(float(u @ v) / (nu * nv), -1.0, 1.0))


def clinrel(
    candidate: Sentence,
    source_ref: Sentence,
    projector_target: RidgeProjector,
    projector_source: RidgeProjector,
    table_target: EmbeddingTable,
    table_source: EmbeddingTable,
) -> float:
    """Cross-lingual relevance: cosine of the two captions in visual space.

    Negative values are meaningful and are never clamped.
    """
    v_candidate = project(projector_target, sentence_repr(candidate, table_target))
    v_source = project(projector_source, sentence_repr(source_ref, table_source))
    return cosine(v_source, v_candidate)


def cmedrel(
    candidate: Sentence,
    image_feature: np.ndarray,
    projector_target: RidgeProjector,
    table_target: EmbeddingTable,
) -> float:
    """Cross-media relevance: cosine of the projected caption and the image feature."""
    v_candidate = project(projector_target, sentence_repr(candidate, table_target))
    return cosine(v_candidate, np.asarray(image_feature, dtype=np.float64))


def save_projector(projector: RidgeProjector, path: str | Path) -> None:
    """Persist a fitted projector as text: header line, weight rows, bias row."""
    if not hasattr(projector, "coef_"):
        raise ConfigError("projector is not fitted")
    d = projector.n_features_in_
    d_v = projector.visual_dim
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"{d} {d_v} {projector.ridge_lambda!r} {projector.language}\n")
        for row in projector.coef_:
            fh.write(" ".join(repr(float(x)) for x in row) + "\n")
        fh.write(" ".join(repr(float(x)) for x in projector.intercept_) + "\n")


def load_projector(path: str | Path) -> RidgeProjector:
    """Load a projector persisted by :func:`save_projector`."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 4:
            raise FormatError("expected '<d> <d_v> <lambda> <language>' header", line=1)
        try:
            d, d_v, lam = int(header[0]), int(header[1]), float(header[2])
        except ValueError:
            raise FormatError("bad header field types", line=1) from None
        language = header[3]
        if language not in ("source", "target"):
            raise FormatError(f"unknown language tag {language!r}", line=1)
        rows = []
        for lineno in range(2, d_v + 3):
            fields = fh.readline().split()
            expected = d if lineno <= d_v + 1 else d_v
            if len(fields) != expected:
                raise FormatError(f"expected {expected} fields, got {len(fields)}", line=lineno)
            try:
                rows.append([float(x) for x in fields])
            except ValueError:
                raise FormatError("non-numeric matrix component", line=lineno) from None
        if fh.readline().strip():
            raise FormatError("trailing content after the bias row", line=d_v + 3)
    projector = RidgeProjector(ridge_lambda=lam, language=language)
    projector.coef_ = np.asarray(rows[:-1], dtype=np.float64)
    projector.intercept_ = np.asarray(rows[-1], dtype=np.float64)
    projector.n_features_in_ = d
    if not np.all(np.isfinite(projector.coef_)) or not np.all(np.isfinite(projector.intercept_)):
        raise ValueError("projector weights must be finite")
    return projector
