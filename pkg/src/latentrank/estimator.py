"""Scikit-learn style wrapper around :func:`latentrank.discovery.discover`."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .cpd import CpConfig
from .discovery import ALPHA_MATRIX, ALPHA_TENSOR, discover
from .tensor import CategoricalDataset


class LatentStructureLearner(BaseEstimator):
    """Learn clusters of observed variables and the latent graph over them.

    Parameters
    ----------
    alpha_matrix, alpha_tensor : float
        Levels of the pairwise matrix-rank and tensor-rank tests.
    restarts : int
        Random restarts per CP fit.
    max_cond : int
        Largest number of conditioning latents in the PC search.
    hetero : bool
        Allow a different support per latent.
    r : int or None
        Latent support; estimated from the data when None.
    max_checks : int or None
        Subsample the four-way cluster checks per triple.
    votes : int
        Child selections voting on each latent CI query.
    cards : sequence of int or None
        Category counts per column; ``max code + 1`` when None.
    random_state : int
        Seed for CP restarts and any subsampling.

    Attributes
    ----------
    measurement_model_ : MeasurementModel
    latent_support_ : dict
        Latent label -> estimated support.
    structure_ : PartialDag or None
        Learned pattern over the latents.
    result_ : DiscoveryResult
    n_features_in_ : int
    feature_names_in_ : ndarray of str
        Only set when ``X`` has string column names.
    """

    def __init__(self, alpha_matrix=ALPHA_MATRIX, alpha_tensor=ALPHA_TENSOR, restarts=10,
                 max_cond=2, hetero=False, r=None, max_checks=None, votes=1, cards=None,
                 random_state=0):
        self.alpha_matrix = alpha_matrix
        self.alpha_tensor = alpha_tensor
        self.restarts = restarts
        self.max_cond = max_cond
        self.hetero = hetero
        self.r = r
        self.max_checks = max_checks
        self.votes = votes
        self.cards = cards
        self.random_state = random_state

    def _dataset(self, X) -> CategoricalDataset:
        columns = getattr(X, "columns", None)
        rows = np.asarray(X)
        if rows.ndim != 2:
            raise ValueError(f"expected a 2-d array, got shape {rows.shape}")
        if not np.issubdtype(rows.dtype, np.integer):
            if not np.all(np.equal(np.mod(rows, 1), 0)):
                raise ValueError("X must hold integer category codes")
        rows = rows.astype(np.int64)
        if columns is not None and all(isinstance(c, str) for c in columns):
            names = tuple(columns)
            self.feature_names_in_ = np.asarray(names, dtype=object)
        else:
            names = tuple(f"X{i + 1}" for i in range(rows.shape[1]))
        cards = self.cards
        if cards is None:
            cards = [max(int(rows[:, i].max()) + 1, 2) if len(rows) else 2 for i in range(rows.shape[1])]
        return CategoricalDataset(names=names, cards=tuple(cards), rows=rows)

    def fit(self, X, y=None):
        """Run discovery on integer-coded data ``X`` (n_samples, n_features).

        Raises
        ------
        DegenerateModel
            No latent structure is detectable in ``X``.
        """
        data = self._dataset(X)
        self.n_features_in_ = data.n_vars
        cfg = CpConfig(restarts=self.restarts, seed=self.random_state)
        self.result_ = discover(data, alpha_matrix=self.alpha_matrix, alpha_tensor=self.alpha_tensor,
                                cfg=cfg, max_cond=self.max_cond, hetero=self.hetero, r=self.r,
                                max_checks=self.max_checks, votes=self.votes, seed=self.random_state)
        self.measurement_model_ = self.result_.measurement
        self.latent_support_ = dict(self.measurement_model_.latent_support)
        self.structure_ = self.result_.structure.pattern if self.result_.structure else None
        return self

    def clusters(self) -> dict:
        """Latent label -> names of its observed children."""
        check_is_fitted(self, "measurement_model_")
        mm = self.measurement_model_
        return {lat: list(mm.member_names(lat)) for lat in mm.latents}
