"""Estimator wrapper around the dense residual network."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .network.checkpoint import load_checkpoint, save_checkpoint
from .network.infer import TILE, infer
from .network.model import ModelSpec
from .network.train import TrainConfig, load_training_set, train, training_pair
from .raster import form_interferogram


class DenseResidualFilter(BaseEstimator):
    """Learned phase filter and coherence estimator.

    ``X`` is a sequence of ``(SlcImage, SlcImage)`` pairs and ``y`` a matching
    sequence of ``(truth_phase, truth_coherence)`` planes. ``predict`` returns
    a list of ``(phase, coherence)`` tuples, like :class:`BoxcarFilter`.

    Parameters
    ----------
    iters, batch, patch, lr, seed
        Training hyperparameters.
    architecture : {"lite", "micro"}
        ``"lite"`` is the full model, ``"micro"`` a tiny one for quick tests.
    tile : int or None
        Inference tile size; ``None`` runs each image in one pass.
    """

    def __init__(self, iters: int = 2000, batch: int = 16, patch: int = 64, lr: float = 1e-3,
                 seed: int = 0, architecture: str = "lite", tile: int | None = TILE):
        self.iters = iters
        self.batch = batch
        self.patch = patch
        self.lr = lr
        self.seed = seed
        self.architecture = architecture
        self.tile = tile

    def _spec(self) -> ModelSpec:
        if self.architecture == "lite":
            return ModelSpec()
        if self.architecture == "micro":
            return ModelSpec.micro()
        raise ValueError(f"unknown architecture {self.architecture!r}")

    def _config(self) -> TrainConfig:
        return TrainConfig(iters=self.iters, batch=self.batch, patch=self.patch, lr=self.lr, seed=self.seed)

    def _fit_data(self, data):
        self.spec_ = self._spec()
        self.params_, self.adam_state_, self.history_ = train(data, self._config(), self.spec_)
        return self

    def fit(self, X, y):
        X, y = list(X), list(y)
        if len(X) != len(y):
            raise ValueError(f"X has {len(X)} pairs but y has {len(y)} targets")
        data = []
        for (s1, s2), (truth_phase, truth_coh) in zip(X, y):
            ifg = form_interferogram(s1, s2)
            data.append(training_pair(s1.amplitude, s2.amplitude, ifg.phase, truth_phase, truth_coh))
        return self._fit_data(data)

    def fit_manifest(self, manifest):
        """Fit on every sample of a simulator manifest."""
        return self._fit_data(load_training_set(manifest))

    def predict(self, X):
        check_is_fitted(self, "params_")
        return [infer(self.params_, self.spec_, s1, s2, tile=self.tile) for s1, s2 in X]

    def save(self, path) -> None:
        check_is_fitted(self, "params_")
        save_checkpoint(path, self.params_, self.spec_)

    @classmethod
    def from_checkpoint(cls, path, **kwargs) -> "DenseResidualFilter":
        """A fitted estimator holding the parameters stored at ``path``."""
        params, spec = load_checkpoint(path)
        est = cls(architecture="micro" if spec == ModelSpec.micro() else "lite", **kwargs)
        est.spec_ = spec
        est.params_ = {k: np.asarray(v) for k, v in params.items()}
        return est
