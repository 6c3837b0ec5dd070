"""Per-cloud linear regression of processing time on job/capacity/overhead features."""
from __future__ import annotations

import math
from dataclasses import astuple, dataclass, fields
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .core import CloudId

MIN_PREDICTION_SECONDS = 0.001
RIDGE_LAMBDA = 1e-6
TRAINING_WINDOW = 30


class NotEnoughData(ValueError):
    pass


class ModelNotFitted(RuntimeError):
    pass


@dataclass(frozen=True)
class FeatureVector:
    # job configuration
    input_size_bytes: float
    map_tasks: float
    reduce_tasks: float
    # cloud capacity
    cpu_clock_mhz: float
    cpu_cores: float
    memory_mb: float
    # cloud overhead
    running_jobs_count: float = 0.0
    running_jobs_mean_completion_fraction: float = 0.0
    queued_jobs_count: float = 0.0
    running_jobs_total_input_bytes: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"feature {f.name} must be finite and >= 0, got {v!r}")
        if self.running_jobs_mean_completion_fraction > 1:
            raise ValueError("completion fraction must lie in [0, 1]")

    @classmethod
    def names(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)

    def scaled(self, alpha: float) -> "FeatureVector":
        return FeatureVector(*(alpha * v for v in astuple(self)))


N_FEATURES = len(fields(FeatureVector))


@dataclass(frozen=True)
class OverheadSnapshot:
    """What the cloud's resource manager reports about its current load."""

    running_fractions: tuple = ()
    queued: int = 0
    running_input_bytes: float = 0.0

    @property
    def running(self) -> int:
        return len(self.running_fractions)

    @property
    def mean_fraction(self) -> float:
        if not self.running_fractions:
            return 0.0
        return math.fsum(self.running_fractions) / len(self.running_fractions)

    def plus(self, running_fraction: Optional[float] = None, input_bytes: float = 0.0, queued: int = 0) -> "OverheadSnapshot":
        fr = self.running_fractions
        rb = self.running_input_bytes
        if running_fraction is not None:
            fr = fr + (running_fraction,)
            rb = rb + input_bytes
        return OverheadSnapshot(fr, self.queued + queued, rb)


@dataclass(frozen=True)
class Observation:
    features: FeatureVector
    observed_processing_seconds: float
    cloud: CloudId

    def __post_init__(self):
        if not self.observed_processing_seconds > 0:
            raise ValueError("observed processing time must be positive")


def extract_features(job, cloud_profile, overhead: OverheadSnapshot, input_size_bytes: float) -> FeatureVector:
    """Build the feature vector for running ``job`` on a cloud in its current state.

    ``cloud_profile`` only needs ``cpu_clock_mhz``, ``cpu_cores`` and
    ``memory_mb`` attributes.
    """
    return FeatureVector(
        input_size_bytes=float(input_size_bytes),
        map_tasks=float(job.map_tasks),
        reduce_tasks=float(job.reduce_tasks),
        cpu_clock_mhz=float(cloud_profile.cpu_clock_mhz),
        cpu_cores=float(cloud_profile.cpu_cores),
        memory_mb=float(cloud_profile.memory_mb),
        running_jobs_count=float(overhead.running),
        running_jobs_mean_completion_fraction=overhead.mean_fraction,
        queued_jobs_count=float(overhead.queued),
        running_jobs_total_input_bytes=float(overhead.running_input_bytes),
    )


@dataclass(frozen=True)
class RegressionModel:
    coefficients: tuple
    intercept: float
    training_window: int = TRAINING_WINDOW
    regularized: bool = False
    n_observations: int = 0

    def predict_raw(self, features: FeatureVector) -> float:
        x = features.as_array()
        return float(np.dot(np.asarray(self.coefficients), x) + self.intercept)


def _design(observations: Sequence[Observation]):
    X = np.vstack([o.features.as_array() for o in observations])
    y = np.array([o.observed_processing_seconds for o in observations], dtype=float)
    return np.hstack([X, np.ones((len(observations), 1))]), y


def fit(observations: Iterable[Observation], training_window: int = TRAINING_WINDOW) -> RegressionModel:
    """Least-squares fit over the most recent ``training_window`` observations.

    Solves the normal equations on column-equilibrated data. A rank-deficient
    design (e.g. constant capacity columns inside one cloud) switches to a
    ridge solve that leaves the intercept unpenalized; the returned model is
    then flagged ``regularized``.
    """
    obs = list(observations)[-training_window:]
    if len(obs) < 2:
        raise NotEnoughData(f"need at least 2 observations, got {len(obs)}")
    A, y = _design(obs)
    scale = np.linalg.norm(A, axis=0)
    scale[scale == 0] = 1.0
    As = A / scale
    gram = As.T @ As
    rhs = As.T @ y
    regularized = np.linalg.matrix_rank(As) < As.shape[1]
    if regularized:
        penalty = np.full(As.shape[1], RIDGE_LAMBDA)
        penalty[-1] = 0.0
        gram = gram + np.diag(penalty)
    beta = np.linalg.solve(gram, rhs) / scale
    return RegressionModel(
        coefficients=tuple(float(b) for b in beta[:-1]),
        intercept=float(beta[-1]),
        training_window=training_window,
        regularized=bool(regularized),
        n_observations=len(obs),
    )


def predict(model: Optional[RegressionModel], features: FeatureVector,
            minimum: float = MIN_PREDICTION_SECONDS) -> float:
    if model is None:
        raise ModelNotFitted("no regression model has been fitted for this cloud")
    return max(model.predict_raw(features), minimum)


def residual_sum_of_squares(coefficients, intercept: float, observations: Sequence[Observation]) -> float:
    A, y = _design(observations)
    beta = np.append(np.asarray(coefficients, dtype=float), intercept)
    r = A @ beta - y
    return float(r @ r)


class CloudPredictor:
    """One regression model per cloud, refit whenever an observation arrives."""

    def __init__(self, training_window: int = TRAINING_WINDOW):
        self.training_window = training_window
        self.history: dict = {}
        self.models: dict = {}

    def observe(self, obs: Observation, refit: bool = True) -> None:
        hist = self.history.setdefault(obs.cloud, [])
        hist.append(obs)
        if len(hist) > self.training_window:
            del hist[: len(hist) - self.training_window]
        if refit:
            self.refit(obs.cloud)

    def refit(self, cloud: CloudId) -> None:
        try:
            self.models[cloud] = fit(self.history.get(cloud, []), self.training_window)
        except NotEnoughData:
            self.models.pop(cloud, None)

    def predict(self, cloud: CloudId, features: FeatureVector) -> float:
        """Predicted seconds; 0 for a cloud without a usable model yet."""
        model = self.models.get(cloud)
        if model is None:
            return 0.0
        return predict(model, features)
