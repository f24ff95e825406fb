"""Random Fourier features for the Matérn 5/2 kernel and Thompson sampling.

Bochner's theorem writes the kernel as k(x, x') = alpha E[2 cos(w^T x + b) cos(w^T x' + b)]
with w drawn from the normalized spectral density and b ~ Uniform[0, 2 pi).
Stacking m draws gives phi(x) = sqrt(2 alpha / m) cos(W x + b) and a Bayesian
linear model f(x) = phi(x)^T theta, theta ~ N(0, I), whose sample paths can be
minimized directly.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from esp_optimizer.models.gp import History, Hyperparams, jittered_cholesky
from esp_optimizer.space import Box
from esp_optimizer.strategies.optimizer import OptimizerSettings, minimize_box

DEFAULT_FEATURES = 1000
MATERN52_DOF = 5.0


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """Random Fourier feature map phi(x) = sqrt(2 alpha / m) cos(W x + b).

    Attributes:
        w_matrix: Spectral frequencies W, shape (m, d)
        phases: Phases b in [0, 2 pi), shape (m,)
        scale: Kernel normalization alpha (the signal variance)
    """

    w_matrix: np.ndarray
    phases: np.ndarray
    scale: float

    def __post_init__(self) -> None:
        w_matrix = np.atleast_2d(np.asarray(self.w_matrix, dtype=float))
        phases = np.atleast_1d(np.asarray(self.phases, dtype=float))
        if phases.shape != (w_matrix.shape[0],):
            raise ValueError(f"Need one phase per frequency, got {phases.shape} for W {w_matrix.shape}")
        if self.scale <= 0:
            raise ValueError(f"Feature scale must be positive, got {self.scale}")
        object.__setattr__(self, "w_matrix", w_matrix)
        object.__setattr__(self, "phases", phases)

    @property
    def m(self) -> int:
        return int(self.w_matrix.shape[0])

    @property
    def dim(self) -> int:
        return int(self.w_matrix.shape[1])

    def transform(self, x: np.ndarray) -> np.ndarray:
        """Features of every row of x (n, d), shape (n, m)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.dim:
            raise ValueError(f"Feature map has dimension {self.dim}, got points of shape {x.shape}")
        return np.sqrt(2.0 * self.scale / self.m) * np.cos(x @ self.w_matrix.T + self.phases)


@dataclass(frozen=True, eq=False)
class LinearPosterior:
    """Exact Gaussian posterior over the weights of f(x) = phi(x)^T theta.

    The posterior is N(A^{-1} Phi^T r, s2 A^{-1}) with A = Phi^T Phi + s2 I and
    r = y - mu0. With fewer observations than features the factor is taken of
    the t x t matrix Phi Phi^T + s2 I instead (dual form).

    Attributes:
        feature_map: Features the model is built on
        weight_mean: Posterior mean of theta
        weight_cov_factor: Lower Cholesky factor of A (primal) or of Phi Phi^T + s2 I (dual)
        noise: Observation noise variance s2
        design: Phi evaluated at the observed points, shape (t, m)
        residuals: y - mu0
        dual: Whether weight_cov_factor is the dual factor
    """

    feature_map: FeatureMap
    weight_mean: np.ndarray
    weight_cov_factor: np.ndarray
    noise: float
    design: np.ndarray
    residuals: np.ndarray
    dual: bool

    def covariance(self) -> np.ndarray:
        """Materialize s2 A^{-1} (identity with no data)."""
        m = self.feature_map.m
        if self.design.shape[0] == 0:
            return np.eye(m)
        if self.dual:
            solved = linalg.cho_solve((self.weight_cov_factor, True), self.design)
            return np.eye(m) - self.design.T @ solved
        return self.noise * linalg.cho_solve((self.weight_cov_factor, True), np.eye(m))

    def sample_weights(self, rng: np.random.Generator) -> np.ndarray:
        """Draw one theta from the weight posterior."""
        m = self.feature_map.m
        t = self.design.shape[0]
        if t == 0:
            return rng.standard_normal(m)
        if self.dual:
            # Pathwise update of a prior draw: exact for the Gaussian linear model
            prior_draw = rng.standard_normal(m)
            eps = rng.standard_normal(t)
            gap = self.residuals - self.design @ prior_draw - np.sqrt(self.noise) * eps
            return prior_draw + self.design.T @ linalg.cho_solve((self.weight_cov_factor, True), gap)
        eps = rng.standard_normal(m)
        return self.weight_mean + np.sqrt(self.noise) * linalg.solve_triangular(
            self.weight_cov_factor.T, eps, lower=False
        )


def sample_spectral(hp: Hyperparams, m: int, rng: np.random.Generator) -> FeatureMap:
    """
    Draw m frequencies from the Matérn 5/2 spectral density.

    The normalized density is a multivariate Student-t with 5 degrees of
    freedom and scale diag(l)^{-1}: w = diag(l)^{-1} z / sqrt(u / 5) with
    z ~ N(0, I) and u ~ chi2(5).

    Args:
        hp: Hyperparameters supplying lengthscales and alpha = nu2
        m: Number of features
        rng: Seeded random source

    Returns:
        FeatureMap with phases drawn from Uniform[0, 2 pi)
    """
    if m < 1:
        raise ValueError(f"Feature count must be at least 1, got {m}")
    z = rng.standard_normal((m, hp.dim))
    u = rng.chisquare(MATERN52_DOF, size=m)
    w_matrix = z / hp.lengthscales / np.sqrt(u / MATERN52_DOF)[:, None]
    phases = rng.uniform(0.0, 2.0 * np.pi, size=m)
    return FeatureMap(w_matrix, phases, hp.amplitude)


def features(fm: FeatureMap, x: np.ndarray) -> np.ndarray:
    """phi(x) for a single point, shape (m,)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"features expects a single point, got shape {x.shape}")
    return fm.transform(x[None, :])[0]


def fit_linear_posterior(fm: FeatureMap, history: History, hp: Hyperparams) -> LinearPosterior:
    """
    Condition the feature-space linear model on a history.

    Args:
        fm: Feature map
        history: Observation set
        hp: Hyperparameters supplying s2 and mu0

    Returns:
        LinearPosterior over theta

    Raises:
        CholeskyError: If the weight system cannot be factorized
    """
    m = fm.m
    t = len(history)
    if t == 0:
        return LinearPosterior(
            fm, np.zeros(m), np.eye(m), hp.noise, np.zeros((0, m)), np.zeros(0), dual=True
        )

    design = fm.transform(history.points)
    residuals = history.values - hp.mean
    if t < m:
        gram = design @ design.T
        gram[np.diag_indices_from(gram)] += hp.noise
        factor, _ = jittered_cholesky(gram, hp.amplitude)
        weight_mean = design.T @ linalg.cho_solve((factor, True), residuals)
        return LinearPosterior(fm, weight_mean, factor, hp.noise, design, residuals, dual=True)

    precision = design.T @ design
    precision[np.diag_indices_from(precision)] += hp.noise
    factor, _ = jittered_cholesky(precision, hp.amplitude)
    weight_mean = linalg.cho_solve((factor, True), design.T @ residuals)
    return LinearPosterior(fm, weight_mean, factor, hp.noise, design, residuals, dual=False)


def minimize_sample(
    fm: FeatureMap,
    theta: np.ndarray,
    bounds: Box,
    rng: np.random.Generator,
    settings: Optional[OptimizerSettings] = None,
) -> np.ndarray:
    """Minimizer over the box of the fixed sample path phi(x)^T theta."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (fm.m,):
        raise ValueError(f"Weights must have shape ({fm.m},), got {theta.shape}")
    point, _ = minimize_box(lambda x: fm.transform(x) @ theta, bounds, rng, settings)
    return point


def thompson_minimizer(
    lp: LinearPosterior,
    bounds: Box,
    rng: np.random.Generator,
    settings: Optional[OptimizerSettings] = None,
) -> np.ndarray:
    """Draw theta from the weight posterior and return the minimizer of its sample path."""
    theta = lp.sample_weights(rng)
    return minimize_sample(lp.feature_map, theta, bounds, rng, settings)
