"""Matérn 5/2 Gaussian-process regression with a constant prior mean.

All predictions use the centred form

    mu_t(x)      = mu0 + k_t(x)^T (K_t + s2 I)^{-1} (y - mu0)
    sigma2_t(x)  = k(x, x) - k_t(x)^T (K_t + s2 I)^{-1} k_t(x)

so that an empty history recovers the prior (mu0, nu2).
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import linalg

from esp_optimizer.space import Box
from esp_optimizer.utils.logger import get_logger

logger = get_logger(__name__)

# Jitter is tried at 1e-10 * nu2, 1e-9 * nu2, ..., 1e-4 * nu2
JITTER_EXPONENTS = range(-10, -3)
_LOG_2PI = math.log(2.0 * math.pi)


class CholeskyError(np.linalg.LinAlgError):
    """Raised when a covariance matrix cannot be factorized even with jitter."""

    def __init__(self, size: int, jitter: float, condition: float):
        self.size = size
        self.jitter = jitter
        self.condition = condition
        super().__init__(
            f"Cholesky factorization failed for a {size}x{size} matrix "
            f"(last jitter {jitter:.1e}, condition number ~{condition:.3e})"
        )


@dataclass(frozen=True, eq=False)
class Hyperparams:
    """GP hyperparameters psi.

    Attributes:
        lengthscales: Positive lengthscale per input dimension
        amplitude: Signal variance nu2
        noise: Observation noise variance s2
        mean: Constant prior mean mu0
    """

    lengthscales: np.ndarray
    amplitude: float
    noise: float
    mean: float = 0.0

    def __post_init__(self) -> None:
        lengthscales = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        if lengthscales.ndim != 1 or lengthscales.size == 0:
            raise ValueError(f"Lengthscales must be a non-empty vector, got shape {lengthscales.shape}")
        if not np.all(np.isfinite(lengthscales)) or np.any(lengthscales <= 0):
            raise ValueError(f"Lengthscales must be positive and finite, got {lengthscales}")
        if not (math.isfinite(self.amplitude) and self.amplitude > 0):
            raise ValueError(f"Amplitude must be positive, got {self.amplitude}")
        if not (math.isfinite(self.noise) and self.noise > 0):
            raise ValueError(f"Noise variance must be positive, got {self.noise}")
        if not math.isfinite(self.mean):
            raise ValueError(f"Prior mean must be finite, got {self.mean}")
        object.__setattr__(self, "lengthscales", lengthscales)
        object.__setattr__(self, "amplitude", float(self.amplitude))
        object.__setattr__(self, "noise", float(self.noise))
        object.__setattr__(self, "mean", float(self.mean))

    @property
    def dim(self) -> int:
        return int(self.lengthscales.shape[0])

    def pack(self) -> np.ndarray:
        """Flatten to (lengthscales..., amplitude, noise, mean)."""
        return np.concatenate([self.lengthscales, [self.amplitude, self.noise, self.mean]])

    @classmethod
    def unpack(cls, vector: np.ndarray) -> "Hyperparams":
        vector = np.asarray(vector, dtype=float)
        if vector.ndim != 1 or vector.size < 4:
            raise ValueError(f"Packed hyperparameters need at least 4 entries, got shape {vector.shape}")
        return cls(vector[:-3], vector[-3], vector[-2], vector[-1])

    def __repr__(self) -> str:
        return (
            f"Hyperparams(lengthscales={np.array2string(self.lengthscales, precision=4)}, "
            f"amplitude={self.amplitude:.4g}, noise={self.noise:.4g}, mean={self.mean:.4g})"
        )


@dataclass(frozen=True, eq=False)
class History:
    """Observation set D_t = {(x_i, y_i)}.

    Attributes:
        points: Query points, shape (t, d)
        values: Observed values, shape (t,)
        bounds: Optional search box every point must lie in
    """

    points: np.ndarray
    values: np.ndarray
    bounds: Optional[Box] = None

    def __post_init__(self) -> None:
        points = np.asarray(self.points, dtype=float)
        values = np.atleast_1d(np.asarray(self.values, dtype=float))
        if points.size == 0 and points.ndim < 2:
            if self.bounds is None:
                raise ValueError("An empty history needs bounds to know its dimension")
            points = points.reshape(0, self.bounds.dim)
        if points.ndim != 2:
            raise ValueError(f"History points must be a (t, d) array, got shape {points.shape}")
        if values.size == 0:
            values = values.reshape(0)
        if values.ndim != 1 or values.shape[0] != points.shape[0]:
            raise ValueError(
                f"History has {points.shape[0]} points but {values.shape} values"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("History values must be finite")
        if self.bounds is not None:
            if points.shape[1] != self.bounds.dim:
                raise ValueError(
                    f"History points have dimension {points.shape[1]}, bounds have {self.bounds.dim}"
                )
            if points.shape[0] > 0 and not self.bounds.contains(points):
                raise ValueError("History contains points outside the search box")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "values", values)

    @classmethod
    def empty(cls, bounds: Box) -> "History":
        return cls(np.zeros((0, bounds.dim)), np.zeros(0), bounds)

    def __len__(self) -> int:
        return int(self.points.shape[0])

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])

    @property
    def best_value(self) -> Optional[float]:
        """Lowest observed value, None when nothing has been observed."""
        if len(self) == 0:
            return None
        return float(np.min(self.values))

    def augment(self, x: np.ndarray, y: float) -> "History":
        """Return a new history with (x, y) appended."""
        x = np.asarray(x, dtype=float).reshape(1, -1)
        return History(np.vstack([self.points, x]), np.append(self.values, float(y)), self.bounds)


@dataclass(frozen=True, eq=False)
class PosteriorState:
    """Cached factorization of K_t + s2 I for one hyperparameter setting.

    Attributes:
        hyperparams: Hyperparameters the state was fitted with
        history: Conditioning data
        chol: Lower Cholesky factor of K_t + s2 I (+ jitter)
        alpha: (K_t + s2 I)^{-1} (y - mu0)
        jitter: Diagonal jitter that was needed, 0 when none
    """

    hyperparams: Hyperparams
    history: History
    chol: np.ndarray
    alpha: np.ndarray
    jitter: float = 0.0


def _check_dim(x: np.ndarray, hp: Hyperparams) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.ndim != 2 or x.shape[1] != hp.dim:
        raise ValueError(f"Expected inputs of dimension {hp.dim}, got shape {x.shape}")
    return x


def kernel_matrix(x1: np.ndarray, x2: np.ndarray, hp: Hyperparams) -> np.ndarray:
    """Matérn 5/2 cross-covariance between the rows of x1 (n, d) and x2 (m, d)."""
    x1 = _check_dim(x1, hp)
    x2 = _check_dim(x2, hp)
    scaled = (x1[:, None, :] - x2[None, :, :]) / hp.lengthscales
    r = np.sqrt(5.0 * np.sum(scaled ** 2, axis=-1))
    return hp.amplitude * (1.0 + r + r ** 2 / 3.0) * np.exp(-r)


def kernel_matern52(x: np.ndarray, x2: np.ndarray, hp: Hyperparams) -> float:
    """Evaluate k(x, x2) = nu2 (1 + r + r^2/3) exp(-r), r = sqrt(5 (x-x2)^T diag(l^2)^{-1} (x-x2))."""
    x = np.asarray(x, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x.ndim != 1 or x2.ndim != 1 or x.shape != x2.shape or x.shape[0] != hp.dim:
        raise ValueError(
            f"kernel_matern52 needs two vectors of dimension {hp.dim}, got {x.shape} and {x2.shape}"
        )
    return float(kernel_matrix(x[None, :], x2[None, :], hp)[0, 0])


def jittered_cholesky(matrix: np.ndarray, amplitude: float) -> Tuple[np.ndarray, float]:
    """
    Lower Cholesky factor with bounded jitter escalation.

    Tries the plain matrix first, then adds 1e-10 * amplitude to the diagonal,
    escalating by 10x up to 1e-4 * amplitude.

    Args:
        matrix: Symmetric matrix to factorize
        amplitude: Signal variance the jitter is scaled by

    Returns:
        Tuple of (lower factor, jitter used)

    Raises:
        CholeskyError: If every jitter level fails
    """
    try:
        return linalg.cholesky(matrix, lower=True), 0.0
    except linalg.LinAlgError:
        pass

    size = matrix.shape[0]
    eye = np.eye(size)
    jitter = 0.0
    for exponent in JITTER_EXPONENTS:
        jitter = 10.0 ** exponent * amplitude
        try:
            chol = linalg.cholesky(matrix + jitter * eye, lower=True)
        except linalg.LinAlgError:
            continue
        logger.debug(f"Cholesky of {size}x{size} matrix needed jitter {jitter:.1e}")
        return chol, jitter

    with np.errstate(all="ignore"):
        condition = float(np.linalg.cond(matrix))
    raise CholeskyError(size, jitter, condition)


def fit_posterior(history: History, hp: Hyperparams) -> PosteriorState:
    """
    Condition the GP on a history.

    Args:
        history: Observation set
        hp: Hyperparameters

    Returns:
        PosteriorState ready for predict and sample_joint

    Raises:
        ValueError: If history and hyperparameter dimensions differ
        CholeskyError: If K_t + s2 I cannot be factorized
    """
    if history.dim != hp.dim:
        raise ValueError(f"History has dimension {history.dim}, hyperparameters {hp.dim}")

    t = len(history)
    if t == 0:
        return PosteriorState(hp, history, np.zeros((0, 0)), np.zeros(0))

    gram = kernel_matrix(history.points, history.points, hp)
    gram[np.diag_indices_from(gram)] += hp.noise
    chol, jitter = jittered_cholesky(gram, hp.amplitude)
    if jitter > 0:
        logger.warning(f"GP fit on {t} points required jitter {jitter:.1e}")
    alpha = linalg.cho_solve((chol, True), history.values - hp.mean)
    return PosteriorState(hp, history, chol, alpha, jitter)


def predict_batch(state: PosteriorState, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Posterior mean and variance at every row of x (n, d); variances clamped at 0."""
    hp = state.hyperparams
    x = _check_dim(x, hp)
    n = x.shape[0]
    if len(state.history) == 0:
        return np.full(n, hp.mean), np.full(n, hp.amplitude)

    cross = kernel_matrix(x, state.history.points, hp)
    mean = hp.mean + cross @ state.alpha
    v = linalg.solve_triangular(state.chol, cross.T, lower=True)
    variance = hp.amplitude - np.sum(v ** 2, axis=0)
    return mean, np.maximum(variance, 0.0)


def predict(state: PosteriorState, x: np.ndarray) -> Tuple[float, float]:
    """Posterior (mean, variance) of f at a single point x."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"predict expects a single point, got shape {x.shape}")
    mean, variance = predict_batch(state, x[None, :])
    return float(mean[0]), float(variance[0])


def log_marginal(history: History, hp: Hyperparams) -> float:
    """log N(y; mu0 1, K_t + s2 I); 0 for an empty history."""
    if len(history) == 0:
        return 0.0
    state = fit_posterior(history, hp)
    residual = history.values - hp.mean
    quadratic = float(residual @ state.alpha)
    log_det = 2.0 * float(np.sum(np.log(np.diag(state.chol))))
    return -0.5 * quadratic - 0.5 * log_det - 0.5 * len(history) * _LOG_2PI


def posterior_covariance(state: PosteriorState, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Joint posterior mean vector and covariance matrix of f at the rows of z."""
    hp = state.hyperparams
    z = _check_dim(z, hp)
    prior_cov = kernel_matrix(z, z, hp)
    if len(state.history) == 0:
        return np.full(z.shape[0], hp.mean), prior_cov

    cross = kernel_matrix(z, state.history.points, hp)
    mean = hp.mean + cross @ state.alpha
    v = linalg.solve_triangular(state.chol, cross.T, lower=True)
    cov = prior_cov - v.T @ v
    return mean, 0.5 * (cov + cov.T)


def sample_joint(
    state: PosteriorState,
    z: np.ndarray,
    s: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """
    Draw s joint posterior samples of f at the G rows of z.

    Args:
        state: Fitted posterior
        z: Points to sample at, shape (G, d)
        s: Number of samples
        rng: Seeded random source

    Returns:
        Array of shape (s, G)

    Raises:
        ValueError: If s < 1 or z is empty
        CholeskyError: If the joint covariance cannot be factorized
    """
    if s < 1:
        raise ValueError(f"Sample count must be at least 1, got {s}")
    z = _check_dim(z, state.hyperparams)
    if z.shape[0] < 1:
        raise ValueError("sample_joint needs at least one point")

    mean, cov = posterior_covariance(state, z)
    chol, _ = jittered_cholesky(cov, state.hyperparams.amplitude)
    eps = rng.standard_normal((s, z.shape[0]))
    return mean + eps @ chol.T
