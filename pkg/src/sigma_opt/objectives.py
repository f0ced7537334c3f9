"""GLM objectives: Gaussian least squares, Poisson with identity link, logistic.

Each model exposes value/gradient/Hessian oracles plus the fast reduced paths
that slice coordinates (and optionally sub-sample data rows) without ever
materializing the N x N Hessian.

Conventions:

* Gaussian and logistic losses are averaged over the ``m`` rows.
* The Poisson loss is the *sum* over rows multiplied by ``M^2/4`` with
  ``M = 2 sqrt(m) max_i(1/sqrt(b_i))``, which makes the objective
  self-concordant with constant 2; the regularizers are added unscaled.
* Logistic labels live in {-1, +1}; {0, 1} inputs are mapped on ingestion.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DomainError, InvalidDimensions, NoFeasibleStart, OutOfDomain

GAUSSIAN = "gaussian"
POISSON = "poisson"
LOGISTIC = "logistic"
KINDS = (GAUSSIAN, POISSON, LOGISTIC)


@dataclass
class Dataset:
    """Feature matrix ``A`` (m x N, rows are data points) and response vector ``b``."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.A = np.ascontiguousarray(np.asarray(self.A, dtype=np.float64))
        self.b = np.ascontiguousarray(np.asarray(self.b, dtype=np.float64))
        if self.A.ndim != 2:
            raise InvalidDimensions(f"A must be 2-d, got shape {self.A.shape}")
        if self.b.shape != (self.A.shape[0],):
            raise InvalidDimensions(
                f"b length {self.b.shape} does not match {self.A.shape[0]} rows"
            )
        if not (np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.b))):
            raise DomainError("dataset contains NaN or Inf")

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def N(self) -> int:
        return self.A.shape[1]


@dataclass(frozen=True)
class Regularization:
    """l2 weight ``xi2``, pseudo-Huber weight ``xi1``, and its smoothing ``c``.

    The pseudo-Huber term is ``xi1 * sum_i (sqrt(c^2 + x_i^2) - c)``, a smooth
    l1 surrogate; small ``c`` approximates the l1 norm closely.
    """

    xi2: float = 0.0
    xi1: float = 0.0
    c: float = 1e-2

    def __post_init__(self):
        if self.xi1 < 0 or self.xi2 < 0:
            raise DomainError("regularization weights must be nonnegative")
        if self.c <= 0:
            raise DomainError("pseudo-Huber smoothing c must be positive")

    @property
    def active(self) -> bool:
        return self.xi1 > 0 or self.xi2 > 0

    def value(self, x: np.ndarray) -> float:
        v = self.xi2 * float(x @ x)
        if self.xi1 > 0:
            v += self.xi1 * float(np.sum(np.sqrt(self.c**2 + x * x) - self.c))
        return v

    def grad(self, x: np.ndarray) -> np.ndarray:
        g = 2.0 * self.xi2 * x
        if self.xi1 > 0:
            g = g + self.xi1 * x / np.sqrt(self.c**2 + x * x)
        return g

    def hess_diag(self, x: np.ndarray) -> np.ndarray:
        d = np.full_like(x, 2.0 * self.xi2)
        if self.xi1 > 0:
            d = d + self.xi1 * self.c**2 / np.power(self.c**2 + x * x, 1.5)
        return d


@dataclass(frozen=True)
class DomainStatus:
    """Feasibility of an iterate; ``margin`` is ``min_i a_i^T x`` for Poisson."""

    feasible: bool
    margin: float


def poisson_scale(b: np.ndarray, m: int) -> float:
    """Self-concordance scaling ``M^2/4`` with ``M = 2 sqrt(m) max_i(1/sqrt(b_i))``.

    The scaled Poisson objective is self-concordant with constant 2.
    Requires integer counts ``b_i >= 1``.
    """
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != m:
        raise InvalidDimensions(f"expected {m} responses, got {b.shape[0]}")
    if np.any(b < 1) or np.any(b != np.floor(b)):
        raise DomainError("Poisson responses must be integers >= 1")
    return m * float(np.max(1.0 / b))


@dataclass
class ObjectiveModel:
    """A GLM kind plus dataset and regularization, exposing derivative oracles.

    Immutable after construction; all evaluations are read-only. Use
    :func:`make_objective` to build one (it validates labels and computes the
    Poisson scale).
    """

    kind: str
    dataset: Dataset
    reg: Regularization = field(default_factory=Regularization)
    scale: float = 1.0

    # -- plumbing ----------------------------------------------------------

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Linear predictor ``A x``."""
        return self.dataset.A @ x

    def _row_coeff(self, n_rows: int) -> float:
        # Gaussian/logistic average over rows; Poisson keeps the scaled sum.
        # Either way a row subset of size k is reweighted by m/k so that the
        # full subset reproduces the exact objective.
        m = self.dataset.m
        base = self.scale if self.kind == POISSON else 1.0 / m
        return base * (m / n_rows)

    def _check_domain(self, z: np.ndarray) -> None:
        if self.kind == POISSON and float(z.min()) <= 0.0:
            raise OutOfDomain(f"Poisson margin min a_i^T x = {float(z.min()):.3e} <= 0")

    def domain_status(self, x: np.ndarray) -> DomainStatus:
        if self.kind != POISSON:
            return DomainStatus(feasible=True, margin=np.inf)
        margin = float(self.predict(x).min())
        return DomainStatus(feasible=margin > 0.0, margin=margin)

    # -- oracles -----------------------------------------------------------

    def evaluate(self, x: np.ndarray) -> float:
        """Objective value. Raises :class:`OutOfDomain` on infeasible Poisson iterates."""
        z = self.predict(x)
        self._check_domain(z)
        loss, _, _ = kernels.glm_terms(self.kind, z, self.dataset.b)
        return self._row_coeff(self.dataset.m) * loss + self.reg.value(x)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        z = self.predict(x)
        self._check_domain(z)
        _, w1, _ = kernels.glm_terms(self.kind, z, self.dataset.b)
        return self._row_coeff(self.dataset.m) * (self.dataset.A.T @ w1) + self.reg.grad(x)

    def hessian(self, x: np.ndarray) -> np.ndarray:
        """Dense N x N Hessian; intended for N small enough to materialize."""
        z = self.predict(x)
        self._check_domain(z)
        _, _, w2 = kernels.glm_terms(self.kind, z, self.dataset.b)
        A = self.dataset.A
        h = self._row_coeff(self.dataset.m) * (A.T @ (w2[:, None] * A))
        h = 0.5 * (h + h.T)
        d = self.reg.hess_diag(x)
        h[np.diag_indices_from(h)] += d
        return h

    def reduced_gradient(self, x: np.ndarray, S: np.ndarray) -> np.ndarray:
        """Gradient restricted to the coordinate set ``S`` (exact slice)."""
        S = _check_index_set(S, self.dataset.N)
        return self.gradient(x)[S]

    def reduced_hessian(
        self, x: np.ndarray, S: np.ndarray, row_sample: np.ndarray | None = None
    ) -> np.ndarray:
        """The ``S x S`` block of the Hessian in O(len(rows) * n^2).

        With ``row_sample`` given, the data term is the reweighted sum over the
        sampled rows (full rows reproduce the exact block). Never forms the
        N x N Hessian.
        """
        S = _check_index_set(S, self.dataset.N)
        if row_sample is None:
            rows = np.arange(self.dataset.m, dtype=np.int64)
        else:
            rows = _check_index_set(row_sample, self.dataset.m)
        z = self.predict(x)
        self._check_domain(z)
        _, _, w2 = kernels.glm_terms(self.kind, z, self.dataset.b)
        q = self._row_coeff(rows.shape[0]) * kernels.gram_gather(self.dataset.A, w2, S, rows)
        d = self.reg.hess_diag(x[S])
        q[np.diag_indices_from(q)] += d
        return q


class Ray:
    """The objective restricted to ``x + t d``, with stable differences.

    ``delta(t)`` returns ``f(x + t d) - f(x)`` computed without subtracting
    large near-equal values, so line searches keep resolving decrements far
    below the rounding noise of the absolute objective value. Each call is
    O(m + N) after the two matrix-vector products paid at construction.
    """

    def __init__(self, model: "ObjectiveModel", x: np.ndarray, d: np.ndarray):
        self.model = model
        self.x = x
        self.d = d
        self.z = model.predict(x)
        self.dz = model.predict(d)
        if model.kind == POISSON and float(self.z.min()) <= 0.0:
            raise OutOfDomain("ray base point is infeasible")
        if model.kind == GAUSSIAN:
            r = self.z - model.dataset.b
            self._s1 = float(self.dz @ r)
            self._s2 = float(self.dz @ self.dz)
        elif model.kind == LOGISTIC:
            from scipy.special import expit

            self._sig = expit(-model.dataset.b * self.z)
            self._bdz = model.dataset.b * self.dz

    def feasible(self, t: float) -> bool:
        if self.model.kind != POISSON:
            return True
        return float(np.min(self.z + t * self.dz)) > 0.0

    def delta(self, t: float) -> float:
        """``f(x + t d) - f(x)``; raises :class:`OutOfDomain` when infeasible."""
        model = self.model
        coeff = model._row_coeff(model.dataset.m)
        if model.kind == GAUSSIAN:
            row = coeff * (t * self._s1 + 0.5 * t * t * self._s2)
        elif model.kind == LOGISTIC:
            with np.errstate(over="ignore"):
                row = coeff * float(np.sum(np.log1p(self._sig * np.expm1(-t * self._bdz))))
        else:
            if not self.feasible(t):
                raise OutOfDomain("trial point left the Poisson domain")
            row = coeff * float(np.sum(t * self.dz - model.dataset.b * np.log1p(t * self.dz / self.z)))
        return row + self._reg_delta(t)

    def _reg_delta(self, t: float) -> float:
        reg = self.model.reg
        if not reg.active:
            return 0.0
        x, d = self.x, self.d
        out = reg.xi2 * (2.0 * t * float(x @ d) + t * t * float(d @ d))
        if reg.xi1 > 0:
            y = x + t * d
            num = t * d * (2.0 * x + t * d)  # y^2 - x^2 without cancellation
            den = np.sqrt(reg.c**2 + y * y) + np.sqrt(reg.c**2 + x * x)
            out += reg.xi1 * float(np.sum(num / den))
        return out


def _check_index_set(S: np.ndarray, limit: int) -> np.ndarray:
    S = np.asarray(S, dtype=np.int64)
    if S.ndim != 1 or S.size < 1:
        raise InvalidDimensions("index set must be a nonempty 1-d array")
    if np.any(np.diff(S) <= 0):
        raise InvalidDimensions("index set must be strictly increasing")
    if S[0] < 0 or S[-1] >= limit:
        raise InvalidDimensions(f"index set entries must lie in [0, {limit})")
    return S


def make_objective(kind: str, dataset: Dataset, reg: Regularization | None = None) -> ObjectiveModel:
    """Validate labels for ``kind`` and build the model (computing the Poisson scale)."""
    if kind not in KINDS:
        raise DomainError(f"unknown model kind {kind!r}; expected one of {KINDS}")
    reg = reg or Regularization()
    if kind == POISSON:
        scale = poisson_scale(dataset.b, dataset.m)
        return ObjectiveModel(kind, dataset, reg, scale=scale)
    if kind == LOGISTIC:
        labels = set(np.unique(dataset.b).tolist())
        if labels <= {0.0, 1.0}:
            dataset = Dataset(dataset.A, np.where(dataset.b > 0.5, 1.0, -1.0))
        elif not labels <= {-1.0, 1.0}:
            raise DomainError(f"logistic labels must be in {{0,1}} or {{-1,+1}}, got {sorted(labels)[:6]}")
    return ObjectiveModel(kind, dataset, reg, scale=1.0)


def feasible_start(model: ObjectiveModel) -> np.ndarray:
    """A point in the objective's domain.

    Gaussian/logistic: the zero vector. Poisson: the all-ones direction scaled
    by the row sums so every margin is at least 1; if the row sums have mixed
    signs (or a zero row exists) that direction cannot work and the caller must
    supply a start.
    """
    N = model.dataset.N
    if model.kind != POISSON:
        return np.zeros(N)
    r = model.dataset.A @ np.ones(N)
    if np.all(r > 0):
        return np.ones(N) / float(r.min())
    if np.all(r < 0):
        return -np.ones(N) / float((-r).min())
    raise NoFeasibleStart(
        "rows cannot all be made positive along the all-ones direction; supply x0 explicitly"
    )


def positive_margin_start(dataset: Dataset, target_mean: float = 5.0, tries: int = 20,
                          seed: int = 0) -> np.ndarray:
    """Search for ``x`` with ``A x`` entrywise positive, rescaled so the margins
    average ``target_mean``.

    Tries least squares against positive targets first, then decides the
    feasibility cone exactly with an LP. Complements :func:`feasible_start`
    when the all-ones heuristic fails, e.g. for Haar-random matrices whose row
    sums have mixed signs.
    """
    from .data import _positive_margin_vector

    gen = np.random.default_rng(seed)
    x = _positive_margin_vector(dataset.A, gen, tries)
    if x is None:
        raise NoFeasibleStart("the domain {x : A x > 0} is empty or numerically so")
    return x * (target_mean / float((dataset.A @ x).mean()))
