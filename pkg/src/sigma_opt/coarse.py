"""Two-level machinery: coordinate prolongation/restriction, the reduced
(Galerkin) system, coarse and Newton directions, and the Nystrom view.

The prolongation ``P`` is a set of ``n`` distinct identity columns (so it has
full column rank by construction) and the restriction is ``R = P^T``. The
reduced curvature ``Q_H = R H P`` is then exactly the ``S x S`` sub-block of
the Hessian, assembled without forming the N x N matrix.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .core import sample_without_replacement, spd_solve
from .errors import InvalidDimensions
from .objectives import ObjectiveModel, _check_index_set
from .rng import RngState


@dataclass(frozen=True)
class CoarseOperator:
    """Index set realizing P (identity columns) and R = P^T."""

    indices: np.ndarray  # strictly increasing, values in [0, fine_dim)
    fine_dim: int

    def __post_init__(self):
        object.__setattr__(self, "indices", _check_index_set(self.indices, self.fine_dim))

    @property
    def n(self) -> int:
        return int(self.indices.shape[0])

    @property
    def is_full(self) -> bool:
        return self.n == self.fine_dim


@dataclass(frozen=True)
class GalerkinSystem:
    """Reduced curvature ``Q_H`` and reduced gradient ``R grad f`` at ``x_ref``."""

    q: np.ndarray
    g: np.ndarray
    x_ref: np.ndarray


@dataclass(frozen=True)
class Decrements:
    """Approximate decrement, plus the Newton decrement when it was requested."""

    lambda_hat: float
    lam: Optional[float] = None


class CoarseStep(NamedTuple):
    d_coarse: np.ndarray  # length n
    d_hat: np.ndarray  # length N, the prolonged direction
    lambda_hat: float


class NewtonStep(NamedTuple):
    d: np.ndarray
    lam: float


def build_operator(N: int, n: int, rng: RngState) -> CoarseOperator:
    """Fresh uniform coordinate operator; resample every iteration."""
    return CoarseOperator(sample_without_replacement(N, n, rng), N)


def full_operator(N: int) -> CoarseOperator:
    return CoarseOperator(np.arange(N, dtype=np.int64), N)


def prolong(op: CoarseOperator, v_coarse: np.ndarray) -> np.ndarray:
    """Scatter a coarse vector into the fine space (zeros off the index set)."""
    if v_coarse.shape[0] != op.n:
        raise InvalidDimensions(f"expected length {op.n}, got {v_coarse.shape[0]}")
    out = np.zeros(op.fine_dim)
    out[op.indices] = v_coarse
    return out


def restrict(op: CoarseOperator, v_fine: np.ndarray) -> np.ndarray:
    """Gather the index-set entries of a fine vector; restrict(prolong(v)) == v."""
    if v_fine.shape[0] != op.fine_dim:
        raise InvalidDimensions(f"expected length {op.fine_dim}, got {v_fine.shape[0]}")
    return v_fine[op.indices]


def galerkin_system(
    model: ObjectiveModel,
    x: np.ndarray,
    op: CoarseOperator,
    row_sample: np.ndarray | None = None,
) -> GalerkinSystem:
    """Assemble ``Q_H`` and the reduced gradient at ``x`` in O(m n^2)."""
    q = model.reduced_hessian(x, op.indices, row_sample)
    g = model.reduced_gradient(x, op.indices)
    return GalerkinSystem(q=q, g=g, x_ref=np.array(x, copy=True))


def coarse_direction(sys: GalerkinSystem, op: CoarseOperator) -> CoarseStep:
    """Solve the reduced system and prolong.

    ``lambda_hat = sqrt(-g^T d_coarse)``; the negative-rounding case is clamped
    to zero. With the full operator this is exactly the Newton direction.
    """
    d_coarse = spd_solve(sys.q, -sys.g)
    lam_sq = -float(sys.g @ d_coarse)
    return CoarseStep(d_coarse, prolong(op, d_coarse), float(np.sqrt(max(lam_sq, 0.0))))


def newton_direction(model: ObjectiveModel, x: np.ndarray) -> NewtonStep:
    """Full Newton direction and decrement (materializes the N x N Hessian)."""
    g = model.gradient(x)
    d = spd_solve(model.hessian(x), -g)
    lam_sq = -float(g @ d)
    return NewtonStep(d, float(np.sqrt(max(lam_sq, 0.0))))


def nystrom_approximation(H: np.ndarray, op: CoarseOperator) -> np.ndarray:
    """Rank-``n`` approximation ``H Y (Y^T H Y)^{-1} Y^T H`` with Y the identity
    columns of the operator. ``H - H_n`` is positive semidefinite. Diagnostic use."""
    if H.shape[0] != H.shape[1] or H.shape[0] != op.fine_dim:
        raise InvalidDimensions(f"H shape {H.shape} does not match operator dim {op.fine_dim}")
    C = H[:, op.indices]
    W = C[op.indices, :]
    Hn = C @ spd_solve(W, C.T)
    return 0.5 * (Hn + Hn.T)


def decrements(
    model: ObjectiveModel,
    x: np.ndarray,
    op: CoarseOperator,
    row_sample: np.ndarray | None = None,
    want_newton: bool = False,
) -> Decrements:
    """Approximate decrement from the coarse path; the Newton decrement only on
    request (it costs a dense factorization)."""
    step = coarse_direction(galerkin_system(model, x, op, row_sample), op)
    lam = newton_direction(model, x).lam if want_newton else None
    return Decrements(lambda_hat=step.lambda_hat, lam=lam)
