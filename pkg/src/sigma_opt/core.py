"""Dense numeric kernels and scalar functions used by every other module.

Everything here is double precision. The solvers are deliberately direct
(Cholesky, QR): problem sizes are chosen so that dense factorizations of the
reduced systems are cheap.
"""

import numpy as np
import scipy.linalg

from .errors import DomainError, InvalidDimensions, NotPositiveDefinite
from .rng import RngState

# Self-concordant sub-optimality bound f - f* <= lambda^2 is valid up to this
# decrement; it doubles as the upper limit for the solver tolerances.
DECREMENT_LIMIT = 0.68
DECREMENT_SQ_LIMIT = DECREMENT_LIMIT**2


def spd_solve(A: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``A x = rhs`` for symmetric positive definite ``A``.

    Uses a Cholesky factorization. If that fails, retries once with the
    diagonal shifted by ``1e-10 * (1 + max diag)`` -- a PD matrix that fails to
    factor is a conditioning artifact, and a tiny shift fixes it without
    masking genuinely indefinite inputs.

    Raises
    ------
    NotPositiveDefinite
        If the factorization fails even after the shift retry.
    InvalidDimensions
        If ``A`` is not square or its order does not match ``rhs``.
    """
    A = np.asarray(A, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidDimensions(f"expected a square matrix, got shape {A.shape}")
    if rhs.shape[0] != A.shape[0]:
        raise InvalidDimensions(f"matrix order {A.shape[0]} != rhs length {rhs.shape[0]}")
    try:
        c, low = scipy.linalg.cho_factor(A, lower=True)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
        shift = 1e-10 * (1.0 + float(np.max(np.diagonal(A))))
        try:
            c, low = scipy.linalg.cho_factor(A + shift * np.eye(A.shape[0]), lower=True)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
            raise NotPositiveDefinite(
                f"Cholesky failed even after diagonal shift {shift:.3e}"
            ) from exc
    return scipy.linalg.cho_solve((c, low), rhs)


def omega(x):
    """omega(x) = x - log(1 + x), the lower sub-optimality envelope (x >= 0)."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0):
        raise DomainError("omega is defined for x >= 0")
    out = x - np.log1p(x)
    return float(out) if out.ndim == 0 else out

def omega_star(x):
    """omega*(x) = -x - log(1 - x), the upper sub-optimality envelope (0 <= x < 1)."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0) or np.any(x >= 1):
        raise DomainError("omega_star is defined for x in [0, 1)")
    out = -x - np.log1p(-x)
    return float(out) if out.ndim == 0 else out


def sample_without_replacement(N: int, n: int, rng: RngState) -> np.ndarray:
    """Uniformly sample ``n`` of ``N`` indices without replacement, sorted ascending.

    Each index has marginal inclusion probability ``n / N``. Advances ``rng``
    by exactly one draw.
    """
    if not 1 <= n <= N:
        raise InvalidDimensions(f"need 1 <= n <= N, got n={n}, N={N}")
    gen = rng.child()
    idx = gen.choice(N, size=n, replace=False)
    idx.sort()
    return idx.astype(np.int64)


def haar_orthogonal(dim: int, rng: RngState) -> np.ndarray:
    """Random orthogonal matrix from the Haar distribution on O(dim).

    QR of a standard Gaussian matrix, with the sign ambiguity fixed by the
    diagonal of the triangular factor so the distribution is exactly Haar.
    """
    if dim < 1:
        raise InvalidDimensions(f"dim must be >= 1, got {dim}")
    return haar_frame(dim, dim, rng.child())


def haar_frame(nrows: int, ncols: int, gen: np.random.Generator) -> np.ndarray:
    """First ``ncols`` columns of a Haar-orthogonal ``nrows x nrows`` matrix."""
    if not 1 <= ncols <= nrows:
        raise InvalidDimensions(f"need 1 <= ncols <= nrows, got {ncols}, {nrows}")
    g = gen.standard_normal((nrows, ncols))
    q, r = np.linalg.qr(g, mode="reduced")
    signs = np.sign(np.diagonal(r))
    signs[signs == 0] = 1.0
    return q * signs
