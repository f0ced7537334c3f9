"""The multilevel randomized Newton solver.

Each iteration draws a fresh coordinate operator, solves the reduced system
for the coarse direction, optionally falls back to the full Newton (fine)
direction per the configured check mode, and globalizes with an Armijo
backtracking search from the unit step. Self-concordance guarantees the
damped step ``1/(1 + decrement)`` always passes the descent test, so the
search never returns less than ``beta`` times that value. For the Poisson
model the search instead starts from the damped step grown while the trial
point stays inside the open domain.

The run stops when the squared decrement of the computed direction falls to
``epsilon`` (inclusive), which bounds the sub-optimality gap by ``epsilon``
for tolerances below ``0.68^2``.
"""

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .coarse import (
    CoarseOperator,
    build_operator,
    coarse_direction,
    galerkin_system,
    newton_direction,
)
from .core import DECREMENT_SQ_LIMIT, sample_without_replacement
from .errors import (
    DomainError,
    LineSearchFailed,
    MissingNewtonDecrement,
    NotPositiveDefinite,
    OutOfDomain,
)
from .objectives import POISSON, ObjectiveModel, Ray
from .rng import RngState

COARSE = "coarse"
FINE = "fine"

# direction-selection modes
FULL_DECREMENT = "full_decrement"
EUCLIDEAN_PROXY = "euclidean_proxy"
NU_ONLY = "nu_only"
ALWAYS_COARSE = "always_coarse"
CHECK_MODES = (FULL_DECREMENT, EUCLIDEAN_PROXY, NU_ONLY, ALWAYS_COARSE)

CONVERGED = "converged"
MAX_ITER = "max_iter"
TIMEOUT = "timeout"
ERROR = "error"


@dataclass
class SigmaConfig:
    """Solver parameters; ranges are validated at construction.

    ``check_mode`` selects how coarse vs fine directions are chosen:

    * ``full_decrement``: coarse iff ``lambda_hat > mu * lambda`` and
      ``lambda_hat > nu`` (computes the Newton decrement every iteration).
    * ``euclidean_proxy``: the cheap variant using gradient norms,
      coarse iff ``||g_H|| > mu ||g||`` and ``||g_H|| > nu``.
    * ``nu_only``: coarse iff ``lambda_hat > nu``.
    * ``always_coarse`` (default): never compute the fine machinery, so large-N
      runs never materialize an N x N Hessian.
    """

    n: int
    mu: float = 0.5
    nu: float = 1e-4
    epsilon: float = 1e-8
    alpha: float = 0.25
    beta: float = 0.5
    zeta: float = 2.0  # Poisson feasible-step growth factor
    check_mode: str = ALWAYS_COARSE
    row_sample: Optional[int] = None
    max_iter: int = 200
    max_seconds: float = 60.0
    seed: int = 0
    freeze_operator: bool = False  # ablation: one operator for the whole run

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"coarse dimension n must be >= 1, got {self.n}")
        if not 0.0 < self.mu < 1.0:
            raise ValueError(f"mu must be in (0,1), got {self.mu}")
        if not 0.0 < self.nu < DECREMENT_SQ_LIMIT:
            raise ValueError(f"nu must be in (0, 0.68^2), got {self.nu}")
        if not 0.0 < self.epsilon < DECREMENT_SQ_LIMIT:
            raise ValueError(f"epsilon must be in (0, 0.68^2), got {self.epsilon}")
        if not 0.0 < self.alpha < 0.5:
            raise ValueError(f"alpha must be in (0, 0.5), got {self.alpha}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must be in (0,1), got {self.beta}")
        if not self.zeta > 1.0:
            raise ValueError(f"zeta must be > 1, got {self.zeta}")
        if self.check_mode not in CHECK_MODES:
            raise ValueError(f"check_mode must be one of {CHECK_MODES}, got {self.check_mode!r}")
        if self.row_sample is not None and self.row_sample < 1:
            raise ValueError(f"row_sample must be >= 1, got {self.row_sample}")
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")
        if self.max_seconds <= 0:
            raise ValueError("max_seconds must be positive")


@dataclass
class TraceRecord:
    """One per-iterate log row; ``step == 0`` marks the terminal row."""

    iter: int
    elapsed_s: float
    f: float
    grad_norm: float
    lambda_hat: float
    lam: Optional[float]
    step: float
    direction: str
    backtracks: int


@dataclass
class SolveResult:
    x_final: np.ndarray
    trace: list[TraceRecord] = field(default_factory=list)
    status: str = MAX_ITER
    final_decrement_sq: float = np.inf
    message: str = ""

    @property
    def iterations(self) -> int:
        return max(len(self.trace) - 1, 0)


def damped_initial_step(lam_hat: float) -> float:
    """The Armijo start ``1/(1 + decrement)``, which always passes the descent
    test for self-concordant objectives."""
    return 1.0 / (1.0 + lam_hat)


def stopping_check(decrement_sq: float, epsilon: float) -> bool:
    """Inclusive test ``decrement_sq <= epsilon``."""
    if decrement_sq < 0:
        raise DomainError("decrement_sq must be nonnegative")
    return decrement_sq <= epsilon


def eta_region(e: float) -> float:
    """Super-linear region threshold ``(3 - sqrt(5 + 4e))/2`` for ``e in [0,1]``.

    Decreasing in ``e``; at ``e = 0`` it equals ``(3 - sqrt(5))/2``, the root of
    ``x/(1-x)^2 = 1``.
    """
    if not 0.0 <= e <= 1.0:
        raise DomainError(f"e must be in [0,1], got {e}")
    return 0.5 * (3.0 - np.sqrt(5.0 + 4.0 * e))


def direction_select(
    lam_hat: float,
    lam: Optional[float],
    g: np.ndarray,
    g_reduced: np.ndarray,
    cfg: SigmaConfig,
) -> str:
    """Choose between the coarse and the fine direction for this iteration."""
    if cfg.check_mode == ALWAYS_COARSE:
        return COARSE
    if cfg.check_mode == NU_ONLY:
        return COARSE if lam_hat > cfg.nu else FINE
    if cfg.check_mode == EUCLIDEAN_PROXY:
        gn = float(np.linalg.norm(g))
        grn = float(np.linalg.norm(g_reduced))
        return COARSE if (grn > cfg.mu * gn and grn > cfg.nu) else FINE
    # full decrement
    if lam is None:
        raise MissingNewtonDecrement("full_decrement mode needs the Newton decrement")
    return COARSE if (lam_hat > cfg.mu * lam and lam_hat > cfg.nu) else FINE


def armijo_search(
    model: ObjectiveModel,
    x: np.ndarray,
    d: np.ndarray,
    dir_deriv: float,
    t0: float,
    alpha: float,
    beta: float,
) -> tuple[float, int]:
    """Backtrack from ``t0`` until ``f(x + t d) <= f(x) + alpha t dir_deriv``.

    The descent test is evaluated through the ray's stable difference
    ``f(x + t d) - f(x)``, so it keeps resolving decrements far below the
    rounding noise of the absolute objective value. Candidate points outside
    the objective's domain are rejected like failed descent tests. Fails after
    60 reductions, which signals a non-descent direction or a domain pathology.
    """
    if not dir_deriv < 0:
        raise LineSearchFailed(f"directional derivative must be negative, got {dir_deriv}")
    ray = Ray(model, x, d)
    t = t0
    for backtracks in range(61):
        try:
            if ray.delta(t) <= alpha * t * dir_deriv:
                return t, backtracks
        except OutOfDomain:
            pass
        t *= beta
    raise LineSearchFailed("no acceptable step after 60 reductions")


def poisson_feasible_step(
    model: ObjectiveModel, x: np.ndarray, d: np.ndarray, lam_hat: float, zeta: float
) -> float:
    """Initial step for the Poisson model: start at the damped step, grow by
    ``zeta`` while the trial point stays feasible, and cap at 1.

    If the damped start itself is infeasible it is halved first (the damped
    value comes from a curvature bound, not from feasibility). The returned
    ``t`` is feasible and zeta-maximal: either ``t == 1`` or ``zeta * t`` leaves
    the domain.
    """
    z = model.predict(x)
    dz = model.predict(d)

    def feasible(t: float) -> bool:
        return float(np.min(z + t * dz)) > 0.0

    t = damped_initial_step(lam_hat)
    for _ in range(200):
        if feasible(t):
            break
        t *= 0.5
    else:
        # x itself is feasible, so some positive step always exists; keep the
        # floor value and let the Armijo search reject it if needed.
        return t
    while t < 1.0 and feasible(zeta * t):
        t *= zeta
    return min(t, 1.0)


def _initial_step(model: ObjectiveModel, x, d, decrement: float, zeta: float) -> float:
    # Classic backtracking starts at the unit step; self-concordance guarantees
    # the search never falls below beta * 1/(1 + decrement). On the Poisson
    # domain the start instead grows from the damped step while feasible.
    if model.kind == POISSON:
        return poisson_feasible_step(model, x, d, decrement, zeta)
    return 1.0


def sigma_solve(model: ObjectiveModel, x0: np.ndarray, cfg: SigmaConfig) -> SolveResult:
    """Run the multilevel solver from ``x0``.

    The trace has one row per iterate including the starting point; row ``k``
    holds the objective, gradient norm and decrement at iterate ``k`` together
    with the step length taken from it (0 on the terminal row). Identical
    configs (including the seed) produce bit-identical traces except for the
    wall-clock column.

    Raises :class:`OutOfDomain` if ``x0`` is infeasible; reduced-system
    factorization failures end the run with ``status == "error"``.
    """
    x = np.array(x0, dtype=np.float64, copy=True)
    N = model.dataset.N
    m = model.dataset.m
    if not model.domain_status(x).feasible:
        raise OutOfDomain("x0 is infeasible for the Poisson domain")
    rng = RngState(cfg.seed)
    frozen = build_operator(N, cfg.n, rng) if cfg.freeze_operator else None
    sample_rows = cfg.row_sample is not None and cfg.row_sample < m

    result = SolveResult(x_final=x, trace=[])
    started = time.monotonic()
    k = 0
    while True:
        elapsed = time.monotonic() - started
        g = model.gradient(x)
        f_x = model.evaluate(x)
        try:
            op = frozen if frozen is not None else build_operator(N, cfg.n, rng)
            rows = sample_without_replacement(m, cfg.row_sample, rng) if sample_rows else None
            sys = galerkin_system(model, x, op, rows)
            step = coarse_direction(sys, op)

            lam: Optional[float] = None
            d_fine: Optional[np.ndarray] = None
            if cfg.check_mode == FULL_DECREMENT:
                d_fine, lam = newton_direction(model, x)
            chosen = direction_select(step.lambda_hat, lam, g, sys.g, cfg)
            if chosen == FINE and d_fine is None:
                d_fine, lam = newton_direction(model, x)
        except NotPositiveDefinite as exc:
            result.trace.append(
                TraceRecord(k, elapsed, f_x, float(np.linalg.norm(g)), np.nan, None, 0.0, COARSE, 0)
            )
            result.x_final = x
            result.status = ERROR
            result.message = str(exc)
            return result

        if chosen == COARSE:
            d, decrement = step.d_hat, step.lambda_hat
        else:
            d, decrement = d_fine, lam
        dec_sq = decrement * decrement

        record = TraceRecord(
            iter=k,
            elapsed_s=elapsed,
            f=f_x,
            grad_norm=float(np.linalg.norm(g)),
            lambda_hat=step.lambda_hat,
            lam=lam,
            step=0.0,
            direction=chosen,
            backtracks=0,
        )

        if stopping_check(dec_sq, cfg.epsilon):
            result.trace.append(record)
            result.status = CONVERGED
            break
        if k >= cfg.max_iter:
            result.trace.append(record)
            result.status = MAX_ITER
            break
        if elapsed > cfg.max_seconds:
            result.trace.append(record)
            result.status = TIMEOUT
            break

        t0 = _initial_step(model, x, d, decrement, cfg.zeta)
        t, backtracks = armijo_search(model, x, d, float(g @ d), t0, cfg.alpha, cfg.beta)
        record.step = t
        record.backtracks = backtracks
        result.trace.append(record)
        x = x + t * d
        k += 1

    result.x_final = x
    result.final_decrement_sq = dec_sq
    return result
