"""Dataset ingestion (libsvm, CSV), standardization, and synthetic generation.

The synthetic generator builds ``A = U S V^T`` from Haar-orthogonal factors
with evenly spaced singular values split in two bands around a configurable
gap, so the position ``p`` of the spectral gap is a single knob. Labels are
synthesized per model family from a hidden ground-truth weight vector.
"""

import csv as _csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import haar_frame
from .errors import (
    DomainError,
    InfeasibleSynthesis,
    InvalidDimensions,
    NonAscendingIndexError,
    ParseError,
    RaggedRows,
)
from .objectives import Dataset
from .rng import RngState

GAUSSIAN_NOISE = "gaussian"
POISSON_COUNTS = "poisson"
LOGISTIC_SIGNS = "logistic"
LABEL_KINDS = (GAUSSIAN_NOISE, POISSON_COUNTS, LOGISTIC_SIGNS)


@dataclass(frozen=True)
class SvdGapSpec:
    """Shape and spectrum of the synthetic matrix.

    The top ``p`` singular values are evenly spaced in ``[gap, 2 gap]`` and the
    remaining ones in ``[0.1, 1]``, both descending, so the ``p``-th/-(p+1)-th
    ratio is about ``gap``. ``m < N`` is allowed (the spectrum then has
    ``min(m, N)`` values).
    """

    m: int
    N: int
    p: int
    gap: float = 100.0
    seed: int = 0

    def __post_init__(self):
        if self.m < 1 or self.N < 1:
            raise InvalidDimensions(f"m and N must be positive, got {self.m}, {self.N}")
        if not 1 <= self.p <= self.N:
            raise InvalidDimensions(f"p must be in [1, N], got {self.p}")
        if not self.gap > 1:
            raise DomainError(f"gap must exceed 1, got {self.gap}")


@dataclass(frozen=True)
class LabelSpec:
    """How to synthesize responses from a hidden weight vector."""

    kind: str
    sigma_noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in LABEL_KINDS:
            raise DomainError(f"label kind must be one of {LABEL_KINDS}")
        if self.sigma_noise < 0:
            raise DomainError("sigma_noise must be nonnegative")


def singular_value_bands(spec: SvdGapSpec) -> np.ndarray:
    k = min(spec.m, spec.N)
    top = min(spec.p, k)
    upper = np.linspace(2.0 * spec.gap, spec.gap, top)
    lower = np.linspace(1.0, 0.1, k - top) if k > top else np.empty(0)
    return np.concatenate([upper, lower])


def svd_gap_matrix(spec: SvdGapSpec, rng: RngState) -> np.ndarray:
    """Draw ``A = U S V^T`` with Haar-orthogonal thin frames ``U`` and ``V``.

    Only the first ``min(m, N)`` columns of the orthogonal factors are
    generated; the distribution of ``A`` is unchanged and the cost drops from
    O(m^3) to O(m k^2).
    """
    sv = singular_value_bands(spec)
    k = sv.shape[0]
    U = haar_frame(spec.m, k, rng.child())
    V = haar_frame(spec.N, k, rng.child())
    return (U * sv) @ V.T


def synth_labels(A: np.ndarray, spec: LabelSpec, rng: RngState) -> tuple[np.ndarray, np.ndarray]:
    """Synthesize responses; returns ``(b, x_true)``.

    * gaussian: ``b = A x_true + sigma_noise * eps``.
    * poisson: ``x_true`` is searched (least squares against positive targets,
      up to 100 tries) so all margins are positive, then ``b_i = max(1,
      Poisson(a_i^T x_true))``.
    * logistic: ``b_i = sign(a_i^T x_true + sigma_noise * eps)`` in {-1, +1}.
    """
    A = np.asarray(A, dtype=np.float64)
    m, N = A.shape
    gen = rng.child()
    if spec.kind == GAUSSIAN_NOISE:
        x_true = gen.standard_normal(N)
        b = A @ x_true
        if spec.sigma_noise > 0:
            b = b + spec.sigma_noise * gen.standard_normal(m)
        return b, x_true
    if spec.kind == LOGISTIC_SIGNS:
        x_true = gen.standard_normal(N)
        s = A @ x_true
        if spec.sigma_noise > 0:
            s = s + spec.sigma_noise * gen.standard_normal(m)
        return np.where(s >= 0, 1.0, -1.0), x_true
    # poisson counts: need strictly positive margins for the rate vector
    target_mean = 5.0
    x_true = _positive_margin_vector(A, gen, tries=100)
    if x_true is None:
        raise InfeasibleSynthesis("no ground-truth vector with positive margins found")
    x_true = x_true * (target_mean / float((A @ x_true).mean()))
    rates = A @ x_true
    b = np.maximum(1, gen.poisson(rates)).astype(np.float64)
    return b, x_true


def _max_min_margin(A: np.ndarray) -> np.ndarray | None:
    """LP for the most-interior ray of the cone {x : A x > 0}.

    Maximizes the smallest margin subject to a fixed margin sum, which keeps
    the synthesized Poisson rates on one scale instead of spanning orders of
    magnitude.
    """
    import scipy.optimize

    m, N = A.shape
    # variables (x, s): max s  s.t.  A x >= s, sum(A x) = m
    c = np.zeros(N + 1)
    c[-1] = -1.0
    A_ub = np.hstack([-A, np.ones((m, 1))])
    A_eq = np.hstack([A.sum(axis=0, keepdims=True), np.zeros((1, 1))])
    res = scipy.optimize.linprog(
        c, A_ub=A_ub, b_ub=np.zeros(m), A_eq=A_eq, b_eq=np.array([float(m)]),
        bounds=[(None, None)] * N + [(0.0, None)], method="highs",
    )
    if res.status != 0 or res.x is None:
        return None
    x = res.x[:-1]
    return x if float((A @ x).min()) > 0 else None


def _positive_margin_vector(A: np.ndarray, gen: np.random.Generator, tries: int) -> np.ndarray | None:
    """Search for ``x`` with ``A x`` entrywise positive.

    Least squares against positive targets works when the column span is wide
    (m <= N); otherwise the feasibility cone is thin and an exact LP decides
    it, returning the most-interior direction so the margins stay comparable.
    """
    m = A.shape[0]
    u = np.ones(m)
    for _ in range(tries):
        x, *_ = np.linalg.lstsq(A, u, rcond=None)
        if float((A @ x).min()) > 0:
            return x
        u = 1.0 + np.abs(gen.standard_normal(m))
    return _max_min_margin(A)


@dataclass(frozen=True)
class StandardizeParams:
    mean: np.ndarray
    scale: np.ndarray  # 1.0 for constant columns (centered only)


def standardize(ds: Dataset) -> tuple[Dataset, StandardizeParams]:
    """Shift/scale each feature column to mean 0 and population std 1.

    Columns with std below 1e-12 are centered but not scaled. Returns the
    transform parameters so new data can be mapped identically.
    """
    if ds.m < 2:
        raise InvalidDimensions("standardize needs at least 2 rows")
    mean = ds.A.mean(axis=0)
    std = ds.A.std(axis=0)  # population convention (divisor m)
    scale = np.where(std < 1e-12, 1.0, std)
    return Dataset((ds.A - mean) / scale, ds.b), StandardizeParams(mean, scale)


def apply_standardize(ds: Dataset, params: StandardizeParams) -> Dataset:
    return Dataset((ds.A - params.mean) / params.scale, ds.b)


# ---------------------------------------------------------------------------
# file formats


def load_libsvm(path, n_features: int | None = None) -> Dataset:
    """Parse the libsvm text format (``label idx:val ...``, 1-based ascending
    indices) into a dense dataset.

    The feature count is inferred from the largest index unless overridden.
    Binary {0, 1} label files are normalized to {-1, +1}; all other label
    values are kept as-is.
    """
    rows: list[dict[int, float]] = []
    labels: list[float] = []
    max_idx = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            try:
                labels.append(float(tokens[0]))
            except ValueError as exc:
                raise ParseError(f"bad label {tokens[0]!r}", line=lineno) from exc
            entries: dict[int, float] = {}
            prev = 0
            for tok in tokens[1:]:
                try:
                    idx_s, val_s = tok.split(":", 1)
                    idx = int(idx_s)
                    val = float(val_s)
                except ValueError as exc:
                    raise ParseError(f"bad feature token {tok!r}", line=lineno) from exc
                if idx <= prev:
                    raise NonAscendingIndexError(
                        f"index {idx} not ascending (previous {prev})", line=lineno
                    )
                if idx < 1:
                    raise ParseError(f"indices are 1-based, got {idx}", line=lineno)
                prev = idx
                entries[idx] = val
            max_idx = max(max_idx, prev)
            rows.append(entries)
    if not rows:
        raise ParseError(f"{path}: no data lines")
    N = n_features if n_features is not None else max_idx
    if max_idx > N:
        raise InvalidDimensions(f"file has index {max_idx} but n_features={N}")
    A = np.zeros((len(rows), N))
    for i, entries in enumerate(rows):
        for idx, val in entries.items():
            A[i, idx - 1] = val
    b = np.asarray(labels)
    uniq = set(np.unique(b).tolist())
    if uniq <= {0.0, 1.0}:
        b = np.where(b > 0.5, 1.0, -1.0)
    return Dataset(A, b)


def write_libsvm(ds: Dataset, path) -> None:
    """Write a dataset in libsvm format (zero entries are omitted)."""
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(ds.m):
            parts = [_fmt(ds.b[i])]
            row = ds.A[i]
            for j in np.nonzero(row)[0]:
                parts.append(f"{j + 1}:{_fmt(row[j])}")
            fh.write(" ".join(parts) + "\n")


def _fmt(v: float) -> str:
    return repr(float(v))


def load_csv(path, label_column="last") -> Dataset:
    """Rectangular numeric CSV with an optional header row.

    ``label_column`` is a 0-based column index or ``"last"``. The header is
    auto-detected: a first row with any non-numeric cell is skipped.
    """
    raw: list[list[str]] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for rec in _csv.reader(fh):
            if rec:
                raw.append(rec)
    if not raw:
        raise ParseError(f"{path}: empty file")
    start = 0
    if any(not _is_number(tok) for tok in raw[0]):
        start = 1
        if len(raw) == 1:
            raise ParseError(f"{path}: header only, no data rows")
    width = len(raw[start])
    data = np.empty((len(raw) - start, width))
    for i, rec in enumerate(raw[start:], start=start):
        if len(rec) != width:
            raise RaggedRows(f"expected {width} fields, got {len(rec)}", line=i + 1)
        try:
            data[i - start] = [float(tok) for tok in rec]
        except ValueError as exc:
            raise ParseError(f"non-numeric value in {rec}", line=i + 1) from exc
    col = width - 1 if label_column == "last" else int(label_column)
    if not 0 <= col < width:
        raise InvalidDimensions(f"label column {col} out of range for width {width}")
    b = data[:, col]
    A = np.delete(data, col, axis=1)
    return Dataset(A, b)


def _is_number(tok: str) -> bool:
    try:
        float(tok)
        return True
    except ValueError:
        return False


def dataset_meta(A: np.ndarray, spec: SvdGapSpec) -> dict:
    """Generation record written next to synthetic datasets."""
    realized = np.linalg.svd(A, compute_uv=False)
    return {
        "m": spec.m,
        "N": spec.N,
        "p": spec.p,
        "gap": spec.gap,
        "seed": spec.seed,
        "prescribed_singular_values": singular_value_bands(spec).tolist(),
        "realized_singular_values": realized.tolist(),
    }


def ensure_parent(path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
