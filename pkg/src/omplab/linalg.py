"""Dense linear-algebra kernels shared by the whole package.

Least squares and projection residuals go through Householder QR rather than
normal equations: squaring the condition number would corrupt experiments that
sit close to the restricted-isometry boundary. Symmetric eigenvalue extremes
use cyclic Jacobi sweeps, which are unconditionally robust on the small Gram
matrices (at most a few dozen columns) this package produces.

Matrices are float64 numpy arrays kept in column-major (Fortran) layout, since
the dominant access pattern is whole-column extraction. Vectors are 1-D
float64 arrays. Every function here is pure: inputs are never mutated and
there is no hidden state, so values are safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

#: Relative rank tolerance: the smallest |R[i,i]| of the QR factor must exceed
#: this fraction of the largest, else the system is treated as singular.
DEFAULT_RANK_TOL = 1e-10

#: Jacobi sweeps stop once the off-diagonal Frobenius norm drops below this.
JACOBI_OFF_TOL = 1e-12

_JACOBI_MAX_SWEEPS = 40


class SingularSystemError(Exception):
    """Least-squares matrix is rank deficient.

    Carries the index and magnitude of the offending QR diagonal entry.
    """

    def __init__(self, diagonal_index, diagonal_value, largest_diagonal):
        self.diagonal_index = int(diagonal_index)
        self.diagonal_value = float(diagonal_value)
        self.largest_diagonal = float(largest_diagonal)
        super().__init__(
            f"rank-deficient system: QR diagonal {self.diagonal_index} has "
            f"magnitude {self.diagonal_value:.3e} against largest "
            f"{self.largest_diagonal:.3e}"
        )


@dataclass(frozen=True)
class EigExtremes:
    """Extreme eigenvalues of a symmetric matrix plus the sweep count used."""

    lambda_min: float
    lambda_max: float
    iterations_used: int

    def __post_init__(self):
        if not (self.lambda_min <= self.lambda_max):
            raise ValueError("lambda_min exceeds lambda_max")
        if self.iterations_used < 0:
            raise ValueError("iterations_used must be non-negative")


def as_matrix(a, name="matrix"):
    """Validate and return ``a`` as a 2-D finite float64 Fortran-ordered array.

    Zero-column matrices are permitted (they arise from empty index sets);
    zero-row matrices are not.
    """
    m = np.asarray(a, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got ndim={m.ndim}")
    if m.shape[0] < 1:
        raise ValueError(f"{name} must have at least one row")
    if m.size and not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return np.asfortranarray(m)


def as_vector(v, name="vector"):
    """Validate and return ``v`` as a 1-D finite float64 array."""
    w = np.asarray(v, dtype=float)
    if w.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got ndim={w.ndim}")
    if w.size and not np.all(np.isfinite(w)):
        raise ValueError(f"{name} contains non-finite entries")
    return w


def submatrix_columns(A, indices):
    """Extract the columns of ``A`` named by ``indices``, in ascending order.

    Args:
        A: rows x cols matrix.
        indices: iterable of distinct column indices in ``[0, cols)``.

    Returns:
        rows x len(indices) matrix whose j-th column is the j-th smallest
        requested column of ``A``.

    Raises:
        IndexError: some index is outside ``[0, cols)``.
        ValueError: duplicate indices.
    """
    A = as_matrix(A)
    idx = np.asarray(list(indices), dtype=np.intp)
    if idx.ndim != 1:
        raise ValueError("indices must be a flat collection")
    if idx.size:
        if idx.min() < 0 or idx.max() >= A.shape[1]:
            raise IndexError(
                f"column index out of range [0, {A.shape[1]}): "
                f"{idx.min()}..{idx.max()}"
            )
        if np.unique(idx).size != idx.size:
            raise ValueError("duplicate column indices")
    return np.asfortranarray(A[:, np.sort(idx)])


def least_squares(A_S, y, rank_tol=DEFAULT_RANK_TOL):
    """Minimize ||y - A_S x||_2 via Householder QR.

    Args:
        A_S: m x k matrix with full column rank.
        y: length-m vector.
        rank_tol: relative tolerance on the QR diagonal; overridable per call.

    Returns:
        The length-k minimizer. The residual ``y - A_S x`` is orthogonal to
        every column of ``A_S`` up to roundoff.

    Raises:
        SingularSystemError: the QR diagonal reveals rank deficiency.
    """
    A_S = as_matrix(A_S, "A_S")
    y = as_vector(y, "y")
    m, k = A_S.shape
    if m != y.size:
        raise ValueError(f"shape mismatch: matrix has {m} rows, y has {y.size}")
    if k == 0:
        return np.zeros(0)
    if k > m:
        raise ValueError(f"system has more columns ({k}) than rows ({m})")
    Q, R = np.linalg.qr(A_S)
    diag = np.abs(np.diag(R))
    largest = float(diag.max())
    worst = int(np.argmin(diag))
    if largest == 0.0 or diag[worst] <= rank_tol * largest:
        raise SingularSystemError(worst, diag[worst], largest)
    return solve_triangular(R, Q.T @ y, lower=False)


def projection_residual(A_S, y, rank_tol=DEFAULT_RANK_TOL):
    """Residual of ``y`` after orthogonal projection onto the columns of A_S.

    Computes ``y - A_S * least_squares(A_S, y)``, i.e. the image of ``y``
    under the orthogonal-complement projector of span(A_S). For a zero-column
    ``A_S`` the projector is the identity and ``y`` is returned unchanged.
    """
    A_S = as_matrix(A_S, "A_S")
    y = as_vector(y, "y")
    if A_S.shape[1] == 0:
        return y.copy()
    return y - A_S @ least_squares(A_S, y, rank_tol)


def jacobi_extremes_batch(mats, off_tol=JACOBI_OFF_TOL, max_sweeps=_JACOBI_MAX_SWEEPS):
    """Extreme eigenvalues of a stack of symmetric matrices by cyclic Jacobi.

    Rotations for one (p, q) pair are applied to the whole stack at once, so
    the cost is a few hundred vectorized operations per sweep regardless of
    how many matrices are in the batch. Sweeps continue until every matrix in
    the stack has off-diagonal Frobenius norm at most ``off_tol``.

    Args:
        mats: array of shape (N, d, d); symmetry is assumed, not checked.

    Returns:
        (lambda_min, lambda_max, sweeps): two length-N arrays and the number
        of full sweeps performed (shared across the batch).
    """
    a = np.array(mats, dtype=float, copy=True)
    if a.ndim != 3 or a.shape[1] != a.shape[2]:
        raise ValueError("expected a stack of square matrices (N, d, d)")
    d = a.shape[1]
    if d == 1:
        w = a[:, 0, 0].copy()
        return w, w.copy(), 0
    rows, cols = np.triu_indices(d, k=1)
    sweeps = 0
    for _ in range(max_sweeps):
        off = np.sqrt(2.0 * (a[:, rows, cols] ** 2).sum(axis=1))
        if off.max() <= off_tol:
            break
        sweeps += 1
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[:, p, q]
                nz = apq != 0.0
                if not nz.any():
                    continue
                t = np.zeros_like(apq)
                with np.errstate(over="ignore", divide="ignore"):
                    tau = np.zeros_like(apq)
                    tau[nz] = (a[nz, q, q] - a[nz, p, p]) / (2.0 * apq[nz])
                    sgn = np.where(tau >= 0.0, 1.0, -1.0)
                    # hypot avoids overflow of tau**2; tau == inf gives t == 0
                    t[nz] = sgn[nz] / (np.abs(tau[nz]) + np.hypot(1.0, tau[nz]))
                t[~np.isfinite(t)] = 0.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                cc = c[:, None]
                ss = s[:, None]
                rp = a[:, p, :].copy()
                rq = a[:, q, :].copy()
                a[:, p, :] = cc * rp - ss * rq
                a[:, q, :] = ss * rp + cc * rq
                cp = a[:, :, p].copy()
                cq = a[:, :, q].copy()
                a[:, :, p] = cc * cp - ss * cq
                a[:, :, q] = ss * cp + cc * cq
                # the rotation annihilates (p, q); force exact zeros to keep
                # the iterate symmetric
                a[:, p, q] = 0.0
                a[:, q, p] = 0.0
    else:
        off = np.sqrt(2.0 * (a[:, rows, cols] ** 2).sum(axis=1))
        if off.max() > 1e-8:
            raise ArithmeticError("Jacobi sweeps failed to converge")
    diag = a[:, np.arange(d), np.arange(d)]
    return diag.min(axis=1), diag.max(axis=1), sweeps


def sym_eig_extremes(G, off_tol=JACOBI_OFF_TOL):
    """Smallest and largest eigenvalue of a symmetric matrix.

    Args:
        G: square matrix, symmetric to within 1e-12 elementwise.

    Returns:
        EigExtremes with the extremes and the Jacobi sweep count.

    Raises:
        ValueError: ``G`` is not square or not symmetric within tolerance.
    """
    G = as_matrix(G, "G")
    d = G.shape[0]
    if G.shape[1] != d:
        raise ValueError(f"matrix must be square, got {G.shape}")
    if d and np.abs(G - G.T).max() > 1e-12:
        raise ValueError("matrix is not symmetric within 1e-12")
    sym = 0.5 * (G + G.T)
    lo, hi, sweeps = jacobi_extremes_batch(sym[None], off_tol=off_tol)
    return EigExtremes(float(lo[0]), float(hi[0]), sweeps)


# ---------------------------------------------------------------------------
# Shared text formats. A matrix file is "rows cols" on the first line, then
# `rows` lines of `cols` space-separated decimals printed with 17 significant
# digits so float64 values round-trip exactly. Vectors are stored as
# single-column matrices.
# ---------------------------------------------------------------------------


def format_matrix(A):
    """Render a matrix in the shared text format."""
    A = as_matrix(A)
    if A.shape[1] < 1:
        raise ValueError("cannot serialize a zero-column matrix")
    lines = [f"{A.shape[0]} {A.shape[1]}"]
    for i in range(A.shape[0]):
        lines.append(" ".join(f"{v:.17g}" for v in A[i, :]))
    return "\n".join(lines) + "\n"


def parse_matrix(text):
    """Parse the shared matrix text format; inverse of :func:`format_matrix`."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty matrix text")
    header = lines[0].split()
    if len(header) != 2:
        raise ValueError("matrix header must be 'rows cols'")
    rows, cols = int(header[0]), int(header[1])
    if rows < 1 or cols < 1:
        raise ValueError("matrix dimensions must be positive")
    if len(lines) - 1 != rows:
        raise ValueError(f"expected {rows} data lines, got {len(lines) - 1}")
    out = np.empty((rows, cols), order="F")
    for i, ln in enumerate(lines[1:]):
        vals = ln.split()
        if len(vals) != cols:
            raise ValueError(f"row {i} has {len(vals)} entries, expected {cols}")
        out[i, :] = [float(v) for v in vals]
    return as_matrix(out)


def write_matrix(path, A):
    with open(path, "w") as fh:
        fh.write(format_matrix(A))


def read_matrix(path):
    with open(path) as fh:
        return parse_matrix(fh.read())


def format_vector(v):
    v = as_vector(v)
    return format_matrix(v.reshape(-1, 1))


def parse_vector(text):
    m = parse_matrix(text)
    if m.shape[1] != 1:
        raise ValueError(f"vector file must have one column, got {m.shape[1]}")
    return np.ascontiguousarray(m[:, 0])


def write_vector(path, v):
    with open(path, "w") as fh:
        fh.write(format_vector(v))


def read_vector(path):
    with open(path) as fh:
        return parse_vector(fh.read())
