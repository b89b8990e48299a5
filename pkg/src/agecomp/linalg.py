"""Dense linear algebra core: thin SVD, rank truncation, explained shares.

The decomposition is computed with one-sided Jacobi rotations, which
orthogonalize the columns of the working matrix in place.  For the small,
dense matrices this package deals in (tens of rows/columns) the method is
simple, numerically robust and accurate to near machine precision.  All
functions are pure; results are plain immutable values.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericalError

# Relative magnitude below which a rotation is considered converged.
_JACOBI_TOL = 1e-15
_MAX_SWEEPS = 100

# Singular values below max(K, L) * s1 * RANK_RTOL are treated as zero.
RANK_RTOL = 1e-12


def as_matrix(x) -> np.ndarray:
    """Coerce to a 2-D float array, rejecting empty or non-finite input."""
    a = np.asarray(x, dtype=float)
    if a.ndim != 2 or a.size == 0:
        raise DataError(f"expected a nonempty 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DataError("matrix contains NaN or infinite entries")
    return a


@dataclass(frozen=True)
class SvdFactorization:
    """Thin SVD: u @ diag(s) @ v.T reproduces the source matrix.

    u is K x rank with orthonormal columns (left singular vectors), s holds
    the positive singular values in non-increasing order, v is L x rank with
    orthonormal columns (right singular vectors).  Values below the numerical
    rank cutoff are dropped, so ``rank`` may be smaller than min(K, L).
    """

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray

    @property
    def rank(self) -> int:
        return self.s.shape[0]


def _jacobi_orthogonalize(g: np.ndarray, v: np.ndarray) -> None:
    """Rotate column pairs of g (mirrored in v) until mutually orthogonal.

    Columns whose norm has dropped to rounding noise relative to the largest
    column are frozen; they carry no significant singular value and rotating
    them would chase noise forever on rank-deficient input.
    """
    ncols = g.shape[1]
    eps = np.finfo(float).eps
    for _ in range(_MAX_SWEEPS):
        norms2 = np.einsum("ij,ij->j", g, g)
        noise2 = (eps * np.sqrt(norms2.max(initial=0.0))) ** 2
        worst = 0.0
        for p in range(ncols - 1):
            for q in range(p + 1, ncols):
                alpha = g[:, p] @ g[:, p]
                beta = g[:, q] @ g[:, q]
                if alpha <= noise2 or beta <= noise2:
                    continue
                gamma = g[:, p] @ g[:, q]
                rel = abs(gamma) / (np.sqrt(alpha) * np.sqrt(beta))
                if rel <= _JACOBI_TOL:
                    continue
                worst = max(worst, rel)
                zeta = (beta - alpha) / (2.0 * gamma)
                # sign(0) must act as +1 so equal-norm columns still rotate
                sgn = 1.0 if zeta >= 0.0 else -1.0
                t = sgn / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                gp = g[:, p].copy()
                g[:, p] = c * gp - s * g[:, q]
                g[:, q] = s * gp + c * g[:, q]
                vp = v[:, p].copy()
                v[:, p] = c * vp - s * v[:, q]
                v[:, q] = s * vp + c * v[:, q]
        if worst <= _JACOBI_TOL:
            return
    raise NumericalError("Jacobi SVD failed to converge")


def svd(x) -> SvdFactorization:
    """Thin singular value decomposition of a dense real matrix.

    Parameters
    ----------
    x : array_like, shape (K, L)
        Nonempty matrix of finite values.

    Returns
    -------
    SvdFactorization
        Factors with signs canonicalized (see :func:`canonicalize_signs`),
        so the result is deterministic for a given input.
    """
    a = as_matrix(x)
    nrows, ncols = a.shape
    transposed = nrows < ncols
    work = a.T.copy() if transposed else a.copy()
    basis = np.eye(work.shape[1])
    _jacobi_orthogonalize(work, basis)

    norms = np.sqrt(np.einsum("ij,ij->j", work, work))
    order = np.argsort(-norms, kind="stable")
    norms = norms[order]
    work = work[:, order]
    basis = basis[:, order]

    cutoff = max(nrows, ncols) * (norms[0] if norms.size else 0.0) * RANK_RTOL
    keep = norms > cutoff
    s = norms[keep]
    u = work[:, keep] / s if s.size else work[:, keep]
    v = basis[:, keep]
    if transposed:
        u, v = v, u
    return canonicalize_signs(SvdFactorization(u=u, s=s, v=v))


def canonicalize_signs(f: SvdFactorization) -> SvdFactorization:
    """Resolve per-component sign ambiguity of an SVD.

    Each (u_i, v_i) pair is jointly negated, if necessary, so that the
    entries of v_i sum to a positive number; when the sum is zero the first
    nonzero entry of v_i is made positive instead.  Reconstruction is
    unchanged.  Idempotent.
    """
    u = f.u.copy()
    v = f.v.copy()
    for i in range(f.rank):
        total = v[:, i].sum()
        if abs(total) <= 1e-12:
            nz = np.nonzero(v[:, i])[0]
            flip = nz.size > 0 and v[nz[0], i] < 0
        else:
            flip = total < 0
        if flip:
            u[:, i] = -u[:, i]
            v[:, i] = -v[:, i]
    return SvdFactorization(u=u, s=f.s.copy(), v=v)


def reconstruct_rank(f: SvdFactorization, k: int) -> np.ndarray:
    """Sum of the first k rank-1 terms, the best rank-k approximation."""
    if not 1 <= k <= f.rank:
        raise NumericalError(f"k={k} out of range 1..{f.rank}")
    return (f.u[:, :k] * f.s[:k]) @ f.v[:, :k].T


def explained_share(f: SvdFactorization) -> np.ndarray:
    """Fraction of total squared magnitude captured by each component."""
    if f.rank == 0:
        raise NumericalError("explained shares undefined for a rank-0 factorization")
    sq = f.s**2
    return sq / sq.sum()


def center_columns(x, normalize: bool = False) -> np.ndarray:
    """Subtract each column mean; optionally rescale columns to unit norm.

    With ``normalize`` the centered columns are scaled by 1/sqrt(N-1) and
    then divided by their norm, the preprocessing under which the Gram
    matrix of the result is the correlation matrix of the input.
    """
    a = as_matrix(x)
    if a.shape[0] < 2:
        raise DataError("centering needs at least two rows")
    centered = a - a.mean(axis=0)
    if not normalize:
        return centered
    scaled = centered / np.sqrt(a.shape[0] - 1)
    norms = np.sqrt(np.einsum("ij,ij->j", scaled, scaled))
    if np.any(norms == 0.0):
        bad = int(np.nonzero(norms == 0.0)[0][0])
        raise DataError(f"column {bad} has zero variance, cannot normalize")
    return scaled / norms


def frobenius_residual(a, b) -> float:
    """Square root of the summed squared differences between two matrices."""
    am = as_matrix(a)
    bm = as_matrix(b)
    if am.shape != bm.shape:
        raise DataError(f"shape mismatch: {am.shape} vs {bm.shape}")
    return float(np.sqrt(((am - bm) ** 2).sum()))
