"""Dense linear-algebra primitives used by the walk.

Vector sets are plain ``float`` arrays of shape ``(m, k)`` whose columns are
the vectors.  Rank decisions everywhere use the same rule: a singular value
counts if it exceeds ``RANK_TOL`` times the largest singular value.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import lapack, qr, solve_triangular

from .errors import InfeasibleError, InputError, NumericalError

RANK_TOL = 1e-10
TOL_ORTH = 1e-8
TOL_RESID = 1e-8
TOL_NORM = 1e-9

# Reciprocal 1-norm condition estimate above which the QR fast path is trusted.
# kappa_2 <= k * kappa_1, so 1e-6 keeps us far from the RANK_TOL cutoff.
_FAST_RCOND = 1e-6


def as_vector_set(vectors, m: int | None = None) -> np.ndarray:
    """Validate and return ``vectors`` as a finite ``(m, k)`` float array."""
    arr = np.asarray(vectors, dtype=float)
    if arr.ndim != 2:
        raise InputError(f"vector set must be 2-D (m x k), got shape {arr.shape}")
    if m is not None and arr.shape[0] != m:
        raise InputError(f"dimension mismatch: expected vectors in R^{m}, got R^{arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise InputError("vector set has non-finite entries")
    return arr


def _as_vector(v, m: int | None = None) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        raise InputError(f"expected a 1-D vector, got shape {arr.shape}")
    if m is not None and arr.shape[0] != m:
        raise InputError(f"dimension mismatch: expected length {m}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise InputError("vector has non-finite entries")
    return arr


def _rank(s: np.ndarray) -> int:
    if s.size == 0 or s[0] <= 0.0:
        return 0
    return int(np.count_nonzero(s > RANK_TOL * s[0]))


def numerical_rank(vectors) -> int:
    vs = as_vector_set(vectors)
    if vs.shape[1] == 0:
        return 0
    return _rank(np.linalg.svd(vs, compute_uv=False))


def orthonormal_basis(vectors) -> np.ndarray:
    """Orthonormal basis (as columns) for the span of ``vectors``."""
    vs = as_vector_set(vectors)
    if vs.shape[1] == 0:
        return np.zeros((vs.shape[0], 0))
    u, s, _ = np.linalg.svd(vs, full_matrices=False)
    return u[:, : _rank(s)]


def project_orthogonal(v, span_of) -> np.ndarray:
    """Return the component of ``v`` orthogonal to the span of ``span_of``."""
    v = _as_vector(v)
    q = orthonormal_basis(as_vector_set(span_of, m=v.shape[0]))
    return v - q @ (q.T @ v)


def min_norm_coefficients(target, basis, tol_resid: float = TOL_RESID) -> np.ndarray:
    """Minimum-norm ``c`` with ``basis @ c == target``.

    Raises :class:`InfeasibleError` when the best least-squares fit still
    leaves a residual above ``tol_resid``.
    """
    target = _as_vector(target)
    basis = as_vector_set(basis, m=target.shape[0])
    k = basis.shape[1]
    if k == 0:
        c = np.zeros(0)
    else:
        u, s, vt = np.linalg.svd(basis, full_matrices=False)
        r = _rank(s)
        c = vt[:r].T @ ((u[:, :r].T @ target) / s[:r])
    resid = float(np.linalg.norm(basis @ c - target))
    if resid > tol_resid:
        raise InfeasibleError(f"target not in span of basis (residual {resid:.3e})")
    return c


def null_space_vector(vectors, support) -> np.ndarray | None:
    """Find a linear dependency among the columns listed in ``support``.

    Returns a length-``n`` vector ``z`` supported on ``support`` with
    ``vectors @ z ~ 0`` and ``max|z| == 1`` (the largest entry is +1), or
    ``None`` when those columns are independent.  When the kernel has
    dimension above one, the right singular vector of the smallest singular
    value is used.
    """
    vs = as_vector_set(vectors)
    n = vs.shape[1]
    idx = np.unique(np.asarray(list(support), dtype=int))
    if idx.size and (idx[0] < 0 or idx[-1] >= n):
        raise InputError(f"support index out of range for {n} columns")
    k = idx.size
    if k == 0:
        return None
    sub = vs[:, idx]
    _, s, vt = np.linalg.svd(sub, full_matrices=True)
    if _rank(s) == k:
        return None
    z_sub = vt[-1]
    z_sub = z_sub / z_sub[np.argmax(np.abs(z_sub))]
    resid = float(np.linalg.norm(sub @ z_sub))
    if resid > TOL_RESID:
        raise InfeasibleError(f"kernel vector residual {resid:.3e} exceeds tolerance")
    z = np.zeros(n)
    z[idx] = z_sub
    return z


def split_against_span(v, basis) -> tuple[np.ndarray, np.ndarray]:
    """Decompose ``v`` as ``basis @ c + r`` with ``r`` orthogonal to the span.

    Returns ``(c, r)`` where ``c`` is the minimum-norm coefficient vector.
    This is ``project_orthogonal`` followed by ``min_norm_coefficients``
    sharing a single factorization: when the columns are clearly independent
    a QR factorization of ``[basis | v]`` gives both at once (the last column
    of R is the Gram-Schmidt step); otherwise one SVD with the ``RANK_TOL``
    cutoff is used.
    """
    v = _as_vector(v)
    basis = as_vector_set(basis, m=v.shape[0])
    m, k = basis.shape
    if k == 0:
        return np.zeros(0), v.copy()
    if k <= m:
        r_full = qr(np.column_stack([basis, v]), mode="r", check_finite=False)[0]
        r11 = np.ascontiguousarray(r_full[:k, :k])
        rcond, info = lapack.dtrcon(r11, norm="1", uplo="U", diag="N")
        if info == 0 and rcond > _FAST_RCOND:
            c = solve_triangular(r11, r_full[:k, k], check_finite=False)
            return c, v - basis @ c
    # One SVD gives the min-norm coefficients; taking r = v - basis @ c keeps
    # v = basis @ c + r exact, while orthogonality degrades like eps * cond.
    u, s, vt = np.linalg.svd(basis, full_matrices=False)
    rank = _rank(s)
    with np.errstate(over="ignore", invalid="ignore"):
        c = vt[:rank].T @ ((u[:, :rank].T @ v) / s[:rank])
    if not np.all(np.isfinite(c)):
        raise NumericalError("coefficients overflow: the basis is numerically zero")
    return c, v - basis @ c
