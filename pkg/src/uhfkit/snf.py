"""Smith normal form over the integers with unimodular transforms."""

from __future__ import annotations

from typing import Optional, Sequence

from sympy import ZZ, Matrix
from sympy.matrices.normalforms import smith_normal_decomp


def _eye(n):
    return [[int(i == j) for j in range(n)] for i in range(n)]


def _as_rows(M, ncols: Optional[int]):
    rows = [[int(v) for v in row] for row in M]
    if not rows:
        return rows, (ncols or 0)
    n = len(rows[0])
    if any(len(r) != n for r in rows):
        raise ValueError("ragged matrix")
    if ncols is not None and n != ncols:
        raise ValueError(f"matrix has {n} columns, expected {ncols}")
    return rows, n


def smith_normal_form(M: Sequence[Sequence[int]], ncols: Optional[int] = None):
    """Return ``(U, D, V)`` with ``U @ M @ V == D``.

    ``U`` and ``V`` are unimodular, ``D`` is diagonal with nonnegative
    entries ``d_1 | d_2 | ...`` (trailing zeros last).  ``ncols`` is needed
    only when ``M`` has no rows.
    """
    A, n = _as_rows(M, ncols)
    m = len(A)
    if m == 0 or n == 0:
        return _eye(m), [[0] * n for _ in range(m)], _eye(n)
    D, U, V = smith_normal_decomp(Matrix(A), domain=ZZ)
    D, U, V = (_to_rows(X) for X in (D, U, V))
    for t in range(min(m, n)):
        if D[t][t] < 0:
            D[t] = [-a for a in D[t]]
            U[t] = [-a for a in U[t]]
    return U, D, V


def _to_rows(X) -> list:
    return [[int(X[i, j]) for j in range(X.cols)] for i in range(X.rows)]


def diagonal(D) -> list:
    return [D[i][i] for i in range(min(len(D), len(D[0]) if D else 0))]


def matmul(A, B):
    if not A:
        return []
    inner = len(B)
    cols = len(B[0]) if B else 0
    return [[sum(A[i][k] * B[k][j] for k in range(inner)) for j in range(cols)] for i in range(len(A))]


def det(M) -> int:
    if not M:
        return 1
    return int(Matrix(M).det(method="bareiss"))


def elementary_divisors(M, ncols: Optional[int] = None) -> list:
    """Nonzero invariant factors of ``M``."""
    _, D, _ = smith_normal_form(M, ncols)
    return [d for d in diagonal(D) if d] if D else []


def rank(M, ncols: Optional[int] = None) -> int:
    return len(elementary_divisors(M, ncols))
