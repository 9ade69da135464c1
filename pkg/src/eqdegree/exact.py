"""Small exact-rational linear algebra over ``fractions.Fraction``."""
import math
import numbers
from fractions import Fraction


def to_fraction(value):
    """Parse ``p/q``, decimal strings, ints or Fractions exactly.

    Floats are converted through their repr so ``0.5`` stays ``1/2``.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, numbers.Integral):
        return Fraction(int(value))
    if isinstance(value, numbers.Real) and not isinstance(value, str):
        return Fraction(repr(float(value)))
    return Fraction(str(value).strip())


def matmul(A, B):
    return tuple(
        tuple(sum((a * b for a, b in zip(row, col)), Fraction(0)) for col in zip(*B))
        for row in A
    )


def matvec(A, x):
    return tuple(sum((a * b for a, b in zip(row, x)), Fraction(0)) for row in A)


def transpose(A):
    return tuple(tuple(col) for col in zip(*A))


def identity(n):
    return tuple(
        tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n)
    )


def dot(u, v):
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


def nullspace(rows, ncols):
    """Basis of {x : M x = 0} by reduced row echelon form."""
    M = [list(r) for r in rows]
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(M)) if M[i][c] != 0), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        pv = M[r][c]
        M[r] = [v / pv for v in M[r]]
        for i in range(len(M)):
            if i != r and M[i][c] != 0:
                f = M[i][c]
                M[i] = [a - f * b for a, b in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
        if r == len(M):
            break
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * ncols
        v[fc] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -M[i][fc]
        basis.append(tuple(v))
    return basis


def gram_schmidt(vectors):
    """Orthogonal (not normalized) rational basis of the span."""
    out = []
    for v in vectors:
        w = list(v)
        for u in out:
            c = dot(w, u) / dot(u, u)
            w = [a - c * b for a, b in zip(w, u)]
        if any(a != 0 for a in w):
            out.append(tuple(w))
    return out


def exact_sqrt(q):
    """sqrt(q) as a Fraction when q is a rational square, else None."""
    if q < 0:
        return None
    a, b = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if a * a == q.numerator and b * b == q.denominator:
        return Fraction(a, b)
    return None


def projector(orth):
    """Orthogonal projector sum u u^T / |u|^2 for an orthogonal rational basis."""
    n = len(orth[0]) if orth else 0
    return projector_n(orth, n)


def projector_n(orth, n):
    P = [[Fraction(0)] * n for _ in range(n)]
    for u in orth:
        s = dot(u, u)
        for i in range(n):
            for j in range(n):
                P[i][j] += u[i] * u[j] / s
    return tuple(tuple(r) for r in P)


def as_float(A):
    import numpy as np

    return np.array([[float(v) for v in row] for row in A], dtype=float)
