"""Small exact linear algebra helpers on top of python-flint."""
from fractions import Fraction
import flint


def fq(x):
    x = Fraction(x)
    return flint.fmpq(x.numerator, x.denominator)


def tofrac(x):
    return Fraction(int(x.p), int(x.q))


def mat(rows):
    nr = len(rows)
    nc = len(rows[0]) if nr else 0
    return flint.fmpq_mat(nr, nc, [fq(x) for r in rows for x in r])


def nullspace(rows, ncols=None):
    """Right nullspace basis of a rational matrix given by rows."""
    if not rows:
        return [[Fraction(int(i == j)) for i in range(ncols)] for j in range(ncols)]
    M = mat(rows)
    E, rk = M.rref()
    nc = M.ncols()
    piv = []
    r = 0
    for j in range(nc):
        if r < rk and E[r, j] != 0:
            piv.append(j)
            r += 1
    free = [j for j in range(nc) if j not in set(piv)]
    out = []
    for f in free:
        v = [Fraction(0)] * nc
        v[f] = Fraction(1)
        for i, p in enumerate(piv):
            v[p] = -tofrac(E[i, f])
        out.append(v)
    return out
