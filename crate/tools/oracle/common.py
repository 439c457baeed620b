"""Shared helpers: JSON serialisation of series and polynomials, j-invariant series, Groebner standard monomials."""
import itertools
import json
from fractions import Fraction

import sympy as sp


def rat_str(x):
    x = Fraction(x)
    if x == 0:
        return "0"
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def poly_json(poly):
    """sympy Poly -> [[exps, num, den], ...]"""
    out = []
    for mon, c in poly.terms():
        c = Fraction(str(c))
        out.append([list(mon), str(c.numerator), str(c.denominator)])
    return out


def series_json(width, rows, valuation=1):
    """rows: list of coefficient vectors (Fractions) starting at index `valuation`."""
    return {"width": width, "valuation": valuation,
            "coeffs": [[rat_str(x) for x in r] for r in rows]}


def sigma(n, k):
    return sum(d ** k for d in range(1, n + 1) if n % d == 0)


def eisenstein_e4(P):
    return [1] + [240 * sigma(n, 3) for n in range(1, P)]


def delta(P):
    """Coefficients of Delta = q prod (1-q^n)^24, index 0..P-1."""
    c = [0] * P
    c[0] = 1
    for n in range(1, P):
        for _ in range(24):
            for m in range(P - 1, n - 1, -1):
                c[m] -= c[m - n]
    return [0] + c[:P - 1]


def mul_trunc(a, b, P):
    out = [0] * P
    for i, x in enumerate(a[:P]):
        if x:
            for j, y in enumerate(b[:P - i]):
                out[i + j] += x * y
    return out


def j_series(P):
    """q * j(q) truncated to P terms (integers): j = E4^3 / Delta."""
    e4 = eisenstein_e4(P + 1)
    num = mul_trunc(mul_trunc(e4, e4, P + 1), e4, P + 1)
    d = delta(P + 2)[1:]  # Delta / q
    inv = [0] * (P + 1)
    inv[0] = 1
    for n in range(1, P + 1):
        inv[n] = -sum(d[k] * inv[n - k] for k in range(1, n + 1))
    return mul_trunc(num, inv, P)


def standard_monomials(polys, gens, deg):
    G = sp.groebner(polys, *gens, order='grevlex')
    leads = [sp.Poly(g, *gens).monoms(order='grevlex')[0] for g in G.exprs]
    n = len(gens)
    out = []
    for c in itertools.combinations_with_replacement(range(n), deg):
        e = [0] * n
        for i in c:
            e[i] += 1
        if not any(all(e[i] >= l[i] for i in range(n)) for l in leads):
            out.append(tuple(e))
    return out


def dump(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, separators=(",", ":"))
        fh.write("\n")
