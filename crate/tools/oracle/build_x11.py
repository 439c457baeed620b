"""Build the X_0(11) fixture bundle (genus 1, index 12, cusps infinity and 0).

Forms:  f = eta(t)^2 eta(11t)^2, the newform of 11a.  At the cusp 0 (slash by S = [0,-1;1,0])
        f|S = -(1/11) eta(t)^2 eta(t/11)^2, a series in Q = q^(1/11) with the same coefficients.
Coords: the weight-4 basis E4(t), E4(11t), f^2, f*g with g = E2(t) - 11 E2(11t), using
        E4(11t)|S = 11^-4 E4(t/11) and g|S = E2(t) - (1/11) E2(t/11).
Model:  the two quadrics vanishing on the coords (found by exact linear algebra at infinity and
        checked at 0).
j-map:  E4^3 / Delta with Delta written as a cubic in the coords (standard monomials only).

Usage: python3 build_x11.py OUT.json
"""
import sys
from fractions import Fraction

import sympy as sp

from common import dump, mul_trunc, poly_json, series_json, sigma, standard_monomials, delta

N = 11
P = 201  # coefficients 0..200 in q^(1/w)
PREC = 200
VARS = sp.symbols("x y z w")


def eta_sq_product(P, k):
    """q-expansion of q * prod (1-q^n)^2 (1-q^(kn))^2, indices 0..P-1."""
    c = [0] * P
    c[1] = 1
    for n in range(1, P):
        for step in (n, k * n):
            if step >= P:
                continue
            for _ in range(2):
                for m in range(P - 1, step - 1, -1):
                    c[m] -= c[m - step]
    return c


def e2(P):
    return [Fraction(1)] + [Fraction(-24 * sigma(n, 1)) for n in range(1, P)]


def e4(P):
    return [Fraction(1)] + [Fraction(240 * sigma(n, 3)) for n in range(1, P)]


def dilate(s, k, P):
    """s(q^k) truncated."""
    out = [Fraction(0)] * P
    for i, x in enumerate(s):
        if i * k >= P:
            break
        out[i * k] = x
    return out


def add(a, b, cb=1):
    return [x + cb * y for x, y in zip(a, b)]


def scale(a, c):
    return [c * x for x in a]


def cusp_series():
    F = [Fraction(x) for x in eta_sq_product(P, 11)]
    E2, E4 = e2(P), e4(P)
    # infinity, Q = q
    g_inf = add(E2, dilate(E2, 11, P), -11)
    inf = {
        "form": F,
        "coords": [E4, dilate(E4, 11, P), mul_trunc(F, F, P), mul_trunc(F, g_inf, P)],
    }
    # cusp 0, Q = q^(1/11)
    g0 = add(dilate(E2, 11, P), E2, Fraction(-1, 11))
    f0 = scale(F, Fraction(-1, 11))
    zero = {
        "form": f0,
        "coords": [dilate(E4, 11, P), scale(E4, Fraction(1, 11 ** 4)), mul_trunc(f0, f0, P), mul_trunc(f0, g0, P)],
    }
    return inf, zero


def R(x):
    x = Fraction(x)
    return sp.Rational(x.numerator, x.denominator)


def monomial_series(coords, exps):
    out = [Fraction(1)] + [Fraction(0)] * (P - 1)
    for c, e in zip(coords, exps):
        for _ in range(e):
            out = mul_trunc(out, c, P)
    return out


def monomials(d):
    return [m for m in sp.itermonomials(VARS, d, d)]


def exps_of(m):
    return sp.Poly(m, *VARS).monoms()[0]


def relations(coords, d):
    mons = sorted(monomials(d), key=sp.default_sort_key)
    cols = [monomial_series(coords, exps_of(m)) for m in mons]
    M = sp.Matrix([[R(cols[j][i]) for j in range(len(mons))] for i in range(P)])
    return mons, M.nullspace()


def vanishes(poly, coords):
    s = [Fraction(0)] * P
    for mon, c in poly.terms():
        s = add(s, monomial_series(coords, mon), Fraction(str(c)))
    return all(x == 0 for x in s)


def main(out):
    inf, zero = cusp_series()
    mons, ns = relations(inf["coords"], 2)
    assert len(ns) == 2, f"expected two quadrics, got {len(ns)}"
    quads = []
    for v in ns:
        v = v * sp.ilcm(*[sp.fraction(x)[1] for x in v])
        g = sp.igcd(*[int(x) for x in v if x != 0])
        quads.append(sp.Poly(sum(int(x) // g * m for x, m in zip(v, mons)), *VARS))
    for q in quads:
        assert vanishes(q, zero["coords"]), "quadric fails at the cusp 0"

    # Delta as a cubic in the coords, over the standard monomials of the quadric ideal
    std = standard_monomials([q.as_expr() for q in quads], VARS, 3)
    assert len(std) == 12
    cols = [monomial_series(inf["coords"], m) for m in std]
    D = [Fraction(x) for x in delta(P)]
    A = sp.Matrix([[R(cols[j][i]) for j in range(len(std))] for i in range(P)])
    sol, params = A.gauss_jordan_solve(sp.Matrix([R(x) for x in D]))
    assert params.shape[0] == 0
    den = sp.Poly(sum(sol[j] * sp.prod([v ** e for v, e in zip(VARS, std[j])]) for j in range(len(std))), *VARS)
    num = sp.Poly(VARS[0] ** 3, *VARS)
    d0 = [Fraction(0)] * P
    for mon, c in den.terms():
        d0 = add(d0, monomial_series(zero["coords"], mon), Fraction(str(c)))
    assert d0 == dilate(D, 11, P), "Delta cubic fails at the cusp 0"

    def ser(s, w, val):
        return series_json(w, [[Fraction(x)] + [Fraction(0)] * 9 for x in s[val:P]], val)

    bundle = {
        "label": "11.12.1.a.1",
        "level": N,
        "index": 12,
        "genus": 1,
        "graded_deg": 4,
        "vars": [str(v) for v in VARS],
        "model": [poly_json(q) for q in quads],
        "cusps": [
            {"matrix": [1, 0, 0, 1], "width": 1, "rational": True},
            {"matrix": [0, -1, 1, 0], "width": 11, "rational": True},
        ],
        "gamma_gens": [[1, 1, 0, 1], [1, 0, 11, 1], [-1, 0, 0, -1], [2, 1, 11, 6]],
        "forms": [[ser(inf["form"], 1, 1), ser(zero["form"], 11, 1)]],
        "coords": [[ser(a, 1, 0), ser(b, 11, 0)] for a, b in zip(inf["coords"], zero["coords"])],
        "coord_weight": 4,
        "prec": PREC,
        "rational_cusp_count": 2,
        "cm_point_counts": {"-11": 1},
        "jmap": {"num": poly_json(num), "den": poly_json(den)},
    }
    dump(bundle, out)
    for q in quads:
        print("quadric", q.as_expr(), file=sys.stderr)
    print("Delta =", den.as_expr(), file=sys.stderr)


if __name__ == "__main__":
    main(sys.argv[1])
