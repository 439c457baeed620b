"""Local power-series parametrisation of a projective curve at a smooth rational point, and osculating flags."""
from fractions import Fraction
import sympy as sp
from qla import nullspace, mat


def local_series(polys, gens, point, order):
    """polys: sympy expressions homogeneous in gens. Returns list of coefficient vectors c_0..c_{order-1}
    (each a list over gens) of a local parametrisation X(s) = sum c_n s^n with X(0) = point."""
    n = len(gens)
    k = next(i for i in range(n) if point[i] != 0)
    P = [Fraction(point[i], point[k]) for i in range(n)]
    others = [i for i in range(n) if i != k]
    subs1 = {gens[k]: 1}
    aff = [sp.expand(p.subs(subs1)) for p in polys]
    ag = [gens[i] for i in others]
    J = [[sp.diff(f, v) for v in ag] for f in aff]
    at = {gens[i]: sp.Rational(P[i].numerator, P[i].denominator) for i in others}
    Jp = [[Fraction(str(e.subs(at))) for e in row] for row in J]
    tang = nullspace(Jp)
    assert len(tang) == 1, "point is singular or curve not 1-dimensional"
    v = tang[0]
    piv = max(range(len(ag)), key=lambda i: abs(v[i]) if v[i] != 0 else -1)
    # choose 4 equations and remaining variables with invertible Jacobian
    rest = [i for i in range(len(ag)) if i != piv]
    import itertools
    eqs = None
    for comb in itertools.combinations(range(len(aff)), len(rest)):
        sub = [[Jp[e][r] for r in rest] for e in comb]
        if mat(sub).rank() == len(rest):
            eqs = comb
            break
    assert eqs is not None
    s = sp.Symbol('s')
    # series unknowns: ag[piv] = P + s; ag[r] = P + sum a_{r,m} s^m
    series = {i: [P[others[i]]] + [Fraction(0)] * (order - 1) for i in range(len(ag))}
    series[piv][1] = Fraction(1)
    sub = [[Jp[e][r] for r in rest] for e in eqs]
    Minv = mat(sub).inv()
    for m in range(1, order):
        # evaluate residual at order m with current series (unknown a_{r,m} = 0)
        expr_sub = {ag[i]: sum(sp.Rational(c.numerator, c.denominator) * s**j for j, c in enumerate(series[i][:m + 1]))
                    for i in range(len(ag))}
        resid = []
        for e in eqs:
            val = sp.expand(aff[e].subs(expr_sub))
            resid.append(Fraction(str(sp.Poly(val, s).coeff_monomial(s**m))) if val != 0 else Fraction(0))
        # J_rest * a = -resid
        for ri, r in enumerate(rest):
            acc = Fraction(0)
            for ej in range(len(eqs)):
                x = Minv[ri, ej]
                acc += Fraction(int(x.p), int(x.q)) * resid[ej]
            series[r][m] = -acc
    # verify all equations to order
    expr_sub = {ag[i]: sum(sp.Rational(c.numerator, c.denominator) * s**j for j, c in enumerate(series[i]))
                for i in range(len(ag))}
    for f in aff:
        val = sp.Poly(sp.expand(f.subs(expr_sub)), s)
        for (deg,), c in val.terms():
            assert deg >= order or c == 0, ("residual", deg)
    coeffs = []
    for m in range(order):
        vec = [Fraction(0)] * n
        vec[k] = Fraction(1) if m == 0 else Fraction(0)
        for i, oi in enumerate(others):
            vec[oi] = series[i][m]
        coeffs.append(vec)
    return coeffs


def osculating_flag(coeffs, dim):
    """Return list of bases W_0 subset W_1 ... (each list of vectors)."""
    basis = []
    flags = []
    for c in coeffs:
        trial = basis + [c]
        if mat(trial).rank() > len(basis):
            basis = trial
            flags.append(list(basis))
            if len(basis) == dim:
                break
    return flags
