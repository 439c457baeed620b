"""Weight-2 forms for Gamma_H via traces of Eisenstein products, over Q(zeta_N)."""
import numpy as np
from fractions import Fraction
import flint

from groups import mul, det, vec_act
from eisenstein import EisTable


def cyclo_reduction_matrix(N):
    """Integer matrix R (N x phi) with x^k mod Phi_N = R[k]."""
    phi_poly = flint.fmpz_poly.cyclotomic(N) if hasattr(flint.fmpz_poly, 'cyclotomic') else None
    if phi_poly is None:
        raise RuntimeError("need cyclotomic polynomial")
    deg = phi_poly.degree()
    R = np.zeros((N, deg), dtype=object)
    for k in range(N):
        r = flint.fmpz_poly([0] * k + [1]) % phi_poly
        coeffs = r.coeffs()
        for i, c in enumerate(coeffs):
            R[k, i] = int(c)
    return R, deg


def trace_product(table, H_list, a, b, kshift, alpha, N):
    """Tr_H(zeta^kshift E_a E_b) | alpha as int64 (P, N) group ring array scaled by (2N)^2."""
    L, P = table.L, table.P
    freqs = np.arange(N)
    acc = np.zeros((L, N), dtype=complex)
    chunk = 256
    us, vs, ss = [], [], []
    for h in H_list:
        ha = mul(h, alpha, N)
        us.append(table.index[vec_act(a, ha, N)])
        vs.append(table.index[vec_act(b, ha, N)])
        ss.append((kshift * det(h, N)) % N)
    us = np.array(us)
    vs = np.array(vs)
    ss = np.array(ss)
    phase = np.exp(-2j * np.pi * np.outer(np.arange(N), freqs) / N)  # phase[s, f]
    for i in range(0, len(us), chunk):
        pu = table.fft[us[i:i + chunk]]
        pv = table.fft[vs[i:i + chunk]]
        ph = phase[ss[i:i + chunk]][:, None, :]
        acc += (pu * pv * ph).sum(axis=0)
    res = np.fft.ifft2(acc).real[:P]
    out = np.rint(res).astype(np.int64)
    err = np.abs(res - out).max()
    assert err < 0.05, err
    return out


class GRSeries:
    """Series in q^(1/N) with coefficients in Z[C_N] / den, one per cusp."""

    def __init__(self, arrs, den, N):
        self.arrs = arrs  # list of object arrays (P, N)
        self.den = den
        self.N = N

    @property
    def P(self):
        return self.arrs[0].shape[0]

    def _poly(self, arr):
        N = self.N
        P = arr.shape[0]
        coeffs = [0] * (P * 2 * N)
        for n in range(P):
            for g in range(N):
                v = arr[n, g]
                if v:
                    coeffs[n * 2 * N + g] = int(v)
        return flint.fmpz_poly(coeffs)

    def __mul__(self, other):
        N = self.N
        P = min(self.P, other.P)
        out = []
        for a, b in zip(self.arrs, other.arrs):
            pa = self._poly(a[:P])
            pb = self._poly(b[:P])
            pc = pa.mul_low(pb, P * 2 * N) if hasattr(pa, 'mul_low') else pa * pb
            cs = pc.coeffs()
            arr = np.zeros((P, N), dtype=object)
            for i, c in enumerate(cs[:P * 2 * N]):
                if c:
                    n, g = divmod(i, 2 * N)
                    arr[n, g % N] += int(c)
            out.append(arr)
        return GRSeries(out, self.den * other.den, N)

    def lincomb(coeffs, series):
        """Rational combination sum c_i s_i (coeffs Fractions)."""
        from math import lcm
        N = series[0].N
        D = 1
        for c, s in zip(coeffs, series):
            D = lcm(D, Fraction(c).denominator * s.den)
        out = [np.zeros_like(a) for a in series[0].arrs]
        for c, s in zip(coeffs, series):
            c = Fraction(c)
            if c == 0:
                continue
            m = c * D / s.den
            assert m.denominator == 1
            m = int(m)
            for o, a in zip(out, s.arrs):
                o += a * m
        return GRSeries(out, D, N)

    def reduced(self, R):
        """Per cusp: (P, phi) arrays of Fractions in Q(zeta) power basis."""
        return [[[Fraction(int(x), self.den) for x in row] for row in a.dot(R)] for a in self.arrs]

    def flat(self, R, P=None):
        vals = []
        for a in self.arrs:
            red = a[:P].dot(R) if P else a.dot(R)
            vals.extend(Fraction(int(x), self.den) for x in red.ravel())
        return vals
