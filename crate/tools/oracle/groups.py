"""Finite matrix groups mod N, cusp data for Gamma_H = H cap SL2(Z)."""
from math import gcd


def mul(g, h, N):
    a, b, c, d = g
    e, f, k, l = h
    return ((a * e + b * k) % N, (a * f + b * l) % N, (c * e + d * k) % N, (c * f + d * l) % N)


def det(g, N):
    return (g[0] * g[3] - g[1] * g[2]) % N


def closure(gens, N):
    ident = (1 % N, 0, 0, 1 % N)
    seen = {ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = mul(x, g, N)
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return seen


def transpose(g):
    return (g[0], g[2], g[1], g[3])


def vec_act(v, h, N):
    """Row vector times matrix."""
    return ((v[0] * h[0] + v[1] * h[2]) % N, (v[0] * h[1] + v[1] * h[3]) % N)


def sl2_elements(N):
    out = []
    for a in range(N):
        for b in range(N):
            for c in range(N):
                for d in range(N):
                    if (a * d - b * c) % N == 1 % N:
                        out.append((a, b, c, d))
    return out


def lift_sl2(g, N):
    """Lift an element of SL2(Z/N) to SL2(Z)."""
    a, b, c, d = g
    # make gcd(c, d) = 1 by shifting d by multiples of N
    for t in range(0, 10000):
        for dd in (d + t * N, d - t * N):
            if gcd(c, dd) == 1 or (c == 0 and abs(dd) == 1):
                # solve a' dd - b' c = 1 with a' = a mod N, b' = b mod N
                cc = c
                # find integers x, y with x*dd - y*cc = 1
                x, y = _bezout_pair(dd, cc)
                # general solution: x + k*cc, y + k*dd ; need x = a mod N, y = b mod N
                for k in range(N):
                    xa = x + k * cc
                    yb = y + k * dd
                    if (xa - a) % N == 0 and (yb - b) % N == 0:
                        return (xa, yb, cc, dd)
                # adjust by lattice of solutions modulo N using both freedoms
                for k in range(-N * N, N * N):
                    xa = x + k * cc
                    yb = y + k * dd
                    if (xa - a) % N == 0 and (yb - b) % N == 0:
                        return (xa, yb, cc, dd)
    raise ValueError("no lift")


def _bezout_pair(dd, cc):
    # x*dd - y*cc = 1
    def eg(a, b):
        if b == 0:
            return (a, 1, 0)
        g, x, y = eg(b, a % b)
        return (g, y, x - (a // b) * y)
    g, x, y = eg(dd, cc)
    if g < 0:
        g, x, y = -g, -x, -y
    assert g == 1
    # x*dd + y*cc = 1 -> x*dd - (-y)*cc = 1
    return (x, -y)


class Gamma:
    """Gamma_H = +-(H cap SL2(Z/N)) with cusp data."""

    def __init__(self, H, N):
        self.N = N
        self.H = H
        minus = ((-1) % N, 0, 0, (-1) % N)
        sl = {h for h in H if det(h, N) == 1 % N}
        self.sl = sl | {mul(h, minus, N) for h in sl}

    def contains(self, g):
        return tuple(x % self.N for x in g) in self.sl

    def cusps(self, preferred=()):
        """Return list of (alpha in SL2(Z), width)."""
        N = self.N
        T = (1, 1, 0, 1)
        covered = set()
        out = []
        cands = list(preferred) + [(1, 0, 0, 1)] + fraction_matrices(N)
        for alpha in cands:
            am = tuple(x % N for x in alpha)
            if am in covered:
                continue
            # orbit: Gamma * alpha * <T>
            w = 1
            tw = T
            ainv = inv_mod(am, N)
            while True:
                m = mul(mul(am, tw, N), ainv, N)
                if m in self.sl:
                    break
                w += 1
                tw = mul(tw, T, N)
            cur = am
            for _ in range(w):
                for s in self.sl:
                    covered.add(mul(s, cur, N))
                cur = mul(cur, T, N)
            out.append((alpha, w))
        return out


def inv_mod(g, N):
    a, b, c, d = g
    dt = (a * d - b * c) % N
    di = pow(dt, -1, N)
    return ((d * di) % N, (-b * di) % N, (-c * di) % N, (a * di) % N)


def fraction_matrices(N):
    """SL2(Z) matrices sending infinity to a/c for 0 <= a < c <= N."""
    out = []
    for c in range(1, N + 1):
        for a in range(0, c + 1):
            if gcd(a, c) != 1:
                continue
            # a*d - b*c = 1
            x, y = _bezout_pair(a, c)  # x*a - y*c = 1
            out.append((a, y, c, x))
    return out
