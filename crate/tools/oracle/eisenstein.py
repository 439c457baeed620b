"""Weight-1 Eisenstein series for Gamma(N) and traces of their products.

E_a for a = (a1, a2) in (Z/N)^2 \\ {0}:

    E_a = c0 + sum_{n>=1} q_N^n [ sum_{kj=n, j = a1 mod N} z^{k a2}
                                 - sum_{kj=n, j = -a1 mod N} z^{-k a2} ]

with q_N = exp(2 pi i tau / N), z = exp(2 pi i / N),
c0 = 1/2 - (a1 mod N)/N when a1 != 0 and c0 = (1/2)(1 + z^a2)/(1 - z^a2) when a1 = 0.
These satisfy E_a | gamma = E_{a gamma} (row vector) for gamma in SL2(Z), and
sigma_d (z -> z^d) on coefficients realises the action of diag(1, d).

Series are stored over the group ring Z[C_N], scaled by 2N so everything is integral.
"""
import numpy as np


def eis_series(a1, a2, N, P):
    """Return int64 array (P, N): 2N * E_a as group ring valued series in q_N."""
    a1 %= N
    a2 %= N
    out = np.zeros((P, N), dtype=np.int64)
    S = 2 * N
    if a1 != 0:
        # 2N * (1/2 - a1/N) = N - 2 a1
        out[0, 0] = N - 2 * a1
    else:
        assert a2 != 0
        from math import gcd
        m = N // gcd(a2, N)  # order of zeta^a2
        step = N // m  # zeta^a2 generates same group as zeta^step; write zeta^a2 = w
        # 1/(1-w) = -(1/m) sum_{j=0}^{m-1} j w^j ; c0 = (1/2)(1+w)/(1-w)
        # 2N*c0 = N (1+w) * (-(1/m)) sum j w^j = -(N/m) (1+w) sum j w^j
        coef = np.zeros(N, dtype=np.int64)
        for j in range(m):
            coef[(j * a2) % N] += j
        conv = coef + np.roll(coef, a2)  # (1 + w) * sum
        out[0] = -(N // m) * conv
    for j in range(1, P):
        if (j - a1) % N == 0:
            for k in range(1, (P - 1) // j + 1):
                out[k * j, (k * a2) % N] += S
        if (j + a1) % N == 0:
            for k in range(1, (P - 1) // j + 1):
                out[k * j, (-k * a2) % N] -= S
    return out


class EisTable:
    """FFT cache of all E_a (scaled) for a in (Z/N)^2 minus 0."""

    def __init__(self, N, P):
        self.N = N
        self.P = P
        self.L = 2 * P
        self.index = {}
        arrs = []
        for a1 in range(N):
            for a2 in range(N):
                if a1 == 0 and a2 == 0:
                    continue
                self.index[(a1, a2)] = len(arrs)
                e = eis_series(a1, a2, N, P)
                pad = np.zeros((self.L, N))
                pad[:P] = e
                arrs.append(np.fft.fft2(pad))
        self.fft = np.array(arrs)

    def get(self, v):
        return self.fft[self.index[(v[0] % self.N, v[1] % self.N)]]
