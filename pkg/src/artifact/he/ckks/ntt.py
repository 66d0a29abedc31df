"""Negacyclic NTT over a stack of word-sized primes.

Polynomials are ``int64`` arrays of shape ``(k, N)``: row ``r`` holds the
residues modulo ``moduli[r]``. All primes are below 2**31, so every product
of two residues fits in a signed 64-bit integer.

Forward transform is Cooley-Tukey (natural order in, bit-reversed out),
inverse is Gentleman-Sande, both with the 2N-th root folded into the
twiddles, so pointwise products of transforms are products in
Z_q[X]/(X^N + 1).
"""

from dataclasses import dataclass

import numpy as np

from ..._jit import njit, pick

MAX_PRIME_BITS = 31


def is_prime(n: int) -> bool:
    from sympy import isprime

    return bool(isprime(n))


def ntt_friendly(q: int, n: int) -> bool:
    return q < (1 << MAX_PRIME_BITS) and q % (2 * n) == 1 and is_prime(q)


def find_primes(n: int, bits: int, count: int, exclude=(), below=None):
    """``count`` primes q = 1 mod 2n, descending from ``below`` (default 2**bits)."""
    step = 2 * n
    top = (1 << bits) if below is None else below
    q = (top - 1) // step * step + 1
    if q >= top:
        q -= step
    out = []
    while len(out) < count:
        if q < step:
            raise ValueError(f"ran out of NTT primes below 2**{bits} for N={n}")
        if q not in exclude and is_prime(q):
            out.append(q)
        q -= step
    return out


def find_prime_near(n: int, target: int, exclude=()):
    """Prime q = 1 mod 2n closest to ``target``."""
    step = 2 * n
    base = (target - 1) // step * step + 1
    for off in range(0, target // step):
        for cand in (base + off * step, base - off * step):
            if 0 < cand < (1 << MAX_PRIME_BITS) and cand not in exclude and is_prime(cand):
                return cand
    raise ValueError(f"no NTT prime near {target} for N={n}")


def _primitive_2n_root(q: int, n: int) -> int:
    for g in range(2, 10_000):
        psi = pow(g, (q - 1) // (2 * n), q)
        if pow(psi, n, q) == q - 1:
            return psi
    raise ValueError(f"no primitive {2 * n}-th root of unity mod {q}")


def bit_reverse(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


_SHOUP_BITS = MAX_PRIME_BITS


def _shoup(w: np.ndarray, q: np.ndarray) -> np.ndarray:
    """floor(w * 2**31 / q): lets the jitted loops reduce by multiply and shift."""
    return (w << _SHOUP_BITS) // q


@dataclass(frozen=True)
class NTTTables:
    moduli: np.ndarray       # (k,)
    psi_rev: np.ndarray      # (k, N)
    psi_inv_rev: np.ndarray  # (k, N)
    n_inv: np.ndarray        # (k,)
    psi_rev_shoup: np.ndarray
    psi_inv_rev_shoup: np.ndarray
    n_inv_shoup: np.ndarray

    @classmethod
    def build(cls, moduli, n: int) -> "NTTTables":
        rev = bit_reverse(n)
        k = len(moduli)
        psi_rev = np.empty((k, n), dtype=np.int64)
        psi_inv_rev = np.empty((k, n), dtype=np.int64)
        n_inv = np.empty(k, dtype=np.int64)
        for r, q in enumerate(moduli):
            q = int(q)
            psi = _primitive_2n_root(q, n)
            psi_inv = pow(psi, -1, q)
            pw = np.empty(n, dtype=np.int64)
            pw_inv = np.empty(n, dtype=np.int64)
            a = b = 1
            for i in range(n):
                pw[i], pw_inv[i] = a, b
                a = a * psi % q
                b = b * psi_inv % q
            psi_rev[r] = pw[rev]
            psi_inv_rev[r] = pw_inv[rev]
            n_inv[r] = pow(n, -1, q)
        q = np.asarray(moduli, dtype=np.int64)
        return cls(q, psi_rev, psi_inv_rev, n_inv, _shoup(psi_rev, q[:, None]),
                   _shoup(psi_inv_rev, q[:, None]), _shoup(n_inv, q))

    def take(self, rows) -> "NTTTables":
        rows = np.asarray(rows)
        return NTTTables(*(getattr(self, f)[rows] for f in self.__dataclass_fields__))


@njit(cache=True)
def _mulmod(x, w, w_shoup, mod):
    # x, w < mod < 2**31; the estimate is off by at most one multiple of mod
    r = x * w - ((x * w_shoup) >> 31) * mod
    if r >= mod:
        r -= mod
    return r


@njit(cache=True)
def _forward_numba(a, q, psi_rev, psi_rev_shoup):
    k, n = a.shape
    out = a.copy()
    for r in range(k):
        mod = q[r]
        t = n
        m = 1
        while m < n:
            t >>= 1
            for i in range(m):
                j1 = 2 * i * t
                s = psi_rev[r, m + i]
                s_sh = psi_rev_shoup[r, m + i]
                for j in range(j1, j1 + t):
                    u = out[r, j]
                    v = _mulmod(out[r, j + t], s, s_sh, mod)
                    x = u + v
                    if x >= mod:
                        x -= mod
                    y = u - v
                    if y < 0:
                        y += mod
                    out[r, j] = x
                    out[r, j + t] = y
            m <<= 1
    return out


@njit(cache=True)
def _inverse_numba(a, q, psi_inv_rev, n_inv, psi_inv_rev_shoup, n_inv_shoup):
    k, n = a.shape
    out = a.copy()
    for r in range(k):
        mod = q[r]
        t = 1
        m = n
        while m > 1:
            h = m >> 1
            j1 = 0
            for i in range(h):
                s = psi_inv_rev[r, h + i]
                s_sh = psi_inv_rev_shoup[r, h + i]
                for j in range(j1, j1 + t):
                    u = out[r, j]
                    v = out[r, j + t]
                    x = u + v
                    if x >= mod:
                        x -= mod
                    y = u - v
                    if y < 0:
                        y += mod
                    out[r, j] = x
                    out[r, j + t] = _mulmod(y, s, s_sh, mod)
                j1 += 2 * t
            t <<= 1
            m = h
        ni = n_inv[r]
        ni_sh = n_inv_shoup[r]
        for j in range(n):
            out[r, j] = _mulmod(out[r, j], ni, ni_sh, mod)
    return out


def _forward_numpy(a, q, psi_rev):
    k, n = a.shape
    out = a.copy()
    qc = q[:, None, None]
    t, m = n, 1
    while m < n:
        t //= 2
        v = out.reshape(k, m, 2, t)
        s = psi_rev[:, m:2 * m, None]
        u = v[:, :, 0, :]
        w = (v[:, :, 1, :] * s) % qc
        top = (u + w) % qc
        bot = (u - w) % qc
        v[:, :, 0, :] = top
        v[:, :, 1, :] = bot
        m *= 2
    return out


def _inverse_numpy(a, q, psi_inv_rev, n_inv):
    k, n = a.shape
    out = a.copy()
    qc = q[:, None, None]
    t, m = 1, n
    while m > 1:
        h = m // 2
        v = out.reshape(k, h, 2, t)
        s = psi_inv_rev[:, h:m, None]
        u = v[:, :, 0, :]
        w = v[:, :, 1, :]
        top = (u + w) % qc
        bot = ((u - w) % qc * s) % qc
        v[:, :, 0, :] = top
        v[:, :, 1, :] = bot
        t *= 2
        m = h
    return (out * n_inv[:, None]) % q[:, None]


def _as_rows(a):
    return np.ascontiguousarray(a, dtype=np.int64)


def forward_numpy(a, tables):
    return _forward_numpy(_as_rows(a), tables.moduli, tables.psi_rev)


def forward_numba(a, tables):
    return _forward_numba(_as_rows(a), tables.moduli, tables.psi_rev, tables.psi_rev_shoup)


def inverse_numpy(a, tables):
    return _inverse_numpy(_as_rows(a), tables.moduli, tables.psi_inv_rev, tables.n_inv)


def inverse_numba(a, tables):
    return _inverse_numba(_as_rows(a), tables.moduli, tables.psi_inv_rev, tables.n_inv,
                          tables.psi_inv_rev_shoup, tables.n_inv_shoup)


_forward = pick(forward_numba, forward_numpy)
_inverse = pick(inverse_numba, inverse_numpy)


def forward(a: np.ndarray, tables: NTTTables) -> np.ndarray:
    """Residues in [0, q) -> evaluation form, row-wise."""
    return _forward(a, tables)


def inverse(a: np.ndarray, tables: NTTTables) -> np.ndarray:
    return _inverse(a, tables)


@njit(cache=True)
def _dot_digits_numba(lifted, key, q):
    d, e, n = lifted.shape
    out = np.zeros((2, e, n), dtype=np.int64)
    for c in range(2):
        for r in range(e):
            mod = q[r]
            for j in range(n):
                acc = 0
                for i in range(d):
                    acc += lifted[i, r, j] * key[i, c, r, j] % mod
                out[c, r, j] = acc % mod
    return out


def _dot_digits_numpy(lifted, key, q):
    qc = q[:, None]
    return (lifted[:, None] * key % qc).sum(axis=0) % qc


_dot_digits = pick(_dot_digits_numba, _dot_digits_numpy)


def dot_digits(lifted: np.ndarray, key: np.ndarray, q: np.ndarray) -> np.ndarray:
    """sum_i lifted[i] * key[i] per row, for lifted (D, E, N) and key (D, 2, E, N)."""
    return _dot_digits(_as_rows(lifted), _as_rows(key), q)


@njit(cache=True)
def _sub_mul_numba(x, y, c, q):
    out = np.empty_like(x)
    m, k, n = x.shape
    for a in range(m):
        for r in range(k):
            mod = q[r]
            for j in range(n):
                v = x[a, r, j] - y[a, r, j]
                if v < 0:
                    v += mod
                out[a, r, j] = v * c[r] % mod
    return out


def _sub_mul_numpy(x, y, c, q):
    qc = q[:, None]
    return (x - y) % qc * c[:, None] % qc


_sub_mul = pick(_sub_mul_numba, _sub_mul_numpy)


def sub_mul(x: np.ndarray, y: np.ndarray, c: np.ndarray, q: np.ndarray) -> np.ndarray:
    """(x - y) * c mod q per row, for residue stacks of shape (M, k, N)."""
    shape = x.shape
    k, n = shape[-2:]
    return _sub_mul(_as_rows(x).reshape(-1, k, n), _as_rows(y).reshape(-1, k, n), c, q).reshape(shape)
