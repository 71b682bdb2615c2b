"""Pure-Python/numpy implementations of the hot enumeration kernels.

The compiled extension (orthocount._core) implements the same three functions
with identical output arrays (same values, same order); orthocount._backend
picks whichever is available. Output order contracts:

- sl2z_ball: identity family (c=0) first with b ascending, then c ascending,
  d ascending, translate index t ascending.
- sl2z_cusp_cosets: c ascending, a ascending.
- modular_reduce: elementwise, input order.
"""

import numpy as np

BACKEND_NAME = "pure"


def _modinv_arr(a: np.ndarray, c: int) -> np.ndarray:
    """Inverse of a mod c (elementwise, gcd(a, c) = 1 assumed), by a masked
    vectorized extended Euclidean iteration."""
    a = np.mod(a.astype(np.int64), c)
    if c == 1:
        return np.zeros_like(a)
    old_r = a.copy()
    r = np.full_like(a, c)
    old_s = np.ones_like(a)
    s = np.zeros_like(a)
    active = r != 0
    while active.any():
        q = np.zeros_like(a)
        q[active] = old_r[active] // r[active]
        old_r, r = np.where(active, r, old_r), np.where(active, old_r - q * r, r)
        old_s, s = np.where(active, s, old_s), np.where(active, old_s - q * s, s)
        active = r != 0
    return np.mod(old_s, c)


def sl2z_ball(max_norm2: float, element_cap: int = 10**8) -> np.ndarray:
    """All PSL(2,Z) matrices with a^2+b^2+c^2+d^2 <= max_norm2, one canonical
    representative each (c > 0, or c = 0 and a = d = 1), as an (n, 4) int64
    array of rows (a, b, c, d).

    The Frobenius bound is the exact displacement criterion at base point i:
    cosh d(i, g i) = ||g||^2 / 2.
    """
    N = float(max_norm2)
    if N < 2.0:
        return np.empty((0, 4), dtype=np.int64)
    chunks = []
    total = 0
    # c = 0: translations
    B = int(np.floor(np.sqrt(max(N - 2.0, 0.0))))
    bs = np.arange(-B, B + 1, dtype=np.int64)
    ident = np.stack([np.ones_like(bs), bs, np.zeros_like(bs), np.ones_like(bs)], axis=1)
    chunks.append(ident)
    total += len(ident)
    cmax = int(np.floor(np.sqrt(N - 1.0)))
    for c in range(1, cmax + 1):
        Dmax = int(np.floor(np.sqrt(N - c * c)))
        d = np.arange(-Dmax, Dmax + 1, dtype=np.int64)
        d = d[np.gcd(d, np.int64(c)) == 1]
        if len(d) == 0:
            continue
        a0 = _modinv_arr(d, c)
        b0 = (a0 * d - 1) // c
        # translate family (a0 + t c, b0 + t d); quadratic bound on t
        A = np.float64(c * c) + d.astype(np.float64) ** 2
        Bq = a0.astype(np.float64) * c + b0.astype(np.float64) * d
        C = a0.astype(np.float64) ** 2 + b0.astype(np.float64) ** 2 - (N - A)
        disc = Bq * Bq - A * C
        ok = disc >= 0
        if not ok.any():
            continue
        d, a0, b0, A, Bq, C, disc = d[ok], a0[ok], b0[ok], A[ok], Bq[ok], C[ok], disc[ok]
        s = np.sqrt(disc)
        t1 = np.ceil((-Bq - s) / A).astype(np.int64)
        t2 = np.floor((-Bq + s) / A).astype(np.int64)

        def q(t):
            tf = t.astype(np.float64)
            return A * tf * tf + 2.0 * Bq * tf + C

        for _ in range(2):  # guard float rounding at the interval ends
            t1 = np.where(q(t1 - 1) <= 0, t1 - 1, t1)
            t2 = np.where(q(t2 + 1) <= 0, t2 + 1, t2)
        t1 = np.where(q(t1) > 0, t1 + 1, t1)
        t2 = np.where(q(t2) > 0, t2 - 1, t2)
        counts = np.maximum(t2 - t1 + 1, 0)
        keep = counts > 0
        if not keep.any():
            continue
        d, a0, b0, t1, counts = d[keep], a0[keep], b0[keep], t1[keep], counts[keep]
        reps = np.repeat(np.arange(len(d)), counts)
        offs = np.arange(int(counts.sum()), dtype=np.int64) - np.repeat(
            np.concatenate(([0], np.cumsum(counts)[:-1])), counts
        )
        t = t1[reps] + offs
        a = a0[reps] + t * c
        b = b0[reps] + t * d[reps]
        rows = np.stack([a, b, np.full_like(a, c), d[reps]], axis=1)
        chunks.append(rows)
        total += len(rows)
        if total > element_cap:
            raise MemoryError(f"sl2z_ball element cap {element_cap} exceeded")
    return np.concatenate(chunks, axis=0)


def sl2z_cusp_cosets(c_max: int) -> np.ndarray:
    """Canonical double-coset witnesses for the pair of parabolic stabilizers
    of infinity in PSL(2,Z): rows (a, b, c, d) with 1 <= c <= c_max,
    0 <= a < c, gcd(a, c) = 1, d = a^{-1} mod c, b = (a d - 1)/c."""
    chunks = []
    for c in range(1, int(c_max) + 1):
        if c == 1:
            a = np.array([0], dtype=np.int64)
            d = np.array([0], dtype=np.int64)
        else:
            a = np.arange(c, dtype=np.int64)
            a = a[np.gcd(a, np.int64(c)) == 1]
            d = _modinv_arr(a, c)
        b = (a * d - 1) // c
        chunks.append(np.stack([a, b, np.full_like(a, c), d], axis=1))
    if not chunks:
        return np.empty((0, 4), dtype=np.int64)
    return np.concatenate(chunks, axis=0)


def modular_reduce(x: np.ndarray, y: np.ndarray, max_iter: int = 256):
    """Reduce points x + i y to the standard modular fundamental domain
    (|Re| <= 1/2, |z| >= 1) by alternating integer translations and the
    inversion z -> -1/z. Vectorized masked iteration; elementwise identical
    to the compiled kernel."""
    x = np.array(x, dtype=np.float64, copy=True)
    y = np.array(y, dtype=np.float64, copy=True)
    active = np.ones(x.shape, dtype=bool)
    for _ in range(max_iter):
        x[active] -= np.floor(x[active] + 0.5)
        r2 = x * x + y * y
        inv = active & (r2 < 1.0)
        if not inv.any():
            break
        x[inv] = -x[inv] / r2[inv]
        y[inv] = y[inv] / r2[inv]
        active = inv
    return x, y
