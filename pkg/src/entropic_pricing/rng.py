"""Counter-based random numbers keyed by (seed, path, step).

Every draw is a pure function of its coordinates, so an ensemble can be
generated in any order, in any number of chunks or workers, and still come out
bit-identical. The bit generator is Philox4x32-10 (Salmon et al., SC'11),
vectorized over numpy arrays of counters.
"""

import numpy as np
from scipy.special import erfc

__all__ = ["philox4x32", "uniforms", "standard_normals", "normal_quantile"]

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint32(0x9E3779B9)
_W1 = np.uint32(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)


def _mulhilo(m, x):
    prod = m * x.astype(np.uint64)
    return (prod >> _SHIFT32).astype(np.uint32), (prod & _MASK32).astype(np.uint32)


def philox4x32(counter, key, rounds=10):
    """Philox4x32 block function.

    Parameters
    ----------
    counter : sequence of four uint32 arrays (broadcastable to a common shape)
    key : sequence of two uint32 scalars or arrays
    rounds : int

    Returns
    -------
    tuple of four uint32 arrays
    """
    c0, c1, c2, c3 = np.broadcast_arrays(*(np.asarray(c, dtype=np.uint32) for c in counter))
    k0 = np.uint32(key[0])
    k1 = np.uint32(key[1])
    with np.errstate(over="ignore"):
        for r in range(rounds):
            if r:
                k0 = np.uint32(k0 + _W0)
                k1 = np.uint32(k1 + _W1)
            hi0, lo0 = _mulhilo(_M0, c0)
            hi1, lo1 = _mulhilo(_M1, c2)
            c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


def _split_seed(seed):
    seed = int(seed)
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be in [0, 2**64), got {seed}")
    return seed & 0xFFFFFFFF, seed >> 32


def uniforms(seed, path_index, step_index):
    """Uniform draws on the open interval (0, 1), one per (path, step) pair.

    ``path_index`` and ``step_index`` broadcast against each other. Each
    uniform carries 53 random bits built from two 32-bit Philox output words.
    """
    path = np.asarray(path_index, dtype=np.uint64)
    step = np.asarray(step_index, dtype=np.uint64)
    path, step = np.broadcast_arrays(path, step)
    ctr = (
        (step & _MASK32).astype(np.uint32),
        (step >> _SHIFT32).astype(np.uint32),
        (path & _MASK32).astype(np.uint32),
        (path >> _SHIFT32).astype(np.uint32),
    )
    w0, w1, _, _ = philox4x32(ctr, _split_seed(seed))
    bits = (w0.astype(np.uint64) << _SHIFT32) | w1.astype(np.uint64)
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


# Acklam's rational approximation to the normal quantile (rel. error 1.15e-9).
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _acklam_lower(p):
    # valid for 0 < p <= 0.5
    x = np.empty_like(p)
    tail = p < _P_LOW
    q = np.sqrt(-2.0 * np.log(p[tail]))
    x[tail] = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
        (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    mid = ~tail
    q = p[mid] - 0.5
    r = q * q
    x[mid] = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / (
        ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    return x


def normal_quantile(p):
    """Inverse of the standard normal CDF for p in (0, 1).

    Acklam's rational approximation followed by one Halley correction against
    ``erfc``; the result is accurate to a few ulps and monotone in ``p``.
    """
    p = np.asarray(p, dtype=np.float64)
    if np.any((p <= 0.0) | (p >= 1.0) | ~np.isfinite(p)):
        raise ValueError("normal_quantile requires 0 < p < 1")
    scalar = p.ndim == 0
    p = np.atleast_1d(p)
    upper = p > 0.5
    # 1 - p is exact for p in (0.5, 1), so the upper half reuses the lower branch
    q = np.where(upper, 1.0 - p, p)
    x = _acklam_lower(q)
    err = 0.5 * erfc(-x / np.sqrt(2.0)) - q
    u = err * np.sqrt(2.0 * np.pi) * np.exp(0.5 * x * x)
    x = x - u / (1.0 + 0.5 * x * u)
    x = np.where(upper, -x, x)
    return x[0] if scalar else x


def standard_normals(seed, path_index, step_index):
    """Standard normal draws keyed by (seed, path, step) via the inverse CDF."""
    return normal_quantile(uniforms(seed, path_index, step_index))
