"""Pure numpy fallback for :mod:`preschwarz._kernels`."""

import numpy as np


def series_mul(a, b, ia, ib, ic, size):
    prod = a[ia] * b[ib]
    return (np.bincount(ic, weights=prod.real, minlength=size)
            + 1j * np.bincount(ic, weights=prod.imag, minlength=size))


def series_mul_slice(a, b, ia, ib, ic, lo, hi):
    mask = (ic >= lo) & (ic < hi)
    prod = a[ia[mask]] * b[ib[mask]]
    k = ic[mask] - lo
    return (np.bincount(k, weights=prod.real, minlength=hi - lo)
            + 1j * np.bincount(k, weights=prod.imag, minlength=hi - lo))
