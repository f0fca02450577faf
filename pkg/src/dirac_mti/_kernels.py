"""Fused pointwise 2x2 kernels for the long reference runs."""
import numba
import numpy as np


@numba.njit(cache=True)
def mix_into(u, m11, m12, m21, m22, out):
    # out[:, j] = [[m11, m12], [m21, m22]]_j @ u[:, j]; out may alias u
    for j in range(u.shape[1]):
        a = u[0, j]
        b = u[1, j]
        out[0, j] = m11[j] * a + m12[j] * b
        out[1, j] = m21[j] * a + m22[j] * b


@numba.njit(cache=True)
def sym_mix_into(u, d, o, out):
    # matrices of the form [[d, o], [o, d]]
    for j in range(u.shape[1]):
        a = u[0, j]
        b = u[1, j]
        out[0, j] = d[j] * a + o[j] * b
        out[1, j] = o[j] * a + d[j] * b


def warmup() -> None:
    u = np.zeros((2, 4), dtype=complex)
    m = np.zeros(4, dtype=complex)
    mix_into(u, m, m, m, m, u)
    sym_mix_into(u, m, m, u)
