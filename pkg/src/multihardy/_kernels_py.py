"""Pure numpy implementations of the hot kernels (fallback backend)."""

import numpy as np


def pairwise_potential(x, poles, delta=0.0):
    """Sum over pairs of ``|a_i-a_j|^2 / ((|x-a_i|^2+d^2)(|x-a_j|^2+d^2))``.

    Parameters
    ----------
    x : ndarray, shape (m, N)
    poles : ndarray, shape (n, N)
    delta : float
        Regularization length; 0 gives the singular potential.

    Returns
    -------
    ndarray, shape (m,)
    """
    x = np.ascontiguousarray(x, dtype=float)
    poles = np.ascontiguousarray(poles, dtype=float)
    inv = 1.0 / (((x[:, None, :] - poles[None]) ** 2).sum(-1) + delta * delta)
    n = len(poles)
    out = np.zeros(len(x))
    for i in range(n):
        for j in range(i + 1, n):
            out += ((poles[i] - poles[j]) ** 2).sum() * inv[:, i] * inv[:, j]
    return out


def sum_inverse_square(x, poles, delta=0.0):
    x = np.ascontiguousarray(x, dtype=float)
    r2 = ((x[:, None, :] - np.asarray(poles, dtype=float)[None]) ** 2).sum(-1)
    return (1.0 / (r2 + delta * delta)).sum(-1)


def power_product(x, poles, exps):
    """Value and gradient of ``prod_i |x-a_i|^{e_i}``.

    Returns
    -------
    value : ndarray, shape (m,)
    grad : ndarray, shape (m, N)
    """
    x = np.ascontiguousarray(x, dtype=float)
    diff = x[:, None, :] - np.asarray(poles, dtype=float)[None]
    r2 = (diff**2).sum(-1)
    exps = np.asarray(exps, dtype=float)
    val = np.exp(0.5 * (np.log(r2) * exps).sum(-1))
    loggrad = (exps[None, :, None] * diff / r2[..., None]).sum(1)
    return val, val[:, None] * loggrad
