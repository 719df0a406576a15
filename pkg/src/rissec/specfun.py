"""Scalar special functions used by the channel and metric code.

The gamma/Bessel kernels are thin, validated wrappers over :mod:`scipy.special`;
the Meijer G evaluator lives in :mod:`rissec.meijerg` and is re-exported here.
"""

from __future__ import annotations

import numpy as np
from scipy import special as sp

from rissec.meijerg import (
    ConvergenceError,
    EvalReport,
    MeijerG,
    MeijerGSpec,
    MeijerGSpecError,
    meijer_g,
)

__all__ = [
    "ConvergenceError",
    "EvalReport",
    "MeijerG",
    "MeijerGSpec",
    "MeijerGSpecError",
    "bessel_i",
    "bessel_k",
    "ln_gamma_complex",
    "ln_gamma_real",
    "lower_incomplete_gamma",
    "meijer_g",
]


def _is_nonpositive_integer(z) -> np.ndarray:
    z = np.asarray(z)
    re = np.real(z)
    return (np.imag(z) == 0) & (re <= 0) & (re == np.round(re))


def ln_gamma_complex(z):
    """Principal branch of log Gamma for complex ``z`` (scalar or array).

    Raises ``ValueError`` at the poles z = 0, -1, -2, ...
    """
    z = np.asarray(z, dtype=complex)
    if np.any(_is_nonpositive_integer(z)):
        raise ValueError("ln_gamma_complex: pole at non-positive integer")
    out = sp.loggamma(z)
    return out[()] if out.ndim == 0 else out


def ln_gamma_real(x):
    """Return ``(log|Gamma(x)|, sign Gamma(x))`` for real ``x``.

    At poles the log is ``+inf`` and the sign is 0; callers treat that as
    1/Gamma = 0 when the value sits in a denominator.
    """
    x = np.asarray(x, dtype=float)
    pole = _is_nonpositive_integer(x)
    with np.errstate(invalid="ignore"):
        lg = np.where(pole, np.inf, sp.gammaln(x))
        sg = np.where(pole, 0.0, sp.gammasgn(x))
    return lg, sg


def lower_incomplete_gamma(s, x):
    """Non-regularized lower incomplete gamma ``gamma(s, x)``."""
    s = np.asarray(s, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(s <= 0):
        raise ValueError("lower_incomplete_gamma: s must be > 0")
    if np.any(x < 0):
        raise ValueError("lower_incomplete_gamma: x must be >= 0")
    out = sp.gammainc(s, x) * np.exp(sp.gammaln(s))
    return out[()] if out.ndim == 0 else out


def bessel_i(order: int, x):
    """Modified Bessel function of the first kind, order 0 or 1."""
    if order not in (0, 1):
        raise ValueError("bessel_i: order must be 0 or 1")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("bessel_i: x must be >= 0")
    with np.errstate(over="ignore"):
        out = sp.i0(x) if order == 0 else sp.i1(x)
    if np.any(np.isinf(out)):
        raise OverflowError("bessel_i: result exceeds double range")
    return out[()] if out.ndim == 0 else out


def bessel_k(nu, x):
    """Modified Bessel function of the second kind ``K_nu(x)``, x > 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("bessel_k: x must be > 0")
    out = sp.kv(nu, x)
    return out[()] if np.ndim(out) == 0 else out
