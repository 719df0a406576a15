"""Numerical Meijer G-function for real parameters and positive real argument.

Two independent evaluation routes are provided:

* ``slater`` -- sum of residues over one pole family.  Each family is a
  generalized hypergeometric series whose coefficients follow from the
  rational term ratio; they are accumulated in log space, in extended
  precision, with sign tracking.  Points where the families still cancel too
  much are redone in decimal arithmetic with enough digits to cover the loss.
  Integer-coincident poles inside the active family are split by a symmetric
  +/- epsilon shift of the colliding parameters and the results averaged at
  epsilon and epsilon/2 then Richardson-extrapolated.
* ``mellin_barnes`` -- direct quadrature of the defining contour integral on
  a vertical line.  When no vertical line separates the two pole families the
  line is placed in the least-crowded gap and the residues of the poles that
  end up on the wrong side are added back explicitly.

:class:`MeijerG` precomputes everything that does not depend on ``z`` so that
the same function can be evaluated on large ``z`` arrays cheaply.
"""

from __future__ import annotations

import decimal
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import special as sp

EPS = np.finfo(float).eps
DEFAULT_EPSILON = 1e-5
_INT_TOL = 1e-10
_MAX_ESCALATIONS = 256
_MAX_DIGITS = 1200
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)

__all__ = [
    "ConvergenceError",
    "EvalReport",
    "MeijerG",
    "MeijerGSpec",
    "MeijerGSpecError",
    "large_argument_leading",
    "log_decay_estimate",
    "meijer_g",
]


class MeijerGSpecError(ValueError):
    """The parameter bundle violates a G-function invariant."""


class ConvergenceError(RuntimeError):
    """Neither evaluation route reached the requested accuracy."""


def _near_integer(x: float) -> bool:
    return abs(x - round(x)) < _INT_TOL


@dataclass(frozen=True)
class MeijerGSpec:
    """Parameters of ``G^{m,n}_{p,q}(z | a; b)``.

    ``a`` has length p, ``b`` has length q.  The first ``n`` entries of ``a``
    and the first ``m`` entries of ``b`` are the ones whose gamma functions
    sit in the numerator of the Mellin-Barnes integrand.
    """

    m: int
    n: int
    a: tuple[float, ...]
    b: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(x) for x in self.a))
        object.__setattr__(self, "b", tuple(float(x) for x in self.b))
        p, q = len(self.a), len(self.b)
        if not 0 <= self.m <= q:
            raise MeijerGSpecError(f"invariant 0 <= m <= q violated (m={self.m}, q={q})")
        if not 0 <= self.n <= p:
            raise MeijerGSpecError(f"invariant 0 <= n <= p violated (n={self.n}, p={p})")
        if self.m + self.n == 0:
            raise MeijerGSpecError("invariant m + n >= 1 violated")
        if not all(np.isfinite(self.a + self.b)):
            raise MeijerGSpecError("parameters must be finite")
        for i in range(self.n):
            for j in range(self.m):
                d = self.a[i] - self.b[j]
                if d > 0.5 and _near_integer(d):
                    raise MeijerGSpecError(
                        "pole collision: a[%d] - b[%d] = %g is a positive integer" % (i, j, d)
                    )

    @property
    def p(self) -> int:
        return len(self.a)

    @property
    def q(self) -> int:
        return len(self.b)

    @property
    def delta(self) -> float:
        """Contour decay rate; the Mellin-Barnes integral needs delta > 0."""
        return self.m + self.n - 0.5 * (self.p + self.q)

    def reflected(self) -> "MeijerGSpec":
        """Spec of the identity G(z | a; b) = G'(1/z | 1-b; 1-a)."""
        return MeijerGSpec(self.n, self.m, tuple(1 - x for x in self.b), tuple(1 - x for x in self.a))

    def __str__(self):
        return f"G^{{{self.m},{self.n}}}_{{{self.p},{self.q}}}(a={list(self.a)}; b={list(self.b)})"


@dataclass(frozen=True)
class EvalReport:
    value: float
    abs_err_estimate: float
    method: str
    perturbation_applied: bool


# --------------------------------------------------------------------------- #
# residue terms


def _lg(c, k, s):
    """log|Gamma|, sign and pole mask of Gamma(c + s*k) for integer array k.

    Near the poles the reflection formula is used with sin(pi x) taken from
    the fractional part of the scalar ``c``, so arguments at distance 1e-5
    from a pole keep full relative accuracy.
    """
    x = c + s * k
    cr = np.round(c)
    frac = c - cr
    pole = (frac == 0) & (x <= 0)
    refl = (x < 0.5) & ~pole
    lg = np.empty_like(x)
    sg = np.empty_like(x)
    direct = ~refl & ~pole
    lg[direct] = sp.gammaln(x[direct])
    sg[direct] = 1.0
    if np.any(refl):
        xr = x[refl]
        # sin(pi x) = sin(pi frac) * (-1)^(cr + s k)
        parity = np.where(np.mod(cr + s * k[refl], 2) == 0, 1.0, -1.0)
        sinpx = np.sin(np.pi * frac) * parity
        lg[refl] = np.log(np.pi) - np.log(np.abs(sinpx)) - sp.gammaln(1.0 - xr)
        sg[refl] = np.sign(sinpx)
    lg[pole] = np.inf
    sg[pole] = 0.0
    return lg, sg, pole


def _pole_terms(a, b, m, n, h, k):
    """Log-magnitude, sign and conditioning weight of the residue at s = b[h] + k.

    The z-dependence z**(b[h] + k) is left to the caller.  A zero sign marks
    a term killed by a 1/Gamma at a pole.
    """
    k = np.asarray(k, dtype=float)
    bh = b[h]
    L = -sp.gammaln(k + 1)
    S = np.where(np.mod(k, 2) == 0, 1.0, -1.0)
    A = np.abs(L)
    zero = np.zeros(k.shape, dtype=bool)
    for j in range(m):
        if j == h:
            continue
        lg, sg, pole = _lg(b[j] - bh, k, -1)
        if np.any(pole):
            raise MeijerGSpecError("coincident poles inside one family (needs perturbation)")
        L = L + lg
        S = S * sg
        A = A + np.abs(lg)
    for j in range(n):
        lg, sg, pole = _lg(1 - a[j] + bh, k, 1)
        if np.any(pole):
            raise MeijerGSpecError("pole collision between families")
        L = L + lg
        S = S * sg
        A = A + np.abs(lg)
    for j in range(m, len(b)):
        lg, sg, pole = _lg(1 - b[j] + bh, k, 1)
        zero |= pole
        L = L - np.where(pole, 0.0, lg)
        S = S * np.where(pole, 0.0, sg)
        A = A + np.where(pole, 0.0, np.abs(lg))
    for j in range(n, len(a)):
        lg, sg, pole = _lg(a[j] - bh, k, -1)
        zero |= pole
        L = L - np.where(pole, 0.0, lg)
        S = S * np.where(pole, 0.0, sg)
        A = A + np.where(pole, 0.0, np.abs(lg))
    S = np.where(zero, 0.0, S)
    L = np.where(zero, -np.inf, L)
    return L, S, A


def _terms_at(a, b, m, n, h, k, lnz):
    """Explicit residue contributions (array over lnz) for the pole list k."""
    L, S, A = _pole_terms(a, b, m, n, h, k)
    E = L[None, :] + (b[h] + np.asarray(k, float))[None, :] * lnz[:, None]
    with np.errstate(over="ignore", invalid="ignore"):
        T = np.where(S[None, :] == 0, 0.0, S[None, :] * np.exp(E))
        err = np.where(S[None, :] == 0, 0.0, np.abs(T) * EPS * (4.0 + A[None, :] + np.abs(E)))
    return T.sum(axis=1), err.sum(axis=1)


# --------------------------------------------------------------------------- #
# Slater expansion


LD = np.longdouble
EPS_LD = np.finfo(LD).eps
_PI_LD = LD("3.141592653589793238462643383279502884")
_HALF_LN_2PI = LD("0.918938533204672741780329736405617639")
_STIRLING = [LD(1) / 12, LD(-1) / 360, LD(1) / 1260, LD(-1) / 1680, LD(1) / 1188,
             LD(-691) / 360360, LD(1) / 156, LD(-3617) / 122400]


def _lgamma_ld(x):
    """log|Gamma(x)| and sign in extended precision for a scalar x (pole: inf, 0)."""
    x = LD(x)
    if x < 0.5:
        r = np.round(x)
        fr = x - r
        if fr == 0:
            return LD(np.inf), 0
        s = np.sin(_PI_LD * fr) * (1 if int(r) % 2 == 0 else -1)
        lg, _ = _lgamma_ld(1 - x)
        return np.log(_PI_LD) - np.log(np.abs(s)) - lg, (1 if s > 0 else -1)
    acc = LD(0)
    while x < 30:
        acc += np.log(x)
        x += 1
    inv = 1 / x
    inv2 = inv * inv
    ser = LD(0)
    pw = inv
    for c in _STIRLING:
        ser += c * pw
        pw *= inv2
    return (x - LD(0.5)) * np.log(x) - x + _HALF_LN_2PI + ser - acc, 1


def _family_start(a, b, m, n, h):
    """First non-vanishing residue index of family h with its log|coef| and sign.

    Returns None when the whole family is annihilated by a 1/Gamma pole.
    """
    bh = LD(b[h])
    k0 = 0
    for j in range(m, len(b)):
        c = 1 - LD(b[j]) + bh
        if c <= 0 and c == np.round(c):
            k0 = max(k0, int(-c) + 1)
    lg, _ = _lgamma_ld(k0 + 1)
    L = -lg
    S = -1 if k0 % 2 else 1
    for j in range(m):
        if j == h:
            continue
        lg, sg = _lgamma_ld(LD(b[j]) - bh - k0)
        if sg == 0 or LD(b[j]) - bh == np.round(LD(b[j]) - bh):
            raise MeijerGSpecError("coincident poles inside one family (needs perturbation)")
        L, S = L + lg, S * sg
    for j in range(n):
        c = 1 - LD(a[j]) + bh
        if c <= 0 and c == np.round(c):
            raise MeijerGSpecError("pole collision between families")
        lg, sg = _lgamma_ld(c + k0)
        L, S = L + lg, S * sg
    for j in range(m, len(b)):
        lg, sg = _lgamma_ld(1 - LD(b[j]) + bh + k0)
        if sg == 0:
            return None
        L, S = L - lg, S * sg
    for j in range(n, len(a)):
        lg, sg = _lgamma_ld(LD(a[j]) - bh - k0)
        if sg == 0:
            return None
        L, S = L - lg, S * sg
    return k0, L, S


def _family_ratios(a, b, m, n, h, k):
    """Term ratio c_{k+1}/c_k of family h as log-magnitude and sign (k longdouble)."""
    bh = LD(b[h])
    r = -1 / (k + 1)
    for j in range(m):
        if j != h:
            r = r / (LD(b[j]) - bh - k - 1)
    for j in range(n):
        r = r * (1 - LD(a[j]) + bh + k)
    for j in range(m, len(b)):
        r = r / (1 - LD(b[j]) + bh + k)
    for j in range(n, len(a)):
        r = r * (LD(a[j]) - bh - k - 1)
    with np.errstate(divide="ignore"):
        return np.log(np.abs(r)), np.sign(r)


@lru_cache(maxsize=None)
def _bernoulli(count):
    """B_2, B_4, ..., B_{2 count} as fractions (Akiyama-Tanigawa)."""
    n = 2 * count + 1
    out, row = [], [Fraction(0)] * (n + 1)
    for i in range(n + 1):
        row[i] = Fraction(1, i + 1)
        for j in range(i, 0, -1):
            row[j - 1] = j * (row[j - 1] - row[j])
        if i >= 2 and i % 2 == 0:
            out.append(row[0])
    return tuple(out)


def _dec_gamma(x, ctx):
    """Gamma(x) for a non-pole Decimal x: upward recurrence, then Stirling."""
    D = decimal.Decimal
    shift = max(0, int(3 * ctx.prec) - int(x))
    den = D(1)
    for i in range(shift):
        den = ctx.multiply(den, x + i)
    y = x + shift
    ln = ctx.ln(y)
    lg = (y - D("0.5")) * ln - y + ctx.ln(2 * _dec_pi(ctx.prec)) / 2
    pw = 1 / y
    inv2 = pw * pw
    for i, bk in enumerate(_bernoulli(ctx.prec // 2 + 4)):
        k = 2 * (i + 1)
        lg += D(bk.numerator) / D(bk.denominator * k * (k - 1)) * pw
        pw *= inv2
    return ctx.exp(lg) / den


@lru_cache(maxsize=None)
def _dec_pi(prec):
    """pi to ``prec`` digits (Machin)."""
    with decimal.localcontext() as c:
        c.prec = prec + 10
        D = decimal.Decimal

        def atan_inv(x):
            x = D(x)
            term = 1 / x
            total, k, sign = term, 1, 1
            x2 = x * x
            while True:
                term /= x2
                k += 2
                sign = -sign
                t = term / k
                if t < D(10) ** (-(prec + 8)):
                    return total
                total += sign * t

        return +(4 * (4 * atan_inv(5) - atan_inv(239)))


def _slater_left_decimal(a, b, m, n, lnz, prec):
    """Scalar residue sum in ``prec``-digit decimal arithmetic.

    Used when the extended-precision sum cancels too heavily.  Parameters and
    the argument are binary floats, hence exact decimals, so only the family
    leading coefficients and the final power of z carry rounding.
    """
    D = decimal.Decimal
    with decimal.localcontext() as ctx:
        ctx.prec = prec
        ctx.Emax, ctx.Emin = 10**8, -10**8
        A = [D(float(x)) for x in a]
        B = [D(float(x)) for x in b]
        num, den = np.exp(LD(lnz)).as_integer_ratio()
        z = D(num) / D(den)
        total = D(0)
        scale = D(0)
        for h in range(m):
            start = _family_start(a, b, m, n, h)
            if start is None:
                continue
            k0 = start[0]
            bh = B[h]
            c = D(1)
            for j in range(2, k0 + 1):
                c /= j
            if k0 % 2:
                c = -c
            for j in range(m):
                if j != h:
                    c *= _dec_gamma(B[j] - bh - k0, ctx)
            for j in range(n):
                c *= _dec_gamma(1 - A[j] + bh + k0, ctx)
            for j in range(m, len(B)):
                c /= _dec_gamma(1 - B[j] + bh + k0, ctx)
            for j in range(n, len(A)):
                c /= _dec_gamma(A[j] - bh - k0, ctx)
            t = c * ctx.power(z, bh + k0)
            peak = abs(t)
            k = k0
            while True:
                total += t
                scale += abs(t)
                peak = max(peak, abs(t))
                r = -z / (k + 1)
                for j in range(m):
                    if j != h:
                        r /= B[j] - bh - k - 1
                for j in range(n):
                    r *= 1 - A[j] + bh + k
                for j in range(m, len(B)):
                    r /= 1 - B[j] + bh + k
                for j in range(n, len(A)):
                    r *= A[j] - bh - k - 1
                t_next = t * r
                k += 1
                if t_next == 0 or (abs(t_next) < peak * D(10) ** (-prec) and abs(t_next) <= abs(t)):
                    break
                if k > 20000:
                    raise ConvergenceError("decimal Slater sum did not converge")
                t = t_next
        err = scale * D(10) ** (5 - prec)
        return float(total), float(err), scale


def _slater_left(a, b, m, n, lnz, kmax=4000, chunk=128, escalate=True):
    """Residue sum over the poles b[h] + k, h < m, at every lnz.

    Coefficients come from the rational term ratio accumulated in extended
    precision, so the sum keeps about three more digits than the double
    result needs; that margin absorbs the cancellation of alternating
    exponential-type series at moderately large argument.
    """
    lnz = np.asarray(lnz, dtype=LD)
    nz = lnz.size
    value = np.zeros(nz, dtype=LD)
    scale = np.zeros(nz, dtype=LD)
    err = np.zeros(nz, dtype=LD)
    ok = np.ones(nz, dtype=bool)
    for h in range(m):
        start = _family_start(a, b, m, n, h)
        if start is None:
            continue
        k0, Lc, Sc = start
        done = np.zeros(nz, dtype=bool)
        peak = np.full(nz, -np.inf, dtype=LD)
        last = np.zeros(nz, dtype=LD)
        while k0 < kmax and not np.all(done | ~ok):
            k = np.arange(k0, k0 + chunk, dtype=LD)
            lr, sr = _family_ratios(a, b, m, n, h, k)
            L = np.concatenate(([Lc], Lc + np.cumsum(lr[:-1])))
            S = np.concatenate(([Sc], Sc * np.cumprod(sr[:-1])))
            Lc, Sc = L[-1] + lr[-1], S[-1] * sr[-1]
            E = L[None, :] + (LD(b[h]) + k)[None, :] * lnz[:, None]
            E = np.where(S[None, :] == 0, -np.inf, E)
            active = ~done & ok
            overflow = np.any(E > 11000.0, axis=1) & active
            ok &= ~overflow
            active &= ~overflow
            with np.errstate(over="ignore", invalid="ignore"):
                T = np.where(np.isfinite(E), S[None, :] * np.exp(E), 0)
            absT = np.abs(T)
            rows = np.flatnonzero(active)
            kk = np.arange(1, chunk + 1)[None, :]
            Ef = np.abs(np.where(np.isfinite(E[rows]), E[rows], 0))
            value[rows] += T[rows].sum(axis=1)
            scale[rows] += absT[rows].sum(axis=1)
            err[rows] += (absT[rows] * EPS_LD * (8 + k0 + kk + Ef)).sum(axis=1)
            peak = np.where(active, np.maximum(peak, E.max(axis=1)), peak)
            tail = E[:, -1]
            finished = np.isneginf(tail) | ((tail < peak - 45) & (E[:, -1] <= E[:, -2]))
            last = np.where(active, absT[:, -1], last)
            done |= active & finished
            k0 += chunk
            if not np.isfinite(Lc):
                done |= active
        ok &= done
        err += 2 * last
    big = scale > np.finfo(float).max
    ok &= ~big
    with np.errstate(over="ignore"):
        v = value.astype(float)
        e = (err + EPS * np.abs(value)).astype(float)
    # heavy cancellation: redo those points with enough decimal digits
    redo = np.flatnonzero(ok & (e > 1e-12 * np.abs(v)) & (scale > 0)) if escalate else []
    for i in redo[:_MAX_ESCALATIONS]:
        # the first guess of the loss uses the long-double value, which may be
        # pure noise; repeat with the loss seen by the decimal sum itself
        lost = np.log10(float(scale[i])) - np.log10(max(abs(float(v[i])), 1e-300))
        prec = 34 + int(np.clip(lost, 0, _MAX_DIGITS))
        while True:
            vi, ei, dscale = _slater_left_decimal(a, b, m, n, lnz[i], prec)
            if ei <= 1e-13 * abs(vi) or prec >= _MAX_DIGITS:
                break
            lost = float(dscale.log10()) - np.log10(max(abs(vi), 1e-300))
            prec = min(_MAX_DIGITS, max(prec + 20, 34 + int(lost)))
        v[i], e[i] = vi, ei + EPS * abs(vi)
    with np.errstate(over="ignore"):
        return v, e, ok, scale.astype(float)


def _collision_offsets(params: Sequence[float], count: int) -> np.ndarray | None:
    """Offset multipliers that split integer-coincident parameters."""
    d = np.zeros(len(params))
    used = [False] * count
    found = False
    for i in range(count):
        if used[i]:
            continue
        cluster = [i]
        for j in range(i + 1, count):
            if not used[j] and _near_integer(params[j] - params[i]):
                cluster.append(j)
        if len(cluster) > 1:
            found = True
            for rank, j in enumerate(cluster):
                used[j] = True
                d[j] = rank
    return d if found else None


def _shift(spec_a, spec_b, da, db, eps):
    a = tuple(np.asarray(spec_a) + eps * da) if da is not None else spec_a
    b = tuple(np.asarray(spec_b) + eps * db) if db is not None else spec_b
    return a, b


def _perturbed(fn, a, b, da, db, epsilon):
    """Average fn over +/- epsilon shifts; error includes an epsilon^2 estimate."""
    vals = []
    for e in (epsilon, -epsilon, 0.5 * epsilon, -0.5 * epsilon):
        aa, bb = _shift(a, b, da, db, e)
        vals.append(fn(aa, bb))
    v1 = 0.5 * (vals[0][0] + vals[1][0])
    v2 = 0.5 * (vals[2][0] + vals[3][0])
    # the symmetric average leaves an epsilon^2 term; one Richardson step removes it
    value = (4.0 * v2 - v1) / 3.0
    err = 2.0 * np.maximum(vals[2][1], vals[3][1]) + np.abs(v1 - v2) / 12.0
    ok = vals[0][2] & vals[1][2] & vals[2][2] & vals[3][2]
    scale = np.maximum(vals[0][3], vals[1][3])
    return value, err, ok, scale


def _slater(spec: MeijerGSpec, lnz, epsilon, escalate=True):
    """Slater expansion on the convergent side; returns value, err, ok, scale, perturbed."""
    nz = lnz.size
    fail = (np.full(nz, np.nan), np.full(nz, np.inf), np.zeros(nz, bool), np.zeros(nz))
    if spec.q > spec.p:
        use_left = np.ones(nz, dtype=bool)
    elif spec.p > spec.q:
        use_left = np.zeros(nz, dtype=bool)
    else:
        use_left = lnz < 0
    value, err, ok, scale = (x.copy() for x in fail)
    perturbed = False
    for left in (True, False):
        rows = np.flatnonzero(use_left == left)
        if rows.size == 0:
            continue
        s = spec if left else spec.reflected()
        lz = lnz[rows] if left else -lnz[rows]
        if spec.p == spec.q:
            bad = np.abs(lz) < 1e-12
        else:
            bad = np.zeros(rows.size, bool)
        if s.m == 0:
            # no residues on this side: the integral vanishes identically
            value[rows], err[rows], ok[rows], scale[rows] = 0.0, 0.0, True, 0.0
            continue
        db = _collision_offsets(s.b, s.m)

        def run(aa, bb, s=s, lz=lz):
            return _slater_left(aa, bb, s.m, s.n, lz, escalate=escalate)

        if db is None:
            r = run(s.a, s.b)
        else:
            perturbed = True
            r = _perturbed(run, s.a, s.b, None, db, epsilon)
        value[rows], err[rows], ok[rows], scale[rows] = r
        ok[rows] &= ~bad
    return value, err, ok, scale, perturbed


# --------------------------------------------------------------------------- #
# Mellin-Barnes contour quadrature


def _log_integrand(a, b, m, n, s):
    from scipy.special import loggamma

    out = np.zeros(s.shape, dtype=complex)
    for j in range(m):
        out += loggamma(b[j] - s)
    for j in range(n):
        out += loggamma(1 - a[j] + s)
    for j in range(m, len(b)):
        out -= loggamma(1 - b[j] + s)
    for j in range(n, len(a)):
        out -= loggamma(a[j] - s)
    # a 1/Gamma pole on the line makes the integrand vanish there
    return np.where(np.isnan(out), complex(-np.inf, 0.0), out)


def _choose_abscissa(a, b, m, n):
    """Contour abscissa and the poles that end up on the wrong side of it."""
    left_max = max((a[j] - 1 for j in range(n)), default=-np.inf)
    right_min = min((b[j] for j in range(m)), default=np.inf)
    if left_max < right_min:
        if np.isinf(left_max):
            sigma = right_min - 0.5
        elif np.isinf(right_min):
            sigma = left_max + 0.5
        else:
            sigma = 0.5 * (left_max + right_min)
        return sigma, [], []
    lo, hi = right_min - 1.0, left_max + 1.0
    poles = [lo, hi]
    for j in range(m):
        k = np.arange(0, int(np.ceil(hi - b[j])) + 2)
        poles.extend(b[j] + k)
    for j in range(n):
        k = np.arange(0, int(np.ceil(a[j] - 1 - lo)) + 2)
        poles.extend(a[j] - 1 - k)
    poles = np.unique(np.clip(poles, lo, hi))
    best = None
    for x0, x1 in zip(poles[:-1], poles[1:]):
        if x1 - x0 < 1e-6:
            continue
        sigma = 0.5 * (x0 + x1)
        crossed = sum(int(np.ceil(sigma - b[j])) for j in range(m) if b[j] < sigma)
        crossed += sum(int(np.ceil(a[j] - 1 - sigma)) for j in range(n) if a[j] - 1 > sigma)
        key = (crossed, -(x1 - x0))
        if best is None or key < best[0]:
            best = (key, sigma)
    sigma = best[1]
    right = [(j, np.arange(int(np.ceil(sigma - b[j])))) for j in range(m) if b[j] < sigma]
    left = [(j, np.arange(int(np.ceil(a[j] - 1 - sigma)))) for j in range(n) if a[j] - 1 > sigma]
    return sigma, right, left


def _truncation_height(a, b, m, n, sigma, drop=38.0, tmax=1e4):
    t = 0.0
    logmag = _log_integrand(a, b, m, n, np.array([sigma + 0j])).real[0]
    peak = logmag
    step = 0.5
    while t < tmax:
        t += step
        lm = _log_integrand(a, b, m, n, np.array([sigma + 1j * t])).real[0]
        peak = max(peak, lm)
        if lm < peak - drop and t > 1.0:
            return t, peak
        step = min(step * 1.25, 2.0)
    raise ConvergenceError("Mellin-Barnes integrand does not decay")


def _mb_line(a, b, m, n, lnz, sigma, T, rtol=1e-10, max_panels=1024):
    nz = lnz.size
    prev = None
    panels = 2
    while panels <= max_panels:
        edges = np.linspace(0.0, T, panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        t = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
        w = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
        s = sigma + 1j * t
        lphi = _log_integrand(a, b, m, n, s)
        shift = lphi.real.max() + sigma * lnz
        with np.errstate(over="ignore", under="ignore"):
            expo = lphi[None, :] + s[None, :] * lnz[:, None] - shift[:, None]
            f = np.exp(expo)
            I = (f.real * w[None, :]).sum(axis=1) / np.pi
            Iabs = (np.abs(f) * w[None, :]).sum(axis=1) / np.pi
            big = np.exp(np.minimum(shift, 709.0))
            I = I * big
            Iabs = Iabs * big
        overflow = shift > 700.0
        if prev is not None:
            diff = np.abs(I - prev)
            conv = (diff <= rtol * np.abs(I)) | (diff <= 1e-14 * Iabs)
            if np.all(conv | overflow):
                err = diff + 10 * EPS * Iabs * np.sqrt(t.size)
                return I, err, ~overflow, Iabs
        prev = I
        panels *= 2
    err = np.abs(I - prev) + 10 * EPS * Iabs
    return I, err, np.zeros(nz, bool) | ((err <= 1e-8 * np.abs(I)) & ~overflow), Iabs


def _crossed(a, b, m, n, sigma):
    """Poles of each family that lie on the wrong side of the line Re s = sigma."""
    right = [(j, np.arange(int(np.ceil(sigma - b[j])))) for j in range(m) if b[j] < sigma]
    left = [(j, np.arange(int(np.ceil(a[j] - 1 - sigma)))) for j in range(n) if a[j] - 1 > sigma]
    return right, left


def _abscissa_plan(a, b, m, n, lnz, reach=12, min_gap=1e-3):
    """Per-argument contour abscissa.

    Starting from the separating (or least-crowded) line, the line may move
    across up to ``reach`` poles of either family; the one minimizing the
    integrand size log|Phi(sigma)| + sigma ln z is taken for each z.  Crossed
    residues are added back by the caller.
    """
    sigma0, _, _ = _choose_abscissa(a, b, m, n)
    poles = [b[j] + k for j in range(m) for k in range(reach + 1)]
    poles += [a[j] - 1 - k for j in range(n) for k in range(reach + 1)]
    poles = np.unique([x for x in poles if abs(x - sigma0) < reach + 1])
    cands = [sigma0]
    for x0, x1 in zip(poles[:-1], poles[1:]):
        if x1 - x0 > min_gap:
            cands.append(0.5 * (x0 + x1))
    cands = np.unique(cands)
    logphi = _log_integrand(a, b, m, n, cands + 0j).real
    cost = logphi[None, :] + cands[None, :] * lnz[:, None]
    cost = np.where(np.isfinite(cost), cost, np.inf)
    # prefer the base line unless moving buys a real gain
    base = int(np.flatnonzero(cands == sigma0)[0])
    best = np.argmin(cost, axis=1)
    keep = cost[np.arange(lnz.size), best] > cost[:, base] - 2.0
    best[keep] = base
    return cands[best]


def _mellin_barnes(spec: MeijerGSpec, lnz, epsilon):
    nz = lnz.size
    fail = (np.full(nz, np.nan), np.full(nz, np.inf), np.zeros(nz, bool), np.zeros(nz), False)
    if spec.delta <= 0:
        return fail
    m, n = spec.m, spec.n
    plan = _abscissa_plan(spec.a, spec.b, m, n, lnz)
    value, err, ok, scale = (x.copy() for x in fail[:4])
    perturbed = False
    for sigma in np.unique(plan):
        rows = np.flatnonzero(plan == sigma)
        lz = lnz[rows]

        def run(aa, bb, sigma=sigma, lz=lz):
            right, left = _crossed(aa, bb, m, n, sigma)
            T, _ = _truncation_height(aa, bb, m, n, sigma)
            val, e, good, sc = _mb_line(aa, bb, m, n, lz, sigma, T)
            for h, k in right:
                v, ee = _terms_at(aa, bb, m, n, h, k, lz)
                val, e = val + v, e + ee
            if left:
                ra = tuple(1 - x for x in bb)
                rb = tuple(1 - x for x in aa)
                for h, k in left:
                    v, ee = _terms_at(ra, rb, n, m, h, k, -lz)
                    val, e = val + v, e + ee
            return val, e, good, sc

        right, left = _crossed(spec.a, spec.b, m, n, sigma)
        da = _collision_offsets(spec.a, n) if left else None
        db = _collision_offsets(spec.b, m) if right else None
        try:
            if da is None and db is None:
                r = run(spec.a, spec.b)
            else:
                perturbed = True
                r = _perturbed(run, spec.a, spec.b, da, db, epsilon)
        except ConvergenceError:
            continue
        value[rows], err[rows], ok[rows], scale[rows] = r
    return value, err, ok, scale, perturbed


# --------------------------------------------------------------------------- #
# public surface


def log_decay_estimate(spec: MeijerGSpec, z):
    """Leading log-magnitude of G^{q,0}_{p,q}(z), p < q, for large z.

    G ~ (2 pi)^((s-1)/2) s^(-1/2) z^theta exp(-s z^(1/s)) with s = q - p and
    theta = ((1 - s)/2 + sum b - sum a)/s.  Returns None for other classes,
    which do not decay exponentially.
    """
    if not (spec.n == 0 and spec.m == spec.q and spec.p < spec.q):
        return None
    s = spec.q - spec.p
    theta = ((1 - s) / 2 + sum(spec.b) - sum(spec.a)) / s
    lnz = np.log(np.asarray(z, dtype=float))
    return 0.5 * (s - 1) * np.log(2 * np.pi) - 0.5 * np.log(s) + theta * lnz - s * np.exp(lnz / s)


_UNDERFLOW_LOG = -760.0


class MeijerG:
    """Vectorized evaluator for a fixed :class:`MeijerGSpec`.

    ``accept_rtol`` is the relative error at which the Slater result is taken
    without consulting the contour integral; ``fail_rtol`` is the level above
    which evaluation raises :class:`ConvergenceError`.
    """

    METHODS = ("slater", "mellin_barnes")

    def __init__(self, spec: MeijerGSpec, epsilon: float = DEFAULT_EPSILON,
                 accept_rtol: float = 1e-11, fail_rtol: float = 1e-6):
        self.spec = spec
        self.epsilon = float(epsilon)
        self.accept_rtol = accept_rtol
        self.fail_rtol = fail_rtol

    def evaluate(self, z, method: str | None = None):
        """Return ``(value, abs_err, method_index, perturbed)`` arrays for z > 0.

        ``method`` forces one route; by default Slater is tried first and the
        contour integral is used wherever Slater is inapplicable or less
        accurate.
        """
        z = np.atleast_1d(np.asarray(z, dtype=float))
        if np.any(~(z > 0)) or np.any(~np.isfinite(z)):
            raise ValueError("meijer_g: argument must be positive and finite")
        lnz_ld = np.log(z.astype(LD))
        lnz = lnz_ld.astype(float)
        nz = z.size
        if method not in (None, "slater", "mellin_barnes"):
            raise ValueError(f"unknown method {method!r}")
        value = np.full(nz, np.nan)
        err = np.full(nz, np.inf)
        which = np.zeros(nz, dtype=int)
        pert = np.zeros(nz, dtype=bool)
        tail = log_decay_estimate(self.spec, z)
        if tail is not None and np.any(tail < _UNDERFLOW_LOG):
            # below the double range: the value is zero to working precision
            under = tail < _UNDERFLOW_LOG
            value[under], err[under] = 0.0, 0.0
            keep = np.flatnonzero(~under)
            if keep.size:
                v, e, w, pf = self.evaluate(z[keep], method)
                value[keep], err[keep], which[keep], pert[keep] = v, e, w, pf
            return value, err, which, pert
        scale = np.zeros(nz)

        if method in (None, "slater"):
            v, e, ok, sc, pf = _slater(self.spec, lnz_ld, self.epsilon, escalate=method == "slater")
            take = ok & np.isfinite(v)
            value[take], err[take], scale[take], pert[take] = v[take], e[take], sc[take], pf
        if method == "mellin_barnes":
            need = np.ones(nz, dtype=bool)
        elif method == "slater":
            need = np.zeros(nz, dtype=bool)
        else:
            need = ~(err <= self.accept_rtol * np.abs(value))
        if np.any(need):
            rows = np.flatnonzero(need)
            v, e, ok, sc, pf = _mellin_barnes(self.spec, lnz[rows], self.epsilon)
            better = ok & np.isfinite(v) & (e < err[rows])
            idx = rows[better]
            value[idx], err[idx], scale[idx] = v[better], e[better], sc[better]
            which[idx] = 1
            pert[idx] = pf
        if method is None:
            # last resort: Slater again with decimal escalation where cancellation hurt
            rows = np.flatnonzero(~(err <= self.accept_rtol * np.abs(value)))
            if rows.size:
                v, e, ok, sc, pf = _slater(self.spec, lnz_ld[rows], self.epsilon, escalate=True)
                better = ok & np.isfinite(v) & (e < err[rows])
                idx = rows[better]
                value[idx], err[idx], scale[idx] = v[better], e[better], sc[better]
                which[idx] = 0
                pert[idx] = pf
        bad = ~np.isfinite(value) | (err > self.fail_rtol * np.abs(value))
        if np.any(bad):
            zb = z[bad][:5]
            raise ConvergenceError(
                f"{self.spec}: no route converged at z={zb.tolist()} "
                f"(best abs err {err[bad][:5].tolist()})"
            )
        return value, err, which, pert

    def __call__(self, z):
        value = self.evaluate(z)[0]
        return value[0] if np.ndim(z) == 0 else value.reshape(np.shape(z))


def meijer_g(spec: MeijerGSpec, z: float, method: str | None = None,
             epsilon: float = DEFAULT_EPSILON) -> EvalReport:
    """Evaluate ``G^{m,n}_{p,q}(z | a; b)`` at a single positive ``z``."""
    v, e, which, pert = MeijerG(spec, epsilon=epsilon).evaluate(np.array([z]), method=method)
    return EvalReport(float(v[0]), float(e[0]), MeijerG.METHODS[which[0]], bool(pert[0]))


def large_argument_leading(spec: MeijerGSpec, z: float) -> float:
    """Leading large-z terms of G: residues at the first right-most poles a_k - 1.

    Sums, for k < n,
    z^(a_k - 1) prod_{l<n, l!=k} Gamma(a_k - a_l) prod_{l<m} Gamma(1 + b_l - a_k)
    / (prod_{l>=n} Gamma(1 + a_l - a_k) prod_{l>=m} Gamma(a_k - b_l)),
    all in log space.  Raises MeijerGSpecError when a numerator gamma sits on
    a pole (coincident a_k).
    """
    a, b, m, n = spec.a, spec.b, spec.m, spec.n
    total = 0.0
    for k in range(n):
        ak = a[k]
        L, S = (ak - 1) * np.log(z), 1.0
        num = [ak - a[l] for l in range(n) if l != k] + [1 + b[l] - ak for l in range(m)]
        den = [1 + a[l] - ak for l in range(n, len(a))] + [ak - b[l] for l in range(m, len(b))]
        zero = False
        for x in num:
            if x <= 0 and _near_integer(x):
                raise MeijerGSpecError(f"{spec}: leading term {k} hits a pole")
            L += sp.gammaln(x)
            S *= sp.gammasgn(x)
        for x in den:
            if x <= 0 and _near_integer(x):
                zero = True
                break
            L -= sp.gammaln(x)
            S *= sp.gammasgn(x)
        if not zero:
            total += S * np.exp(L)
    return float(total)
