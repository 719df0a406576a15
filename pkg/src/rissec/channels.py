"""Channel statistics for the RIS-assisted RF hops and the Malaga FSO hop.

RF side: the sum of N products of Rician envelopes is moment-matched to a
Gamma law in the envelope domain, so that sqrt(gamma/gamma_bar) ~ Gamma(a+1, b).
Selecting the best of M surfaces raises the CDF to the M-th power; the power
series of that CDF in gamma^(1/2) is built by truncated Cauchy products.

FSO side: Malaga turbulence with power-law pointing loss, expressed through
Meijer G-functions for heterodyne (r=1) or IM/DD (r=2) detection.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import comb, factorial

import numpy as np
from scipy import special as sp

from rissec.meijerg import MeijerG, MeijerGSpec, log_decay_estimate
from rissec.specfun import bessel_i

__all__ = [
    "RicianHop",
    "RfCascadeConfig",
    "ProductMoments",
    "SeriesPoly",
    "MalagaConfig",
    "MalagaDerived",
    "DEFAULT_G",
    "DEFAULT_OMEGA",
    "rician_product_moments",
    "rician_envelope_moments",
    "rf_cdf",
    "rf_sf",
    "rf_pdf",
    "rf_series_coeffs",
    "best_ris_cdf",
    "best_ris_cdf_exact",
    "best_ris_pdf",
    "best_ris_pdf_exact",
    "malaga_derive",
    "fso_pdf",
    "fso_cdf",
    "malaga_irradiance_pdf",
    "dual_hop_cdf",
    "malaga_from_physical",
    "delta_list",
]

DEFAULT_G = 0.4231
DEFAULT_OMEGA = 1.3265
_PDF_FLUSH_LOG = -100 * np.log(10.0)


# --------------------------------------------------------------------------- #
# RF cascade


@dataclass(frozen=True)
class RicianHop:
    k: float = 2.0
    omega: float = 1.0

    def __post_init__(self):
        if not self.k >= 0:
            raise ValueError(f"RicianHop.k must be >= 0 (got {self.k})")
        if not self.omega > 0:
            raise ValueError(f"RicianHop.omega must be > 0 (got {self.omega})")

    @property
    def sigma(self) -> float:
        """Per-component standard deviation of the diffuse part."""
        return float(np.sqrt(0.5 / self.omega))

    @property
    def nu(self) -> float:
        """Line-of-sight amplitude."""
        return self.sigma * float(np.sqrt(2.0 * self.k))


@dataclass(frozen=True)
class RfCascadeConfig:
    hop1: RicianHop = field(default_factory=RicianHop)
    hop2: RicianHop = field(default_factory=RicianHop)
    n_elements: int = 2
    n_surfaces: int = 2
    gamma_bar: float = 100.0

    def __post_init__(self):
        if int(self.n_elements) != self.n_elements or self.n_elements < 1:
            raise ValueError(f"n_elements must be an integer >= 1 (got {self.n_elements})")
        if int(self.n_surfaces) != self.n_surfaces or self.n_surfaces < 1:
            raise ValueError(f"n_surfaces must be an integer >= 1 (got {self.n_surfaces})")
        if not self.gamma_bar > 0:
            raise ValueError(f"gamma_bar must be > 0 (got {self.gamma_bar})")


@dataclass(frozen=True)
class ProductMoments:
    mean: float
    variance: float
    a: float
    b: float


def _bessel_bracket(k: float) -> float:
    return (k + 1) * bessel_i(0, k / 2) + k * bessel_i(1, k / 2)


def rician_envelope_moments(hop: RicianHop) -> tuple[float, float]:
    """First and second moments of a single Rician envelope."""
    m1 = np.sqrt(np.pi / (4 * hop.omega)) * np.exp(-hop.k / 2) * _bessel_bracket(hop.k)
    m2 = (1 + hop.k) / hop.omega
    return float(m1), float(m2)


def rician_product_moments(cfg: RfCascadeConfig) -> ProductMoments:
    """Mean/variance of one cascaded product and the matched Gamma parameters."""
    k1, k2 = cfg.hop1.k, cfg.hop2.k
    o1, o2 = cfg.hop1.omega, cfg.hop2.omega
    br1, br2 = _bessel_bracket(k1), _bessel_bracket(k2)
    mean = np.pi * np.exp(-0.5 * (k1 + k2)) / (4 * np.sqrt(o1 * o2)) * br1 * br2
    var = (16 * (k1 + 1) * (k2 + 1) - np.pi**2 * np.exp(-k1 - k2) * br1**2 * br2**2) / (16 * o1 * o2)
    mean, var = float(mean), float(var)
    a = cfg.n_elements * mean**2 / var - 1
    b = var / mean
    return ProductMoments(mean, var, a, b)


def _rf_x(gamma, mom: ProductMoments, gamma_bar: float):
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma < 0):
        raise ValueError("gamma must be >= 0")
    return np.sqrt(gamma) / (mom.b * np.sqrt(gamma_bar))


def _out(x):
    return x[()] if np.ndim(x) == 0 else x


def rf_cdf(gamma, mom: ProductMoments, gamma_bar: float):
    """Single-surface CDF of the cascaded SNR (regularized lower gamma)."""
    return _out(sp.gammainc(mom.a + 1, _rf_x(gamma, mom, gamma_bar)))


def rf_sf(gamma, mom: ProductMoments, gamma_bar: float):
    """Survival function 1 - rf_cdf without cancellation in the tail."""
    return _out(sp.gammaincc(mom.a + 1, _rf_x(gamma, mom, gamma_bar)))


def rf_pdf(gamma, mom: ProductMoments, gamma_bar: float):
    """Single-surface density of the cascaded SNR."""
    gamma = np.asarray(gamma, dtype=float)
    x = _rf_x(gamma, mom, gamma_bar)
    a = mom.a
    with np.errstate(divide="ignore", invalid="ignore"):
        logf = ((a - 1) / 2) * np.log(gamma) - x - np.log(2.0) - (a + 1) * np.log(mom.b) \
            - sp.gammaln(a + 1) - ((a + 1) / 2) * np.log(gamma_bar)
        f = np.where(gamma > 0, np.exp(logf), 0.0 if a > 1 else (np.inf if a < 1 else 0.0))
    if a == 1:
        f = np.where(gamma > 0, f, 1.0 / (2 * mom.b**2 * gamma_bar))
    return _out(f)


# --------------------------------------------------------------------------- #
# power series in x = gamma^(1/2)


@dataclass(frozen=True)
class SeriesPoly:
    """Truncated series  sum_n coeffs[n] * gamma^((base_exponent + n)/2).

    ``guard`` holds the next few orders beyond ``n_max``; they are only used
    for the a-posteriori truncation estimate.  ``domain_hint`` is the gamma
    interval where that estimate stays below ``tol`` relative to the value.
    """

    base_exponent: float
    coeffs: np.ndarray
    n_max: int
    domain_hint: tuple[float, float]
    guard: np.ndarray = field(default_factory=lambda: np.zeros(0))
    tol: float = 1e-8

    def _powers(self, gamma, count, offset=0):
        x = np.sqrt(np.asarray(gamma, dtype=float))
        n = np.arange(count) + offset
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            lx = np.log(x)
            return np.where(x[..., None] > 0, np.exp((self.base_exponent + n) * lx[..., None]), 0.0)

    def __call__(self, gamma):
        out = self._powers(gamma, self.coeffs.size) @ self.coeffs
        return _out(out)

    def tail_estimate(self, gamma):
        """Magnitude of the omitted orders (sum of |guard terms|)."""
        if self.guard.size == 0:
            return _out(np.zeros(np.shape(gamma)))
        P = self._powers(gamma, self.guard.size, offset=self.coeffs.size)
        return _out(P @ np.abs(self.guard))

    def rel_error(self, gamma):
        v = np.abs(np.asarray(self(gamma)))
        t = np.asarray(self.tail_estimate(gamma))
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(v > 0, t / v, np.where(t > 0, np.inf, 0.0))

    def in_domain(self, gamma):
        g = np.asarray(gamma, dtype=float)
        return (g >= self.domain_hint[0]) & (g <= self.domain_hint[1])


def _series_domain(base, coeffs, guard, tol, x_guess):
    """Largest gamma with tail/value <= tol, located by bisection in log x."""
    probe = SeriesPoly(base, coeffs, coeffs.size - 1, (0.0, np.inf), guard, tol)
    if guard.size == 0:
        return (0.0, np.inf)
    lo, hi = np.log(x_guess) - 60.0, np.log(x_guess) + 10.0
    if probe.rel_error(np.exp(2 * lo)) > tol:
        return (0.0, 0.0)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if probe.rel_error(np.exp(2 * mid)) <= tol:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-6:
            break
    return (0.0, float(np.exp(2 * lo)))


def rf_series_coeffs(mom: ProductMoments, gamma_bar: float, n_max: int = 40,
                     guard: int = 20, tol: float = 1e-8) -> SeriesPoly:
    """Power series of rf_cdf in gamma^(1/2), truncated at order n_max."""
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    a = mom.a
    n = np.arange(n_max + 1 + guard, dtype=float)
    lc = (a + n + 1) * -np.log(mom.b * np.sqrt(gamma_bar)) - sp.gammaln(n + 1) \
        - np.log(a + n + 1) - sp.gammaln(a + 1)
    c = np.where(n % 2 == 0, 1.0, -1.0) * np.exp(lc)
    coeffs, tail = c[: n_max + 1], c[n_max + 1:]
    dom = _series_domain(a + 1, coeffs, tail, tol, mom.b * np.sqrt(gamma_bar))
    return SeriesPoly(a + 1, coeffs, n_max, dom, tail, tol)


def best_ris_cdf(series: SeriesPoly, m_surfaces: int) -> SeriesPoly:
    """Series of the best-of-M CDF, i.e. the M-th power of ``series``."""
    if int(m_surfaces) != m_surfaces or m_surfaces < 1:
        raise ValueError("m_surfaces must be an integer >= 1")
    if m_surfaces == 1:
        return series
    full = np.concatenate([series.coeffs, series.guard])
    keep = full.size
    out = full.copy()
    for _ in range(m_surfaces - 1):
        out = np.convolve(out, full)[:keep]
    base = m_surfaces * series.base_exponent
    n1 = series.n_max + 1
    coeffs, tail = out[:n1], out[n1:]
    dom = _series_domain(base, coeffs, tail, series.tol, 1.0 if series.domain_hint[1] == 0 else np.sqrt(series.domain_hint[1]))
    return SeriesPoly(base, coeffs, series.n_max, dom, tail, series.tol)


def best_ris_cdf_exact(gamma, mom: ProductMoments, gamma_bar: float, m_surfaces: int):
    return _out(np.asarray(rf_cdf(gamma, mom, gamma_bar)) ** m_surfaces)


def best_ris_pdf_exact(gamma, mom: ProductMoments, gamma_bar: float, m_surfaces: int):
    F = np.asarray(rf_cdf(gamma, mom, gamma_bar))
    f = np.asarray(rf_pdf(gamma, mom, gamma_bar))
    return _out(m_surfaces * f * F ** (m_surfaces - 1))


def best_ris_pdf(gamma, series: SeriesPoly, mom: ProductMoments, gamma_bar: float,
                 m_surfaces: int, exact_outside_domain: bool = True):
    """Best-of-M density  M f(gamma) F(gamma)^(M-1)  with F^(M-1) from the series.

    ``series`` is the single-surface series from :func:`rf_series_coeffs`.  The
    truncated series diverges numerically for large gamma; outside its domain
    hint the exact CDF power is substituted unless ``exact_outside_domain`` is
    False.
    """
    gamma = np.asarray(gamma, dtype=float)
    f = np.asarray(rf_pdf(gamma, mom, gamma_bar))
    if m_surfaces == 1:
        return _out(f)
    sM = best_ris_cdf(series, m_surfaces - 1)
    Fm = np.asarray(sM(gamma))
    if exact_outside_domain:
        out = ~sM.in_domain(gamma)
        if np.any(out):
            Fm = np.where(out, np.asarray(rf_cdf(gamma, mom, gamma_bar)) ** (m_surfaces - 1), Fm)
    return _out(m_surfaces * f * Fm)


# --------------------------------------------------------------------------- #
# Malaga FSO hop


def delta_list(k: int, a: float) -> tuple[float, ...]:
    """Arithmetic progression (a/k, (a+1)/k, ..., (a+k-1)/k)."""
    return tuple((a + i) / k for i in range(k))


@dataclass(frozen=True)
class MalagaConfig:
    alpha: float = 2.296
    beta: int = 2
    g: float = DEFAULT_G
    omega_big: float = DEFAULT_OMEGA
    xi: float = 1.1
    r: int = 1
    gamma_bar_d: float = 10**2.5

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0 (got {self.alpha})")
        if float(self.beta) != int(self.beta) or self.beta < 1:
            raise ValueError(f"beta must be a positive integer (got {self.beta})")
        object.__setattr__(self, "beta", int(self.beta))
        if not self.g > 0:
            raise ValueError(f"g must be > 0 (got {self.g})")
        if not self.omega_big >= 0:
            raise ValueError(f"omega_big must be >= 0 (got {self.omega_big})")
        if not self.xi > 0:
            raise ValueError(f"xi must be > 0 (got {self.xi})")
        if self.r not in (1, 2):
            raise ValueError(f"r must be 1 or 2 (got {self.r})")
        if not self.gamma_bar_d > 0:
            raise ValueError(f"gamma_bar_d must be > 0 (got {self.gamma_bar_d})")


@dataclass(frozen=True)
class MalagaDerived:
    cfg: MalagaConfig
    x_const: float
    w_bar: float
    u_m: tuple[float, ...]
    v_m: tuple[float, ...]
    z_const: float
    w_m: tuple[float, ...]
    h_const: float
    u_elec: float
    l1: tuple[float, ...]
    l2: tuple[tuple[float, ...], ...]

    @property
    def m_values(self) -> range:
        return range(1, self.cfg.beta + 1)

    def pdf_spec(self, m: int) -> MeijerGSpec:
        xi2 = self.cfg.xi**2
        return MeijerGSpec(3, 0, (xi2 + 1,), (xi2, self.cfg.alpha, float(m)))

    def cdf_spec(self, m: int) -> MeijerGSpec:
        r = self.cfg.r
        return MeijerGSpec(3 * r, 1, (1.0,) + self.l1, self.l2[m - 1] + (0.0,))

    @cached_property
    def _cdf_kernels(self):
        return [MeijerG(self.cdf_spec(m)) for m in self.m_values]

    @cached_property
    def _pdf_kernels(self):
        return [MeijerG(self.pdf_spec(m)) for m in self.m_values]


def malaga_derive(cfg: MalagaConfig) -> MalagaDerived:
    """All gamma-independent constants of the Malaga PDF/CDF."""
    al, be, g, om, xi, r = cfg.alpha, cfg.beta, cfg.g, cfg.omega_big, cfg.xi, cfg.r
    xi2 = xi * xi
    gbo = g * be + om
    x_const = 2.0 ** (1 - r) * al ** (al / 2) * xi2 / (g ** (1 + al / 2) * sp.gamma(al)) \
        * (g * be / gbo) ** (be + al / 2)
    w_bar = xi2 * al * be * (g + om) / ((xi2 + 1) * gbo)
    u_m, v_m = [], []
    for m in range(1, be + 1):
        u = comb(be - 1, m - 1) * gbo ** (1 - m / 2) / factorial(m - 1) * (om / g) ** (m - 1) \
            * (al / be) ** (m / 2)
        u_m.append(float(u))
        v_m.append(float(u * (al * be / gbo) ** (-(al + m) / 2)))
    z_const = x_const / (2 * np.pi) ** (r - 1)
    w_m = tuple(v * r ** (al + m - 1) for v, m in zip(v_m, range(1, be + 1)))
    h_const = w_bar**r / r ** (2 * r)
    if r == 1:
        u_elec = cfg.gamma_bar_d
    else:
        u_elec = al * xi2 * (xi2 + 1) ** -2 * (xi2 + 2) * (g + om) * cfg.gamma_bar_d \
            / ((al + 1) * (2 * g * (g + 2 * om) + om**2 * (1 + 1 / be)))
    l1 = delta_list(r, xi2 + 1)
    l2 = tuple(delta_list(r, xi2) + delta_list(r, al) + delta_list(r, float(m)) for m in range(1, be + 1))
    return MalagaDerived(cfg, float(x_const), float(w_bar), tuple(u_m), tuple(v_m), float(z_const),
                         tuple(float(w) for w in w_m), float(h_const), float(u_elec), l1, l2)


def fso_pdf(gamma, d: MalagaDerived):
    """Density of the FSO-hop SNR.

    Kernel values below 1e-100 (located with the exponential decay estimate)
    are flushed to zero; resolving them would need hundreds of digits.
    """
    gamma = np.asarray(gamma, dtype=float)
    flat = np.atleast_1d(gamma).ravel()
    out = np.zeros(flat.size)
    pos = flat > 0
    if np.any(pos):
        arg = d.w_bar * (flat[pos] / d.u_elec) ** (1.0 / d.cfg.r)
        acc = np.zeros(arg.size)
        for v, G in zip(d.v_m, d._pdf_kernels):
            live = log_decay_estimate(G.spec, arg) > _PDF_FLUSH_LOG
            if np.any(live):
                acc[live] += v * G.evaluate(arg[live])[0]
        out[pos] = d.x_const / flat[pos] * acc
    return _out(out.reshape(gamma.shape))


def fso_cdf(gamma, d: MalagaDerived):
    """CDF of the FSO-hop SNR."""
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma < 0):
        raise ValueError("gamma must be >= 0")
    flat = np.atleast_1d(gamma).ravel()
    out = np.zeros(flat.size)
    pos = flat > 0
    if np.any(pos):
        arg = d.h_const * flat[pos] / d.u_elec
        acc = np.zeros(arg.size)
        for w, G in zip(d.w_m, d._cdf_kernels):
            acc += w * G.evaluate(arg)[0]
        out[pos] = d.z_const * acc
    return _out(out.reshape(gamma.shape))


def malaga_irradiance_pdf(irradiance, cfg: MalagaConfig):
    """Malaga turbulence density of the irradiance without pointing loss."""
    I = np.asarray(irradiance, dtype=float)
    al, be, g, om = cfg.alpha, cfg.beta, cfg.g, cfg.omega_big
    gbo = g * be + om
    A = 2 * al ** (al / 2) / (g ** (1 + al / 2) * sp.gamma(al)) * (g * be / gbo) ** (be + al / 2)
    out = np.zeros(I.shape)
    pos = I > 0
    x = I[pos]
    for k in range(1, be + 1):
        ak = comb(be - 1, k - 1) * gbo ** (1 - k / 2) / factorial(k - 1) * (om / g) ** (k - 1) \
            * (al / be) ** (k / 2)
        out[pos] += ak * x ** ((al + k) / 2 - 1) * sp.kv(al - k, 2 * np.sqrt(al * be * x / gbo))
    out[pos] *= A
    return _out(out)


# --------------------------------------------------------------------------- #


def dual_hop_cdf(gamma, f_s, f_d):
    """CDF of min(gamma_s, gamma_d) for independent hops.

    ``f_s`` and ``f_d`` are CDF callables (or precomputed values).
    """
    Fs = np.asarray(f_s(gamma) if callable(f_s) else f_s, dtype=float)
    Fd = np.asarray(f_d(gamma) if callable(f_d) else f_d, dtype=float)
    return _out(Fs + Fd - Fs * Fd)


def malaga_from_physical(v: float, zeta: float, theta_x: float = 0.0, theta_y: float = 0.0,
                         g: float | None = None) -> tuple[float, float]:
    """(g, omega) from scatter power ``v`` = 2V and LOS coupling fraction ``zeta``.

    Literal transcription: 2V_zeta = zeta*v, c = 2V_zeta*(1 - zeta),
    omega = c + 2V_zeta + sqrt(2V_zeta*c)*cos(theta_x - theta_y), and the
    residual scatter power g = (1 - zeta)*v unless given explicitly.
    """
    if not 0 <= zeta <= 1:
        raise ValueError("zeta must lie in [0, 1]")
    v_zeta = zeta * v
    c = v_zeta * (1 - zeta)
    omega = c + v_zeta + np.sqrt(v_zeta * c) * np.cos(theta_x - theta_y)
    g_out = (1 - zeta) * v if g is None else g
    return float(g_out), float(omega)
