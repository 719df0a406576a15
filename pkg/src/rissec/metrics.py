"""Secrecy metrics: outage probability (SOP), average secrecy capacity (ASC)
and effective secrecy throughput (EST).

Three evaluation modes:

``closed_form``
    Term-by-term Meijer-G expressions built from the truncated power series
    of the best-of-M RF CDFs.  These follow the published derivation
    literally: the exponential in the eavesdropper density is dropped and the
    infinite-range integrals are replaced by the split-point identities, so
    the numbers are reported as-is and never used as ground truth.
``quadrature``
    Direct numerical integration of the defining integrals with exact CDFs
    and densities.
``asymptotic``
    Large-argument leading terms of the closed-form G-functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import special as sp

from rissec import channels as ch
from rissec.meijerg import MeijerG, MeijerGSpec, large_argument_leading

__all__ = [
    "SystemConfig",
    "MetricResult",
    "baseline_system",
    "sop_closed_form",
    "sop_quadrature",
    "sop_asymptotic",
    "asymptotic_parameter_groups",
    "asc_closed_form",
    "asc_quadrature",
    "asc_x1",
    "asc_x3",
    "x3_spec",
    "est",
    "split_integral_check",
    "gl_integrate",
    "QuadratureError",
]

LN2 = np.log(2.0)


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class SystemConfig:
    """Full system: main and eavesdropper RF cascades plus the FSO hop.

    ``split_point`` of None selects the default split a = U/(h phi) for SOP
    terms and a = 1 for the ASC X1 terms.
    """

    rf_main: ch.RfCascadeConfig
    rf_eve: ch.RfCascadeConfig
    fso: ch.MalagaConfig
    t_rs: float = 0.5
    n_max: int = 40
    n_closed: int = 6
    split_point: float | None = None

    def __post_init__(self):
        if not self.t_rs > 0:
            raise ValueError(f"t_rs must be > 0 (got {self.t_rs})")
        if self.rf_main.n_elements != self.rf_eve.n_elements:
            raise ValueError("rf_main and rf_eve must share n_elements")
        if self.rf_main.n_surfaces != self.rf_eve.n_surfaces:
            raise ValueError("rf_main and rf_eve must share n_surfaces")
        if self.split_point is not None and not self.split_point > 0:
            raise ValueError("split_point must be > 0")
        if not 1 <= self.n_closed <= self.n_max + 1:
            raise ValueError("n_closed must lie in [1, n_max + 1]")

    @property
    def phi(self) -> float:
        return 2.0 ** self.t_rs

    @property
    def m_surfaces(self) -> int:
        return int(self.rf_main.n_surfaces)

    @cached_property
    def mom_s(self) -> ch.ProductMoments:
        return ch.rician_product_moments(self.rf_main)

    @cached_property
    def mom_e(self) -> ch.ProductMoments:
        return ch.rician_product_moments(self.rf_eve)

    @cached_property
    def fso_derived(self) -> ch.MalagaDerived:
        return ch.malaga_derive(self.fso)

    # exact distribution helpers --------------------------------------------
    def main_cdf(self, g):
        return ch.best_ris_cdf_exact(g, self.mom_s, self.rf_main.gamma_bar, self.m_surfaces)

    def main_sf(self, g):
        F = np.asarray(ch.rf_cdf(g, self.mom_s, self.rf_main.gamma_bar))
        Q = np.asarray(ch.rf_sf(g, self.mom_s, self.rf_main.gamma_bar))
        # 1 - F^M without cancellation when F is close to 1
        with np.errstate(divide="ignore"):
            return np.where(F < 0.5, 1.0 - F ** self.m_surfaces,
                            -np.expm1(self.m_surfaces * np.log1p(-Q)))

    def eve_cdf(self, g):
        return ch.best_ris_cdf_exact(g, self.mom_e, self.rf_eve.gamma_bar, self.m_surfaces)

    def eve_pdf(self, g):
        return ch.best_ris_pdf_exact(g, self.mom_e, self.rf_eve.gamma_bar, self.m_surfaces)

    def fso_cdf(self, g):
        return ch.fso_cdf(g, self.fso_derived)

    def eq_cdf(self, g):
        Fd = np.asarray(self.fso_cdf(g))
        return 1.0 - np.asarray(self.main_sf(g)) * (1.0 - Fd)


@dataclass
class MetricResult:
    value: float
    method: str
    err_estimate: float = 0.0
    diagnostics: dict = field(default_factory=dict)


def baseline_system(**overrides) -> SystemConfig:
    """Reference operating point: k=2, Omega=1, N=M=2, 20/25/0 dB, T=0.5.

    Keyword overrides: gamma_bar_s_db, gamma_bar_d_db, gamma_bar_e_db, k_main
    (both main hops), k_eve (eavesdropper second hop), k1_eve, n_elements,
    m_surfaces, alpha, beta, xi, r, g, omega_big, t_rs, n_max, n_closed,
    split_point.
    """
    o = dict(gamma_bar_s_db=20.0, gamma_bar_d_db=25.0, gamma_bar_e_db=0.0, k_main=2.0, k_eve=2.0,
             k1_eve=2.0, n_elements=2, m_surfaces=2, alpha=2.296, beta=2, xi=1.1, r=1, g=ch.DEFAULT_G,
             omega_big=ch.DEFAULT_OMEGA, t_rs=0.5, n_max=40, n_closed=6, split_point=None)
    unknown = set(overrides) - set(o)
    if unknown:
        raise TypeError(f"unknown override(s): {sorted(unknown)}")
    o.update(overrides)
    main = ch.RfCascadeConfig(ch.RicianHop(o["k_main"], 1.0), ch.RicianHop(o["k_main"], 1.0),
                              o["n_elements"], o["m_surfaces"], 10 ** (o["gamma_bar_s_db"] / 10))
    eve = ch.RfCascadeConfig(ch.RicianHop(o["k1_eve"], 1.0), ch.RicianHop(o["k_eve"], 1.0),
                             o["n_elements"], o["m_surfaces"], 10 ** (o["gamma_bar_e_db"] / 10))
    fso = ch.MalagaConfig(o["alpha"], o["beta"], o["g"], o["omega_big"], o["xi"], o["r"],
                          10 ** (o["gamma_bar_d_db"] / 10))
    return SystemConfig(main, eve, fso, o["t_rs"], o["n_max"], o["n_closed"], o["split_point"])


# --------------------------------------------------------------------------- #
# quadrature


def gl_integrate(f, lo: float, hi: float, rtol: float = 1e-9, atol: float = 1e-14,
                 panels: int = 8, max_panels: int = 2048, nodes: int = 32):
    """Composite Gauss-Legendre on [lo, hi] with panel doubling.

    ``f`` must accept an array.  Returns (value, error estimate) where the
    estimate is the change between the last two refinements.
    """
    x0, w0 = np.polynomial.legendre.leggauss(nodes)
    prev = None
    while panels <= max_panels:
        edges = np.linspace(lo, hi, panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        x = (mid[:, None] + half[:, None] * x0[None, :]).ravel()
        w = (half[:, None] * w0[None, :]).ravel()
        val = float(np.dot(w, f(x)))
        if prev is not None:
            err = abs(val - prev)
            if err <= max(rtol * abs(val), atol):
                return val, err
        prev = val
        panels *= 2
    raise QuadratureError(f"quadrature did not converge on [{lo}, {hi}] (last change {abs(val - prev):.3g})")


def _snr_from_x(x, mom, gamma_bar):
    return (x * mom.b) ** 2 * gamma_bar


def _eve_bounds(cfg: SystemConfig, tail=1e-14):
    """gamma range outside which the best-of-M eavesdropper law has < tail mass."""
    M, mom, gb = cfg.m_surfaces, cfg.mom_e, cfg.rf_eve.gamma_bar
    lo = _snr_from_x(sp.gammaincinv(mom.a + 1, tail ** (1.0 / M)), mom, gb)
    hi = _snr_from_x(sp.gammainccinv(mom.a + 1, tail / M), mom, gb)
    return lo, hi


def sop_quadrature(cfg: SystemConfig, rtol: float = 1e-9) -> MetricResult:
    """SOP = int F_eq(phi g) f_e*(g) dg with exact CDFs, on a log-gamma grid."""
    lo, hi = _eve_bounds(cfg)
    phi = cfg.phi

    def integrand(t):
        g = np.exp(t)
        return np.asarray(cfg.eq_cdf(phi * g)) * np.asarray(cfg.eve_pdf(g)) * g

    val, err = gl_integrate(integrand, np.log(lo), np.log(hi), rtol=rtol)
    return _wrap(val, "quadrature", err + 2e-14, (0.0, 1.0), {"range": (lo, hi)})


def asc_quadrature(cfg: SystemConfig, rtol: float = 1e-9) -> MetricResult:
    """ASC = int F_e*(g)/(1+g) (1 - F_eq(g)) dg, reported in bits."""
    M = cfg.m_surfaces
    lo, _ = _eve_bounds(cfg)
    mom, gb = cfg.mom_s, cfg.rf_main.gamma_bar
    hi = _snr_from_x(sp.gammainccinv(mom.a + 1, 1e-15 / M), mom, gb)
    if hi <= lo:
        return _wrap(0.0, "quadrature", 1e-15, (0.0, np.inf), {"nats": 0.0})

    def integrand(t):
        g = np.exp(t)
        surv = np.asarray(cfg.main_sf(g)) * (1.0 - np.asarray(cfg.fso_cdf(g)))
        return np.asarray(cfg.eve_cdf(g)) * surv * g / (1.0 + g)

    val, err = gl_integrate(integrand, np.log(lo), np.log(hi), rtol=rtol)
    res = _wrap(val / LN2, "quadrature", (err + 1e-14) / LN2, (0.0, np.inf), {"nats": val})
    return res


# --------------------------------------------------------------------------- #
# closed form


def _wrap(raw, method, err, bounds, diag) -> MetricResult:
    diag = dict(diag)
    lo, hi = bounds
    value = float(min(max(raw, lo), hi))
    if value != raw:
        diag["raw_value"] = float(raw)
        diag["clamped"] = True
    return MetricResult(value, method, float(err), diag)


def _series_terms(mom, gamma_bar, power, n_max, n_keep):
    """(coefficients, half-exponents) of the leading orders of F^power."""
    if power == 0:
        return np.array([1.0]), np.array([0.0])
    s = ch.rf_series_coeffs(mom, gamma_bar, n_max)
    sM = ch.best_ris_cdf(s, power)
    c = sM.coeffs[:n_keep]
    mu = (sM.base_exponent + np.arange(c.size)) / 2.0
    return c, mu


def _delta_e(cfg: SystemConfig) -> float:
    mom, gb, M = cfg.mom_e, cfg.rf_eve.gamma_bar, cfg.m_surfaces
    a = mom.a
    return float(M / (2 * mom.b ** (a + 1) * sp.gamma(a + 1) * gb ** ((a + 1) / 2)))


def _r_specs(q: float, d: ch.MalagaDerived, m: int) -> tuple[MeijerGSpec, MeijerGSpec]:
    """The two G-functions of the split identity for int_0^inf g^q G_CDF(c g) dg."""
    r = d.cfg.r
    l1, l2 = d.l1, d.l2[m - 1]
    A = MeijerGSpec(3 * r, 2, (-q, 1.0) + l1, l2 + (0.0, -(q + 1)))
    B = MeijerGSpec(3 * r + 1, 1, (1.0,) + l1 + (-q,), (-(q + 1),) + l2 + (0.0,))
    return A, B


def asymptotic_parameter_groups(q: float, d: ch.MalagaDerived, m: int = 1):
    """Parameter lists S1..S4 of the two leading-term expansions."""
    A, B = _r_specs(q, d, m)
    return A.a, A.b, B.a, B.b


def _sop_blocks(cfg: SystemConfig, kernel):
    """Assemble the two SOP blocks with ``kernel(q, m) -> R(q)`` for the m-th mixture term."""
    d = cfg.fso_derived
    M = cfg.m_surfaces
    nk = cfg.n_closed
    e_c, e_mu = _series_terms(cfg.mom_e, cfg.rf_eve.gamma_bar, M - 1, cfg.n_max, nk)
    q = e_mu + (cfg.mom_e.a - 1) / 2
    s_c, s_mu = _series_terms(cfg.mom_s, cfg.rf_main.gamma_bar, M, cfg.n_max, nk)
    delta = _delta_e(cfg)
    phi = cfg.phi
    terms1, terms2 = [], []
    for m, zw in zip(d.m_values, d.w_m):
        w = d.z_const * zw * delta
        for ej, qj in zip(e_c, q):
            terms1.append(w * ej * kernel(qj, m))
            for si, mi in zip(s_c, s_mu):
                terms2.append(w * ej * si * phi**mi * kernel(mi + qj, m))
    terms1, terms2 = np.array(terms1), np.array(terms2)
    raw = terms1.sum() - terms2.sum()
    allabs = np.abs(np.concatenate([terms1, terms2]))
    diag = {
        "block1": float(terms1.sum()),
        "block2": float(terms2.sum()),
        "largest_term": float(allabs.max()),
        "cancellation_ratio": float(allabs.sum() / abs(raw)) if raw != 0 else float("inf"),
    }
    # contribution of the last retained order of the eavesdropper series
    last = np.abs(terms1.reshape(len(d.w_m), -1)[:, -1]).sum()
    diag["last_order_fraction"] = float(last / abs(raw)) if raw != 0 else float("inf")
    diag["truncation_flag"] = diag["last_order_fraction"] > 1e-4
    diag["catastrophic_cancellation"] = diag["cancellation_ratio"] > 1e8
    return raw, diag


def _sop_split(cfg: SystemConfig) -> float:
    d = cfg.fso_derived
    if cfg.split_point is not None:
        return cfg.split_point
    return d.u_elec / (d.h_const * cfg.phi)


def sop_closed_form(cfg: SystemConfig) -> MetricResult:
    """Term-by-term closed-form SOP lower bound from the truncated series."""
    d = cfg.fso_derived
    a = _sop_split(cfg)
    X = d.h_const * cfg.phi * a / d.u_elec
    errs = []

    def kernel(q, m):
        A, B = _r_specs(q, d, m)
        va, ea, *_ = MeijerG(A).evaluate(np.array([X]))
        vb, eb, *_ = MeijerG(B).evaluate(np.array([X]))
        scale = a ** (q + 1)
        errs.append(scale * (ea[0] + eb[0]))
        return scale * (va[0] + vb[0])

    raw, diag = _sop_blocks(cfg, kernel)
    diag["split_point"] = a
    diag["argument"] = X
    return _wrap(raw, "closed_form", 0.0, (0.0, 1.0), diag)


def sop_asymptotic(cfg: SystemConfig) -> MetricResult:
    """Leading large-argument terms of each closed-form G-function."""
    d = cfg.fso_derived
    a = _sop_split(cfg)
    P = d.h_const * cfg.phi * a / d.u_elec

    def kernel(q, m):
        A, B = _r_specs(q, d, m)
        return a ** (q + 1) * (large_argument_leading(A, P) + large_argument_leading(B, P))

    raw, diag = _sop_blocks(cfg, kernel)
    diag["P"] = P
    return _wrap(raw, "asymptotic", 0.0, (0.0, 1.0), diag)


def _x1_specs(mu: float):
    A = MeijerGSpec(1, 2, (-mu, 0.0), (0.0, -(mu + 1)))
    B = MeijerGSpec(2, 1, (0.0, -mu), (-(mu + 1), 0.0))
    return A, B


def asc_x1(mu: float, a: float = 1.0) -> float:
    """Split-identity value assigned to int_0^inf g^mu/(1+g) dg."""
    A, B = _x1_specs(mu)
    z = np.array([a])
    return float(a ** (mu + 1) * (MeijerG(A).evaluate(z)[0][0] + MeijerG(B).evaluate(z)[0][0]))


def x3_spec(mu: float, d: ch.MalagaDerived, m: int) -> MeijerGSpec:
    r = d.cfg.r
    return MeijerGSpec(3 * r + 1, 2, (1.0, -mu) + d.l1, d.l2[m - 1] + (-mu, 0.0))


def asc_x3(mu: float, d: ch.MalagaDerived, m: int) -> float:
    """Product-integral G value for int_0^inf g^mu/(1+g) G_CDF(h g/U) dg."""
    z = np.array([d.h_const / d.u_elec])
    return float(MeijerG(x3_spec(mu, d, m)).evaluate(z)[0][0])


def asc_closed_form(cfg: SystemConfig) -> MetricResult:
    """Term-by-term closed-form ASC from the truncated series, in bits."""
    d = cfg.fso_derived
    M = cfg.m_surfaces
    nk = cfg.n_closed
    a = 1.0 if cfg.split_point is None else cfg.split_point
    e_c, e_mu = _series_terms(cfg.mom_e, cfg.rf_eve.gamma_bar, M, cfg.n_max, nk)
    s_c, s_mu = _series_terms(cfg.mom_s, cfg.rf_main.gamma_bar, M, cfg.n_max, nk)
    parts = {"x1": [], "x2": [], "x3": [], "x4": []}
    for ej, me in zip(e_c, e_mu):
        parts["x1"].append(ej * asc_x1(me, a))
        for si, ms in zip(s_c, s_mu):
            parts["x2"].append(-ej * si * asc_x1(me + ms, a))
        for m, zw in zip(d.m_values, d.w_m):
            w = d.z_const * zw
            parts["x3"].append(-ej * w * asc_x3(me, d, m))
            for si, ms in zip(s_c, s_mu):
                parts["x4"].append(ej * w * si * asc_x3(me + ms, d, m))
    allt = np.concatenate([np.array(v) for v in parts.values()])
    nats = float(allt.sum())
    diag = {k: float(np.sum(v)) for k, v in parts.items()}
    diag.update(nats=nats, largest_term=float(np.abs(allt).max()),
                cancellation_ratio=float(np.abs(allt).sum() / abs(nats)) if nats else float("inf"),
                split_point=a)
    diag["catastrophic_cancellation"] = diag["cancellation_ratio"] > 1e8
    return _wrap(nats / LN2, "closed_form", 0.0, (0.0, np.inf), diag)


# --------------------------------------------------------------------------- #


def est(t_rs: float, sop_value: float) -> float:
    """Effective secrecy throughput T (1 - SOP)."""
    if not 0.0 <= sop_value <= 1.0:
        raise ValueError(f"sop_value must lie in [0, 1] (got {sop_value})")
    return t_rs * (1.0 - sop_value)


def split_integral_check(exponent: float, g_spec: MeijerGSpec, a: float, scale: float = 1.0):
    """Finite-range identity for int_0^a g^q G(scale*g) dg.

    Returns ``(lhs, rhs)``: lhs from the closed-form antiderivative
    a^(q+1) G^{m,n+1}_{p+1,q+1}(scale*a | -q, a_list; b_list, -(q+1)), rhs from
    adaptive quadrature.
    """
    q = float(exponent)
    if a <= 0:
        return 0.0, 0.0
    lifted = MeijerGSpec(g_spec.m, g_spec.n + 1, (-q,) + g_spec.a, g_spec.b + (-(q + 1),))
    lhs = a ** (q + 1) * float(MeijerG(lifted).evaluate(np.array([scale * a]))[0][0])
    G = MeijerG(g_spec)

    # substitute g = a*u**k so the small-g power law is resolved
    k = 4.0

    def f(u):
        u = np.atleast_1d(u)
        g = a * u**k
        out = np.zeros(u.size)
        pos = g > 0
        out[pos] = g[pos] ** q * G.evaluate(scale * g[pos])[0] * a * k * u[pos] ** (k - 1)
        return out

    rhs, _ = gl_integrate(f, 0.0, 1.0, rtol=1e-12, atol=0.0, panels=4)
    return lhs, rhs

