"""Monte Carlo simulation of the full RF/FSO link.

Each batch draws from its own Philox stream derived from (seed, batch index),
so estimates do not depend on how batches are spread over worker threads.
Batch statistics are combined in batch order with exactly rounded sums.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import comb, factorial

import numpy as np
from scipy import special as sp
from scipy import stats

from rissec import channels as ch
from rissec.metrics import SystemConfig

__all__ = [
    "McConfig",
    "McEstimate",
    "MalagaMixture",
    "MODES",
    "batch_rng",
    "default_workers",
    "sample_rician",
    "sample_cascade_snr",
    "sample_cascade_snr_matched",
    "est_from_sop",
    "RF_MODELS",
    "sample_best_ris",
    "build_malaga_mixture",
    "sample_malaga_irradiance",
    "sample_pointing_loss",
    "sample_fso_snr",
    "sop_indicator",
    "asc_contribution",
    "estimate_metrics",
    "estimate_sop",
    "estimate_asc",
    "estimate_est",
]

MODES = ("paper_independent", "physical_shared")
RF_MODELS = ("physical", "gamma_matched")
WORKERS_ENV = "RISSEC_WORKERS"


@dataclass(frozen=True)
class McConfig:
    samples: int = 10**6
    batches: int = 20
    seed: int = 20261016
    mode: str = "paper_independent"
    rf_model: str = "physical"

    def __post_init__(self):
        if self.samples < 10**4:
            raise ValueError(f"samples must be >= 10^4 (got {self.samples})")
        if self.batches < 10:
            raise ValueError(f"batches must be >= 10 (got {self.batches})")
        if self.batches > self.samples:
            raise ValueError("batches must not exceed samples")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES} (got {self.mode!r})")
        if self.rf_model not in RF_MODELS:
            raise ValueError(f"rf_model must be one of {RF_MODELS} (got {self.rf_model!r})")
        if self.rf_model == "gamma_matched" and self.mode != "paper_independent":
            raise ValueError("rf_model 'gamma_matched' has no shared-hop structure; use mode paper_independent")

    def batch_sizes(self) -> list[int]:
        base, rem = divmod(self.samples, self.batches)
        return [base + (1 if i < rem else 0) for i in range(self.batches)]


@dataclass(frozen=True)
class McEstimate:
    mean: float
    ci95_lo: float
    ci95_hi: float
    n: int
    std_err: float


def batch_rng(seed: int, batch: int) -> np.random.Generator:
    """Independent counter-based stream for one batch."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(batch,))))


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        n = int(env)
        if n < 1:
            raise ValueError(f"{WORKERS_ENV} must be >= 1")
        return n
    return os.cpu_count() or 1


# --------------------------------------------------------------------------- #
# RF samplers


def sample_rician(hop: ch.RicianHop, rng: np.random.Generator, shape) -> np.ndarray:
    """Rician envelopes |nu + sigma (X + iY)|."""
    s = hop.sigma
    x = hop.nu + s * rng.standard_normal(shape)
    y = s * rng.standard_normal(shape)
    return np.hypot(x, y)


def sample_cascade_snr(cfg: ch.RfCascadeConfig, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """gamma_bar * (sum_i alpha_i beta_i)^2 for one surface."""
    shape = (size, cfg.n_elements)
    a = sample_rician(cfg.hop1, rng, shape)
    b = sample_rician(cfg.hop2, rng, shape)
    return cfg.gamma_bar * np.sum(a * b, axis=1) ** 2


def sample_cascade_snr_matched(cfg: ch.RfCascadeConfig, rng: np.random.Generator,
                               size: int = 1) -> np.ndarray:
    """Draws from the moment-matched law sqrt(gamma/gamma_bar) ~ Gamma(a+1, b)."""
    mom = ch.rician_product_moments(cfg)
    return cfg.gamma_bar * (mom.b * rng.standard_gamma(mom.a + 1, size)) ** 2


def sample_best_ris(cfg_main: ch.RfCascadeConfig, cfg_eve: ch.RfCascadeConfig, m_surfaces: int,
                    mode: str, rng: np.random.Generator, size: int = 1, rf_model: str = "physical"):
    """(main SNR, eavesdropper SNR) after best-of-M surface selection.

    ``paper_independent`` treats both maxima as independent order statistics.
    ``physical_shared`` keeps one set of source-to-surface envelopes, selects
    the surface by the main link and reads the eavesdropper at that surface.
    ``rf_model="gamma_matched"`` replaces each cascade by its moment-matched
    Gamma law (independent mode only).
    """
    M, N = m_surfaces, cfg_main.n_elements
    if mode == "paper_independent":
        draw = sample_cascade_snr if rf_model == "physical" else sample_cascade_snr_matched
        sm = draw(cfg_main, rng, size * M).reshape(size, M)
        se = draw(cfg_eve, rng, size * M).reshape(size, M)
        return sm.max(axis=1), se.max(axis=1)
    if mode == "physical_shared":
        if rf_model != "physical":
            raise ValueError("physical_shared mode needs rf_model 'physical'")
        shape = (size, M, N)
        a = sample_rician(cfg_main.hop1, rng, shape)
        bm = sample_rician(cfg_main.hop2, rng, shape)
        be = sample_rician(cfg_eve.hop2, rng, shape)
        sm = cfg_main.gamma_bar * np.sum(a * bm, axis=2) ** 2
        se = cfg_eve.gamma_bar * np.sum(a * be, axis=2) ** 2
        idx = np.argmax(sm, axis=1)
        rows = np.arange(size)
        return sm[rows, idx], se[rows, idx]
    raise ValueError(f"unknown mode {mode!r}")


# --------------------------------------------------------------------------- #
# FSO samplers


@dataclass(frozen=True)
class MalagaMixture:
    weights: tuple[float, ...]
    scale: float


def build_malaga_mixture(cfg: ch.MalagaConfig) -> MalagaMixture:
    """Malaga irradiance as a finite mixture of scaled Gamma-Gamma products.

    Term k of the density integrates to A a_k Gamma(alpha) Gamma(k) s^((alpha+k)/2) / 2
    with s = (g beta + omega)/(alpha beta); those integrals are the weights.
    """
    al, be, g, om = cfg.alpha, cfg.beta, cfg.g, cfg.omega_big
    gbo = g * be + om
    scale = gbo / (al * be)
    A = 2 * al ** (al / 2) / (g ** (1 + al / 2) * sp.gamma(al)) * (g * be / gbo) ** (be + al / 2)
    raw = []
    for k in range(1, be + 1):
        ak = comb(be - 1, k - 1) * gbo ** (1 - k / 2) / factorial(k - 1) * (om / g) ** (k - 1) \
            * (al / be) ** (k / 2)
        raw.append(A * ak * sp.gamma(al) * sp.gamma(k) / 2 * scale ** ((al + k) / 2))
    total = math.fsum(raw)
    if abs(total - 1.0) > 1e-8:
        raise ArithmeticError(f"Malaga mixture weights sum to {total!r}, not 1")
    return MalagaMixture(tuple(w / total for w in raw), float(scale))


def sample_malaga_irradiance(cfg: ch.MalagaConfig, mixture: MalagaMixture,
                             rng: np.random.Generator, size: int = 1) -> np.ndarray:
    k = rng.choice(np.arange(1, cfg.beta + 1), size=size, p=np.asarray(mixture.weights))
    return mixture.scale * rng.standard_gamma(cfg.alpha, size) * rng.standard_gamma(k.astype(float))


def sample_pointing_loss(xi: float, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """Power-law misalignment loss u^(1/xi^2), u uniform, unit aperture gain."""
    return rng.random(size) ** (1.0 / (xi * xi))


def sample_fso_snr(cfg: ch.MalagaConfig, mixture: MalagaMixture, rng: np.random.Generator,
                   size: int = 1, u_elec: float | None = None) -> np.ndarray:
    """U (I/E[I])^r for composite irradiance I = turbulence * pointing loss."""
    if u_elec is None:
        u_elec = ch.malaga_derive(cfg).u_elec
    I = sample_malaga_irradiance(cfg, mixture, rng, size) * sample_pointing_loss(cfg.xi, rng, size)
    xi2 = cfg.xi**2
    mean_I = xi2 / (xi2 + 1) * (cfg.g + cfg.omega_big)
    return u_elec * (I / mean_I) ** cfg.r


# --------------------------------------------------------------------------- #
# estimators


def sop_indicator(g_main, g_fso, g_eve, phi):
    """1 where min(main, fso) <= phi * eve."""
    return (np.minimum(g_main, g_fso) <= phi * np.asarray(g_eve)).astype(float)


def asc_contribution(g_main, g_fso, g_eve):
    """Positive part of the capacity difference, in bits."""
    diff = np.log1p(np.minimum(g_main, g_fso)) - np.log1p(g_eve)
    return np.maximum(diff, 0.0) / np.log(2.0)


def _batch(cfg: SystemConfig, mc: McConfig, mixture, u_elec, b: int, size: int, metrics):
    rng = batch_rng(mc.seed, b)
    gm, ge = sample_best_ris(cfg.rf_main, cfg.rf_eve, cfg.m_surfaces, mc.mode, rng, size, mc.rf_model)
    gd = sample_fso_snr(cfg.fso, mixture, rng, size, u_elec)
    out = {}
    if "sop" in metrics:
        out["sop"] = math.fsum(sop_indicator(gm, gd, ge, cfg.phi)) / size
    if "asc" in metrics:
        out["asc"] = math.fsum(asc_contribution(gm, gd, ge)) / size
    return out


def _summarize(values, sizes) -> McEstimate:
    v = np.asarray(values)
    B = v.size
    n = int(sum(sizes))
    mean = math.fsum(vi * si for vi, si in zip(values, sizes)) / n
    se = float(np.sqrt(math.fsum((vi - mean) ** 2 for vi in values) / (B - 1) / B))
    half = float(stats.t.ppf(0.975, B - 1)) * se
    return McEstimate(mean, mean - half, mean + half, n, se)


def estimate_metrics(cfg: SystemConfig, mc: McConfig, metrics=("sop", "asc"),
                     workers: int | None = None) -> dict[str, McEstimate]:
    """SOP and/or ASC estimates from one set of draws."""
    metrics = tuple(metrics)
    mixture = build_malaga_mixture(cfg.fso)
    u_elec = cfg.fso_derived.u_elec
    sizes = mc.batch_sizes()
    workers = default_workers() if workers is None else int(workers)
    if workers <= 1:
        res = [_batch(cfg, mc, mixture, u_elec, b, s, metrics) for b, s in enumerate(sizes)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futs = [pool.submit(_batch, cfg, mc, mixture, u_elec, b, s, metrics) for b, s in enumerate(sizes)]
            res = [f.result() for f in futs]
    return {m: _summarize([r[m] for r in res], sizes) for m in metrics}


def estimate_sop(cfg: SystemConfig, mc: McConfig, workers: int | None = None) -> McEstimate:
    return estimate_metrics(cfg, mc, ("sop",), workers)["sop"]


def estimate_asc(cfg: SystemConfig, mc: McConfig, workers: int | None = None) -> McEstimate:
    return estimate_metrics(cfg, mc, ("asc",), workers)["asc"]


def est_from_sop(t_rs: float, sop: McEstimate) -> McEstimate:
    """Linear map of an SOP estimate to EST = t_rs (1 - SOP)."""
    return McEstimate(t_rs * (1 - sop.mean), t_rs * (1 - sop.ci95_hi), t_rs * (1 - sop.ci95_lo),
                      sop.n, t_rs * sop.std_err)


def estimate_est(cfg: SystemConfig, mc: McConfig, workers: int | None = None) -> McEstimate:
    return est_from_sop(cfg.t_rs, estimate_sop(cfg, mc, workers))
