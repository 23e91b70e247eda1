"""Brute-force joint Monte Carlo of the full pricing expectation.

Simulates the three coupled processes — short rate, share price, aggregate
loss — and averages the discounted cashflows directly.  This is the
independent cross-check for the semi-analytic pricer: slower, but it makes
no use of the closed-form leg decomposition.

Scheme notes:

* The short rate is r = y**2 where y is an arithmetic Brownian motion with
  drift -theta/2 and volatility sigma/2; the Euler step in y is therefore
  exact in distribution at any step size.
* The bank-account integral of r uses the trapezoid rule, and the share's
  financial component uses the *same* trapezoid value in its drift, so
  exp(-int r) * S_F is exactly a unit-mean lognormal at every grid point,
  independent of step size.
* Catastrophe events are drawn in continuous time (thinning) and never
  discretized: the trigger time is an exact event time, the share's
  catastrophe component exp(-alpha*L + alpha*kappa*Lambda(t)) is evaluated
  in closed form at tau, and the rate/share pair is advanced from the last
  grid point to tau by one exact partial step.
* Forward LIBOR fixed at t_{i-1} is the closed-form bond-price ratio at the
  simulated short rate (the model is time-homogeneous), not a nested
  simulation.

The per-coupon grid uses round(Delta/dt) steps per coupon period so coupon
dates are exactly grid points.  Paths are processed in fixed-size chunks on
independent substreams seeded by (seed, ORACLE_STREAM, chunk); results are
reproducible bit-for-bit for a fixed chunk size, regardless of threading.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .config import ConstantPrice, ResolvedConfig
from .loss import CENSORED, IntensityTable, LossModel, sample_event_chunk
from .pricing import PriceBreakdown, price
from .rates import zcb_coefficients
from .util import map_chunks

__all__ = [
    "ORACLE_STREAM",
    "DEFAULT_DT",
    "CHUNK_PATHS",
    "PathBundle",
    "simulate_joint_path",
    "price_direct",
    "oracle_report",
]

# RNG stream label for oracle chunks (pricing uses 0 and 1).
ORACLE_STREAM = 911
DEFAULT_DT = 1.0 / 252.0
CHUNK_PATHS = 4096


@dataclass(frozen=True)
class PathBundle:
    """One simulated joint path on a grid that includes every event time."""

    grid: np.ndarray
    r: np.ndarray
    bank: np.ndarray
    S_F: np.ndarray
    S_C: np.ndarray
    L: np.ndarray
    tau: float

    @property
    def share(self) -> np.ndarray:
        return self.S_F * self.S_C

    def __post_init__(self):
        n = self.grid.shape[0]
        for name in ("r", "bank", "S_F", "S_C", "L"):
            if getattr(self, name).shape != (n,):
                raise ValueError(f"{name} must match the grid length {n}")


def simulate_joint_path(cfg: ResolvedConfig, rng: np.random.Generator,
                        dt: float = DEFAULT_DT) -> PathBundle:
    """Simulate one joint path; S_F is normalized to S_F(0) = 1.

    Draw order: catastrophe events (times then severities), then one pair
    of normals per grid interval.  Event times and coupon dates are
    inserted into the grid, so the loss path and trigger time are exact.
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    terms = cfg.terms
    horizon = terms.T
    model = LossModel(intensity=cfg.intensity, severity=cfg.severity)
    ev_times, ev_cum, _counts = sample_event_chunk(model, horizon, 1, rng)

    base = np.linspace(0.0, horizon, int(math.ceil(horizon / dt)) + 1)
    grid = np.unique(np.concatenate([base, terms.coupon_dates(), ev_times]))
    steps = np.diff(grid)
    z = rng.standard_normal((steps.shape[0], 2))

    theta, sigma = cfg.rates.theta_r, cfg.rates.sigma_r
    y = np.empty(grid.shape[0])
    y[0] = math.sqrt(cfg.r0)
    y[1:] = y[0] + np.cumsum(-0.5 * theta * steps
                             + 0.5 * sigma * np.sqrt(steps) * z[:, 0])
    r = y * y
    trap = np.concatenate(
        ([0.0], np.cumsum(0.5 * steps * (r[:-1] + r[1:]))))
    bank = np.exp(-trap)

    rho, sigma_s = cfg.market.rho, cfg.market.sigma_S
    w2 = rho * z[:, 0] + math.sqrt(1.0 - rho * rho) * z[:, 1]
    w2_cum = np.concatenate(([0.0], np.cumsum(np.sqrt(steps) * w2)))
    s_f = np.exp(trap - 0.5 * sigma_s ** 2 * grid + sigma_s * w2_cum)

    n_ev = np.searchsorted(ev_times, grid, side="right")
    loss = np.where(n_ev > 0, ev_cum[np.maximum(n_ev - 1, 0)], 0.0)
    table = IntensityTable(cfg.intensity, horizon=horizon)
    alpha, kappa = cfg.market.alpha, cfg.market.kappa
    s_c = np.exp(-alpha * loss + alpha * kappa * table.cumulative(grid))

    hit = np.flatnonzero(ev_cum >= terms.D)
    tau = float(ev_times[hit[0]]) if hit.size else CENSORED
    return PathBundle(grid=grid, r=r, bank=bank, S_F=s_f, S_C=s_c,
                      L=loss, tau=tau)


def _direct_chunk(args):
    (cfg, n, m_steps, dt_eff, seed_key, table) = args
    rng = np.random.default_rng(np.random.SeedSequence(seed_key))
    terms = cfg.terms
    rates = cfg.rates
    market = cfg.market
    n_cpn = terms.n_coupons
    m_total = n_cpn * m_steps
    theta, sigma = rates.theta_r, rates.sigma_r
    rho, sigma_s = market.rho, market.sigma_S

    z = rng.standard_normal((n, m_total, 2))
    z_part = rng.standard_normal((n, 2))
    model = LossModel(intensity=cfg.intensity, severity=cfg.severity)
    ev_times, ev_cum, counts = sample_event_chunk(model, terms.T, n, rng)

    sq = math.sqrt(dt_eff)
    y = np.empty((n, m_total + 1))
    y[:, 0] = math.sqrt(cfg.r0)
    np.cumsum(-0.5 * theta * dt_eff + 0.5 * sigma * sq * z[:, :, 0],
              axis=1, out=y[:, 1:])
    y[:, 1:] += y[:, :1]
    r = y * y
    trap = np.empty((n, m_total + 1))
    trap[:, 0] = 0.0
    np.cumsum(0.5 * dt_eff * (r[:, :-1] + r[:, 1:]), axis=1, out=trap[:, 1:])
    w2 = rho * z[:, :, 0] + math.sqrt(1.0 - rho * rho) * z[:, :, 1]
    w2_cum = np.empty((n, m_total + 1))
    w2_cum[:, 0] = 0.0
    np.cumsum(sq * w2, axis=1, out=w2_cum[:, 1:])
    del z, w2

    # trigger time and loss level at the trigger, per path
    tau = np.full(n, CENSORED)
    l_tau = np.zeros(n)
    if ev_times.size:
        pid = np.repeat(np.arange(n), counts)
        hits = np.flatnonzero(ev_cum >= terms.D)
        if hits.size:
            first_pid, first_pos = np.unique(pid[hits], return_index=True)
            tau[first_pid] = ev_times[hits[first_pos]]
            l_tau[first_pid] = ev_cum[hits[first_pos]]

    # coupon leg: LIBOR fixed at each reset from the closed-form bond price
    coeffs = zcb_coefficients(rates, terms.Delta)
    cpn_idx = np.arange(1, n_cpn + 1) * m_steps
    reset_idx = cpn_idx - m_steps
    r_reset = r[:, reset_idx]
    log_p = coeffs.log_A + coeffs.B * r_reset + coeffs.C * np.sqrt(r_reset)
    libor = (np.exp(-log_p) - 1.0) / terms.Delta
    libor[:, 0] = cfg.R0
    dates = terms.coupon_dates()
    alive = tau[:, None] > dates[None, :]
    disc_cpn = np.exp(-trap[:, cpn_idx])
    i1 = np.sum((libor + terms.c) * terms.Delta * disc_cpn * alive, axis=1)

    i3 = np.exp(-trap[:, m_total]) * (tau > terms.T)

    # conversion leg: exact partial step from the last grid point to tau
    hit = tau <= terms.T
    tau_safe = np.where(hit, tau, 0.0)
    j = np.minimum((tau_safe / dt_eff).astype(np.int64), m_total - 1)
    h = tau_safe - j * dt_eff
    rows = np.arange(n)
    sq_h = np.sqrt(h)
    y_tau = y[rows, j] - 0.5 * theta * h + 0.5 * sigma * sq_h * z_part[:, 0]
    r_tau = y_tau * y_tau
    trap_tau = trap[rows, j] + 0.5 * h * (r[rows, j] + r_tau)
    w2_tau = w2_cum[rows, j] + sq_h * (
        rho * z_part[:, 0] + math.sqrt(1.0 - rho * rho) * z_part[:, 1])
    bank_tau = np.exp(-trap_tau)
    log_sf = trap_tau - 0.5 * sigma_s ** 2 * tau_safe + sigma_s * w2_tau
    s_c = np.exp(-market.alpha * l_tau
                 + market.alpha * market.kappa * table.cumulative(tau_safe))
    s_tau = market.S0 * np.exp(log_sf) * s_c
    conv = terms.conversion
    if isinstance(conv, ConstantPrice):
        payoff = terms.zeta / conv.K * s_tau * bank_tau
    else:
        payoff = terms.zeta * s_tau ** (1.0 - conv.nu) * bank_tau
    i2 = np.where(hit, payoff, 0.0)

    return i1, i2, i3, tau, bank_tau, s_tau, hit


def price_direct(cfg: ResolvedConfig, n_paths: Optional[int] = None,
                 seed: Optional[int] = None, dt: float = DEFAULT_DT,
                 chunk_paths: int = CHUNK_PATHS,
                 dump_path=None) -> PriceBreakdown:
    """Averaged discounted cashflows from the full joint simulation."""
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    if chunk_paths < 1:
        raise ValueError("chunk_paths must be >= 1")
    n = cfg.mc.paths if n_paths is None else int(n_paths)
    master = cfg.mc.seed if seed is None else int(seed)
    terms = cfg.terms
    m_steps = max(1, int(round(terms.Delta / dt)))
    dt_eff = terms.Delta / m_steps
    table = IntensityTable(cfg.intensity, horizon=terms.T)

    n_chunks = int(math.ceil(n / chunk_paths))
    sizes = [chunk_paths] * (n_chunks - 1) + [n - chunk_paths * (n_chunks - 1)]
    args = [
        (cfg, size, m_steps, dt_eff, (master, ORACLE_STREAM, k), table)
        for k, size in enumerate(sizes)
    ]
    parts = map_chunks(_direct_chunk, args)
    i1 = np.concatenate([p[0] for p in parts])
    i2 = np.concatenate([p[1] for p in parts])
    i3 = np.concatenate([p[2] for p in parts])

    if dump_path is not None:
        taus = np.concatenate([p[3] for p in parts])
        banks = np.concatenate([p[4] for p in parts])
        shares = np.concatenate([p[5] for p in parts])
        hits = np.concatenate([p[6] for p in parts])
        with open(dump_path, "w", encoding="utf-8", newline="") as fh:
            fh.write("path_id,tau,bank_at_tau,share_at_tau,I1,I2,I3\n")
            for k in range(n):
                t_s = repr(float(taus[k])) if hits[k] else "inf"
                b_s = repr(float(banks[k])) if hits[k] else ""
                s_s = repr(float(shares[k])) if hits[k] else ""
                fh.write(
                    f"{k},{t_s},{b_s},{s_s},"
                    f"{float(i1[k])!r},{float(i2[k])!r},{float(i3[k])!r}\n"
                )

    def _mean(x: np.ndarray) -> float:
        return math.fsum(x) / n  # exactly rounded: order-independent

    def _se(x: np.ndarray) -> float:
        return float(np.std(x, ddof=1) / math.sqrt(n)) if n > 1 else 0.0

    total = i1 + i2 + i3
    conv = terms.conversion
    metadata = {
        "config_hash": cfg.config_hash,
        "rule": conv.rule,
        "D": terms.D,
        "T": terms.T,
        "nu_or_K": conv.K if isinstance(conv, ConstantPrice) else conv.nu,
        "seed": master,
        "n_paths": n,
        "dt": dt_eff,
        "chunk_paths": chunk_paths,
        "mode": "oracle",
    }
    return PriceBreakdown(
        V0=terms.Z * _mean(total),
        I1=_mean(i1), I2=_mean(i2), I3=_mean(i3),
        se_I1=terms.Z * _se(i1), se_I2=terms.Z * _se(i2),
        se_I3=terms.Z * _se(i3), se_total=terms.Z * _se(total),
        metadata=metadata,
    )


def oracle_report(cfg: ResolvedConfig, n_paths: Optional[int] = None,
                  seed: Optional[int] = None, dt: float = DEFAULT_DT,
                  dump_path=None) -> dict:
    """Oracle price next to the semi-analytic price, with a z-score."""
    direct = price_direct(cfg, n_paths=n_paths, seed=seed, dt=dt,
                          dump_path=dump_path)
    analytic = price(cfg, n_paths=n_paths, seed=seed)
    se = math.hypot(direct.se_total, analytic.se_total)
    z = (direct.V0 - analytic.V0) / se if se > 0.0 else 0.0
    return {
        "oracle": direct.to_json_dict(),
        "analytic": analytic.to_json_dict(),
        "difference": direct.V0 - analytic.V0,
        "combined_se": se,
        "z_score": z,
    }
