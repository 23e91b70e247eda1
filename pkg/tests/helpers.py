"""Shared test utilities: frozen reference values, runtime budgets, configs.

The FROZEN values were computed once with 50-digit arithmetic from the model
definitions (bond-price closed form, Burr/Exponential integrals, cumulative
intensity) and are pinned here so regressions in the fast float64 code paths
are caught exactly.
"""

from __future__ import annotations

import contextlib
import json
import os
import time

import cococat

ALPHA = 5.81e-11

FROZEN = {
    # zcb_price(0.02, s) at theta_r=0.2, sigma_r=0.03
    "P_025": 0.99583351003312111502,
    "P_1": 0.99074039554172584439,
    "P_5": 0.84761357972247679802,
    "P_10": 0.12313762317472685227,
    "P_32": 8.2539115707889418082e-36,
    # implied first LIBOR at Delta=0.25
    "R0": 0.016735688947604540066,
    # conversion-measure drift at rho=-0.5, sigma_S=0.2, nu=0.5
    "THETA_STAR": 0.2015,
    "THETA_RING": 0.14248201640908932617,
    "SIGMA_RING": 0.021213203435596425732,
    # Burr(c=1.57, k=0.7, zeta=9.53e7)
    "BURR_MEAN": 1011606138.9643043472,
    "BURR_MEDIAN": 133210420.645,
    "BURR_SF_25E10": 1.7485808758905779e-4,
    "BURR_CDF_ZETA": 0.38442779332754185775,
    "OMLF_ALPHA": 0.023118058430423136922,   # 1 - Lf(alpha)
    "LF_ALPHA": 0.97688194156957686308,
    "KAPPA_ALPHA": 397901177.80418480072,
    "LF_HALF_ALPHA": 0.98726883475850791047,
    "KAPPA_HALF_ALPHA": 438250094.3715005002,
    # Exponential(beta=1e-9)
    "EXP_LF_ALPHA": 0.94509025611945940837,
    # intensity 24.93 + 0.03 t + 5.61 sin(2 pi (t+7.07)) + 0.3 exp(cos(2 pi t / 4.76))
    "LAM0": 28.134106374217771131,
    "CUM_LAM_1": 25.585803268523852496,
    "CUM_LAM_5": 127.02544914129076869,
    "CUM_LAM_10": 254.78308381054160657,
    # coupon weights for T=1, Delta=0.25, c=0.1, R0 implied
    "W_T1": (0.029062327717706912852, 0.027546596365562867115,
             0.026380703391408427832, 0.025550247533862698981),
}


def runtime_scale() -> float:
    """Budget multiplier: budgets are stated for a 4-core reference box."""
    return max(1.0, 4.0 / (os.cpu_count() or 1))


@contextlib.contextmanager
def budget(name: str, seconds: float):
    """Assert the block finishes within seconds * runtime_scale()."""
    scale = runtime_scale()
    limit = seconds * scale
    t0 = time.perf_counter()
    yield
    raw = time.perf_counter() - t0
    print(f"[budget] {name}: {raw:.2f} s raw; limit {limit:.1f} s "
          f"({seconds:g} s x scale {scale:.2f})")
    assert raw <= limit, (
        f"{name}: {raw:.2f} s exceeded the budget {limit:.1f} s "
        f"({seconds:g} s scaled by {scale:.2f} for {os.cpu_count()} cpus)")


def canonical() -> dict:
    return cococat.canonical_raw()


def with_rule(raw: dict, rule: dict) -> dict:
    out = json.loads(json.dumps(raw))
    out["contract"]["conversion"] = dict(rule)
    return out


def small_burr(rule: dict, T: float = 1.0, D: float = 1.3e10,
               paths: int = 20000, seed: int = 777) -> "cococat.ResolvedConfig":
    raw = with_rule(canonical(), rule)
    raw["contract"]["T"] = T
    raw["contract"]["D"] = D
    raw["mc"]["paths"] = paths
    raw["mc"]["seed"] = seed
    return cococat.resolve_config(raw)


def small_exp(rule: dict, T: float = 1.0, D: float = 3e9,
              paths: int = 20000, seed: int = 777) -> "cococat.ResolvedConfig":
    raw = with_rule(canonical(), rule)
    raw["contract"]["T"] = T
    raw["contract"]["D"] = D
    raw["loss"]["severity"] = {"kind": "exponential", "beta": 1e-9}
    raw["loss"]["intensity"] = {"a": 10.0, "b": 0.0, "p": 0.0, "phase": 0.0,
                                "q": 0.0, "period": 1.0}
    raw["mc"]["paths"] = paths
    raw["mc"]["seed"] = seed
    return cococat.resolve_config(raw)


K8 = {"rule": "constant_price", "K": 8.0}
NU05 = {"rule": "power_of_share", "nu": 0.5}
NU1 = {"rule": "power_of_share", "nu": 1.0}
