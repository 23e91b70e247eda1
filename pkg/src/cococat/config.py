"""Configuration schema, validation, and resolution into immutable types.

The JSON schema is exactly::

    {rates:    {theta_r, sigma_r, r0, R0?},
     market:   {S0, sigma_S, rho, alpha? | delta?},
     loss:     {intensity: {a, b, p, phase, q, period},
                severity:  {kind, ...params}},
     contract: {Z, T, Delta, c, zeta, D, conversion: {rule, K? | nu?}},
     mc:       {paths, seed, substreams}}

Unknown keys anywhere are rejected, and every error names the offending
dotted field path.  Resolution fills derived quantities: R0 when given as
the sentinel "implied" (from the model discount curve), alpha when given
via delta (per unit of expected loss), and the compensator kappa.  A
provenance log records each substitution.  Re-serializing a resolved
configuration and reloading it reproduces an identical object.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional, Union

import numpy as np

from .errors import ConfigError
from .loss import IntensityParams, intensity_at
from .rates import LongstaffParams, implied_initial_libor
from .severity import BurrSeverity, ExponentialSeverity, SeverityKind

__all__ = [
    "ConstantPrice",
    "PowerOfShare",
    "ConversionRule",
    "MarketParams",
    "CocoCatTerms",
    "McParams",
    "ResolvedConfig",
    "load_raw",
    "load_config",
    "resolve_config",
    "canonical_raw",
    "canonical_config",
    "apply_override",
    "SWEEPABLE_PARAMETERS",
]


@dataclass(frozen=True)
class ConstantPrice:
    """Conversion at a fixed price K per share."""

    K: float

    rule = "constant_price"


@dataclass(frozen=True)
class PowerOfShare:
    """Conversion at price S_tau**nu for nu in (0, 1]."""

    nu: float

    rule = "power_of_share"


ConversionRule = Union[ConstantPrice, PowerOfShare]


@dataclass(frozen=True)
class MarketParams:
    """Share-price and loss-impact parameters; kappa is derived at load."""

    S0: float
    sigma_S: float
    rho: float
    alpha: float
    kappa: float


@dataclass(frozen=True)
class CocoCatTerms:
    """Contract terms; coupon dates are i*Delta for i = 1..round(T/Delta)."""

    Z: float
    T: float
    Delta: float
    c: float
    zeta: float
    D: float
    conversion: ConversionRule

    @property
    def n_coupons(self) -> int:
        return int(round(self.T / self.Delta))

    def coupon_dates(self) -> np.ndarray:
        return np.arange(1, self.n_coupons + 1) * self.Delta


@dataclass(frozen=True)
class McParams:
    paths: int
    seed: int
    substreams: int


@dataclass(frozen=True)
class ResolvedConfig:
    rates: LongstaffParams
    r0: float
    R0: float
    market: MarketParams
    intensity: IntensityParams
    severity: SeverityKind
    terms: CocoCatTerms
    mc: McParams
    provenance: tuple = field(default=(), compare=False)

    def to_dict(self) -> dict:
        """Serialize back to the schema with all resolutions applied."""
        severity: dict = {"kind": self.severity.kind}
        if isinstance(self.severity, BurrSeverity):
            severity.update(
                c_b=self.severity.c_b, k_b=self.severity.k_b, zeta_b=self.severity.zeta_b
            )
        else:
            severity.update(beta=self.severity.beta)
        conv = self.terms.conversion
        conversion = {"rule": conv.rule}
        if isinstance(conv, ConstantPrice):
            conversion["K"] = conv.K
        else:
            conversion["nu"] = conv.nu
        return {
            "rates": {
                "theta_r": self.rates.theta_r,
                "sigma_r": self.rates.sigma_r,
                "r0": self.r0,
                "R0": self.R0,
            },
            "market": {
                "S0": self.market.S0,
                "sigma_S": self.market.sigma_S,
                "rho": self.market.rho,
                "alpha": self.market.alpha,
            },
            "loss": {
                "intensity": {
                    "a": self.intensity.a,
                    "b": self.intensity.b,
                    "p": self.intensity.p,
                    "phase": self.intensity.phase,
                    "q": self.intensity.q,
                    "period": self.intensity.period,
                },
                "severity": severity,
            },
            "contract": {
                "Z": self.terms.Z,
                "T": self.terms.T,
                "Delta": self.terms.Delta,
                "c": self.terms.c,
                "zeta": self.terms.zeta,
                "D": "inf" if math.isinf(self.terms.D) else self.terms.D,
                "conversion": conversion,
            },
            "mc": {
                "paths": self.mc.paths,
                "seed": self.mc.seed,
                "substreams": self.mc.substreams,
            },
        }

    @property
    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def _section(raw: dict, name: str, required: tuple, optional: tuple = ()) -> dict:
    if name not in raw:
        raise ConfigError(name, "missing section")
    sec = raw[name]
    if not isinstance(sec, dict):
        raise ConfigError(name, "must be a JSON object")
    for key in sec:
        if key not in required and key not in optional:
            raise ConfigError(f"{name}.{key}", "unknown field")
    for key in required:
        if key not in sec:
            raise ConfigError(f"{name}.{key}", "missing required field")
    return sec


def _number(
    sec: dict,
    path: str,
    key: str,
    minimum: Optional[float] = None,
    maximum: Optional[float] = None,
    exclusive_min: bool = False,
    exclusive_max: bool = False,
) -> float:
    value = sec[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}.{key}", "must be a number")
    x = float(value)
    if not math.isfinite(x):
        raise ConfigError(f"{path}.{key}", "must be finite")
    if minimum is not None:
        if exclusive_min and not x > minimum:
            raise ConfigError(f"{path}.{key}", f"must be > {minimum}")
        if not exclusive_min and not x >= minimum:
            raise ConfigError(f"{path}.{key}", f"must be >= {minimum}")
    if maximum is not None:
        if exclusive_max and not x < maximum:
            raise ConfigError(f"{path}.{key}", f"must be < {maximum}")
        if not exclusive_max and not x <= maximum:
            raise ConfigError(f"{path}.{key}", f"must be <= {maximum}")
    return x


def _integer(sec: dict, path: str, key: str, minimum: int) -> int:
    value = sec[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}.{key}", "must be an integer")
    if value < minimum:
        raise ConfigError(f"{path}.{key}", f"must be >= {minimum}")
    return value


def resolve_config(raw: dict) -> ResolvedConfig:
    """Validate a schema dict and resolve every derived quantity."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    for key in raw:
        if key not in ("rates", "market", "loss", "contract", "mc"):
            raise ConfigError(key, "unknown section")
    provenance: list[str] = []

    sec = _section(raw, "rates", ("theta_r", "sigma_r", "r0"), ("R0",))
    theta_r = _number(sec, "rates", "theta_r", minimum=0.0, exclusive_min=True)
    sigma_r = _number(sec, "rates", "sigma_r", minimum=0.0, exclusive_min=True)
    r0 = _number(sec, "rates", "r0", minimum=0.0)
    rates = LongstaffParams(theta_r=theta_r, sigma_r=sigma_r)

    sec = _section(raw, "market", ("S0", "sigma_S", "rho"), ("alpha", "delta"))
    s0 = _number(sec, "market", "S0", minimum=0.0, exclusive_min=True)
    sigma_s = _number(sec, "market", "sigma_S", minimum=0.0)
    rho = _number(sec, "market", "rho", minimum=-1.0, maximum=1.0)
    if "alpha" in sec and "delta" in sec:
        raise ConfigError("market.alpha", "provide either alpha or delta, not both")
    if "alpha" not in sec and "delta" not in sec:
        raise ConfigError("market.alpha", "one of alpha or delta is required")

    lsec = _section(raw, "loss", ("intensity", "severity"))
    isec = _section(
        {"intensity": lsec["intensity"]}, "intensity",
        ("a", "b", "p", "phase", "q", "period"),
    )
    intensity = IntensityParams(
        a=_number(isec, "loss.intensity", "a"),
        b=_number(isec, "loss.intensity", "b"),
        p=_number(isec, "loss.intensity", "p"),
        phase=_number(isec, "loss.intensity", "phase"),
        q=_number(isec, "loss.intensity", "q"),
        period=_number(isec, "loss.intensity", "period", minimum=0.0, exclusive_min=True),
    )

    ssec = lsec["severity"]
    if not isinstance(ssec, dict) or "kind" not in ssec:
        raise ConfigError("loss.severity.kind", "missing required field")
    kind = ssec["kind"]
    if kind == "burr":
        bsec = _section({"severity": ssec}, "severity", ("kind", "c_b", "k_b", "zeta_b"))
        severity: SeverityKind = BurrSeverity(
            c_b=_number(bsec, "loss.severity", "c_b", minimum=0.0, exclusive_min=True),
            k_b=_number(bsec, "loss.severity", "k_b", minimum=0.0, exclusive_min=True),
            zeta_b=_number(bsec, "loss.severity", "zeta_b", minimum=0.0, exclusive_min=True),
        )
    elif kind == "exponential":
        esec = _section({"severity": ssec}, "severity", ("kind", "beta"))
        severity = ExponentialSeverity(
            beta=_number(esec, "loss.severity", "beta", minimum=0.0, exclusive_min=True)
        )
    else:
        raise ConfigError("loss.severity.kind", f"unknown severity kind {kind!r}")

    if "delta" in sec:
        delta_drop = _number(sec, "market", "delta", minimum=0.0)
        mean = severity.mean()
        if not math.isfinite(mean):
            raise ConfigError(
                "market.delta", "severity mean is infinite; cannot calibrate alpha"
            )
        alpha = delta_drop / mean
        provenance.append(f"alpha resolved from delta / E[X]: {alpha!r}")
    else:
        alpha = _number(sec, "market", "alpha", minimum=0.0)

    if alpha > 0.0:
        kappa = severity.one_minus_laplace(alpha) / alpha
    else:
        kappa = severity.mean()
        if not math.isfinite(kappa):
            raise ConfigError(
                "market.alpha", "alpha == 0 requires a finite severity mean for kappa"
            )
        provenance.append("alpha == 0: kappa set to the severity mean")
    market = MarketParams(S0=s0, sigma_S=sigma_s, rho=rho, alpha=alpha, kappa=kappa)

    sec = _section(raw, "contract", ("Z", "T", "Delta", "c", "zeta", "D", "conversion"))
    z = _number(sec, "contract", "Z", minimum=0.0, exclusive_min=True)
    t_term = _number(sec, "contract", "T", minimum=0.0, exclusive_min=True)
    delta_tenor = _number(sec, "contract", "Delta", minimum=0.0, exclusive_min=True)
    c_spread = _number(sec, "contract", "c", minimum=0.0)
    zeta = _number(sec, "contract", "zeta", minimum=0.0, maximum=1.0,
                   exclusive_min=True, exclusive_max=True)
    d_raw = sec["D"]
    if isinstance(d_raw, str):
        if d_raw.lower() not in ("inf", "infinity"):
            raise ConfigError("contract.D", f"not a number or 'inf': {d_raw!r}")
        d_thresh = math.inf
    elif isinstance(d_raw, bool) or not isinstance(d_raw, (int, float)):
        raise ConfigError("contract.D", "must be a number or 'inf'")
    else:
        d_thresh = float(d_raw)
        if math.isnan(d_thresh) or d_thresh <= 0.0:
            raise ConfigError("contract.D", "must be > 0")
    n_periods = t_term / delta_tenor
    if abs(n_periods - round(n_periods)) > 1e-9 * max(1.0, n_periods) or round(n_periods) < 1:
        raise ConfigError("contract.T", "must be a positive integer multiple of contract.Delta")

    csec = _section({"conversion": sec["conversion"]}, "conversion", ("rule",), ("K", "nu"))
    rule = csec.get("rule")
    if rule == "constant_price":
        if "nu" in csec:
            raise ConfigError("contract.conversion.nu", "not allowed for constant_price")
        if "K" not in csec:
            raise ConfigError("contract.conversion.K", "missing required field")
        conversion: ConversionRule = ConstantPrice(
            K=_number(csec, "contract.conversion", "K", minimum=0.0, exclusive_min=True)
        )
    elif rule == "power_of_share":
        if "K" in csec:
            raise ConfigError("contract.conversion.K", "not allowed for power_of_share")
        if "nu" not in csec:
            raise ConfigError("contract.conversion.nu", "missing required field")
        conversion = PowerOfShare(
            nu=_number(csec, "contract.conversion", "nu", minimum=0.0, maximum=1.0,
                       exclusive_min=True)
        )
    else:
        raise ConfigError("contract.conversion.rule", f"unknown rule {rule!r}")
    terms = CocoCatTerms(
        Z=z, T=t_term, Delta=delta_tenor, c=c_spread, zeta=zeta, D=d_thresh,
        conversion=conversion,
    )

    grid = np.linspace(0.0, t_term, max(4001, int(800 * t_term) + 1))
    lam = intensity_at(intensity, grid)
    if np.min(lam) <= 0.0:
        k = int(np.argmin(lam))
        raise ConfigError(
            "loss.intensity",
            f"lambda(t) must be strictly positive on [0, T]; "
            f"min {lam[k]:.6g} at t = {grid[k]:.6g}",
        )

    sec = _section(raw, "mc", ("paths", "seed", "substreams"))
    mc = McParams(
        paths=_integer(sec, "mc", "paths", minimum=1),
        seed=_integer(sec, "mc", "seed", minimum=0),
        substreams=_integer(sec, "mc", "substreams", minimum=1),
    )

    rsec = raw["rates"]
    r0_sentinel = rsec.get("R0", "implied")
    if isinstance(r0_sentinel, str):
        if r0_sentinel.lower() != "implied":
            raise ConfigError("rates.R0", f"not a number or 'implied': {r0_sentinel!r}")
        r_libor = implied_initial_libor(rates, r0, delta_tenor)
        provenance.append(f"R0 implied from the discount curve: {r_libor!r}")
    else:
        r_libor = _number(rsec, "rates", "R0", minimum=0.0)

    return ResolvedConfig(
        rates=rates, r0=r0, R0=r_libor, market=market, intensity=intensity,
        severity=severity, terms=terms, mc=mc, provenance=tuple(provenance),
    )


def load_raw(path) -> dict:
    """Read a JSON config file into a raw dict (schema not yet validated)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(str(path), "config file not found") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON: {exc}") from exc


def load_config(path) -> ResolvedConfig:
    """Load and fully resolve a JSON config file."""
    return resolve_config(load_raw(path))


def canonical_raw() -> dict:
    """The bundled canonical parameter set as a raw schema dict."""
    data = resources.files("cococat").joinpath("data/table2.json").read_text("utf-8")
    return json.loads(data)


def canonical_config() -> ResolvedConfig:
    return resolve_config(canonical_raw())


# dotted config paths for each sweepable parameter
SWEEPABLE_PARAMETERS = {
    "D": ("contract", "D"),
    "T": ("contract", "T"),
    "K": ("contract", "conversion", "K"),
    "nu": ("contract", "conversion", "nu"),
    "zeta": ("contract", "zeta"),
    "sigma_r": ("rates", "sigma_r"),
    "theta_r": ("rates", "theta_r"),
}


def apply_override(raw: dict, parameter: str, value) -> dict:
    """Deep-copied raw dict with one sweepable parameter replaced."""
    if parameter not in SWEEPABLE_PARAMETERS:
        raise ConfigError(
            "sweep.parameter",
            f"unknown parameter {parameter!r}; expected one of "
            f"{sorted(SWEEPABLE_PARAMETERS)}",
        )
    out = json.loads(json.dumps(raw))
    node = out
    *parents, leaf = SWEEPABLE_PARAMETERS[parameter]
    for part in parents:
        if part not in node or not isinstance(node[part], dict):
            raise ConfigError(".".join(parents), "missing section for sweep override")
        node = node[part]
    node[leaf] = value
    return out
