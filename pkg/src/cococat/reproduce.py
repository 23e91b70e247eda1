"""Reproduction runs: the published reference price table and figure grids.

The reference table prices the canonical 5-year contract on a grid of nine
trigger thresholds under three conversion rules:

* V0_1 — constant conversion price K = 8,
* V0_2 — power rule nu = 1 (conversion at the trigger-time share price),
* V0_3 — power rule nu = 0.5.

All cells share one master seed and one event-sample cache, so every cell
of a column re-thresholds the identical trigger sample (common random
numbers).  The deviations report compares each cell against the published
reference values, runs the structural checks (monotonicity in D, the
V0_2 <= V0_3 ordering at low thresholds, plateau commonality), and
attributes absolute gaps with a share-volatility sensitivity scan — the
reference source does not state the share volatility it used, so absolute
cell matches are conditional on that input.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

from .config import canonical_raw, resolve_config
from .pricing import PriceBreakdown, price, run_sweep

__all__ = [
    "REFERENCE_D",
    "REFERENCE_PRICES",
    "TABLE_RULES",
    "Table3Result",
    "compute_table3",
    "table3_csv",
    "deviations_report",
    "sigma_s_scan",
    "figure_kp_grid",
    "figure_nu_grid",
    "figure_term",
    "figure_zeta",
    "FIGURE_HEADERS",
]

# trigger-threshold grid (aggregate-loss units) of the reference table
REFERENCE_D = (1.3e10, 1.8e10, 2.3e10, 2.9e10, 3.4e10, 4.0e10,
               9.5e10, 2.5e11, 3.5e11)

# published reference prices per column
REFERENCE_PRICES = {
    "V0_1": (0.345, 0.423, 0.523, 0.691, 0.952, 1.263, 1.507, 1.579, 1.579),
    "V0_2": (0.310, 0.379, 0.460, 0.653, 0.915, 1.271, 1.508, 1.579, 1.579),
    "V0_3": (0.331, 0.391, 0.487, 0.676, 0.948, 1.292, 1.509, 1.579, 1.579),
}

TABLE_RULES = {
    "V0_1": {"rule": "constant_price", "K": 8.0},
    "V0_2": {"rule": "power_of_share", "nu": 1.0},
    "V0_3": {"rule": "power_of_share", "nu": 0.5},
}

PLATEAU_TARGET = 1.579
PLATEAU_TOL = 0.08
PLATEAU_MIN_D = 2.5e11
LOWD_TARGET = 0.345
LOWD_TOL = 0.05
ORDERING_MAX_D = 4.0e10

SIGMA_S_SCAN = (0.05, 0.1, 0.2, 0.3, 0.4, 0.6)


def _override_path(raw: dict, parts: tuple, value) -> dict:
    out = json.loads(json.dumps(raw))
    node = out
    for part in parts[:-1]:
        node = node[part]
    node[parts[-1]] = value
    return out


def _with_conversion(raw: dict, conversion: dict) -> dict:
    return _override_path(raw, ("contract", "conversion"), dict(conversion))


@dataclass(frozen=True)
class Table3Result:
    d_grid: tuple
    columns: dict  # column name -> list[PriceBreakdown]
    n_paths: int
    seed: int
    config_hash: str
    sigma_scan: tuple = field(default=())  # (sigma_S, D, V0_3) rows


def compute_table3(raw: Optional[dict] = None, n_paths: Optional[int] = None,
                   seed: Optional[int] = None, d_grid=REFERENCE_D,
                   with_sigma_scan: bool = True) -> Table3Result:
    """Price the reference grid under all three rules with shared samples."""
    raw = canonical_raw() if raw is None else raw
    cache: dict = {}
    columns = {}
    for name, conversion in TABLE_RULES.items():
        raw_rule = _with_conversion(raw, conversion)
        columns[name] = run_sweep(raw_rule, "D", list(d_grid),
                                  n_paths=n_paths, seed=seed, batch_cache=cache)
    base_cfg = resolve_config(raw)
    meta = columns["V0_1"][0].metadata
    scan: list = []
    if with_sigma_scan:
        # Only the nu = 0.5 column reads sigma_S; the scan reuses the cached
        # event samples, so it re-weights the identical trigger draws.
        for sig in SIGMA_S_SCAN:
            raw_sig = _with_conversion(
                _override_path(raw, ("market", "sigma_S"), sig),
                TABLE_RULES["V0_3"],
            )
            for d in (d_grid[0], d_grid[5] if len(d_grid) > 5 else d_grid[-1]):
                bd = run_sweep(raw_sig, "D", [d], n_paths=n_paths, seed=seed,
                               batch_cache=cache)[0]
                scan.append((sig, d, bd.V0))
    return Table3Result(
        d_grid=tuple(d_grid),
        columns=columns,
        n_paths=meta["n_paths"],
        seed=meta["seed"],
        config_hash=base_cfg.config_hash,
        sigma_scan=tuple(scan),
    )


def table3_csv(result: Table3Result) -> str:
    """Render the grid as CSV: one row per threshold, three price columns."""
    lines = ["D,V0_1,V0_2,V0_3,se_1,se_2,se_3"]
    for i, d in enumerate(result.d_grid):
        cells = [result.columns[name][i] for name in ("V0_1", "V0_2", "V0_3")]
        lines.append(",".join(
            [repr(float(d))]
            + [repr(c.V0) for c in cells]
            + [repr(c.se_total) for c in cells]
        ))
    return "\n".join(lines) + "\n"


def _check_monotone(column: list) -> list:
    bad = []
    for i in range(1, len(column)):
        if column[i].V0 < column[i - 1].V0:
            bad.append(i)
    return bad


def deviations_report(result: Table3Result) -> str:
    """Per-cell deviations against the reference values plus checks."""
    out = []
    out.append("reference-table reproduction report")
    out.append(f"config_hash: {result.config_hash}  paths: {result.n_paths}  "
               f"seed: {result.seed}")
    out.append("columns: V0_1 = constant conversion price K=8; "
               "V0_2 = power rule nu=1; V0_3 = power rule nu=0.5")
    out.append("")
    out.append("per-cell deviations (model - reference):")
    header = (f"{'D':>10} " + " ".join(
        f"{c:>9} {'ref':>6} {'diff':>8} {'se':>8}" for c in TABLE_RULES))
    out.append(header)
    for i, d in enumerate(result.d_grid):
        row = [f"{d:10.3g}"]
        for name in TABLE_RULES:
            cell = result.columns[name][i]
            ref = REFERENCE_PRICES[name][i] if i < len(REFERENCE_PRICES[name]) else math.nan
            row.append(f"{cell.V0:9.4f} {ref:6.3f} {cell.V0 - ref:+8.4f} "
                       f"{cell.se_total:8.5f}")
        out.append(" ".join(row))
    out.append("")
    out.append("structural checks:")

    for name in TABLE_RULES:
        bad = _check_monotone(result.columns[name])
        if bad:
            detail = ", ".join(
                f"D={result.d_grid[i]:.3g}: {result.columns[name][i - 1].V0:.4f}"
                f" -> {result.columns[name][i].V0:.4f}" for i in bad)
            out.append(f"  monotone nondecreasing in D [{name}]: FAIL ({detail})")
        else:
            out.append(f"  monotone nondecreasing in D [{name}]: PASS")

    order_fail = []
    for i, d in enumerate(result.d_grid):
        if d <= ORDERING_MAX_D:
            v2 = result.columns["V0_2"][i].V0
            v3 = result.columns["V0_3"][i].V0
            if v2 > v3:
                order_fail.append(f"D={d:.3g}: V0_2={v2:.4f} > V0_3={v3:.4f}")
    out.append("  ordering V0_2 <= V0_3 for D <= 4e10: "
               + ("PASS" if not order_fail else "FAIL (" + "; ".join(order_fail) + ")"))

    plateau_rows = [i for i, d in enumerate(result.d_grid) if d >= PLATEAU_MIN_D]
    for i in plateau_rows:
        cells = {n: result.columns[n][i] for n in TABLE_RULES}
        names = list(cells)
        gaps = []
        common = True
        for a in range(len(names)):
            for b in range(a + 1, len(names)):
                ca, cb = cells[names[a]], cells[names[b]]
                gap = abs(ca.V0 - cb.V0)
                lim = 2.0 * math.hypot(ca.se_total, cb.se_total)
                gaps.append(f"{names[a]}-{names[b]}: |{gap:.5f}| vs 2se={lim:.5f}")
                if gap > lim:
                    common = False
        out.append(f"  plateau commonality at D={result.d_grid[i]:.3g}: "
                   + ("PASS" if common else "FAIL") + " (" + "; ".join(gaps) + ")")
        for name in TABLE_RULES:
            v = cells[name].V0
            ok = abs(v - PLATEAU_TARGET) <= PLATEAU_TOL
            out.append(f"    level {name} = {v:.4f} vs {PLATEAU_TARGET} "
                       f"+/- {PLATEAU_TOL}: " + ("PASS" if ok else "FAIL"))

    low = result.columns["V0_1"][0]
    ok = abs(low.V0 - LOWD_TARGET) <= LOWD_TOL
    out.append(f"  low-threshold cell V0_1(D={result.d_grid[0]:.3g}) = "
               f"{low.V0:.4f} vs {LOWD_TARGET} +/- {LOWD_TOL}: "
               + ("PASS" if ok else "FAIL"))

    out.append("")
    out.append("attribution:")
    out.append("  The reference source does not state the share volatility"
               " sigma_S behind its figures, and its rate-parameter table is"
               " internally inconsistent; absolute cell matches are therefore"
               " conditional on those inputs. The structural checks above do"
               " not depend on them.")
    out.append("  sigma_S sensitivity of the nu=0.5 column (same trigger"
               " draws re-weighted; the K=8 and nu=1 columns are bitwise"
               " invariant to sigma_S):")
    if result.sigma_scan:
        out.append(f"    {'sigma_S':>8} {'D':>10} {'V0_3':>9}")
        for sig, d, v in result.sigma_scan:
            out.append(f"    {sig:8.2f} {d:10.3g} {v:9.4f}")
    else:
        out.append("    (scan skipped)")
    out.append("")
    return "\n".join(out) + "\n"


FIGURE_HEADERS = {
    "fig_kp_grid.csv": "K,D,V0,I1,I2,I3,se",
    "fig_nu_grid.csv": "nu,D,V0,I1,I2,I3,se",
    "fig_term.csv": "T,sigma_r,theta_r,V0,I1,I2,I3,se",
    "fig_zeta.csv": "zeta,D,V0,I1,I2,I3,se",
}


def _row(prefix: list, bd: PriceBreakdown) -> str:
    return ",".join([repr(float(x)) for x in prefix]
                    + [repr(bd.V0), repr(bd.I1), repr(bd.I2), repr(bd.I3),
                       repr(bd.se_total)])


def figure_kp_grid(raw: Optional[dict] = None, n_paths: Optional[int] = None,
                   seed: Optional[int] = None) -> str:
    """Constant-price rule: price versus K and threshold D."""
    raw = canonical_raw() if raw is None else raw
    cache: dict = {}
    lines = [FIGURE_HEADERS["fig_kp_grid.csv"]]
    for k in (2.0, 4.0, 6.0, 8.0, 10.0, 12.0):
        raw_k = _with_conversion(raw, {"rule": "constant_price", "K": k})
        for d, bd in zip(REFERENCE_D,
                         run_sweep(raw_k, "D", list(REFERENCE_D),
                                   n_paths=n_paths, seed=seed, batch_cache=cache)):
            lines.append(_row([k, d], bd))
    return "\n".join(lines) + "\n"


def figure_nu_grid(raw: Optional[dict] = None, n_paths: Optional[int] = None,
                   seed: Optional[int] = None) -> str:
    """Power rule: price versus nu and threshold D."""
    raw = canonical_raw() if raw is None else raw
    cache: dict = {}
    lines = [FIGURE_HEADERS["fig_nu_grid.csv"]]
    for nu in [round(0.1 * i, 1) for i in range(1, 11)]:
        raw_nu = _with_conversion(raw, {"rule": "power_of_share", "nu": nu})
        for d, bd in zip(REFERENCE_D,
                         run_sweep(raw_nu, "D", list(REFERENCE_D),
                                   n_paths=n_paths, seed=seed, batch_cache=cache)):
            lines.append(_row([nu, d], bd))
    return "\n".join(lines) + "\n"


def figure_term(raw: Optional[dict] = None, n_paths: Optional[int] = None,
                seed: Optional[int] = None, d_value: float = 4.0e10) -> str:
    """Power rule nu=0.5: price versus term for rate-parameter variants."""
    raw = canonical_raw() if raw is None else raw
    raw = _with_conversion(raw, {"rule": "power_of_share", "nu": 0.5})
    raw = _override_path(raw, ("contract", "D"), d_value)
    lines = [FIGURE_HEADERS["fig_term.csv"]]
    for t in range(1, 11):
        cache: dict = {}  # horizon changes: keep only this term's samples
        raw_t = _override_path(raw, ("contract", "T"), float(t))
        for theta in (0.1, 0.2):
            for sig in (0.01, 0.03, 0.05):
                raw_v = _override_path(
                    _override_path(raw_t, ("rates", "theta_r"), theta),
                    ("rates", "sigma_r"), sig,
                )
                bd = price(resolve_config(raw_v), n_paths=n_paths, seed=seed,
                           batch_cache=cache)
                lines.append(_row([float(t), sig, theta], bd))
    return "\n".join(lines) + "\n"


def figure_zeta(raw: Optional[dict] = None, n_paths: Optional[int] = None,
                seed: Optional[int] = None) -> str:
    """Power rule nu=0.5: price versus conversion fraction zeta."""
    raw = canonical_raw() if raw is None else raw
    raw = _with_conversion(raw, {"rule": "power_of_share", "nu": 0.5})
    cache: dict = {}
    lines = [FIGURE_HEADERS["fig_zeta.csv"]]
    for z in [round(0.05 * i, 2) for i in range(1, 11)]:
        raw_z = _override_path(raw, ("contract", "zeta"), z)
        for d in (1.3e10, 4.0e10, 2.5e11):
            bd = run_sweep(raw_z, "D", [d], n_paths=n_paths, seed=seed,
                           batch_cache=cache)[0]
            lines.append(_row([z, d], bd))
    return "\n".join(lines) + "\n"
