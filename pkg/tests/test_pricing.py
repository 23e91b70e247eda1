"""Pricing: coupon weights, leg assembly, conversion weights, full price."""

import dataclasses
import json
import math

import numpy as np
import pytest

from cococat.config import resolve_config
from cococat.loss import IntensityParams, IntensityTable
from cococat.pricing import (
    CSV_HEADER,
    PriceBreakdown,
    conversion_leg,
    coupon_leg,
    coupon_weights,
    floating_rate_note_price,
    power_rule_weight,
    price,
    redemption_leg,
    run_sweep,
)
from cococat.rates import zcb_price

from helpers import FROZEN, K8, NU05, NU1, canonical, small_burr, with_rule


class TestCouponWeights:
    def test_frozen_weights_one_year(self):
        cfg = small_burr(K8, T=1.0)
        w = coupon_weights(cfg)
        assert w.shape == (4,)
        for got, want in zip(w, FROZEN["W_T1"]):
            assert got == pytest.approx(want, rel=1e-10)

    def test_telescoping_identity(self):
        # sum w_i = 1 - P(0,T) + c*Delta*sum_i P(0,t_i) with an implied R0
        cfg = resolve_config(canonical())
        w = coupon_weights(cfg)
        dates = cfg.terms.coupon_dates()
        disc = zcb_price(cfg.r0, dates, cfg.rates)
        want = 1.0 - disc[-1] + cfg.terms.c * cfg.terms.Delta * disc.sum()
        assert w.sum() == pytest.approx(want, rel=1e-13)

    def test_zero_spread_reduces_to_discount_difference(self):
        raw = canonical()
        raw["contract"]["c"] = 0.0
        cfg = resolve_config(raw)
        total = coupon_weights(cfg).sum()
        p_T = zcb_price(cfg.r0, cfg.terms.T, cfg.rates)
        assert total == pytest.approx(1.0 - p_T, rel=1e-12)

    def test_par_identity(self):
        raw = canonical()
        raw["contract"]["c"] = 0.0
        cfg = resolve_config(raw)
        assert floating_rate_note_price(cfg) == pytest.approx(1.0, abs=1e-12)

    def test_spread_raises_frn_above_par(self):
        cfg = resolve_config(canonical())
        dates = cfg.terms.coupon_dates()
        disc = zcb_price(cfg.r0, dates, cfg.rates)
        want = 1.0 + cfg.terms.c * cfg.terms.Delta * disc.sum()
        assert floating_rate_note_price(cfg) == pytest.approx(want, rel=1e-13)


class TestLegs:
    def setup_method(self):
        self.cfg = small_burr(K8, T=1.0)
        self.w = coupon_weights(self.cfg)

    def test_coupon_leg_trivial_survival(self):
        n = self.w.shape[0]
        full, se = coupon_leg(self.cfg, np.ones(n))
        assert full == pytest.approx(float(self.w.sum()), rel=1e-15)
        assert se == 0.0
        zero, _ = coupon_leg(self.cfg, np.zeros(n))
        assert zero == 0.0

    def test_coupon_leg_se_propagation(self):
        n = self.w.shape[0]
        ses = np.full(n, 0.01)
        _, se = coupon_leg(self.cfg, np.ones(n), ses)
        assert se == pytest.approx(float(np.abs(self.w).sum()) * 0.01, rel=1e-14)

    def test_coupon_leg_shape_check(self):
        with pytest.raises(ValueError):
            coupon_leg(self.cfg, np.ones(3))

    def test_redemption_leg(self):
        p_T = float(zcb_price(self.cfg.r0, 1.0, self.cfg.rates))
        val, se = redemption_leg(self.cfg, 1.0)
        assert val == pytest.approx(p_T, rel=1e-15) and se == 0.0
        val, se = redemption_leg(self.cfg, 0.5, 0.1)
        assert val == pytest.approx(0.5 * p_T, rel=1e-15)
        assert se == pytest.approx(0.1 * p_T, rel=1e-15)
        with pytest.raises(ValueError):
            redemption_leg(self.cfg, 1.2)
        with pytest.raises(ValueError):
            redemption_leg(self.cfg, -0.1)


class TestPowerRuleWeight:
    def test_nu_one_is_the_discount_bond(self):
        cfg = small_burr(NU1, T=1.0)
        s = np.linspace(0.01, 1.0, 37)
        w = power_rule_weight(cfg, 1.0, s)
        assert np.array_equal(w, zcb_price(cfg.r0, s, cfg.rates))

    def test_nu_to_zero_limit_is_unit_weight(self):
        cfg = small_burr(NU05, T=1.0)
        s = np.linspace(0.1, 1.0, 7)
        w = power_rule_weight(cfg, 1e-9, s)
        assert np.all(np.abs(w - 1.0) < 1e-5)

    def test_positive_and_finite(self):
        cfg = small_burr(NU05, T=1.0)
        s = np.linspace(0.0, 1.0, 101)
        w = power_rule_weight(cfg, 0.5, s)
        assert np.all(np.isfinite(w)) and np.all(w > 0.0)
        assert w[0] == 1.0  # no time elapsed: no discounting, no drift

    def test_precomputed_table_matches(self):
        cfg = small_burr(NU05, T=1.0)
        table = IntensityTable(cfg.intensity, horizon=1.0)
        s = np.array([0.2, 0.9])
        assert np.array_equal(
            power_rule_weight(cfg, 0.5, s, table=table),
            power_rule_weight(cfg, 0.5, s),
        )


class TestPriceAssembly:
    def test_frn_limit_no_events(self):
        cfg = small_burr(K8, T=1.0, paths=200)
        quiet = dataclasses.replace(
            cfg, intensity=IntensityParams(0.0, 0.0, 0.0, 0.0, 0.0, 1.0))
        out = price(quiet)
        frn = floating_rate_note_price(quiet)
        assert out.V0 == pytest.approx(quiet.terms.Z * frn, rel=1e-14)
        assert out.I2 == 0.0
        assert out.se_total == 0.0
        assert out.metadata["mode"] == "monte_carlo"

    def test_infinite_threshold_closed_form(self):
        raw = with_rule(canonical(), K8)
        raw["contract"]["D"] = "inf"
        cfg = resolve_config(raw)
        out = price(cfg)
        assert out.metadata["mode"] == "closed_form"
        assert out.I2 == 0.0 and out.se_total == 0.0
        assert out.V0 == pytest.approx(
            cfg.terms.Z * floating_rate_note_price(cfg), rel=1e-14)

    def test_identity_and_determinism(self):
        cfg = small_burr(K8, T=1.0, paths=4000)
        a = price(cfg)
        b = price(cfg)
        assert a == b
        assert a.V0 == cfg.terms.Z * (a.I1 + a.I2 + a.I3)
        c = price(cfg, seed=cfg.mc.seed + 1)
        assert c != a

    def test_common_random_numbers_across_thresholds(self):
        cache = {}
        lo = price(small_burr(K8, T=1.0, D=1.3e10, paths=4000), batch_cache=cache)
        hi = price(small_burr(K8, T=1.0, D=2.5e11, paths=4000), batch_cache=cache)
        # one physical batch + one tilted batch, shared by both thresholds
        assert len(cache) == 2
        assert lo.V0 < hi.V0

    def test_threshold_monotonicity(self):
        cache = {}
        vals = [
            price(small_burr(K8, T=1.0, D=d, paths=8000), batch_cache=cache).V0
            for d in (1.3e10, 4.0e10, 2.5e11)
        ]
        assert vals[0] < vals[1] < vals[2]

    def test_nu_one_price_invariant_to_share_dynamics(self):
        base = small_burr(NU1, T=1.0, paths=4000)
        raw = with_rule(canonical(), NU1)
        raw["contract"]["T"] = 1.0
        raw["contract"]["D"] = 1.3e10
        raw["mc"]["paths"] = 4000
        raw["mc"]["seed"] = 777
        raw["market"]["sigma_S"] = 0.9
        raw["market"]["rho"] = 0.8
        raw["market"]["S0"] = 3.7
        moved = resolve_config(raw)
        assert price(moved) == price(base)

    def test_conversion_leg_zero_when_uncrossable(self):
        raw = with_rule(canonical(), K8)
        raw["contract"]["D"] = "inf"
        val, se = conversion_leg(resolve_config(raw))
        assert val == 0.0 and se == 0.0


class TestSweep:
    def test_sweep_values_and_reresolution(self):
        raw = with_rule(canonical(), K8)
        raw["contract"]["T"] = 1.0
        raw["mc"]["paths"] = 2000
        out = run_sweep(raw, "D", [1.3e10, 4.0e10])
        assert [b.metadata["D"] for b in out] == [1.3e10, 4.0e10]
        assert out[0].V0 < out[1].V0
        swept = run_sweep(raw, "sigma_r", [0.03, 0.05], n_paths=500)
        assert swept[0].metadata["config_hash"] != swept[1].metadata["config_hash"]
        assert swept[0].V0 != swept[1].V0


class TestSerialization:
    def _breakdown(self, d_value):
        return PriceBreakdown(
            V0=1.25, I1=0.5, I2=0.25, I3=0.5, se_I1=0.0, se_I2=0.01,
            se_I3=0.0, se_total=0.01,
            metadata={
                "config_hash": "ab" * 8, "rule": "constant_price",
                "D": d_value, "T": 5.0, "nu_or_K": 8.0, "seed": 7,
                "n_paths": 100, "substreams": 64, "mode": "monte_carlo",
            },
        )

    def test_csv_row(self):
        row = self._breakdown(1.3e10).csv_row()
        fields = row.split(",")
        assert len(fields) == len(CSV_HEADER.split(",")) == 12
        assert fields[0] == "ab" * 8
        assert float(fields[5]) == 1.25
        inf_row = self._breakdown(math.inf).csv_row()
        assert inf_row.split(",")[2] == "inf"

    def test_json(self):
        out = json.loads(self._breakdown(math.inf).to_json())
        assert out["V0"] == 1.25
        assert out["metadata"]["D"] == "inf"
        assert set(out) == {
            "V0", "I1", "I2", "I3", "se_I1", "se_I2", "se_I3", "se_total",
            "metadata",
        }

    def test_float_fields_round_trip(self):
        cfg = small_burr(K8, T=1.0, paths=500)
        out = price(cfg)
        fields = out.csv_row().split(",")
        assert float(fields[5]) == out.V0
        assert float(fields[9]) == out.se_total
