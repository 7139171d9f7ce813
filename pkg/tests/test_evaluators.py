import threading

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cimbo.design_space import DesignPoint, DesignSpace, LayerSpec, ParameterSpec, ValidationError, grid_space, sample_uniform
from cimbo.evaluators import (
    CIM_OBJECTIVES,
    CimCostModelParams,
    CimEvaluator,
    SyntheticEvaluator,
    evaluate_cim,
    expand_sweep,
    sweep_uniform,
)
from cimbo.presets import SWEEPS, vgg8_space


def single_layer(R, C, wbp=(1,), ibp=(1,), css=(256,), abp=(4,), ccm=(8,)):
    return DesignSpace(
        (LayerSpec("fc", "linear", R, C),),
        (
            ParameterSpec("WBP", "per-layer", wbp),
            ParameterSpec("IBP", "per-layer", ibp),
            ParameterSpec("CSS", "per-layer", css),
            ParameterSpec("ABP", "global", abp),
            ParameterSpec("CCM", "global", ccm),
        ),
    )


class TestCimModel:
    def test_exact_fit_utilization(self):
        space = single_layer(256, 256)
        y = evaluate_cim(DesignPoint((0,) * 5), space, CimCostModelParams())
        assert y[4] == 100.0

    def test_partial_utilization(self):
        space = single_layer(100, 100)
        y = evaluate_cim(DesignPoint((0,) * 5), space, CimCostModelParams())
        assert y[4] == pytest.approx(100 * 100 * 100 / 256**2)

    def test_hand_computed_design(self):
        space = single_layer(100, 100, ibp=(2,))
        y = evaluate_cim(DesignPoint((0,) * 5), space, CimCostModelParams())
        np.testing.assert_allclose(y, [89.9371875, 0.00733184, 2.6e-5, 4.596e-5, 100 * 1e4 / 65536], rtol=1e-12)

    def test_params_validation(self):
        with pytest.raises(ValidationError):
            CimCostModelParams(cell_area=0.0)
        with pytest.raises(ValidationError):
            CimCostModelParams(alpha_adc=-1.0)
        p = CimCostModelParams()
        assert p.adc_area(4) < p.adc_area(5) and p.adc_energy(4) < p.adc_energy(5) and p.adc_time(4) < p.adc_time(5)

    def test_missing_parameter(self):
        space = DesignSpace((LayerSpec("fc", "linear", 4, 4),), (ParameterSpec("WBP", "per-layer", (1, 2)),))
        with pytest.raises(ValidationError):
            CimEvaluator(space)

    @given(st.integers(0, 10_000))
    def test_ranges_and_determinism(self, seed):
        space = vgg8_space()
        ev = CimEvaluator(space)
        p = sample_uniform(space, 1, seed)[0]
        y = ev.evaluate(p)
        assert np.array_equal(y, ev.evaluate(p))
        assert 0 <= y[0] <= 97.0
        assert np.all(y[1:4] > 0)
        assert 0 < y[4] <= 100

    @given(st.integers(0, 10_000), st.integers(0, 23))
    def test_monotone_in_precision(self, seed, slot):
        space = vgg8_space()
        ev = CimEvaluator(space)
        idx = list(sample_uniform(space, 1, seed)[0].indices)
        idx[slot] = 0
        lo = ev.evaluate(DesignPoint(tuple(idx)))
        idx[slot] = 2
        hi = ev.evaluate(DesignPoint(tuple(idx)))
        if slot < 16:  # WBP and IBP slots
            assert hi[0] >= lo[0]
        if slot < 8:  # WBP: more columns
            assert np.all(hi[1:4] >= lo[1:4])

    @given(st.integers(0, 10_000))
    def test_monotone_in_adc_bits(self, seed):
        space = vgg8_space()
        ev = CimEvaluator(space)
        idx = list(sample_uniform(space, 1, seed)[0].indices)
        idx[24] = 0
        lo = ev.evaluate(DesignPoint(tuple(idx)))
        idx[24] = 1
        assert ev.evaluate(DesignPoint(tuple(idx)))[0] >= lo[0]

    def test_query_counter_thread_safe(self):
        space = vgg8_space()
        ev = CimEvaluator(space)
        pts = sample_uniform(space, 50, 0)
        threads = [threading.Thread(target=lambda: [ev.evaluate(p) for p in pts]) for _ in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert ev.query_count == 200

    def test_internal_sign(self):
        ev = CimEvaluator(vgg8_space())
        raw = np.array([90.0, 1.0, 2.0, 3.0, 95.0])
        assert ev.to_internal(raw).tolist() == [-90.0, 1.0, 2.0, 3.0, -95.0]
        assert np.array_equal(ev.to_raw(ev.to_internal(raw)), raw)
        assert ev.objective_names == CIM_OBJECTIVES


class TestSynthetic:
    def test_zdt1_corners(self):
        space = grid_space(5, 3)
        ev = SyntheticEvaluator(space, "zdt1")
        assert ev.evaluate(DesignPoint((0,) * 5)).tolist() == [0.0, 1.0]
        assert ev.evaluate(DesignPoint((2, 0, 0, 0, 0))).tolist() == [1.0, 0.0]

    @given(st.integers(2, 5), st.data())
    def test_dtlz2_front_on_sphere(self, m, data):
        space = grid_space(m + 3, 11)
        head = data.draw(st.lists(st.integers(0, 10), min_size=m - 1, max_size=m - 1))
        y = SyntheticEvaluator(space, "dtlz2", m).evaluate(DesignPoint((*head, *([5] * 4))))
        assert np.sum(y**2) == pytest.approx(1.0, abs=1e-12)

    def test_bad_setup(self):
        with pytest.raises(ValidationError):
            SyntheticEvaluator(grid_space(1, 3), "zdt1")
        with pytest.raises(ValidationError):
            SyntheticEvaluator(grid_space(4, 3), "dtlz9")
        with pytest.raises(ValidationError):
            SyntheticEvaluator(grid_space(2, 3), "dtlz2", 3)


class TestSweep:
    def test_wbp_row(self):
        space = vgg8_space()
        base = {"WBP": 5, "IBP": 5, "ABP": 5, "CSS": 256, "CCM": 8}
        rows = expand_sweep(base, [("WBP", [3, 4, 5])])
        assert [label for label, _ in rows] == ["WBP=3", "WBP=4", "WBP=5"]
        out = sweep_uniform(space, CimEvaluator(space), [a for _, a in rows])
        assert len(out) == 3
        acc = [y[0] for _, y in out]
        assert acc == sorted(acc)

    def test_ccm_does_not_move_accuracy(self):
        space = vgg8_space()
        base, _ = SWEEPS["vgg8"]
        out = sweep_uniform(space, CimEvaluator(space), [a for _, a in expand_sweep(base, [("CCM", [16, 8, 4])])])
        assert len({y[0] for _, y in out}) == 1
        # larger CCM: less area, more latency
        areas = [y[1] for _, y in out]
        lats = [y[2] for _, y in out]
        assert areas[0] < areas[1] < areas[2] and lats[0] > lats[1] > lats[2]

    def test_empty(self):
        space = vgg8_space()
        assert sweep_uniform(space, CimEvaluator(space), []) == []
        assert expand_sweep({"WBP": 5}, []) == []

    def test_unknown_parameter(self):
        with pytest.raises(ValidationError):
            expand_sweep({"WBP": 5}, [("IBP", [3])])
