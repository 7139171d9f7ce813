import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from cimbo.design_space import (
    DesignPoint,
    DesignSpace,
    LayerSpec,
    ParameterSpec,
    ValidationError,
    cardinality,
    decode,
    encode,
    enumerate_points,
    grid_space,
    sample_uniform,
    snap,
    uniform_point,
)
from cimbo.presets import vgg8_space, vgg16_space

from oracles import count_by_enumeration


def one_slot(levels):
    return DesignSpace((), (ParameterSpec("p", "global", tuple(levels)),))


@st.composite
def small_spaces(draw):
    n_layers = draw(st.integers(0, 3))
    layers = tuple(LayerSpec(f"l{i}", "linear", 4, 4) for i in range(n_layers))
    params = []
    for k in range(draw(st.integers(1, 3))):
        scope = draw(st.sampled_from(["global", "per-layer"])) if n_layers else "global"
        n = draw(st.integers(1, 5))
        start = draw(st.integers(0, 10))
        params.append(ParameterSpec(f"p{k}", scope, tuple(range(start, start + 2 * n, 2))))
    return DesignSpace(layers, tuple(params))


@st.composite
def space_and_point(draw):
    space = draw(small_spaces())
    idx = tuple(draw(st.integers(0, int(n) - 1)) for n in space.n_levels)
    return space, DesignPoint(idx)


class TestEncodeDecode:
    @pytest.mark.parametrize("levels,index,coord", [((3, 4, 5), 2, 1.0), ((3, 4, 5), 1, 0.5), ((4, 5), 0, 0.0)])
    def test_encode_examples(self, levels, index, coord):
        assert encode(DesignPoint((index,)), one_slot(levels))[0] == coord

    @pytest.mark.parametrize("coord,index", [(0.49, 1), (0.75, 2), (0.25, 1), (-0.2, 0), (1.7, 2)])
    def test_decode_examples(self, coord, index):
        space = one_slot((3, 4, 5))
        assert decode([coord], space).indices == (index,)

    def test_single_level_slot_pins_to_zero(self):
        space = one_slot((7,))
        assert encode(DesignPoint((0,)), space)[0] == 0.0
        assert decode([0.9], space).indices == (0,)

    @given(space_and_point())
    def test_roundtrip(self, sp):
        space, p = sp
        x = encode(p, space)
        assert np.all((x >= 0) & (x <= 1))
        assert decode(x, space) == p

    @given(small_spaces(), st.data())
    def test_decode_idempotent(self, space, data):
        v = data.draw(st.lists(st.floats(-2, 3), min_size=space.dimension, max_size=space.dimension))
        p = decode(v, space)
        assert decode(encode(p, space), space) == p
        assert np.array_equal(snap(np.array(v), space), encode(p, space))

    def test_exhaustive_roundtrip_small(self):
        space = DesignSpace((LayerSpec("a", "conv", 9, 4, 4), LayerSpec("b", "linear", 4, 2)),
                            (ParameterSpec("W", "per-layer", (1, 2, 3)), ParameterSpec("G", "global", (4, 8))))
        for p in enumerate_points(space):
            assert decode(encode(p, space), space) == p

    def test_rejects_bad_inputs(self):
        space = one_slot((3, 4, 5))
        with pytest.raises(ValidationError):
            encode(DesignPoint((3,)), space)
        with pytest.raises(ValidationError):
            encode(DesignPoint((0, 0)), space)
        with pytest.raises(ValidationError):
            decode([float("nan")], space)
        with pytest.raises(ValidationError):
            decode([0.1, 0.2], space)


class TestDeclarations:
    @pytest.mark.parametrize("levels", [(), (3, 3), (5, 4)])
    def test_bad_levels(self, levels):
        with pytest.raises(ValidationError):
            ParameterSpec("p", "global", levels)

    def test_bad_scope_and_layer(self):
        with pytest.raises(ValidationError):
            ParameterSpec("p", "sometimes", (1,))
        with pytest.raises(ValidationError):
            LayerSpec("l", "linear", 0, 4)
        with pytest.raises(ValidationError):
            LayerSpec("l", "linear", 4, 4, sensitivity=-1.0)

    def test_duplicate_params(self):
        p = ParameterSpec("p", "global", (1, 2))
        with pytest.raises(ValidationError):
            DesignSpace((), (p, p))

    def test_preset_dimensions(self):
        assert vgg8_space().dimension == 26
        assert vgg16_space().dimension == 50
        assert vgg8_space().slot_names[:2] == ["WBP[conv1]", "WBP[conv2]"]
        assert vgg8_space().slot_names[-2:] == ["ABP", "CCM"]

    def test_values_groups_per_layer(self):
        space = vgg8_space()
        v = space.values(uniform_point(space, {"WBP": 4, "IBP": 3, "CSS": 128, "ABP": 5, "CCM": 16}))
        assert v["WBP"] == [4] * 8 and v["CSS"] == [128] * 8
        assert v["ABP"] == 5 and v["CCM"] == 16

    def test_uniform_point_errors(self):
        space = vgg8_space()
        with pytest.raises(ValidationError):
            uniform_point(space, {"WBP": 4})
        with pytest.raises(ValidationError):
            uniform_point(space, {"WBP": 9, "IBP": 3, "CSS": 128, "ABP": 5, "CCM": 16})


class TestCardinality:
    def test_vgg8(self):
        assert cardinality(vgg8_space()) == 3**24 * 2 * 3 == 1_694_577_218_886

    def test_vgg16(self):
        assert cardinality(vgg16_space()) == 4**32 * 3**16 * 6

    def test_degenerate(self):
        assert cardinality(one_slot((1,))) == 1

    @given(small_spaces())
    def test_matches_enumeration(self, space):
        counts = space.n_levels.tolist()
        assert cardinality(space) == count_by_enumeration(counts)
        assert cardinality(space) == sum(1 for _ in enumerate_points(space))


class TestSampling:
    def test_deterministic(self):
        assert sample_uniform(vgg8_space(), 10, 3) == sample_uniform(vgg8_space(), 10, 3)
        assert sample_uniform(vgg8_space(), 10, 3) != sample_uniform(vgg8_space(), 10, 4)

    def test_shape_and_validity(self):
        space = vgg8_space()
        pts = sample_uniform(space, 10, 0)
        assert len(pts) == 10
        for p in pts:
            assert len(p.indices) == 26
            encode(p, space)

    def test_uniform_frequencies(self):
        space = vgg8_space()
        idx = np.array([p.indices for p in sample_uniform(space, 100_000, 7)])
        pvalues = []
        for d, n in enumerate(space.n_levels):
            pvalues.append(stats.chisquare(np.bincount(idx[:, d], minlength=n)).pvalue)
        # two-sided 3-sigma level, corrected for testing every slot
        alpha = 2 * stats.norm.sf(3.0) / space.dimension
        assert min(pvalues) > alpha
        # and the per-slot p-values themselves look uniform
        assert stats.kstest(pvalues, "uniform").pvalue > 0.01

    def test_rejects_empty(self):
        with pytest.raises(ValidationError):
            sample_uniform(grid_space(2, 2), 0, 0)
