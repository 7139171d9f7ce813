import dataclasses

import pytest
from hypothesis import given, strategies as st

from cimbo.config import ConfigError, emit, parse_config, parse_text, to_dict

MINIMAL = 'mode = "bo"\n'


def test_defaults():
    cfg = parse_text(MINIMAL)
    assert cfg.bo.beta == 2.0
    assert cfg.budget == 200 and cfg.baseline_budget == 200
    assert cfg.space.build().dimension == 26
    assert to_dict(cfg)["bo"]["beta"] == 2.0


def test_unknown_key_names_key_and_line():
    with pytest.raises(ConfigError) as err:
        parse_text('mode = "bo"\n\n[bo]\nn_init = 4\nbetaa = 3.0\n')
    assert "betaa" in str(err.value) and err.value.line == 5


@pytest.mark.parametrize(
    "text,needle",
    [
        ('mode = "bo"\n[bo.inner]\npopulation_size = 7\n', "population_size"),
        ('mode = "walk"\n', "mode"),
        ('seeds = []\n', "seeds"),
        ('mode = "compare"\n[baseline]\nbudget = 100\n', "equal budgets"),
        ('[space]\npreset = "grid"\n', "n_genes"),
        ('[evaluator]\nkind = "zdt7"\n', "zdt7"),
        ('[space]\npreset = "grid"\nn_genes = 1\nn_levels = 4\n[evaluator]\nkind = "zdt1"\n', "zdt1"),
        ('mode = "sweep"\n[space]\npreset = "grid"\nn_genes = 2\nn_levels = 3\n[evaluator]\nkind = "zdt1"\n', "sweep"),
        ('[evaluator.cim]\ncell_area = -1.0\n', "cell_area"),
        ('[bo]\nrng_seed = 3\n', "rng_seed"),
        ('mode = "hv"\n', "hv"),
        ('x = [\n', "syntax"),
    ],
)
def test_errors(text, needle):
    with pytest.raises(ConfigError) as err:
        parse_text(text)
    assert needle in str(err.value)
    assert err.value.line is not None


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "nope.toml")


def test_shipped_configs_roundtrip():
    from pathlib import Path

    paths = sorted((Path(__file__).parent.parent / "configs").glob("*.toml"))
    assert paths
    for p in paths:
        cfg = parse_config(p)
        assert parse_text(emit(cfg)) == cfg


@given(
    mode=st.sampled_from(["bo", "baseline", "compare"]),
    seeds=st.lists(st.integers(0, 99), min_size=1, max_size=4),
    n_init=st.integers(2, 12),
    beta=st.floats(0, 5),
    pop=st.sampled_from([4, 10, 20]),
    alpha=st.floats(0, 2),
)
def test_roundtrip_property(mode, seeds, n_init, beta, pop, alpha):
    gens = 3
    iters = pop * (gens + 1) - n_init if pop * (gens + 1) > n_init else pop * (gens + 2) - n_init
    text = (
        f'mode = "{mode}"\nseeds = {seeds}\n[bo]\nn_init = {n_init}\nn_iterations = {iters}\nbeta = {beta!r}\n'
        f"[baseline]\npopulation_size = {pop}\n[evaluator.cim]\nalpha_adc = {alpha!r}\n"
    )
    cfg = parse_text(text)
    again = parse_text(emit(cfg))
    assert again == cfg
    assert parse_text(emit(again)) == again


def test_custom_space_and_sweep():
    text = """
mode = "sweep"
[space]
preset = "custom"
[[space.layers]]
name = "a"
kind = "linear"
fan_in = 64
fan_out = 8
[[space.params]]
name = "WBP"
scope = "per-layer"
levels = [2, 4]
[[space.params]]
name = "IBP"
scope = "per-layer"
levels = [2, 4]
[[space.params]]
name = "CSS"
scope = "per-layer"
levels = [32, 64]
[[space.params]]
name = "ABP"
scope = "global"
levels = [4]
[[space.params]]
name = "CCM"
scope = "global"
levels = [4, 8]
[sweep.baseline]
WBP = 4
IBP = 4
CSS = 64
ABP = 4
CCM = 8
[[sweep.vary]]
param = "WBP"
values = [2, 4]
"""
    cfg = parse_text(text)
    assert cfg.space.build().dimension == 5
    base, vary = cfg.sweep.resolved(cfg.space.preset)
    assert base["CSS"] == 64 and vary == [("WBP", (2, 4))]
    assert parse_text(emit(cfg)) == cfg


def test_seed_override_keeps_rest():
    cfg = parse_text(MINIMAL)
    assert dataclasses.replace(cfg, seeds=(7,)).bo_for_seed(7).rng_seed == 7
