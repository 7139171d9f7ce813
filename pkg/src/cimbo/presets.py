"""VGG8 / VGG16 layer tables and the matching layer-wise design spaces."""

from __future__ import annotations

from cimbo.design_space import DesignSpace, LayerSpec, ParameterSpec


def _conv(name: str, c_in: int, c_out: int, side: int, k: int = 3) -> LayerSpec:
    return LayerSpec(name, "conv", c_in * k * k, c_out, side * side)


def _linear(name: str, n_in: int, n_out: int) -> LayerSpec:
    return LayerSpec(name, "linear", n_in, n_out, 1)


def vgg8_layers() -> tuple[LayerSpec, ...]:
    """VGG8 for 32x32 CIFAR-10 inputs: 6 conv + 2 linear."""
    return (
        _conv("conv1", 3, 128, 32),
        _conv("conv2", 128, 128, 32),
        _conv("conv3", 128, 256, 16),
        _conv("conv4", 256, 256, 16),
        _conv("conv5", 256, 512, 8),
        _conv("conv6", 512, 512, 8),
        _linear("fc1", 512 * 4 * 4, 1024),
        _linear("fc2", 1024, 10),
    )


def vgg16_layers() -> tuple[LayerSpec, ...]:
    """VGG16 for 64x64 Tiny-ImageNet-200 inputs: 13 conv + 3 linear."""
    plan = [
        (3, 64, 64), (64, 64, 64),
        (64, 128, 32), (128, 128, 32),
        (128, 256, 16), (256, 256, 16), (256, 256, 16),
        (256, 512, 8), (512, 512, 8), (512, 512, 8),
        (512, 512, 4), (512, 512, 4), (512, 512, 4),
    ]
    convs = tuple(_conv(f"conv{i + 1}", *row) for i, row in enumerate(plan))
    return convs + (
        _linear("fc1", 512 * 2 * 2, 4096),
        _linear("fc2", 4096, 4096),
        _linear("fc3", 4096, 200),
    )


def cim_params(wbp, ibp, abp, css=(64, 128, 256), ccm=(4, 8, 16)) -> tuple[ParameterSpec, ...]:
    return (
        ParameterSpec("WBP", "per-layer", tuple(wbp)),
        ParameterSpec("IBP", "per-layer", tuple(ibp)),
        ParameterSpec("CSS", "per-layer", tuple(css)),
        ParameterSpec("ABP", "global", tuple(abp)),
        ParameterSpec("CCM", "global", tuple(ccm)),
    )


def vgg8_space() -> DesignSpace:
    return DesignSpace(vgg8_layers(), cim_params(wbp=(3, 4, 5), ibp=(3, 4, 5), abp=(4, 5)))


def vgg16_space() -> DesignSpace:
    return DesignSpace(vgg16_layers(), cim_params(wbp=(5, 6, 7, 8), ibp=(5, 6, 7, 8), abp=(7, 8)))


PRESETS = {"vgg8": vgg8_space, "vgg16": vgg16_space}

# one-at-a-time uniform sweeps: (fixed baseline, [(parameter, values), ...])
SWEEPS = {
    "vgg8": (
        {"WBP": 5, "IBP": 5, "ABP": 5, "CSS": 256, "CCM": 8},
        [("WBP", [3, 4, 5]), ("IBP", [3, 4, 5]), ("ABP", [4, 5]), ("CSS", [256, 128, 64]), ("CCM", [16, 8, 4])],
    ),
    "vgg16": (
        {"WBP": 8, "IBP": 8, "ABP": 8, "CSS": 256, "CCM": 8},
        [("WBP", [5, 6, 7, 8]), ("IBP", [5, 6, 7, 8]), ("ABP", [7, 8]), ("CSS", [256, 128, 64]), ("CCM", [16, 8, 4])],
    ),
}
