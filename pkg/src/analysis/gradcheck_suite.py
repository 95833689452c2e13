"""
Gradient-check suite: every kernel and composite block checked against
float64 central differences on three seeded shapes, reported as one row
per unit (the worst shape wins).
"""

import logging
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..blocks import ConvolutionModule, LEFeedForward, MLP, SEBlock
from ..blocks.attention import MSAConfig, MultiHeadSelfAttention
from ..blocks.layers import Module
from ..head import AMSoftmaxLoss, AttentiveStatsPooling
from ..models.embedder import SpeakerEmbedder
from ..models.le_conformer import LEConformer, LEConformerBlock, LEConformerConfig, VGGSubsampler
from ..models.sst import PatchEmbed, PatchEmbedConfig, PatchMerge, SpeakerSwinTransformer, SSTConfig, window_attention
from ..tensor import Tensor, check_gradients
from ..tensor import functional as F

logger = logging.getLogger(__name__)

SCOPES = ("kernels", "blocks", "le_conformer", "sst", "head")
VARIANTS = 3
REPORT_COLUMNS = [
    "scope", "unit", "variants", "worst_variant", "worst_tensor", "max_error", "tolerance", "passed", "seconds",
]

Build = Callable[[int], Tuple[Callable[[], Tensor], Mapping[str, Tensor]]]


@dataclass(frozen=True)
class GradCheckCase:
    """
    One unit of the suite.

    `build(variant)` returns the function under test and the tensors to
    differentiate; variants 0..variants-1 use different seeded shapes.
    """

    scope: str
    name: str
    build: Build
    max_coords: Optional[int] = None
    tolerance: float = 1e-4
    variants: int = VARIANTS


REGISTRY: List[GradCheckCase] = []


def register(scope: str, name: str, max_coords: Optional[int] = None):
    """Decorator adding a build function to the suite."""

    def wrap(build: Build) -> Build:
        REGISTRY.append(GradCheckCase(scope, name, build, max_coords))
        return build

    return wrap


def _rng(seed: int = 0) -> np.random.Generator:
    return np.random.default_rng(seed)


def _t(array: np.ndarray) -> Tensor:
    return Tensor(array, dtype=np.float64)


def _normal(seed: int, shape: Tuple[int, ...]) -> Tensor:
    return _t(_rng(seed).standard_normal(shape))


def _module_case(module: Module, *inputs: Tensor) -> Tuple[Callable[[], Tensor], Dict[str, Tensor]]:
    module.to(np.float64).train()
    tensors = {f"input{i}": x for i, x in enumerate(inputs)}
    tensors.update(dict(module.named_parameters()))
    return (lambda: module(*inputs)), tensors


# ----------------------------------------------------------------------
# Kernels
# ----------------------------------------------------------------------
MATRIX_SHAPES = ((3, 4), (5, 2), (4, 6))


def _unary(name: str, op: Callable[[Tensor], Tensor], low: float = -2.0, high: float = 2.0) -> None:
    def build(variant: int):
        x = _t(_rng(variant).uniform(low, high, MATRIX_SHAPES[variant]))
        return (lambda: op(x)), {"x": x}

    register("kernels", name)(build)


for _name, _op in [
    ("relu", F.relu),
    ("sigmoid", F.sigmoid),
    ("swish", F.swish),
    ("tanh", F.tanh),
    ("gelu", F.gelu),
    ("exp", F.exp),
    ("neg", F.neg),
    ("glu", F.glu),
    ("softmax", lambda x: F.softmax(x, axis=-1)),
    ("l2_normalize", lambda x: F.l2_normalize(x, axis=-1)),
    ("clamp_min", lambda x: F.clamp_min(x, 0.1)),
    ("sum", lambda x: F.sum_(x, axis=0)),
    ("mean", lambda x: F.mean(x, axis=1, keepdims=True)),
    ("var", lambda x: F.var(x, axis=-1)),
    ("transpose", lambda x: F.transpose(x, (1, 0))),
    ("reshape", lambda x: F.reshape(x, (x.shape[1], x.shape[0]))),
    ("roll", lambda x: F.roll(x, (1, -2), (0, 1))),
    ("pad", lambda x: F.pad(x, ((1, 0), (0, 2)))),
    ("slice", lambda x: F.slice_(x, (slice(None), slice(1, None, 2)))),
    ("dropout", lambda x: F.dropout(x, 0.3, True, np.random.default_rng(5))),
]:
    _unary(_name, _op)

_unary("log", F.log, 0.5, 3.0)
_unary("sqrt", F.sqrt, 0.5, 3.0)


def _binary(name: str, op: Callable[[Tensor, Tensor], Tensor], shapes, positive_b: bool = False) -> None:
    def build(variant: int):
        shape_a, shape_b = shapes[variant]
        a = _normal(10 + variant, shape_a)
        b = _t(_rng(20 + variant).uniform(0.5, 2.0, shape_b)) if positive_b else _normal(20 + variant, shape_b)
        return (lambda: op(a, b)), {"a": a, "b": b}

    register("kernels", name)(build)


_binary("add_broadcast", lambda a, b: a + b, [((3, 4), (4,)), ((2, 3, 5), (3, 1)), ((4, 1), (1, 6))])
_binary("sub_broadcast", lambda a, b: a - b, [((3, 1), (3, 4)), ((5,), (2, 5)), ((2, 1, 3), (4, 1))])
_binary("mul_broadcast", lambda a, b: a * b, [((2, 3, 4), (3, 1)), ((4, 5), (5,)), ((1, 3), (2, 3))])
_binary("div", lambda a, b: a / b, [((3, 4), (3, 4)), ((5, 2), (2,)), ((2, 3, 2), (3, 1))], positive_b=True)
_binary("matmul_batched", lambda a, b: a @ b, [((2, 3, 4), (4, 5)), ((3, 2), (2, 4)), ((2, 3, 4), (2, 4, 2))])
_binary("concat", lambda a, b: F.concat([a, b], axis=1), [((2, 3), (2, 2)), ((3, 1, 2), (3, 4, 2)), ((1, 5), (1, 1))])


@register("kernels", "linear")
def _linear(variant: int):
    batch, steps, d_in, d_out = [(2, 3, 4, 5), (1, 6, 3, 2), (3, 2, 5, 4)][variant]
    x, w, b = _normal(variant, (batch, steps, d_in)), _normal(10 + variant, (d_in, d_out)), _normal(20 + variant, (d_out,))
    return (lambda: F.linear(x, w, b)), {"x": x, "weight": w, "bias": b}


@register("kernels", "masked_softmax")
def _masked_softmax(variant: int):
    shape = [(2, 4, 4), (1, 3, 5), (3, 2, 6)][variant]
    scores = _normal(variant, shape)
    mask = np.zeros(shape)
    mask[:, :, -1] = -np.inf
    mask[0, 1, 2] = -np.inf
    return (lambda: F.softmax(F.attention_bias(scores, mask), axis=-1)), {"scores": scores}


def _norm_params(variant: int, channels: int) -> Tuple[Tensor, Tensor]:
    return _t(_rng(10 + variant).uniform(0.5, 1.5, channels)), _normal(20 + variant, (channels,))


@register("kernels", "layer_norm")
def _layer_norm(variant: int):
    shape = [(3, 5), (2, 4, 6), (7, 3)][variant]
    x = _normal(variant, shape)
    g, b = _norm_params(variant, shape[-1])
    return (lambda: F.layer_norm(x, g, b)), {"x": x, "gamma": g, "beta": b}


@register("kernels", "batch_norm_train")
def _batch_norm(variant: int):
    shape = [(4, 3, 5), (6, 4), (2, 5, 3)][variant]
    x = _normal(variant, shape)
    g, b = _norm_params(variant, shape[-1])
    running_mean, running_var = np.zeros(shape[-1]), np.ones(shape[-1])
    return (lambda: F.batch_norm(x, g, b, running_mean, running_var, True)), {"x": x, "gamma": g, "beta": b}


@register("kernels", "batch_norm_eval")
def _batch_norm_eval(variant: int):
    shape = [(4, 5), (2, 3, 4), (5, 2)][variant]
    x = _normal(variant, shape)
    g, b = _norm_params(variant, shape[-1])
    running_mean, running_var = _rng(30 + variant).standard_normal(shape[-1]), _rng(40 + variant).uniform(0.5, 2.0, shape[-1])
    return (lambda: F.batch_norm(x, g, b, running_mean, running_var, False)), {"x": x, "gamma": g, "beta": b}


@register("kernels", "cross_entropy")
def _cross_entropy(variant: int):
    batch, classes = [(4, 6), (3, 2), (5, 7)][variant]
    logits = _t(_rng(variant).standard_normal((batch, classes)) * 3.0)
    labels = _rng(10 + variant).integers(0, classes, batch)
    return (lambda: F.cross_entropy(logits, labels)), {"logits": logits}


@register("kernels", "gather")
def _gather(variant: int):
    rows, cols, index_shape = [(5, 3, (2, 3)), (4, 2, (6,)), (3, 4, (2, 2, 2))][variant]
    table = _normal(variant, (rows, cols))
    index = _rng(10 + variant).integers(0, rows, index_shape)
    return (lambda: F.gather(table, index)), {"table": table}


@register("kernels", "take_along_last")
def _take_along_last(variant: int):
    shape, width = [((2, 4, 7), 4), ((3, 5), 2), ((2, 1, 3, 6), 5)][variant]
    x = _normal(variant, shape)
    index = _rng(10 + variant).integers(0, shape[-1], (shape[-2], width))
    return (lambda: F.take_along_last(x, index)), {"x": x}


@register("kernels", "depthwise_conv1d")
def _depthwise(variant: int):
    batch, steps, channels, kernel = [(2, 6, 3, 3), (1, 9, 4, 5), (3, 4, 2, 3)][variant]
    x = _normal(variant, (batch, steps, channels))
    w, b = _normal(10 + variant, (channels, kernel)), _normal(20 + variant, (channels,))
    return (lambda: F.depthwise_conv1d(x, w, b)), {"x": x, "weight": w, "bias": b}


@register("kernels", "conv2d_strided")
def _conv2d(variant: int):
    x_shape, w_shape, stride, padding = [
        ((2, 2, 7, 6), (3, 2, 3, 3), 2, 1),
        ((1, 1, 6, 5), (2, 1, 3, 3), 1, 1),
        ((1, 3, 8, 8), (2, 3, 3, 3), 2, 0),
    ][variant]
    x, w, b = _normal(variant, x_shape), _normal(10 + variant, w_shape), _normal(20 + variant, (w_shape[0],))
    return (lambda: F.conv2d(x, w, b, stride=stride, padding=padding)), {"x": x, "weight": w, "bias": b}


@register("kernels", "max_pool2x2")
def _max_pool(variant: int):
    x = _normal(variant, [(2, 2, 5, 4), (1, 3, 4, 6), (2, 1, 7, 3)][variant])
    return (lambda: F.max_pool2x2(x)), {"x": x}


# ----------------------------------------------------------------------
# Blocks
# ----------------------------------------------------------------------
@register("blocks", "le_ffn")
def _le_ffn(variant: int):
    dim, batch, steps = [(8, 2, 5), (4, 1, 7), (12, 3, 3)][variant]
    ffn = LEFeedForward(dim, 2 * dim, se_reduction=4, rng=_rng(1 + variant))
    return _module_case(ffn, _normal(variant, (batch, steps, dim)))


@register("blocks", "se_block")
def _se_block(variant: int):
    channels, batch, steps = [(8, 2, 5), (4, 3, 2), (12, 1, 6)][variant]
    return _module_case(SEBlock(channels, 4, rng=_rng(1 + variant)), _normal(variant, (batch, steps, channels)))


@register("blocks", "conv_module")
def _conv_module(variant: int):
    dim, kernel, batch, steps = [(6, 3, 2, 5), (4, 5, 3, 6), (8, 3, 2, 4)][variant]
    module = ConvolutionModule(dim, kernel, rng=_rng(1 + variant))
    return _module_case(module, _normal(variant, (batch, steps, dim)))


@register("blocks", "msa_conformer_rel")
def _msa_rel(variant: int):
    dim, heads, batch, steps = [(8, 2, 2, 5), (6, 3, 1, 3), (4, 1, 2, 6)][variant]
    attn = MultiHeadSelfAttention(MSAConfig(dim, heads, "conformer_rel"), rng=_rng(1 + variant))
    return _module_case(attn, _normal(variant, (batch, steps, dim)))


@register("blocks", "mlp")
def _mlp(variant: int):
    dim, batch, steps = [(4, 2, 3), (6, 1, 4), (2, 3, 2)][variant]
    return _module_case(MLP(dim, 2 * dim, rng=_rng(1 + variant)), _normal(variant, (batch, steps, dim)))


WINDOW_GRIDS = [((1, 5, 7, 4), 3), ((1, 4, 4, 4), 2), ((2, 6, 5, 4), 3)]


def _window_case(variant: int, shifted: bool):
    shape, window = WINDOW_GRIDS[variant]
    attn = MultiHeadSelfAttention(MSAConfig(shape[-1], 2, "window_bias", window), rng=_rng(1 + variant))
    x = _normal(variant, shape)
    _, tensors = _module_case(attn, x)
    shift = window // 2 if shifted else 0
    return (lambda: window_attention(x, attn, window, shift)), tensors


@register("blocks", "lw_msa")
def _lw_msa(variant: int):
    return _window_case(variant, shifted=False)


@register("blocks", "slw_msa")
def _slw_msa(variant: int):
    return _window_case(variant, shifted=True)


@register("blocks", "patch_merge")
def _patch_merge(variant: int):
    shape = [(2, 5, 3, 3), (1, 4, 4, 2), (1, 3, 5, 4)][variant]
    return _module_case(PatchMerge(shape[-1], rng=_rng(1 + variant)), _normal(variant, shape))


@register("blocks", "patch_embed")
def _patch_embed(variant: int):
    embed = PatchEmbed(PatchEmbedConfig(patch=3, stride=2, channels=4), rng=_rng(1 + variant))
    return _module_case(embed, _normal(variant, [(2, 8, 7), (1, 9, 6), (2, 6, 8)][variant]))


# ----------------------------------------------------------------------
# Models
# ----------------------------------------------------------------------
def _tiny_le(**overrides) -> LEConformerConfig:
    base = dict(
        n_mels=12, blocks=2, heads=2, model_dim=8, conv_kernel=3, ffn_hidden=16,
        ffn_kernel=3, se_reduction=4, vgg_channels=(2, 2),
    )
    base.update(overrides)
    return LEConformerConfig(**base)


def _tiny_sst(**overrides) -> SSTConfig:
    base = dict(
        n_mels=10, chunk_frames=12, patch=3, stride=2, embed_dim=4, window=2,
        depths=(2, 2), heads=(1, 2), mlp_ratio=2,
    )
    base.update(overrides)
    return SSTConfig(**base)


LE_INPUTS = [(2, 12, 12), (1, 16, 12), (2, 9, 12)]
SST_INPUTS = [(1, 12, 10), (1, 24, 10), (2, 12, 10)]


@register("le_conformer", "vgg_subsampler")
def _vgg(variant: int):
    n_mels, shape = [(12, (2, 9, 12)), (8, (1, 8, 8)), (10, (2, 13, 10))][variant]
    return _module_case(VGGSubsampler(n_mels, (2, 2), 8, rng=_rng(1 + variant)), _normal(variant, shape))


@register("le_conformer", "le_conformer_block")
def _le_block(variant: int):
    shape = [(2, 5, 8), (1, 7, 8), (3, 3, 8)][variant]
    return _module_case(LEConformerBlock(_tiny_le(), rng=_rng(1 + variant)), _normal(variant, shape))


@register("le_conformer", "le_conformer_concat")
def _le_concat(variant: int):
    return _module_case(LEConformer(_tiny_le(), seed=1 + variant), _normal(variant, LE_INPUTS[variant]))


@register("le_conformer", "le_conformer_weighted_avg")
def _le_weighted(variant: int):
    model = LEConformer(_tiny_le(aggregation="weighted_avg"), seed=1 + variant)
    return _module_case(model, _normal(variant, LE_INPUTS[variant]))


@register("sst", "swin_transformer_fold")
def _sst_fold(variant: int):
    model = SpeakerSwinTransformer(_tiny_sst(), seed=1 + variant)
    return _module_case(model, _normal(variant, SST_INPUTS[variant]))


@register("sst", "swin_transformer_non_ope")
def _sst_non_ope(variant: int):
    cfg = _tiny_sst(patch=2, stride=2, patch_mode="non_overlapping", freq_reduction="mean")
    return _module_case(SpeakerSwinTransformer(cfg, seed=1 + variant), _normal(variant, SST_INPUTS[variant]))


@register("head", "asp")
def _asp(variant: int):
    dim, bottleneck, batch, steps = [(6, 4, 2, 7), (4, 2, 1, 5), (8, 3, 3, 4)][variant]
    pooling = AttentiveStatsPooling(dim, bottleneck, rng=_rng(1 + variant))
    return _module_case(pooling, _normal(variant, (batch, steps, dim)))


@register("head", "am_softmax")
def _am_softmax(variant: int):
    dim, classes, batch = [(6, 5, 4), (4, 3, 3), (8, 6, 5)][variant]
    loss = AMSoftmaxLoss(dim, classes, margin=0.2, scale=30.0, rng=_rng(1 + variant))
    embeddings = _normal(variant, (batch, dim))
    labels = _rng(10 + variant).integers(0, classes, batch)
    _, tensors = _module_case(loss, embeddings)
    return (lambda: loss(embeddings, labels)), tensors


@register("head", "embedder_head")
def _embedder(variant: int):
    encoder = LEConformer(_tiny_le(blocks=1), seed=1 + variant)
    embedder = SpeakerEmbedder(encoder, embedding_dim=4, bottleneck=4, seed=1 + variant)
    return _module_case(embedder, _normal(variant, [(2, 8, 12), (1, 12, 12), (3, 5, 12)][variant]))


# ----------------------------------------------------------------------
# Driver
# ----------------------------------------------------------------------
def select_cases(scope: str, cases: Optional[Sequence[GradCheckCase]] = None) -> List[GradCheckCase]:
    if scope != "all" and scope not in SCOPES:
        raise ValueError(f"scope must be one of {SCOPES + ('all',)}, got {scope!r}")
    cases = REGISTRY if cases is None else cases
    return [case for case in cases if scope == "all" or case.scope == scope]


def run_case(case: GradCheckCase) -> dict:
    """Check every variant of `case`; the row reports the worst one."""
    start = time.perf_counter()
    worst_error, worst_variant, worst_tensor = -1.0, 0, ""
    for variant in range(case.variants):
        fn, tensors = case.build(variant)
        result = check_gradients(
            fn, tensors, name=f"{case.name}[{variant}]", tolerance=case.tolerance, max_coords=case.max_coords
        )
        error = result.max_error if np.isfinite(result.max_error) else np.inf
        if error > worst_error:
            worst_error, worst_variant = error, variant
            worst_tensor = max(result.errors, key=result.errors.get) if result.errors else ""
    return {
        "scope": case.scope,
        "unit": case.name,
        "variants": case.variants,
        "worst_variant": worst_variant,
        "worst_tensor": worst_tensor,
        "max_error": worst_error,
        "tolerance": case.tolerance,
        "passed": bool(worst_error < case.tolerance),
        "seconds": time.perf_counter() - start,
    }


def run_gradcheck(scope: str = "all", cases: Optional[Sequence[GradCheckCase]] = None) -> pd.DataFrame:
    """
    Run every registered check in `scope`.

    Failures are report rows, never exceptions.
    """
    rows = []
    for case in select_cases(scope, cases):
        row = run_case(case)
        level = logging.INFO if row["passed"] else logging.WARNING
        logger.log(level, "%-28s max rel error %.2e %s", case.name, row["max_error"], "ok" if row["passed"] else "FAIL")
        rows.append(row)
    return pd.DataFrame(rows, columns=REPORT_COLUMNS)


def main():
    report = run_gradcheck("kernels")
    print(report.to_string(index=False))
    print(f"\n{int(report['passed'].sum())}/{len(report)} checks passed")


if __name__ == "__main__":
    main()
