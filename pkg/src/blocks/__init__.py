"""Neural building blocks on top of the tensor engine."""

from .attention import MSAConfig, MultiHeadSelfAttention
from .convolution import ConvolutionModule
from .feedforward import MLP, LEFeedForward, SEBlock
from .layers import BatchNorm, Conv2d, DepthwiseConv1d, Dropout, LayerNorm, Linear, Module, ModuleList, Parameter

__all__ = [
    "MSAConfig",
    "MultiHeadSelfAttention",
    "ConvolutionModule",
    "MLP",
    "LEFeedForward",
    "SEBlock",
    "BatchNorm",
    "Conv2d",
    "DepthwiseConv1d",
    "Dropout",
    "LayerNorm",
    "Linear",
    "Module",
    "ModuleList",
    "Parameter",
]
