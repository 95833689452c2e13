"""LocalSV: locality-enhanced Transformer speaker embeddings on a numpy autodiff core."""

__version__ = "0.1.0"
