"""Semi-supervised symbol grounding through a frozen DeepDFA."""
from .dataset import (
    DegenerateFormula, GlyphDataset, GlyphRenderer, RenderConfig, Split, load_dataset,
    sample_class, save_dataset, synthesize_dataset,
)
from .mnist import IdxFormatError, PoolRenderer, SourceUnavailable, load_mnist_idx, mnist_renderer
from .model import Grounder, NonFiniteLoss, SsgModel, TrainConfig, evaluate, train

__all__ = [
    "DegenerateFormula", "GlyphDataset", "GlyphRenderer", "RenderConfig", "Split", "load_dataset",
    "sample_class", "save_dataset", "synthesize_dataset", "IdxFormatError", "PoolRenderer",
    "SourceUnavailable", "load_mnist_idx", "mnist_renderer", "Grounder", "NonFiniteLoss",
    "SsgModel", "TrainConfig", "evaluate", "train",
]
