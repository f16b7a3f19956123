"""Consumer-side harness for gridshape interchange files.

Loads dataset manifests and array files exactly as any downstream ML
pipeline would (plain ``np.load``, no gridshape import), validates them
against the manifest, and trains a toy CNN classifier on synthetic shape
categories to demonstrate that the descriptors are learnable.
"""

__version__ = "0.1.0"

from .dataset import DatasetView, load_dataset, npy_payload
from .model import SmallConvNet, adapt_first_layer
from .train import TrainResult, toy_train

__all__ = [
    "__version__",
    "DatasetView",
    "load_dataset",
    "npy_payload",
    "SmallConvNet",
    "adapt_first_layer",
    "TrainResult",
    "toy_train",
]
