"""Supervised super-resolved demosaicking on snapshot mosaic exchange files."""

from .dataset import PatchDataset, build_dataset, parse_split_spec
from .evaluate import lpips_eval
from .export import export_predictions
from .model import ResUNet
from .train import Config, LossModule, TrainingDiverged, load_model, train

__version__ = "0.1.0"
