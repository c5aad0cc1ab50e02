"""Learn part-based stroke models from sketches and draw new sketches from edge maps."""

from .core import (
    Sketch, Stroke, cut_stroke, flip_horizontal, load_sketch, resample_stroke, save_sketch,
    sketch_to_svg, stroke_length,
)
from .errors import DetectionInfeasibleError, InvalidArgumentError, InvalidModelError
from .grouping import GroupingParams, SemanticGroup, group_sketch
from .inference import Configuration, InferenceParams, detect, label_strokes
from .learning import LearningParams, learn_model
from .matching import build_odf, chamfer_cost, fdcm_candidates, mhd, sc_cost, shape_context
from .model import DeformableStrokeModel, load_model, save_model
from .synthesis import synthesize
from .training import TrainingParams, count_variance, train_iterative

__version__ = "0.1.0"
