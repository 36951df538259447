"""Plate endpoint detection for synthetic battery X-ray images."""

import json

import numpy as np

from . import _core
from ._core import ConfigError, ContractError, DataError, DimensionError, IoError, NumericError

__all__ = [
    "Model", "sample_scene", "prompt_scene", "render", "make_labels", "scene_record",
    "evaluate", "detect_corners", "run_cli",
    "ConfigError", "ContractError", "DataError", "DimensionError", "IoError", "NumericError",
]


def _dump(obj):
    return obj if isinstance(obj, str) else json.dumps(obj or {})


def sample_scene(seed, render_config=None, forced=None):
    """Scene dict for `seed`; `forced` is a list of attribute names such as ["P"]."""
    return json.loads(_core.sample_scene(seed, _dump(render_config), forced))


def prompt_scene(seed=7, render_config=None):
    return json.loads(_core.prompt_scene(seed, _dump(render_config)))


def render(scene, render_config=None):
    """uint8 (H, W) image of a scene dict."""
    return _core.render(_dump(scene), _dump(render_config))


def make_labels(scene, strategy="ada:0.3", line_thickness=3):
    return _core.make_labels(_dump(scene), strategy, line_thickness)


def scene_record(scene, id):
    return json.loads(_core.scene_record(_dump(scene), id))


def evaluate(predictions, ground_truth, distance="euclidean"):
    """Metrics over records matched by id; unavailable metrics are None."""
    return json.loads(_core.evaluate([_dump(r) for r in predictions], [_dump(r) for r in ground_truth], distance))


def detect_corners(image, method="harris", **kwargs):
    return _core.detect_corners(np.asarray(image, dtype=np.uint8), method, **kwargs)


def run_cli(*args):
    """Runs the `pbd` command line in-process; returns (exit_code, stdout, stderr)."""
    return _core.run_cli([str(a) for a in args])


class Model:
    def __init__(self, config=None, _native=None):
        self._m = _native if _native is not None else _core.Model(_dump(config))

    @property
    def config(self):
        return json.loads(self._m.config)

    @property
    def num_parameters(self):
        return self._m.num_parameters

    def train(self, images, scenes, prompt, labels="ada:0.3", max_steps=None):
        """Returns the total loss of every step."""
        return self._m.train([np.asarray(i, dtype=np.uint8) for i in images], [_dump(s) for s in scenes],
                             np.asarray(prompt, dtype=np.uint8), labels, max_steps)

    def predict(self, image, prompt, id="image", threshold=0.5, min_area=2):
        return json.loads(self._m.predict(np.asarray(image, dtype=np.uint8), np.asarray(prompt, dtype=np.uint8),
                                          id, threshold, min_area))

    def save(self, path):
        self._m.save(str(path))

    @classmethod
    def load(cls, path):
        return cls(_native=_core.Model.load(str(path)))
