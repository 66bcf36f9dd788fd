"""The two-classifier HelpNeed model: training, dispatching prediction, persistence."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .features import FeatureVector, feature_schema
from .forest import TreeEnsemble, TreeParams, train_ensemble

MODEL_VERSION = 1

STATE_BASED = "state_based"
STATE_FREE = "state_free"


@dataclass(frozen=True)
class LabeledExample:
    features: FeatureVector
    label: int  # 1 = the upcoming step needs help
    student: str
    problem: str
    step_index: int = 0


@dataclass(frozen=True)
class Prediction:
    helpneed: bool
    score: float
    classifier_used: str


@dataclass
class HelpNeedModel:
    state_based: TreeEnsemble
    state_free: TreeEnsemble
    schema: dict
    class1_weight: float
    threshold: float
    t75_table: dict[str, float]
    metadata: dict

    def to_dict(self) -> dict:
        return {
            "version": MODEL_VERSION,
            "state_based": self.state_based.to_dict(),
            "state_free": self.state_free.to_dict(),
            "schema": self.schema,
            "class1_weight": self.class1_weight,
            "threshold": self.threshold,
            "t75_table": self.t75_table,
            "metadata": self.metadata,
        }

    @staticmethod
    def from_dict(data: dict) -> "HelpNeedModel":
        if data.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {data.get('version')!r}")
        return HelpNeedModel(
            state_based=TreeEnsemble.from_dict(data["state_based"]),
            state_free=TreeEnsemble.from_dict(data["state_free"]),
            schema=data["schema"],
            class1_weight=data["class1_weight"],
            threshold=data["threshold"],
            t75_table=dict(data["t75_table"]),
            metadata=dict(data["metadata"]),
        )


def save_model(model: HelpNeedModel, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh, sort_keys=True, separators=(",", ":"))


def load_model(path: str) -> HelpNeedModel:
    with open(path, encoding="utf-8") as fh:
        return HelpNeedModel.from_dict(json.load(fh))


def _matrix(examples: list[LabeledExample], combined: bool) -> tuple[np.ndarray, np.ndarray]:
    if combined:
        X = np.stack([ex.features.combined() for ex in examples])
    else:
        X = np.stack([ex.features.state_free for ex in examples])
    y = np.array([ex.label for ex in examples], dtype=np.int8)
    return X, y


def train(
    dataset: list[LabeledExample],
    params: TreeParams | None = None,
    t75_table: dict[str, float] | None = None,
    threshold: float = 0.5,
    metadata: dict | None = None,
) -> HelpNeedModel:
    """Fits both classifiers on the same corpus split.

    The state-based ensemble trains on matched rows using the full feature
    set; the state-free ensemble trains on every row using only the
    history block. Raises ValueError when either training set is single-class.
    """
    params = params or TreeParams()
    if not dataset:
        raise ValueError("empty training dataset")
    matched = [ex for ex in dataset if ex.features.matched]
    if not matched:
        raise ValueError("no state-matched rows to train the state-based classifier")
    Xb, yb = _matrix(matched, combined=True)
    Xf, yf = _matrix(dataset, combined=False)
    state_based = train_ensemble(Xb, yb, params)
    state_free = train_ensemble(Xf, yf, params)
    meta = dict(metadata or {})
    meta.setdefault("seed", params.seed)
    meta.setdefault("n_examples", len(dataset))
    meta.setdefault("n_matched", len(matched))
    return HelpNeedModel(
        state_based=state_based,
        state_free=state_free,
        schema=feature_schema(),
        class1_weight=params.class_weights[1],
        threshold=threshold,
        t75_table=dict(t75_table or {}),
        metadata=meta,
    )


def predict(model: HelpNeedModel, features: FeatureVector) -> Prediction:
    """Dispatches to the state-based classifier iff the six-feature block is present."""
    if features.state_free.shape[0] != len(model.schema["state_free"]):
        raise ValueError("feature vector does not match the model schema")
    if features.matched:
        score = model.state_based.predict_score(features.combined())
        used = STATE_BASED
    else:
        score = model.state_free.predict_score(features.state_free)
        used = STATE_FREE
    return Prediction(helpneed=score >= model.threshold, score=score, classifier_used=used)
