"""Classifier evaluation: recall/AUC/confusion rates, student-level folds,
3-fold CV and holdout protocols with a per-classifier breakdown."""
from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np

from .forest import TreeParams
from .model import STATE_BASED, STATE_FREE, HelpNeedModel, LabeledExample, train


def recall(tp: int, fn: int) -> float:
    if tp + fn == 0:
        return float("nan")
    return tp / (tp + fn)


def auc_score(scores: list[float] | np.ndarray, labels: list[int] | np.ndarray) -> float:
    """Rank-statistic AUC with tie-averaged ranks (Mann-Whitney form)."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=int)
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        return float("nan")
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(len(scores))
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j < len(scores) and sorted_scores[j] == sorted_scores[i]:
            j += 1
        ranks[order[i:j]] = (i + j + 1) / 2.0  # average of 1-based ranks i+1..j
        i = j
    rank_sum_pos = float(ranks[labels == 1].sum())
    return (rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


@dataclass
class ConfusionRates:
    recall: float
    auc: float
    fn_rate: float  # mean per-student fraction of steps with a false negative
    fp_rate: float
    n: int

    def to_dict(self) -> dict:
        return {
            "recall": self.recall,
            "auc": self.auc,
            "fn_rate": self.fn_rate,
            "fp_rate": self.fp_rate,
            "n": self.n,
        }


def confusion_rates(
    scores: list[float],
    labels: list[int],
    students: list[str],
    threshold: float = 0.5,
) -> ConfusionRates:
    scores_a = np.asarray(scores, dtype=float)
    labels_a = np.asarray(labels, dtype=int)
    predictions = scores_a >= threshold
    tp = int(((predictions == 1) & (labels_a == 1)).sum())
    fn = int(((predictions == 0) & (labels_a == 1)).sum())
    per_student_fn: dict[str, list[int]] = {}
    per_student_fp: dict[str, list[int]] = {}
    for student, pred, label in zip(students, predictions, labels_a):
        per_student_fn.setdefault(student, []).append(int(pred == 0 and label == 1))
        per_student_fp.setdefault(student, []).append(int(pred == 1 and label == 0))
    fn_rate = float(np.mean([np.mean(v) for v in per_student_fn.values()])) if per_student_fn else float("nan")
    fp_rate = float(np.mean([np.mean(v) for v in per_student_fp.values()])) if per_student_fp else float("nan")
    return ConfusionRates(
        recall=recall(tp, fn),
        auc=auc_score(scores_a, labels_a),
        fn_rate=fn_rate,
        fp_rate=fp_rate,
        n=len(labels),
    )


def split_students(students: list[str], k: int, seed: int) -> list[list[str]]:
    """Deterministic student-level folds: no student appears in two folds."""
    unique = sorted(set(students))
    rng = random.Random(seed)
    rng.shuffle(unique)
    folds: list[list[str]] = [[] for _ in range(k)]
    for i, student in enumerate(unique):
        folds[i % k].append(student)
    return folds


def _score_examples(model: HelpNeedModel, examples: list[LabeledExample], dispatch: str):
    """Scores under one routing: state_based (matched rows only), state_free
    (all rows), or dispatched (runtime routing)."""
    scores, labels, students = [], [], []
    for ex in examples:
        if dispatch == STATE_BASED:
            if not ex.features.matched:
                continue
            score = model.state_based.predict_score(ex.features.combined())
        elif dispatch == STATE_FREE:
            score = model.state_free.predict_score(ex.features.state_free)
        else:  # dispatched
            if ex.features.matched:
                score = model.state_based.predict_score(ex.features.combined())
            else:
                score = model.state_free.predict_score(ex.features.state_free)
        scores.append(score)
        labels.append(ex.label)
        students.append(ex.student)
    return scores, labels, students


@dataclass
class EvaluationRow:
    protocol: str
    fold: str
    classifier: str
    rates: ConfusionRates

    def to_dict(self) -> dict:
        return {"protocol": self.protocol, "fold": self.fold, "classifier": self.classifier,
                **self.rates.to_dict()}


@dataclass
class EvaluationReport:
    rows: list[EvaluationRow] = field(default_factory=list)
    skipped_folds: list[str] = field(default_factory=list)

    def mean_row(self, protocol: str, classifier: str) -> ConfusionRates | None:
        rows = [r for r in self.rows if r.protocol == protocol and r.classifier == classifier
                and r.fold != "mean"]
        if not rows:
            return None
        return ConfusionRates(
            recall=float(np.nanmean([r.rates.recall for r in rows])),
            auc=float(np.nanmean([r.rates.auc for r in rows])),
            fn_rate=float(np.nanmean([r.rates.fn_rate for r in rows])),
            fp_rate=float(np.nanmean([r.rates.fp_rate for r in rows])),
            n=sum(r.rates.n for r in rows),
        )

    def to_table(self) -> str:
        header = f"{'protocol':<10} {'fold':<6} {'classifier':<12} {'recall':>7} {'auc':>7} {'fn_rate':>8} {'fp_rate':>8} {'n':>6}"
        lines = [header, "-" * len(header)]
        for r in self.rows:
            c = r.rates
            lines.append(
                f"{r.protocol:<10} {r.fold:<6} {r.classifier:<12} "
                f"{c.recall:>7.3f} {c.auc:>7.3f} {c.fn_rate:>8.3f} {c.fp_rate:>8.3f} {c.n:>6d}"
            )
        for note in self.skipped_folds:
            lines.append(f"# skipped: {note}")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {"rows": [r.to_dict() for r in self.rows], "skipped_folds": self.skipped_folds}


CLASSIFIER_VIEWS = (STATE_BASED, STATE_FREE, "dispatched")


def evaluate_kfold(
    dataset: list[LabeledExample],
    params: TreeParams,
    k: int = 3,
    seed: int = 0,
    threshold: float = 0.5,
) -> EvaluationReport:
    """k-fold CV with folds split by student; single-class folds are skipped
    and reported."""
    report = EvaluationReport()
    folds = split_students([ex.student for ex in dataset], k, seed)
    for i, held_out in enumerate(folds):
        held = set(held_out)
        test = [ex for ex in dataset if ex.student in held]
        train_set = [ex for ex in dataset if ex.student not in held]
        test_labels = {ex.label for ex in test}
        train_labels = {ex.label for ex in train_set}
        if len(test_labels) < 2 or len(train_labels) < 2:
            report.skipped_folds.append(f"fold {i}: single-class data")
            continue
        try:
            model = train(train_set, params, threshold=threshold)
        except ValueError as exc:
            report.skipped_folds.append(f"fold {i}: {exc}")
            continue
        for view in CLASSIFIER_VIEWS:
            scores, labels, students = _score_examples(model, test, view)
            if scores and len(set(labels)) == 2:
                report.rows.append(
                    EvaluationRow(f"cv{k}", f"f{i}", view,
                                  confusion_rates(scores, labels, students, threshold))
                )
            else:
                report.skipped_folds.append(f"fold {i} ({view}): single-class or empty")
    for view in CLASSIFIER_VIEWS:
        mean = report.mean_row(f"cv{k}", view)
        if mean is not None:
            report.rows.append(EvaluationRow(f"cv{k}", "mean", view, mean))
    return report


def evaluate_holdout(
    model: HelpNeedModel,
    test_set: list[LabeledExample],
    threshold: float | None = None,
) -> EvaluationReport:
    """Evaluates a trained model on a held-out labeled dataset."""
    threshold = model.threshold if threshold is None else threshold
    report = EvaluationReport()
    for view in CLASSIFIER_VIEWS:
        scores, labels, students = _score_examples(model, test_set, view)
        if scores and len(set(labels)) == 2:
            report.rows.append(
                EvaluationRow("holdout", "all", view,
                              confusion_rates(scores, labels, students, threshold))
            )
        else:
            report.skipped_folds.append(f"holdout ({view}): single-class or empty")
    return report
