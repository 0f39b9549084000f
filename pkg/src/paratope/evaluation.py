"""Binary-classification metrics, the crossvalidation protocol, and
confidence intervals.

ROC AUC is the rank statistic (probability a random positive outscores a
random negative, ties at half weight).  Crossvalidation splits at the
complex level so no antibody's CDRs straddle a train/test boundary, and
aggregates run-level means with a Student-t interval.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy import stats

from .errors import DataError
from .training import TrainConfig, train


def _flatten(scores, labels, mask):
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    if mask is not None:
        keep = np.asarray(mask).ravel() > 0
        scores, labels = scores[keep], labels[keep]
    if scores.shape != labels.shape:
        raise ValueError(f"scores {scores.shape} vs labels {labels.shape}")
    return scores, labels.astype(np.int64)


def _midranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned the mean of their rank span."""
    unique, inverse, counts = np.unique(values, return_inverse=True, return_counts=True)
    ends = np.cumsum(counts)
    mid = ends - (counts - 1) / 2.0
    return mid[inverse]


def roc_auc(scores, labels, mask=None) -> float:
    """Mann-Whitney AUC with midrank tie handling."""
    scores, labels = _flatten(scores, labels, mask)
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("roc_auc requires both classes present")
    ranks = _midranks(scores)
    rank_sum = ranks[labels == 1].sum()
    return float((rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def mcc(scores, labels, mask=None, threshold: float = 0.5) -> float:
    """Matthews correlation of thresholded predictions; 0 when degenerate."""
    scores, labels = _flatten(scores, labels, mask)
    pred = scores >= threshold
    pos = labels == 1
    tp = float(np.sum(pred & pos))
    tn = float(np.sum(~pred & ~pos))
    fp = float(np.sum(pred & ~pos))
    fn = float(np.sum(~pred & pos))
    denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if denom == 0:
        return 0.0
    return float((tp * tn - fp * fn) / np.sqrt(denom))


@dataclass(frozen=True)
class PrPoint:
    threshold: float
    precision: float
    recall: float


def pr_curve(scores, labels, mask=None) -> list[PrPoint]:
    """One (threshold, precision, recall) point per distinct score,
    swept from the highest threshold down, so recall is non-decreasing."""
    scores, labels = _flatten(scores, labels, mask)
    n_pos = int((labels == 1).sum())
    if n_pos == 0:
        raise ValueError("pr_curve requires at least one positive label")
    points = []
    for t in np.unique(scores)[::-1]:
        pred = scores >= t
        tp = float(np.sum(pred & (labels == 1)))
        points.append(PrPoint(threshold=float(t),
                              precision=tp / float(pred.sum()),
                              recall=tp / n_pos))
    return points


def confidence_interval(values, level: float = 0.95) -> tuple[float, float]:
    """Student-t interval for the mean of ``values`` (sample std, n-1 df)."""
    values = np.asarray(values, dtype=np.float64)
    if values.size < 2:
        raise ValueError("confidence_interval needs at least 2 values")
    mean = float(values.mean())
    half = float(stats.t.ppf((1.0 + level) / 2.0, values.size - 1)
                 * values.std(ddof=1) / np.sqrt(values.size))
    return mean - half, mean + half


# ---------------------------------------------------------------------------
# crossvalidation
# ---------------------------------------------------------------------------

@dataclass
class MetricSummary:
    fold_values: list[list[float]]  # [runs][folds]
    run_means: list[float]
    mean: float
    ci_low: float
    ci_high: float

    @property
    def ci_width(self) -> float:
        return self.ci_high - self.ci_low


@dataclass
class EvalReport:
    model_kind: str
    runs: int
    folds: int
    seed: int
    roc_auc: MetricSummary
    mcc: MetricSummary
    pr_points: list[list[list[PrPoint]]]  # [runs][folds][points]

    def to_json(self) -> str:
        def summary(s: MetricSummary):
            return {"fold_values": s.fold_values, "run_means": s.run_means,
                    "mean": s.mean, "ci_low": s.ci_low, "ci_high": s.ci_high}

        return json.dumps({
            "model_kind": self.model_kind,
            "runs": self.runs,
            "folds": self.folds,
            "seed": self.seed,
            "roc_auc": summary(self.roc_auc),
            "mcc": summary(self.mcc),
            "pr_points": [[[[p.threshold, p.precision, p.recall] for p in fold]
                           for fold in run] for run in self.pr_points],
        }, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        raw = json.loads(text)

        def summary(d) -> MetricSummary:
            return MetricSummary(fold_values=d["fold_values"], run_means=d["run_means"],
                                 mean=d["mean"], ci_low=d["ci_low"], ci_high=d["ci_high"])

        return cls(
            model_kind=raw["model_kind"],
            runs=raw["runs"],
            folds=raw["folds"],
            seed=raw["seed"],
            roc_auc=summary(raw["roc_auc"]),
            mcc=summary(raw["mcc"]),
            pr_points=[[[PrPoint(*p) for p in fold] for fold in run]
                       for run in raw["pr_points"]],
        )


def assign_folds(n_complexes: int, folds: int, rng: np.random.Generator) -> np.ndarray:
    """Random fold id per complex; every fold non-empty, sizes within one."""
    order = rng.permutation(n_complexes)
    fold_of = np.empty(n_complexes, dtype=np.int64)
    fold_of[order] = np.arange(n_complexes) % folds
    return fold_of


def _summarize(fold_values: list[list[float]], level: float = 0.95) -> MetricSummary:
    run_means = [float(np.mean(run)) for run in fold_values]
    low, high = confidence_interval(run_means, level)
    return MetricSummary(fold_values=fold_values, run_means=run_means,
                         mean=float(np.mean(run_means)), ci_low=low, ci_high=high)


def crossvalidate(complexes, model_kind: str, config: TrainConfig,
                  runs: int = 10, folds: int = 10, seed: int = 0,
                  policy: str = "auto", cap: int = 150,
                  threshold: float = 0.5) -> EvalReport:
    """Repeated k-fold crossvalidation with distinct splits per run.

    Each run draws its own complex-level partition; each fold trains a
    fresh model on the other folds and scores the held-out complexes.
    """
    from .model.architectures import make_model
    from .training import predict_probabilities

    complexes = list(complexes)
    if len(complexes) < folds:
        raise DataError(f"{len(complexes)} complexes cannot fill {folds} folds")

    auc_values: list[list[float]] = []
    mcc_values: list[list[float]] = []
    pr_all: list[list[list[PrPoint]]] = []
    for run in range(runs):
        split_rng = np.random.default_rng(np.random.SeedSequence([seed, run]))
        fold_of = assign_folds(len(complexes), folds, split_rng)
        auc_run, mcc_run, pr_run = [], [], []
        for fold in range(folds):
            train_set = [cx for cx, f in zip(complexes, fold_of) if f != fold]
            test_set = [cx for cx, f in zip(complexes, fold_of) if f == fold]
            fold_seed = np.random.SeedSequence([seed, run, fold])
            model = make_model(model_kind, np.random.default_rng(fold_seed))
            fold_config = replace(config, seed=int(fold_seed.generate_state(1)[0]))
            train(model, train_set, fold_config, policy=policy, cap=cap)
            scores, labels = predict_probabilities(model, test_set, policy, cap)
            auc_run.append(roc_auc(scores, labels))
            mcc_run.append(mcc(scores, labels, threshold=threshold))
            pr_run.append(pr_curve(scores, labels))
        auc_values.append(auc_run)
        mcc_values.append(mcc_run)
        pr_all.append(pr_run)

    return EvalReport(
        model_kind=model_kind,
        runs=runs,
        folds=folds,
        seed=seed,
        roc_auc=_summarize(auc_values),
        mcc=_summarize(mcc_values),
        pr_points=pr_all,
    )


# ---------------------------------------------------------------------------
# report files
# ---------------------------------------------------------------------------

def write_report(path, report: EvalReport) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report.to_json())


def read_report(path) -> EvalReport:
    return EvalReport.from_json(Path(path).read_text())


def write_pr_csv(path, points) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("threshold", "precision", "recall"))
        for p in points:
            writer.writerow([f"{p.threshold:.8f}", f"{p.precision:.8f}", f"{p.recall:.8f}"])


def read_pr_csv(path) -> list[PrPoint]:
    with open(path, newline="") as fh:
        return [PrPoint(threshold=float(r["threshold"]), precision=float(r["precision"]),
                        recall=float(r["recall"])) for r in csv.DictReader(fh)]
