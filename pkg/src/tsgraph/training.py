"""Fold-based training, evaluation, and cross-dataset transfer.

Everything here is deterministic for a fixed seed: fold assignment,
parameter init, and the per-epoch shuffle all derive from it, so loss
logs and reports are reproducible byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Adam
from .errors import ConfigError, DataError
from .graph import SimilarityGraph
from .metrics import EvalReport, confusion_matrix
from .model import Model, ModelConfig, nll_loss


@dataclass(frozen=True)
class TrainSettings:
    epochs: int = 60
    batch_size: int = 16
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    seed: int = 0


@dataclass
class FoldPlan:
    fold_count: int
    assignments: np.ndarray  # fold id per sample index
    stratified: bool
    seed: int

    def __post_init__(self):
        self.assignments = np.asarray(self.assignments, dtype=np.int64)
        if self.fold_count < 2:
            raise ConfigError("need at least two folds")
        present = np.unique(self.assignments)
        if present.min() < 0 or present.max() >= self.fold_count:
            raise ConfigError("fold assignment outside range")

    def test_indices(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == k)

    def train_indices(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != k)


def kfold_plan(labels, k: int, stratified: bool = True, seed: int = 0) -> FoldPlan:
    """Deterministic fold assignment; stratified deals each class round-robin."""
    labels = np.asarray(labels, dtype=np.int64)
    n = labels.size
    if k < 2:
        raise ConfigError(f"fold count must be >= 2, got {k}")
    if k > n:
        raise DataError(f"cannot split {n} samples into {k} folds")
    rng = np.random.default_rng(seed)
    assignments = np.empty(n, dtype=np.int64)
    if stratified:
        offset = 0  # rotates the round-robin start so leftover samples spread over folds
        for cls in np.unique(labels):
            idx = np.flatnonzero(labels == cls)
            if idx.size < k:
                raise DataError(f"class {cls} has {idx.size} samples, fewer than {k} folds")
            rng.shuffle(idx)
            assignments[idx] = (np.arange(idx.size) + offset) % k
            offset += idx.size
    else:
        order = rng.permutation(n)
        assignments[order] = np.arange(n) % k
    return FoldPlan(k, assignments, stratified, seed)


def evaluate(model: Model, graphs: list[SimilarityGraph], normal_label: int = 0) -> EvalReport:
    """Inference over the graphs; scores are per-class probabilities."""
    if not graphs:
        raise DataError("nothing to evaluate")
    truth = np.array([g.label for g in graphs], dtype=np.int64)
    preds = np.empty(len(graphs), dtype=np.int64)
    scores = np.empty((len(graphs), model.config.classes), dtype=np.float64)
    for i, g in enumerate(graphs):
        pred, logp = model.predict(g)
        preds[i] = pred
        scores[i] = np.exp(logp)
    cm = confusion_matrix(truth, preds, model.config.classes)
    return EvalReport(
        classes=model.config.classes,
        confusion=cm,
        normal_label=normal_label,
        score_matrix=scores,
        y_true=truth,
    )


def _fit(
    model: Model,
    graphs: list[SimilarityGraph],
    indices: np.ndarray,
    settings: TrainSettings,
    shuffle_seed,
    loss_rows: list,
    tag: str,
):
    opt = Adam(
        model.parameters(),
        lr=settings.learning_rate,
        beta1=settings.beta1,
        beta2=settings.beta2,
        eps=settings.eps,
        weight_decay=settings.weight_decay,
    )
    rng = np.random.default_rng(shuffle_seed)
    labels = np.array([graphs[i].label for i in indices], dtype=np.int64)
    for epoch in range(settings.epochs):
        order = rng.permutation(indices.size)
        epoch_loss = 0.0
        for start in range(0, indices.size, settings.batch_size):
            batch = order[start : start + settings.batch_size]
            opt.zero_grad()
            logps = [model.forward(graphs[indices[b]], training=True) for b in batch]
            logp = ad.concat(logps, axis=0) if len(logps) > 1 else logps[0]
            loss = nll_loss(logp, labels[batch])
            if not np.isfinite(loss.data):
                raise FloatingPointError(
                    f"{tag}: loss diverged to {float(loss.data)!r} at epoch {epoch}"
                )
            loss.backward()
            opt.step()
            epoch_loss += float(loss.data) * batch.size
        loss_rows.append((tag, epoch, epoch_loss / indices.size))


@dataclass
class TrainResult:
    fold_models: list
    fold_reports: list
    aggregate: EvalReport  # pooled over all held-out predictions
    fold_mean: dict
    loss_rows: list
    final_model: Model | None = None
    plan: FoldPlan | None = None

    def loss_csv(self) -> str:
        lines = ["fold,epoch,loss"]
        for tag, epoch, loss in self.loss_rows:
            lines.append(f"{tag},{epoch},{loss!r}")
        return "\n".join(lines) + "\n"

    def report_dict(self) -> dict:
        return {
            "pooled": self.aggregate.to_dict(),
            "fold_mean": self.fold_mean,
            "folds": [r.summary() for r in self.fold_reports],
        }


def _mean_of_fold_metrics(reports: list[EvalReport]) -> dict:
    keys = reports[0].summary().keys()
    out = {}
    for key in keys:
        vals = [r.summary()[key] for r in reports if r.summary()[key] is not None]
        out[key] = float(np.mean(vals)) if vals else None
    return out


def train(
    graphs: list[SimilarityGraph],
    model_config: ModelConfig,
    plan: FoldPlan,
    settings: TrainSettings = TrainSettings(),
    normal_label: int = 0,
    fit_final: bool = True,
) -> TrainResult:
    """K-fold cross-validated training with Adam on the NLL loss.

    The aggregate report pools every fold's held-out predictions; the
    fold-metric averages sit alongside it in ``fold_mean``. When
    ``fit_final`` is set, one extra model is fit on all samples for use
    in transfer evaluation.
    """
    if not graphs:
        raise DataError("no graphs to train on")
    if plan.assignments.size != len(graphs):
        raise ConfigError("fold plan does not match the sample count")
    for g in graphs:
        if g.feature_dim != model_config.feature_dim:
            raise ConfigError(
                f"graph feature dim {g.feature_dim} != configured {model_config.feature_dim}"
            )
        if not 0 <= g.label < model_config.classes:
            raise DataError(f"graph label {g.label} outside the configured class range")

    loss_rows: list = []
    fold_models, fold_reports = [], []
    truth_all, pred_all, score_all = [], [], []
    for k in range(plan.fold_count):
        model = Model(model_config, seed=settings.seed * 1009 + k)
        _fit(
            model,
            graphs,
            plan.train_indices(k),
            settings,
            shuffle_seed=(settings.seed, k),
            loss_rows=loss_rows,
            tag=str(k),
        )
        held_out = [graphs[i] for i in plan.test_indices(k)]
        report = evaluate(model, held_out, normal_label=normal_label)
        fold_models.append(model)
        fold_reports.append(report)
        truth_all.append(report.y_true)
        score_all.append(report.score_matrix)
        pred_all.append(np.argmax(report.score_matrix, axis=1))

    truth = np.concatenate(truth_all)
    preds = np.concatenate(pred_all)
    scores = np.concatenate(score_all, axis=0)
    aggregate = EvalReport(
        classes=model_config.classes,
        confusion=confusion_matrix(truth, preds, model_config.classes),
        normal_label=normal_label,
        score_matrix=scores,
        y_true=truth,
    )

    final_model = None
    if fit_final:
        final_model = Model(model_config, seed=settings.seed * 1009 + plan.fold_count)
        _fit(
            final_model,
            graphs,
            np.arange(len(graphs)),
            settings,
            shuffle_seed=(settings.seed, plan.fold_count),
            loss_rows=loss_rows,
            tag="final",
        )

    return TrainResult(
        fold_models=fold_models,
        fold_reports=fold_reports,
        aggregate=aggregate,
        fold_mean=_mean_of_fold_metrics(fold_reports),
        loss_rows=loss_rows,
        final_model=final_model,
        plan=plan,
    )


def cross_eval(model: Model, graphs: list[SimilarityGraph], normal_label: int = 0) -> EvalReport:
    """Inference-only transfer evaluation; rejects incompatible dimensions."""
    if not graphs:
        raise DataError("no graphs to evaluate")
    for g in graphs:
        if g.feature_dim != model.config.feature_dim:
            raise ConfigError(
                f"transfer graphs have feature dim {g.feature_dim}, "
                f"model expects {model.config.feature_dim}"
            )
        if not 0 <= g.label < model.config.classes:
            raise ConfigError(
                f"transfer label {g.label} outside the model's {model.config.classes} classes"
            )
    return evaluate(model, graphs, normal_label=normal_label)
