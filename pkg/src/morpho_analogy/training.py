"""Training loops: autoencoder pre-training, ANNc, two-phase CNN+ANNr and joint AE+ANNr."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .axioms import augment_for_classification, augment_for_regression
from .data import AnalogyQuadruple, CorpusSplit, Vocabulary, WordDataset
from .evaluation import classification_metrics
from .models import Annc, AnncConfig, Annr, AnnrConfig, AutoEncoder, AutoEncoderConfig, CnnEmbedder
from .nn import Module, Optimizer, Tensor, clip_grad_norm, functional as F, no_grad
from .nn.losses import batch_shuffle_permutation, cross_entropy_logits, loss_annr, loss_bce

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    """Optimization settings; ``batch_size`` counts analogies before augmentation (words for the AE)."""

    optimizer: str = "adam"
    learning_rate: float = 1e-3
    batch_size: int = 256
    max_epochs: int = 50
    patience: int = 5
    seed: int = 0
    clip_norm: Optional[float] = None
    phase1_patience: int = 3  # CNN+ANNr: ANNr alone until the dev loss stalls this long
    phase1_min_delta: float = 0.01  # relative dev-loss gain that counts as progress in phase 1
    lambda_divisor: float = 5.0
    lambda_min: float = 0.01
    lambda_max: float = 0.99
    eval_batch_size: int = 512

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")

    @classmethod
    def for_ae(cls, **kw) -> "TrainConfig":
        return cls(**{"optimizer": "nadam", "learning_rate": 1e-2, "batch_size": 2048, "max_epochs": 100,
                      "clip_norm": 5.0, **kw})

    @classmethod
    def for_annc(cls, **kw) -> "TrainConfig":
        return cls(**{"batch_size": 256, **kw})

    @classmethod
    def for_cnn_annr(cls, **kw) -> "TrainConfig":
        return cls(**{"batch_size": 256, "max_epochs": 50, **kw})

    @classmethod
    def for_ae_annr(cls, **kw) -> "TrainConfig":
        return cls(**{"batch_size": 512, "clip_norm": 5.0, **kw})


@dataclass
class TrainReport:
    task: str
    config: dict
    epochs: list[dict] = field(default_factory=list)
    stop_reason: str = ""
    best_epoch: int = -1
    wall_time: float = 0.0
    metrics: dict = field(default_factory=dict)

    def log_epoch(self, **values) -> None:
        epoch = values["epoch"]
        if self.epochs and epoch <= self.epochs[-1]["epoch"]:
            raise ValueError("epoch indices must increase")
        self.epochs.append({k: (float(v) if isinstance(v, (np.floating, np.integer)) else v)
                            for k, v in values.items()})

    def to_json(self) -> dict:
        return asdict(self)

    def deterministic_view(self) -> dict:
        """Everything except wall-clock time."""
        d = self.to_json()
        d.pop("wall_time")
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


class TrainingDiverged(RuntimeError):
    def __init__(self, report: TrainReport):
        super().__init__(f"{report.task}: non-finite loss at epoch {len(report.epochs)}")
        self.report = report


def lambda_schedule(epoch: int, divisor: float = 5.0, lo: float = 0.01, hi: float = 0.99) -> float:
    """Weight of the autoencoder loss at ``epoch``: min(max(epoch/5, 0.01), 0.99)."""
    if epoch < 0:
        raise ValueError("epoch must be >= 0")
    return min(max(epoch / divisor, lo), hi)


class EarlyStopping:
    """Keep the best parameters seen so far and count epochs without improvement."""

    def __init__(self, modules: Sequence[Module], patience: int, mode: str = "min", min_delta: float = 0.0):
        self.modules = list(modules)
        self.patience = patience
        self.min_delta = min_delta  # relative to the best value so far
        self.sign = 1.0 if mode == "min" else -1.0
        self.best: Optional[float] = None
        self.best_epoch = -1
        self.bad_epochs = 0
        self._state: Optional[list[dict]] = None

    def update(self, epoch: int, value: float) -> bool:
        score = self.sign * value
        if self.best is None or score < self.sign * self.best - self.min_delta * abs(self.best):
            self.best, self.best_epoch, self.bad_epochs = value, epoch, 0
            self._state = [m.state_dict() for m in self.modules]
            return True
        self.bad_epochs += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self.bad_epochs >= self.patience

    def restore(self) -> None:
        if self._state is not None:
            for m, s in zip(self.modules, self._state):
                m.load_state_dict(s)


def _batches(n: int, size: int, rng: np.random.Generator):
    order = rng.permutation(n)
    for s in range(0, n, size):
        yield order[s:s + size]


def _check_finite(value: float, report: TrainReport) -> None:
    if not np.isfinite(value):
        report.stop_reason = "diverged"
        raise TrainingDiverged(report)


def _step(loss: Tensor, opt: Optimizer, clip: Optional[float]) -> None:
    loss.backward()
    if clip is not None:
        clip_grad_norm(opt.params, clip)
    opt.step()


def _gather(embed_fn, quads: Sequence[tuple[str, ...]]) -> list[Tensor]:
    """Embed the distinct words of ``quads`` once, then gather one tensor per slot."""
    words = list(dict.fromkeys(w for q in quads for w in q))
    pos = {w: i for i, w in enumerate(words)}
    E = embed_fn(words)
    idx = np.array([[pos[w] for w in q] for q in quads], dtype=np.int64)
    return [F.take(E, idx[:, s]) for s in range(idx.shape[1])]


def _finish(report: TrainReport, stopper: EarlyStopping, reason: str, start: float) -> None:
    stopper.restore()
    report.stop_reason = reason
    report.best_epoch = stopper.best_epoch
    report.wall_time = time.monotonic() - start


# ------------------------------------------------------------ autoencoder

def ae_word_accuracy(ae: AutoEncoder, words: Sequence[str], batch_size: int = 512) -> float:
    if not words:
        return 0.0
    hits = 0
    with no_grad():
        for s in range(0, len(words), batch_size):
            chunk = list(words[s:s + batch_size])
            decoded, _ = ae.greedy_decode(ae.encode(chunk))
            hits += sum(p == g for p, g in zip(decoded, chunk))
    return hits / len(words)


def pretrain_ae(words: WordDataset, config: Optional[TrainConfig] = None,
                ae_config: Optional[AutoEncoderConfig] = None,
                ae: Optional[AutoEncoder] = None) -> tuple[AutoEncoder, TrainReport]:
    """Teacher-forced reconstruction; early stopping on dev round-trip accuracy."""
    config = config or TrainConfig.for_ae()
    rng = np.random.default_rng(config.seed)
    ae = ae or AutoEncoder(words.vocab, ae_config, rng=np.random.default_rng([config.seed, 1]))
    opt = Optimizer(ae.parameters(), config.optimizer, config.learning_rate)
    report = TrainReport("ae", asdict(config))
    stopper = EarlyStopping([ae], config.patience, mode="max")
    start = time.monotonic()
    train = list(words.train)
    reason = "max_epochs"
    for epoch in range(config.max_epochs):
        losses = []
        for idx in _batches(len(train), config.batch_size, rng):
            batch = [train[i] for i in idx]
            logits, tgt, mask = ae.decode_logits(ae.encode(batch), batch)
            loss = cross_entropy_logits(logits, tgt, mask)
            _check_finite(float(loss.data), report)
            _step(loss, opt, config.clip_norm)
            losses.append(float(loss.data))
        dev_acc = ae_word_accuracy(ae, words.dev, config.eval_batch_size)
        report.log_epoch(epoch=epoch, train_loss=float(np.mean(losses)), dev_accuracy=dev_acc)
        log.info("ae epoch %d loss %.4f dev acc %.4f", epoch, np.mean(losses), dev_acc)
        stopper.update(epoch, dev_acc)
        if stopper.should_stop:
            reason = "early_stopping"
            break
    _finish(report, stopper, reason, start)
    report.metrics = {"dev_accuracy": stopper.best,
                      "test_accuracy": ae_word_accuracy(ae, words.test, config.eval_batch_size)}
    return ae, report


# ------------------------------------------------------------------- ANNc

def _classification_batch(quads: Sequence[AnalogyQuadruple], rng: np.random.Generator):
    forms, labels = [], []
    for q in quads:
        aug = augment_for_classification(q, rng)
        forms += [f.words for f in aug.valid] + [f.words for f in aug.invalid]
        labels += [1.0] * len(aug.valid) + [0.0] * len(aug.invalid)
    return forms, np.array(labels)


def annc_scores(embedder: CnnEmbedder, annc: Annc, forms: Sequence[tuple[str, ...]],
                batch_size: int = 512) -> np.ndarray:
    out = []
    with no_grad():
        for s in range(0, len(forms), batch_size):
            cols = _gather(embedder.embed, forms[s:s + batch_size])
            out.append(annc.score_stacked(F.stack(cols, axis=-1)).data)
    return np.concatenate(out) if out else np.zeros(0)


def train_annc(split: CorpusSplit, embedder: CnnEmbedder, config: Optional[TrainConfig] = None,
               annc_config: Optional[AnncConfig] = None,
               annc: Optional[Annc] = None) -> tuple[CnnEmbedder, Annc, TrainReport]:
    """Joint embedder + classifier training on 8 valid and 8 invalid forms per analogy."""
    config = config or TrainConfig.for_annc()
    rng = np.random.default_rng(config.seed)
    annc = annc or Annc(annc_config or AnncConfig(n=embedder.output_dim),
                        rng=np.random.default_rng([config.seed, 2]), dtype=embedder.dtype)
    params = embedder.parameters() + annc.parameters()
    opt = Optimizer(params, config.optimizer, config.learning_rate)
    dev_forms, dev_labels = _classification_batch(split.dev, np.random.default_rng([config.seed, 3]))
    report = TrainReport("annc", asdict(config))
    stopper = EarlyStopping([embedder, annc], config.patience)
    start = time.monotonic()
    reason = "max_epochs"
    for epoch in range(config.max_epochs):
        losses = []
        for idx in _batches(len(split.train), config.batch_size, rng):
            forms, labels = _classification_batch([split.train[i] for i in idx], rng)
            cols = _gather(embedder.embed, forms)
            loss = loss_bce(annc.score_stacked(F.stack(cols, axis=-1)), labels)
            _check_finite(float(loss.data), report)
            _step(loss, opt, config.clip_norm)
            losses.append(float(loss.data))
        scores = annc_scores(embedder, annc, dev_forms, config.eval_batch_size)
        dev_loss = float(loss_bce(Tensor(scores), dev_labels).data)
        dev_acc = classification_metrics(scores, dev_labels).balanced_accuracy
        report.log_epoch(epoch=epoch, train_loss=float(np.mean(losses)), dev_loss=dev_loss,
                         dev_balanced_accuracy=dev_acc)
        log.info("annc epoch %d loss %.4f dev %.4f acc %.4f", epoch, np.mean(losses), dev_loss, dev_acc)
        _check_finite(dev_loss, report)
        stopper.update(epoch, dev_loss)
        if stopper.should_stop:
            reason = "early_stopping"
            break
    _finish(report, stopper, reason, start)
    scores = annc_scores(embedder, annc, dev_forms, config.eval_batch_size)
    report.metrics = {"dev_loss": stopper.best,
                      "dev": classification_metrics(scores, dev_labels).to_dict()}
    if split.test:
        test_forms, test_labels = _classification_batch(split.test, np.random.default_rng([config.seed, 7]))
        scores = annc_scores(embedder, annc, test_forms, config.eval_batch_size)
        report.metrics["test"] = classification_metrics(scores, test_labels).to_dict()
    return embedder, annc, report


# -------------------------------------------------------------- CNN+ANNr

def _regression_forms(quads: Sequence[AnalogyQuadruple]) -> list[tuple[str, ...]]:
    return [f.words for q in quads for f in augment_for_regression(q)]


def _annr_dev_loss(embed_fn, annr: Annr, forms, perms, batch_size: int) -> float:
    total, count = 0.0, 0
    with no_grad():
        for (s, perm) in zip(range(0, len(forms), batch_size), perms):
            chunk = forms[s:s + batch_size]
            e_a, e_b, e_c, e_d = _gather(embed_fn, chunk)
            total += float(loss_annr(e_d, annr.predict(e_a, e_b, e_c), perm).data) * len(chunk)
            count += len(chunk)
    return total / max(count, 1)


def _dev_perms(n_forms: int, batch_size: int, rng: np.random.Generator) -> list[np.ndarray]:
    sizes = [min(batch_size, n_forms - s) for s in range(0, n_forms, batch_size)]
    return [batch_shuffle_permutation(m, rng) for m in sizes]


def _state_equal(a: dict, b: dict) -> bool:
    return a.keys() == b.keys() and all(np.array_equal(a[k], b[k]) for k in a)


def train_cnn_annr(split: CorpusSplit, embedder: CnnEmbedder, config: Optional[TrainConfig] = None,
                   annr_config: Optional[AnnrConfig] = None,
                   annr: Optional[Annr] = None) -> tuple[CnnEmbedder, Annr, TrainReport]:
    """Phase 1 trains ANNr on a frozen embedder; phase 2 trains both. Total epochs <= max_epochs."""
    config = config or TrainConfig.for_cnn_annr()
    rng = np.random.default_rng(config.seed)
    annr = annr or Annr(annr_config or AnnrConfig(n=embedder.output_dim),
                        rng=np.random.default_rng([config.seed, 4]), dtype=embedder.dtype)
    dev_forms = _regression_forms(split.dev)
    # forms per batch: 8 per analogy
    form_batch = 8 * config.eval_batch_size
    dev_perms = _dev_perms(len(dev_forms), form_batch, np.random.default_rng([config.seed, 5]))
    report = TrainReport("cnn-annr", asdict(config))
    start = time.monotonic()

    def frozen_embed(words):
        with no_grad():
            return Tensor(embedder.embed(words).data)

    before = embedder.state_dict()
    stopper = EarlyStopping([embedder, annr], config.phase1_patience, min_delta=config.phase1_min_delta)
    opt = Optimizer(annr.parameters(), config.optimizer, config.learning_rate)
    phase, embed_fn, epoch = 1, frozen_embed, 0
    reason = "max_epochs"
    while epoch < config.max_epochs:
        losses = []
        for idx in _batches(len(split.train), config.batch_size, rng):
            forms = _regression_forms([split.train[i] for i in idx])
            e_a, e_b, e_c, e_d = _gather(embed_fn, forms)
            perm = batch_shuffle_permutation(len(forms), rng)
            loss = loss_annr(e_d, annr.predict(e_a, e_b, e_c), perm)
            _check_finite(float(loss.data), report)
            _step(loss, opt, config.clip_norm)
            losses.append(float(loss.data))
        dev_loss = _annr_dev_loss(frozen_embed, annr, dev_forms, dev_perms, form_batch)
        report.log_epoch(epoch=epoch, phase=phase, train_loss=float(np.mean(losses)), dev_loss=dev_loss)
        log.info("cnn+annr phase %d epoch %d loss %.4f dev %.4f", phase, epoch, np.mean(losses), dev_loss)
        _check_finite(dev_loss, report)
        stopper.update(epoch, dev_loss)
        epoch += 1
        if stopper.should_stop:
            if phase == 2:
                reason = "early_stopping"
                break
            stopper.restore()
            report.metrics["phase1_epochs"] = epoch
            report.metrics["phase1_embedder_unchanged"] = _state_equal(before, embedder.state_dict())
            phase, embed_fn = 2, embedder.embed
            stopper.patience, stopper.bad_epochs, stopper.min_delta = config.patience, 0, 0.0
            opt = Optimizer(embedder.parameters() + annr.parameters(), config.optimizer, config.learning_rate)
    if phase == 1:
        report.metrics["phase1_epochs"] = epoch
        report.metrics["phase1_embedder_unchanged"] = _state_equal(before, embedder.state_dict())
    _finish(report, stopper, reason, start)
    report.metrics["dev_loss"] = stopper.best
    report.metrics["total_epochs"] = epoch
    return embedder, annr, report


# --------------------------------------------------------------- AE+ANNr

def ae_annr_loss(ae: AutoEncoder, annr: Annr, forms: Sequence[tuple[str, ...]], perm, lam: float):
    """(1 - lam) * L_ANNr + lam * L_AE, returned with both components."""
    e_a, e_b, e_c, e_d = _gather(ae.encode, forms)
    e_x = annr.predict(e_a, e_b, e_c)
    l_annr = loss_annr(e_d, e_x, perm)
    logits, tgt, mask = ae.decode_logits(e_x, [f[3] for f in forms])
    l_ae = cross_entropy_logits(logits, tgt, mask)
    return l_annr * (1.0 - lam) + l_ae * lam, l_annr, l_ae


def generation_accuracy(ae: AutoEncoder, annr: Annr, quads: Sequence[AnalogyQuadruple],
                        batch_size: int = 512) -> float:
    if not quads:
        return 0.0
    hits = 0
    with no_grad():
        for s in range(0, len(quads), batch_size):
            chunk = quads[s:s + batch_size]
            e_a, e_b, e_c = _gather(ae.encode, [(q.a, q.b, q.c) for q in chunk])
            words, _ = ae.greedy_decode(annr.predict(e_a, e_b, e_c))
            hits += sum(w == q.d for w, q in zip(words, chunk))
    return hits / len(quads)


def train_ae_annr(split: CorpusSplit, ae: AutoEncoder, config: Optional[TrainConfig] = None,
                  annr: Optional[Annr] = None) -> tuple[AutoEncoder, Annr, TrainReport]:
    """Joint AE + ANNr training; early stopping on dev generation accuracy."""
    config = config or TrainConfig.for_ae_annr()
    rng = np.random.default_rng(config.seed)
    annr = annr or Annr(AnnrConfig(n=ae.embedding_dim), rng=np.random.default_rng([config.seed, 6]),
                        dtype=ae.dtype)
    opt = Optimizer(ae.parameters() + annr.parameters(), config.optimizer, config.learning_rate)
    report = TrainReport("ae-annr", asdict(config))
    stopper = EarlyStopping([ae, annr], config.patience, mode="max")
    start = time.monotonic()
    reason = "max_epochs"
    for epoch in range(config.max_epochs):
        lam = lambda_schedule(epoch, config.lambda_divisor, config.lambda_min, config.lambda_max)
        totals, parts = [], []
        for idx in _batches(len(split.train), config.batch_size, rng):
            forms = _regression_forms([split.train[i] for i in idx])
            perm = batch_shuffle_permutation(len(forms), rng)
            loss, l_annr, l_ae = ae_annr_loss(ae, annr, forms, perm, lam)
            _check_finite(float(loss.data), report)
            _step(loss, opt, config.clip_norm)
            totals.append(float(loss.data))
            parts.append((float(l_annr.data), float(l_ae.data)))
        dev_acc = generation_accuracy(ae, annr, split.dev, config.eval_batch_size)
        mean_parts = np.mean(parts, axis=0)
        report.log_epoch(epoch=epoch, lam=lam, train_loss=float(np.mean(totals)),
                         train_annr_loss=float(mean_parts[0]), train_ae_loss=float(mean_parts[1]),
                         dev_generation_accuracy=dev_acc)
        log.info("ae+annr epoch %d lambda %.2f loss %.4f dev acc %.4f", epoch, lam, np.mean(totals), dev_acc)
        stopper.update(epoch, dev_acc)
        if stopper.should_stop:
            reason = "early_stopping"
            break
    _finish(report, stopper, reason, start)
    report.metrics = {"dev_generation_accuracy": stopper.best}
    return ae, annr, report


def vocabulary_for(split: CorpusSplit, words: Optional[WordDataset] = None) -> Vocabulary:
    if words is not None:
        return words.vocab
    return Vocabulary.from_words(w for q in split.train + split.dev + split.test for w in q.words)
