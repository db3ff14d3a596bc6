"""CNN word embedder, character autoencoder, ANNc classifier and ANNr solver."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .data import Vocabulary
from .nn import Module, Tensor, functional as F, no_grad, uniform_fan_in
from .nn import serialize


# ------------------------------------------------------------------ configs

@dataclass
class CnnEmbedderConfig:
    char_emb_dim: int = 64
    filter_widths: tuple[int, ...] = (2, 3, 4, 5, 6)
    filters_per_width: int = 16

    @property
    def output_dim(self) -> int:
        return self.filters_per_width * len(self.filter_widths)

    @property
    def min_length(self) -> int:
        return max(self.filter_widths)


@dataclass
class AutoEncoderConfig:
    hidden_size: int = 64
    max_decode_length: int = 30

    @property
    def embedding_dim(self) -> int:
        return 4 * self.hidden_size


@dataclass
class AnncConfig:
    n: int = 80
    f1_filters: int = 128
    f2_filters: int = 64


@dataclass
class AnnrConfig:
    n: int = 80
    hidden: Optional[int] = None  # defaults to n

    @property
    def hidden_dim(self) -> int:
        return self.hidden if self.hidden is not None else self.n


def _check_dim(name: str, t: Tensor, n: int) -> None:
    if t.shape[-1] != n:
        raise ValueError(f"{name} has dimension {t.shape[-1]}, expected {n}")


def pad_ids(seqs: Sequence[Sequence[int]], min_length: int = 1, pad: int = Vocabulary.pad) -> tuple[np.ndarray, np.ndarray]:
    lengths = np.array([len(s) for s in seqs], dtype=np.int64)
    T = max(int(lengths.max(initial=0)), min_length)
    out = np.full((len(seqs), T), pad, dtype=np.int64)
    for i, s in enumerate(seqs):
        out[i, :len(s)] = s
    return out, lengths


# ---------------------------------------------------------------- embedder

class CnnEmbedder(Module):
    """Character CNN with max-over-time pooling; 16 filters for each width 2..6 give 80 dims."""

    prefix = "cnn"

    def __init__(self, vocab: Vocabulary, config: Optional[CnnEmbedderConfig] = None,
                 rng: Optional[np.random.Generator] = None, dtype=np.float32):
        super().__init__(dtype)
        self.vocab = vocab
        self.config = config = config or CnnEmbedderConfig()
        rng = rng if rng is not None else np.random.default_rng(0)
        m, nf = config.char_emb_dim, config.filters_per_width
        self.char_emb = self.add_param("char_emb", rng.uniform(-1, 1, size=(len(vocab), m)))
        self.filters = []
        for w in config.filter_widths:
            W = self.add_param(f"conv{w}.W", uniform_fan_in(rng, (w * m, nf), w * m))
            b = self.add_param(f"conv{w}.b", np.zeros(nf))
            self.filters.append((w, W, b))

    @property
    def output_dim(self) -> int:
        return self.config.output_dim

    def embed(self, words: Sequence[str]) -> Tensor:
        ids, lengths = pad_ids([self.vocab.encode(w) for w in words], self.config.min_length)
        effective = np.maximum(lengths, self.config.min_length)  # short words are PAD-extended to 6
        E = F.take(self.char_emb, ids)  # [B, L, m]
        pooled = []
        for w, W, b in self.filters:
            conv = F.conv_over_chars(E, W, b)
            starts = np.arange(conv.shape[1])
            valid = starts[None, :] + w <= effective[:, None]
            pooled.append(F.max_over_time(conv, valid))
        return F.concat(pooled, axis=-1)

    def __call__(self, words: Sequence[str]) -> Tensor:
        return self.embed(words)


# -------------------------------------------------------------- autoencoder

class AutoEncoder(Module):
    """BiLSTM encoder to ``concat(h_f, h_b, c_f, c_b)``; LSTM decoder with a softmax head."""

    prefix = "ae"

    def __init__(self, vocab: Vocabulary, config: Optional[AutoEncoderConfig] = None,
                 rng: Optional[np.random.Generator] = None, dtype=np.float32):
        super().__init__(dtype)
        self.vocab = vocab
        self.config = config = config or AutoEncoderConfig()
        rng = rng if rng is not None else np.random.default_rng(0)
        V, h = len(vocab), config.hidden_size
        self.enc_f = self._lstm("enc_f", V, h, rng)
        self.enc_b = self._lstm("enc_b", V, h, rng)
        self.dec = self._lstm("dec", V, 2 * h, rng)
        self.out_W = self.add_param("out.W", uniform_fan_in(rng, (2 * h, V), 2 * h))
        self.out_b = self.add_param("out.b", np.zeros(V))

    def _lstm(self, name, n_in, H, rng):
        W = self.add_param(f"{name}.W", uniform_fan_in(rng, (n_in + H, 4 * H), n_in + H))
        b = np.zeros(4 * H)
        b[H:2 * H] = 1.0  # forget gate
        return W, self.add_param(f"{name}.b", b)

    @property
    def embedding_dim(self) -> int:
        return self.config.embedding_dim

    def _one_hot(self, ids: np.ndarray) -> np.ndarray:
        return np.eye(len(self.vocab), dtype=self.dtype)[ids]

    def encode(self, words: Sequence[str]) -> Tensor:
        seqs = [self.vocab.encode(w) for w in words]
        if any(len(s) == 0 for s in seqs):
            raise ValueError("cannot encode an empty word")
        ids, lengths = pad_ids(seqs)
        X = Tensor(self._one_hot(ids))
        h_f, c_f, h_b, c_b = F.bilstm_encode(X, lengths, *self.enc_f, *self.enc_b)
        return F.concat([h_f, h_b, c_f, c_b], axis=-1)

    def __call__(self, words: Sequence[str]) -> Tensor:
        return self.encode(words)

    def _split_state(self, emb: Tensor) -> tuple[Tensor, Tensor]:
        _check_dim("embedding", emb, self.embedding_dim)
        H2 = 2 * self.config.hidden_size
        return emb[:, :H2], emb[:, H2:]

    def teacher_targets(self, targets: Sequence[str]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Decoder inputs (BOW + word), targets (word + EOW) and the validity mask."""
        seqs = [self.vocab.encode(w) for w in targets]
        tgt, lengths = pad_ids([s + [self.vocab.eow] for s in seqs])
        inp, _ = pad_ids([[self.vocab.bow] + s for s in seqs])
        mask = np.arange(tgt.shape[1])[None, :] < lengths[:, None]
        return inp, tgt, mask

    def decode_logits(self, emb: Tensor, targets: Sequence[str]) -> tuple[Tensor, np.ndarray, np.ndarray]:
        """Teacher-forced decoding: logits ``[B, |word|+1, V]`` plus target ids and mask."""
        h, c = self._split_state(emb)
        inp, tgt, mask = self.teacher_targets(targets)
        X = self._one_hot(inp)
        lengths = mask.sum(axis=1)
        W, b = self.dec
        steps = []
        for t in range(inp.shape[1]):
            step_mask = None if (lengths > t).all() else (lengths > t)
            h, c = F.lstm_cell(Tensor(X[:, t]), h, c, W, b, step_mask)
            steps.append(h)
        H = F.stack(steps, axis=1)
        return F.affine(H, self.out_W, self.out_b), tgt, mask

    def decode_teacher(self, emb: Tensor, targets: Sequence[str]) -> Tensor:
        """Per-position character distributions under teacher forcing."""
        logits, _, _ = self.decode_logits(emb, targets)
        return F.softmax(logits, axis=-1)

    def greedy_decode(self, emb, max_length: Optional[int] = None) -> tuple[list[str], list[bool]]:
        """Argmax decoding until EOW; words hitting ``max_length`` are flagged truncated."""
        max_length = max_length or self.config.max_decode_length
        emb = emb if isinstance(emb, Tensor) else Tensor(np.asarray(emb, dtype=self.dtype))
        if emb.data.ndim == 1:
            emb = Tensor(emb.data[None])
        with no_grad():
            h, c = self._split_state(emb)
            B = emb.shape[0]
            W, b = self.dec
            prev = np.full(B, self.vocab.bow)
            done = np.zeros(B, dtype=bool)
            out = [[] for _ in range(B)]
            banned = [self.vocab.pad, self.vocab.bow]
            for _ in range(max_length + 1):
                h, c = F.lstm_cell(Tensor(self._one_hot(prev)), h, c, W, b)
                logits = h.data @ self.out_W.data + self.out_b.data
                logits[:, banned] = -np.inf
                prev = logits.argmax(axis=-1)
                for i in np.flatnonzero(~done):
                    if prev[i] == self.vocab.eow:
                        done[i] = True
                    else:
                        out[i].append(int(prev[i]))
                if done.all():
                    break
        words, truncated = [], []
        for i, ids in enumerate(out):
            truncated.append(not done[i] or len(ids) > max_length)
            words.append(self.vocab.decode(ids[:max_length]))
        return words, truncated


# -------------------------------------------------------------------- ANNc

class Annc(Module):
    """Analogy classifier over an ``n x 4`` stack of embeddings."""

    prefix = "annc"

    def __init__(self, config: Optional[AnncConfig] = None, rng: Optional[np.random.Generator] = None,
                 dtype=np.float32):
        super().__init__(dtype)
        self.config = config = config or AnncConfig()
        rng = rng if rng is not None else np.random.default_rng(0)
        n, f1, f2 = config.n, config.f1_filters, config.f2_filters
        self.W1 = self.add_param("conv1.W", uniform_fan_in(rng, (2, f1), 2))
        self.b1 = self.add_param("conv1.b", np.zeros(f1))
        self.W2 = self.add_param("conv2.W", uniform_fan_in(rng, (4 * f1, f2), 4 * f1))
        self.b2 = self.add_param("conv2.b", np.zeros(f2))
        self.Wd = self.add_param("dense.W", uniform_fan_in(rng, (f2 * (n - 1), 1), f2 * (n - 1)))
        self.bd = self.add_param("dense.b", np.zeros(1))

    def stage2(self, stacked: Tensor) -> Tensor:
        """``[B, n, 4]`` stack to the ``[B, n-1, |F2|]`` second-stage feature map."""
        n = self.config.n
        if stacked.shape[1:] != (n, 4):
            raise ValueError(f"expected [B, {n}, 4] input, got {stacked.shape}")
        B = stacked.shape[0]
        # stage 1: a 1x2 filter over (A_i, B_i) and over (C_i, D_i), no overlap
        pairs = F.reshape(stacked, (B, n, 2, 2))
        s1 = F.relu(F.affine(pairs, self.W1, self.b1))  # [B, n, 2, F1]
        # stage 2: 2x2 filters sliding one component at a time along the embedding
        win = F.concat([s1[:, :-1], s1[:, 1:]], axis=2)  # [B, n-1, 4, F1]
        win = F.reshape(win, (B, n - 1, 4 * self.config.f1_filters))
        return F.relu(F.affine(win, self.W2, self.b2))

    def score_stacked(self, stacked: Tensor) -> Tensor:
        B = stacked.shape[0]
        s2 = F.reshape(self.stage2(stacked), (B, -1))
        return F.sigmoid(F.affine(s2, self.Wd, self.bd))[:, 0]

    def score(self, e_a: Tensor, e_b: Tensor, e_c: Tensor, e_d: Tensor) -> Tensor:
        for name, t in zip("ABCD", (e_a, e_b, e_c, e_d)):
            _check_dim(f"e_{name}", t, self.config.n)
        return self.score_stacked(F.stack([e_a, e_b, e_c, e_d], axis=-1))

    __call__ = score


# -------------------------------------------------------------------- ANNr

class Annr(Module):
    """``e_x = f3(relu(f1(e_A, e_B)), relu(f2(e_A, e_C)))`` with unshared f1, f2."""

    prefix = "annr"

    def __init__(self, config: Optional[AnnrConfig] = None, rng: Optional[np.random.Generator] = None,
                 dtype=np.float32):
        super().__init__(dtype)
        self.config = config = config or AnnrConfig()
        rng = rng if rng is not None else np.random.default_rng(0)
        n, hid = config.n, config.hidden_dim
        self.f1 = (self.add_param("f1.W", uniform_fan_in(rng, (2 * n, hid), 2 * n)),
                   self.add_param("f1.b", np.zeros(hid)))
        self.f2 = (self.add_param("f2.W", uniform_fan_in(rng, (2 * n, hid), 2 * n)),
                   self.add_param("f2.b", np.zeros(hid)))
        self.f3 = (self.add_param("f3.W", uniform_fan_in(rng, (2 * hid, n), 2 * hid)),
                   self.add_param("f3.b", np.zeros(n)))

    def predict(self, e_a: Tensor, e_b: Tensor, e_c: Tensor) -> Tensor:
        for name, t in zip("ABC", (e_a, e_b, e_c)):
            _check_dim(f"e_{name}", t, self.config.n)
        u = F.relu(F.affine(F.concat([e_a, e_b], axis=-1), *self.f1))
        v = F.relu(F.affine(F.concat([e_a, e_c], axis=-1), *self.f2))
        return F.affine(F.concat([u, v], axis=-1), *self.f3)

    __call__ = predict


# ------------------------------------------------------------- persistence

MODEL_TYPES = {"cnn": CnnEmbedder, "ae": AutoEncoder, "annc": Annc, "annr": Annr}


def save_model(model: Module, path: Union[str, Path]) -> None:
    """Write ``<path>`` (MANN1 parameters) and ``<path>.json`` (config + vocabulary)."""
    path = Path(path)
    kind = next(k for k, cls in MODEL_TYPES.items() if isinstance(model, cls))
    meta = {"type": kind, "dtype": str(model.dtype), "config": asdict(model.config)}
    if hasattr(model, "vocab"):
        meta["vocab"] = model.vocab.to_json()
    serialize.save(model.state_dict(), path)
    Path(f"{path}.json").write_text(json.dumps(meta, indent=2, sort_keys=True, ensure_ascii=False),
                                    encoding="utf-8")


def load_model(path: Union[str, Path]) -> Module:
    path = Path(path)
    meta = json.loads(Path(f"{path}.json").read_text(encoding="utf-8"))
    kind = meta["type"]
    config_cls = {"cnn": CnnEmbedderConfig, "ae": AutoEncoderConfig, "annc": AnncConfig, "annr": AnnrConfig}[kind]
    cfg = dict(meta["config"])
    if "filter_widths" in cfg:
        cfg["filter_widths"] = tuple(cfg["filter_widths"])
    config = config_cls(**cfg)
    if kind in ("cnn", "ae"):
        model = MODEL_TYPES[kind](Vocabulary.from_json(meta["vocab"]), config, dtype=meta["dtype"])
    else:
        model = MODEL_TYPES[kind](config, dtype=meta["dtype"])
    model.load_state_dict(serialize.load(path))
    return model
