"""Desk-scale victim classifiers: multinomial naive Bayes over token counts
and softmax regression over hashed unigram+bigram features.

Both are pure functions of (parameters, text) at prediction time and train
deterministically from a seed, which the attack tests rely on. Model files
use a self-describing JSON layout with base64-encoded little-endian arrays so
that identical training runs produce byte-identical files.
"""

from __future__ import annotations

import base64
import hashlib
import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyDataset, SingleClassDataset
from .tokenization import tokenize

HASH_DIM = 2 ** 18


def _victim_tokens(text: str, lowercase: bool) -> list[str]:
    toks = tokenize(text)
    if lowercase:
        toks = [t.lower() for t in toks]
    return toks


def _encode_array(arr: np.ndarray) -> dict:
    little = arr.astype("<f8") if arr.dtype.kind == "f" else arr.astype("<i8")
    return {
        "dtype": str(little.dtype),
        "shape": list(arr.shape),
        "data": base64.b64encode(little.tobytes()).decode("ascii"),
    }


def _decode_array(d: dict) -> np.ndarray:
    raw = base64.b64decode(d["data"])
    return np.frombuffer(raw, dtype=d["dtype"]).reshape(d["shape"]).copy()


@dataclass
class NaiveBayesVictim:
    """Multinomial naive Bayes with add-one smoothing on token counts."""

    classes: list[int]
    vocab: dict[str, int]
    class_log_prior: np.ndarray       # (K,)
    feature_log_prob: np.ndarray      # (K, V)
    lowercase: bool = True

    kind = "naive-bayes"

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    def _log_scores(self, text: str) -> np.ndarray:
        scores = self.class_log_prior.copy()
        for tok in _victim_tokens(text, self.lowercase):
            idx = self.vocab.get(tok)
            if idx is not None:
                scores += self.feature_log_prob[:, idx]
        return scores

    def predict_probs(self, texts: Sequence[str]) -> list[list[float]]:
        out = []
        for text in texts:
            scores = self._log_scores(text)
            scores -= scores.max()
            probs = np.exp(scores)
            probs /= probs.sum()
            out.append(probs.tolist())
        return out

    def predict_labels(self, texts: Sequence[str]) -> list[int]:
        return [
            self.classes[int(np.argmax(self._log_scores(text)))] for text in texts
        ]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "classes": self.classes,
            "lowercase": self.lowercase,
            "vocab": sorted(self.vocab, key=self.vocab.get),
            "class_log_prior": _encode_array(self.class_log_prior),
            "feature_log_prob": _encode_array(self.feature_log_prob),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NaiveBayesVictim":
        vocab = {tok: i for i, tok in enumerate(d["vocab"])}
        return cls(
            classes=[int(c) for c in d["classes"]],
            vocab=vocab,
            class_log_prior=_decode_array(d["class_log_prior"]),
            feature_log_prob=_decode_array(d["feature_log_prob"]),
            lowercase=bool(d["lowercase"]),
        )


@dataclass
class LogisticRegressionVictim:
    """Softmax regression over hashed unigram+bigram counts (dimension 2^18)."""

    classes: list[int]
    weights: np.ndarray   # (K, D)
    bias: np.ndarray      # (K,)
    lowercase: bool = True

    kind = "logistic-regression"

    def __post_init__(self) -> None:
        self._hash_cache: dict[str, int] = {}

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    def _feature_index(self, ngram: str) -> int:
        idx = self._hash_cache.get(ngram)
        if idx is None:
            digest = hashlib.blake2b(ngram.encode("utf-8"), digest_size=8).digest()
            idx = int.from_bytes(digest, "little") % HASH_DIM
            self._hash_cache[ngram] = idx
        return idx

    def features(self, text: str) -> dict[int, float]:
        toks = _victim_tokens(text, self.lowercase)
        feats: dict[int, float] = {}
        grams = toks + [f"{a} {b}" for a, b in zip(toks, toks[1:])]
        for g in grams:
            idx = self._feature_index(g)
            feats[idx] = feats.get(idx, 0.0) + 1.0
        total = sum(feats.values())
        if total > 0:
            for k in feats:
                feats[k] /= total
        return feats

    def _logits(self, feats: dict[int, float]) -> np.ndarray:
        z = self.bias.copy()
        for idx, val in feats.items():
            z += self.weights[:, idx] * val
        return z

    def predict_probs(self, texts: Sequence[str]) -> list[list[float]]:
        out = []
        for text in texts:
            z = self._logits(self.features(text))
            z -= z.max()
            p = np.exp(z)
            p /= p.sum()
            out.append(p.tolist())
        return out

    def predict_labels(self, texts: Sequence[str]) -> list[int]:
        return [
            self.classes[int(np.argmax(self._logits(self.features(text))))]
            for text in texts
        ]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "classes": self.classes,
            "lowercase": self.lowercase,
            "weights": _encode_array(self.weights),
            "bias": _encode_array(self.bias),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LogisticRegressionVictim":
        return cls(
            classes=[int(c) for c in d["classes"]],
            weights=_decode_array(d["weights"]),
            bias=_decode_array(d["bias"]),
            lowercase=bool(d["lowercase"]),
        )


LocalVictim = NaiveBayesVictim | LogisticRegressionVictim


@dataclass(frozen=True)
class VictimTrainConfig:
    kind: str = "naive-bayes"
    lowercase: bool = True
    seed: int = 0
    epochs: int = 200
    learning_rate: float = 2.0
    l2: float = 1e-4


def train_local_victim(
    records: Sequence[tuple[str, int]], config: Optional[VictimTrainConfig] = None
) -> LocalVictim:
    """Fit a local victim on (text, label) pairs.

    Naive Bayes is closed-form from smoothed counts; logistic regression runs
    a fixed-epoch full-batch gradient procedure, so both are deterministic
    given the config seed.

    Raises
    ------
    EmptyDataset
        If no records are given.
    SingleClassDataset
        If fewer than two distinct labels are present.
    """
    config = config or VictimTrainConfig()
    if not records:
        raise EmptyDataset("no training records")
    classes = sorted({int(label) for _, label in records})
    if len(classes) < 2:
        raise SingleClassDataset(f"need >= 2 classes, found {classes}")
    if config.kind == "naive-bayes":
        return _train_naive_bayes(records, classes, config)
    if config.kind == "logistic-regression":
        return _train_logistic_regression(records, classes, config)
    raise ValueError(f"unknown victim kind {config.kind!r}")


def _train_naive_bayes(
    records: Sequence[tuple[str, int]], classes: list[int], config: VictimTrainConfig
) -> NaiveBayesVictim:
    class_idx = {c: i for i, c in enumerate(classes)}
    vocab: dict[str, int] = {}
    docs = []
    for text, label in records:
        toks = _victim_tokens(text, config.lowercase)
        for t in toks:
            if t not in vocab:
                vocab[t] = len(vocab)
        docs.append((toks, class_idx[int(label)]))
    # freeze a deterministic vocab order independent of record order
    vocab = {tok: i for i, tok in enumerate(sorted(vocab))}

    K, V = len(classes), len(vocab)
    counts = np.zeros((K, V), dtype=np.float64)
    class_counts = np.zeros(K, dtype=np.float64)
    for toks, ci in docs:
        class_counts[ci] += 1
        for t in toks:
            counts[ci, vocab[t]] += 1
    smoothed = counts + 1.0
    feature_log_prob = np.log(smoothed / smoothed.sum(axis=1, keepdims=True))
    class_log_prior = np.log(class_counts / class_counts.sum())
    return NaiveBayesVictim(
        classes=classes,
        vocab=vocab,
        class_log_prior=class_log_prior,
        feature_log_prob=feature_log_prob,
        lowercase=config.lowercase,
    )


def _train_logistic_regression(
    records: Sequence[tuple[str, int]], classes: list[int], config: VictimTrainConfig
) -> LogisticRegressionVictim:
    class_idx = {c: i for i, c in enumerate(classes)}
    K = len(classes)
    model = LogisticRegressionVictim(
        classes=classes,
        weights=np.zeros((K, HASH_DIM), dtype=np.float64),
        bias=np.zeros(K, dtype=np.float64),
        lowercase=config.lowercase,
    )
    feats = [model.features(text) for text, _ in records]
    ys = [class_idx[int(label)] for _, label in records]
    n = len(records)
    lr = config.learning_rate
    for _ in range(config.epochs):
        grad_w: dict[int, np.ndarray] = {}
        grad_b = np.zeros(K, dtype=np.float64)
        for f, y in zip(feats, ys):
            z = model._logits(f)
            z -= z.max()
            p = np.exp(z)
            p /= p.sum()
            p[y] -= 1.0
            grad_b += p
            for idx, val in f.items():
                g = grad_w.get(idx)
                if g is None:
                    g = np.zeros(K, dtype=np.float64)
                    grad_w[idx] = g
                g += p * val
        model.bias -= lr * grad_b / n
        for idx, g in grad_w.items():
            model.weights[:, idx] -= lr * (g / n + config.l2 * model.weights[:, idx])
    return model


def save_victim(model: LocalVictim, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh, sort_keys=True)
        fh.write("\n")


def load_victim(path) -> LocalVictim:
    with open(path, "r", encoding="utf-8") as fh:
        d = json.load(fh)
    kind = d.get("kind")
    if kind == NaiveBayesVictim.kind:
        return NaiveBayesVictim.from_dict(d)
    if kind == LogisticRegressionVictim.kind:
        return LogisticRegressionVictim.from_dict(d)
    raise ValueError(f"unknown victim kind {kind!r} in {path}")


def training_accuracy(model: LocalVictim, records: Sequence[tuple[str, int]]) -> float:
    preds = model.predict_labels([text for text, _ in records])
    hits = sum(1 for p, (_, y) in zip(preds, records) if p == int(y))
    return hits / len(records)
