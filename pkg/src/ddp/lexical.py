"""Transcript normalization, TF-IDF statistics, small word embeddings, and
document vectors for the text classifiers.

The stopword list and lemmatizer exception lexicon ship as frozen,
versioned data files so tokenization is reproducible byte for byte.
Filler tokens ("um", "uh", "ah") are deliberately absent from the stopword
list: they carry signal for this task.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DataError
from .media_ingest import RawDocument

_TOKEN_RE = re.compile(r"[^\W_]+(?:'[^\W_]+)*", re.UNICODE)
_VOWELS = set("aeiou")

FILLERS = frozenset({"um", "uh", "ah"})


def _load_data_lines(name: str) -> list[str]:
    text = resources.files("ddp").joinpath("data", name).read_text(encoding="utf-8")
    return [ln.strip() for ln in text.splitlines()
            if ln.strip() and not ln.startswith("#")]


def default_stopwords() -> frozenset[str]:
    return frozenset(_load_data_lines("stopwords.txt"))


def default_lemma_exceptions() -> dict[str, str]:
    pairs = {}
    for line in _load_data_lines("lemma_exceptions.txt"):
        word, _, lemma = line.partition("\t")
        pairs[word] = lemma
    return pairs


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric boundaries; apostrophes stay
    inside tokens."""
    return [t.strip("'") for t in _TOKEN_RE.findall(text.lower()) if t.strip("'")]


def pos_tag(token: str) -> str:
    """Coarse suffix-based tag; only ever used as a lemmatizer hint."""
    if token.endswith("ly"):
        return "ADV"
    if token.endswith(("ing", "ed")):
        return "VERB"
    return "NOUN"


class RuleLemmatizer:
    """Small rule-based suffix stripper with an exception lexicon.

    Applied to a fixpoint (bounded), so lemmatize(lemmatize(w)) ==
    lemmatize(w) by construction.
    """

    _DOUBLED = set("bdgmnprt")

    def __init__(self, exceptions: dict[str, str] | None = None):
        self.exceptions = dict(default_lemma_exceptions() if exceptions is None else exceptions)

    def _undouble(self, base: str) -> str:
        if len(base) >= 4 and base[-1] == base[-2] and base[-1] in self._DOUBLED:
            return base[:-1]
        return base

    def _once(self, word: str) -> str:
        if word in self.exceptions:
            return self.exceptions[word]
        if len(word) <= 3:
            return word
        tag = pos_tag(word)
        if word.endswith("'s"):
            return word[:-2]
        if word.endswith("sses"):
            return word[:-2]
        if word.endswith("ies") and len(word) > 4:
            return word[:-3] + "y"
        if word.endswith(("ss", "us", "is")):
            return word
        if word.endswith("es") and (word[-3] in "oxz" or word.endswith(("ches", "shes"))):
            return word[:-2]
        if word.endswith("s"):
            return word[:-1]
        if word.endswith("ied"):
            return word[:-1] if len(word) == 4 else word[:-3] + "y"
        if word.endswith("ed") and len(word) >= 5:
            return self._undouble(word[:-2])
        if word.endswith("ing") and len(word) > 5:
            return self._undouble(word[:-3])
        if tag == "ADV" and word.endswith("ly") and len(word) > 4:
            base = word[:-2]
            if len(base) >= 4 and not base.endswith(("i", "l")):
                return base
        return word

    def __call__(self, word: str) -> str:
        for _ in range(5):
            nxt = self._once(word)
            if nxt == word:
                return word
            word = nxt
        return word


@dataclass(frozen=True)
class TokenizedDocument:
    tokens: tuple[str, ...]
    source_video: str


def normalize_text(doc: RawDocument, stopwords: frozenset[str] | None = None,
                   lemmatizer=None) -> TokenizedDocument:
    """Lowercase, split, drop stopwords, lemmatize survivors.

    Lemmas that land on a stopword are dropped too, which makes the whole
    map idempotent. Empty output is allowed (downstream abstention).
    """
    stopwords = default_stopwords() if stopwords is None else stopwords
    lemmatizer = RuleLemmatizer() if lemmatizer is None else lemmatizer
    out = []
    for token in tokenize(doc.text):
        if token in stopwords:
            continue
        lemma = lemmatizer(token)
        if lemma and lemma not in stopwords:
            out.append(lemma)
    return TokenizedDocument(tokens=tuple(out), source_video=doc.source_video)


# -- TF-IDF --------------------------------------------------------------------

@dataclass(frozen=True)
class TfidfModel:
    vocabulary: dict[str, int]  # token -> dense column index
    idf: np.ndarray             # aligned with vocabulary indices
    n_docs: int


def tfidf_fit(docs: list[TokenizedDocument]) -> TfidfModel:
    """Vocabulary over all training tokens with smoothed idf:
    idf(t) = ln((1+N)/(1+df(t))) + 1."""
    if not any(doc.tokens for doc in docs):
        raise DataError("tfidf_fit on an all-empty corpus")
    n_docs = len(docs)
    df: dict[str, int] = {}
    for doc in docs:
        for token in set(doc.tokens):
            df[token] = df.get(token, 0) + 1
    vocabulary = {token: i for i, token in enumerate(sorted(df))}
    idf = np.empty(len(vocabulary))
    for token, i in vocabulary.items():
        idf[i] = math.log((1 + n_docs) / (1 + df[token])) + 1.0
    return TfidfModel(vocabulary=vocabulary, idf=idf, n_docs=n_docs)


def count_transform(doc: TokenizedDocument, model: TfidfModel) -> np.ndarray:
    """Raw in-vocabulary term counts (the multinomial NB input)."""
    counts = np.zeros(len(model.vocabulary))
    for token in doc.tokens:
        idx = model.vocabulary.get(token)
        if idx is not None:
            counts[idx] += 1.0
    return counts


def tfidf_transform(doc: TokenizedDocument, model: TfidfModel) -> np.ndarray:
    """Term counts weighted by idf, then L2-normalized. Out-of-vocabulary
    tokens are ignored; an empty or all-OOV document maps to the zero
    vector."""
    weighted = count_transform(doc, model) * model.idf
    norm = np.linalg.norm(weighted)
    return weighted / norm if norm > 0 else weighted


# -- word embeddings -----------------------------------------------------------

@dataclass(frozen=True)
class EmbeddingConfig:
    dim: int = 100
    window: int = 5
    negative: int = 5
    epochs: int = 15
    learning_rate: float = 0.025
    min_learning_rate: float = 1e-4
    seed: int = 0


@dataclass(frozen=True)
class EmbeddingTable:
    dim: int
    vectors: dict[str, np.ndarray]
    config: EmbeddingConfig


def _sigmoid(x: np.ndarray | float):
    return 1.0 / (1.0 + np.exp(-np.clip(x, -30.0, 30.0)))


def train_word_embeddings(docs: list[TokenizedDocument], dim: int | None = None,
                          config: EmbeddingConfig | None = None) -> EmbeddingTable:
    """Skip-gram with negative sampling, trained in a fixed single-threaded
    order so a seed fully determines the table."""
    config = config or EmbeddingConfig()
    if dim is not None:
        config = EmbeddingConfig(dim=dim, window=config.window, negative=config.negative,
                                 epochs=config.epochs, learning_rate=config.learning_rate,
                                 min_learning_rate=config.min_learning_rate, seed=config.seed)
    counts: dict[str, int] = {}
    for doc in docs:
        for token in doc.tokens:
            counts[token] = counts.get(token, 0) + 1
    vocab = sorted(counts)
    if len(vocab) < 2:
        raise DataError(f"embedding corpus needs >= 2 distinct tokens, got {len(vocab)}")
    index = {t: i for i, t in enumerate(vocab)}
    freqs = np.array([counts[t] for t in vocab], dtype=np.float64)
    noise = freqs ** 0.75
    noise_cdf = np.cumsum(noise / noise.sum())

    rng = np.random.default_rng(config.seed)
    w_in = (rng.random((len(vocab), config.dim)) - 0.5) / config.dim
    w_out = np.zeros((len(vocab), config.dim))

    sequences = [[index[t] for t in doc.tokens] for doc in docs if len(doc.tokens) >= 2]
    total_steps = max(1, config.epochs * sum(len(s) for s in sequences))
    step = 0
    for _ in range(config.epochs):
        for seq in sequences:
            for pos, center in enumerate(seq):
                lr = max(config.min_learning_rate,
                         config.learning_rate * (1.0 - step / total_steps))
                step += 1
                span = int(rng.integers(1, config.window + 1))
                lo, hi = max(0, pos - span), min(len(seq), pos + span + 1)
                for ctx_pos in range(lo, hi):
                    if ctx_pos == pos:
                        continue
                    ctx = seq[ctx_pos]
                    negatives = np.searchsorted(noise_cdf, rng.random(config.negative))
                    targets = np.concatenate([[ctx], negatives])
                    labels = np.zeros(len(targets))
                    labels[0] = 1.0
                    v = w_in[center]
                    outs = w_out[targets]
                    grad = _sigmoid(outs @ v) - labels
                    w_in[center] = v - lr * (grad @ outs)
                    w_out[targets] -= lr * np.outer(grad, v)

    vectors = {t: w_in[i].copy() for t, i in index.items()}
    return EmbeddingTable(dim=config.dim, vectors=vectors, config=config)


def embed_document(doc: TokenizedDocument, tfidf: TfidfModel,
                   emb: EmbeddingTable) -> np.ndarray:
    """TF-IDF-weighted mean of word vectors over in-vocabulary tokens.

    Invariant under rescaling of the weights. Empty or all-OOV documents
    map to the zero vector (an abstention downstream).
    """
    weights = tfidf_transform(doc, tfidf)
    out = np.zeros(emb.dim)
    total = 0.0
    for token in set(doc.tokens):
        idx = tfidf.vocabulary.get(token)
        vec = emb.vectors.get(token)
        if idx is None or vec is None or weights[idx] == 0.0:
            continue
        out += weights[idx] * vec
        total += weights[idx]
    return out / total if total > 0 else np.zeros(emb.dim)
