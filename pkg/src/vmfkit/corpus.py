"""TF-IDF embedding of text corpora onto the unit sphere.

Pipeline: read one document per file (class = parent directory), tokenize,
build a pruned vocabulary, weight term counts by ``g`` and normalize.  Two
weightings are available:

``total-count`` (default)
    ``g_d = log(N / sum_n v_d^n)`` with ``v_d^n`` the count of token ``d``
    in document ``n``.
``doc-freq``
    ``g_d = log(N / df_d)``.

File formats
------------
Sparse matrix (UTF-8, ``\\n`` line ends)::

    # vmfkit-sparse 1 dim=<D> n=<N>
    <doc_id> <class> <idx>:<val> <idx>:<val> ...

with 0-based strictly increasing indices and shortest round-trip floats.
Vocabulary: tab-separated with header ``token  doc_freq  idf``.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .exceptions import ClassTooSmall, DomainError, EmptyCorpus, SchemaVersionError

MATRIX_FORMAT = "vmfkit-sparse"
MATRIX_VERSION = 1
DEFAULT_MAX_DF = 0.15
IDF_VARIANTS = ("total-count", "doc-freq")

_TOKEN = re.compile(r"[^\W_]+")
_HEADER_LINE = re.compile(r"^[A-Za-z][\w-]*:")


def tokenize(text: str) -> list[str]:
    """Lowercase alphanumeric runs, without pure digits or 1-character tokens."""
    return [t for t in _TOKEN.findall(text.lower()) if len(t) >= 2 and not t.isdigit()]


def strip_headers(text: str) -> str:
    """Drop a leading block of ``Key: value`` lines up to the first blank line."""
    lines = text.splitlines()
    if not lines or not _HEADER_LINE.match(lines[0]):
        return text
    for i, line in enumerate(lines):
        if not line.strip():
            return "\n".join(lines[i + 1 :])
    return ""


def load_stopwords(path=None) -> frozenset:
    """Stopwords from ``path`` (one per line, ``#`` comments) or the bundled SMART list."""
    if path is None:
        text = resources.files("vmfkit").joinpath("data/smart_stopwords.txt").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip() and not w.startswith("#"))


@dataclass(frozen=True)
class Document:
    doc_id: str
    label: str
    text: str


def read_corpus(root, strip: bool = False) -> list[Document]:
    """All files under ``root/<class>/``, sorted by class then relative path."""
    root = Path(root)
    if not root.is_dir():
        raise EmptyCorpus(f"{root} is not a directory")
    docs = []
    for cls_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        for f in sorted(p for p in cls_dir.rglob("*") if p.is_file()):
            text = f.read_text(encoding="utf-8", errors="replace")
            doc_id = f.relative_to(root).as_posix().replace(" ", "_")
            docs.append(Document(doc_id, cls_dir.name, strip_headers(text) if strip else text))
    if not docs:
        raise EmptyCorpus(f"no documents under {root}")
    return docs


@dataclass(frozen=True, eq=False)
class Vocabulary:
    tokens: tuple
    doc_freq: np.ndarray
    idf: np.ndarray
    index: dict = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "index", {t: i for i, t in enumerate(self.tokens)})

    def __len__(self):
        return len(self.tokens)


def build_vocabulary(docs, P: int = 1, max_df: float = DEFAULT_MAX_DF, stopwords=None, idf: str = "total-count") -> Vocabulary:
    """Tokens in at least ``P`` and at most ``max_df * N`` documents, minus stopwords.

    ``docs`` is a sequence of token lists.  Tokens are ordered lexicographically.
    """
    if int(P) != P or P < 1:
        raise DomainError(f"P must be a positive integer, got {P}")
    if not 0.0 < max_df <= 1.0:
        raise DomainError(f"max_df must lie in (0, 1], got {max_df}")
    if idf not in IDF_VARIANTS:
        raise DomainError(f"idf must be one of {IDF_VARIANTS}, got {idf!r}")
    stop = load_stopwords() if stopwords is None else frozenset(stopwords)
    N = len(docs)
    if N == 0:
        raise EmptyCorpus("no documents")
    df: Counter = Counter()
    total: Counter = Counter()
    for toks in docs:
        counts = Counter(toks)
        df.update(counts.keys())
        total.update(counts)
    cap = max_df * N
    kept = sorted(t for t, n in df.items() if P <= n <= cap and t not in stop)
    if not kept:
        raise EmptyCorpus("vocabulary is empty after filtering")
    dfs = np.array([df[t] for t in kept], dtype=np.int64)
    denom = dfs if idf == "doc-freq" else np.array([total[t] for t in kept], dtype=np.int64)
    g = np.log(N / denom.astype(float))
    return Vocabulary(tuple(kept), dfs, g)


@dataclass(frozen=True)
class SparseVector:
    dim: int
    indices: tuple
    values: tuple

    def norm(self) -> float:
        return math.sqrt(math.fsum(v * v for v in self.values))

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[list(self.indices)] = self.values
        return out


def embed(tokens, vocab: Vocabulary) -> SparseVector | None:
    """``(v * g) / |v * g|`` for term counts ``v``; ``None`` if that norm is zero."""
    counts = Counter(vocab.index[t] for t in tokens if t in vocab.index)
    idx = sorted(i for i in counts if vocab.idf[i] != 0.0)
    vals = [counts[i] * float(vocab.idf[i]) for i in idx]
    norm = math.sqrt(math.fsum(v * v for v in vals))
    if norm == 0.0:
        return None
    return SparseVector(len(vocab), tuple(idx), tuple(v / norm for v in vals))


def subsample_balanced(labels, per_class: int, seed) -> np.ndarray:
    """Indices of exactly ``per_class`` items per class, grouped by sorted class."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    out = []
    for cls in sorted(set(labels.tolist())):
        members = np.flatnonzero(labels == cls)
        if members.size < per_class:
            raise ClassTooSmall(f"class {cls!r} has {members.size} < {per_class} documents")
        out.append(np.sort(rng.choice(members, size=per_class, replace=False)))
    return np.concatenate(out) if out else np.array([], dtype=int)


# ---------------------------------------------------------------------------
# Pipeline and file formats


@dataclass
class EmbeddedCorpus:
    vocab: Vocabulary
    doc_ids: list
    labels: list
    vectors: list
    dropped: list

    def matrix(self) -> sp.csr_matrix:
        return vectors_to_csr(self.vectors, len(self.vocab))


def vectors_to_csr(vectors, dim) -> sp.csr_matrix:
    indptr = np.cumsum([0] + [len(v.indices) for v in vectors])
    indices = np.array([i for v in vectors for i in v.indices], dtype=np.int64)
    data = np.array([x for v in vectors for x in v.values], dtype=float)
    return sp.csr_matrix((data, indices, indptr), shape=(len(vectors), dim))


def embed_corpus(docs, P=1, max_df=DEFAULT_MAX_DF, stopwords=None, idf="total-count") -> EmbeddedCorpus:
    """Vocabulary and unit vectors for ``docs``; documents embedding to zero are dropped."""
    token_lists = [tokenize(d.text) for d in docs]
    vocab = build_vocabulary(token_lists, P, max_df, stopwords, idf)
    ids, labels, vecs, dropped = [], [], [], []
    for d, toks in zip(docs, token_lists):
        vec = embed(toks, vocab)
        if vec is None:
            dropped.append(d.doc_id)
            continue
        ids.append(d.doc_id)
        labels.append(d.label)
        vecs.append(vec)
    if not vecs:
        raise EmptyCorpus("every document embedded to the zero vector")
    return EmbeddedCorpus(vocab, ids, labels, vecs, dropped)


def write_matrix(path, doc_ids, labels, matrix) -> None:
    X = sp.csr_matrix(matrix)
    lines = [f"# {MATRIX_FORMAT} {MATRIX_VERSION} dim={X.shape[1]} n={X.shape[0]}"]
    for n, (doc_id, label) in enumerate(zip(doc_ids, labels)):
        lo, hi = X.indptr[n], X.indptr[n + 1]
        order = np.argsort(X.indices[lo:hi], kind="stable")
        entries = " ".join(f"{int(X.indices[lo + j])}:{float(X.data[lo + j])!r}" for j in order)
        lines.append(f"{doc_id} {label} {entries}".rstrip())
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_matrix(path):
    """Return ``(doc_ids, labels, csr_matrix)``."""
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text:
        raise SchemaVersionError(f"{path} is empty")
    head = text[0].split()
    if len(head) != 5 or head[1] != MATRIX_FORMAT or head[2] != str(MATRIX_VERSION):
        raise SchemaVersionError(f"{path}: unsupported matrix header {text[0]!r}")
    dim = int(head[3].removeprefix("dim="))
    n = int(head[4].removeprefix("n="))
    ids, labels, rows, cols, vals = [], [], [], [], []
    for r, line in enumerate(text[1:]):
        parts = line.split()
        ids.append(parts[0])
        labels.append(parts[1])
        for item in parts[2:]:
            i, v = item.split(":")
            rows.append(r)
            cols.append(int(i))
            vals.append(float(v))
    if len(ids) != n:
        raise SchemaVersionError(f"{path}: header announces {n} rows, found {len(ids)}")
    X = sp.csr_matrix((vals, (rows, cols)), shape=(n, dim))
    return ids, labels, X


def write_vocab(path, vocab: Vocabulary) -> None:
    lines = ["token\tdoc_freq\tidf"]
    lines += [f"{t}\t{int(df)}\t{float(g)!r}" for t, df, g in zip(vocab.tokens, vocab.doc_freq, vocab.idf)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_vocab(path) -> Vocabulary:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "token\tdoc_freq\tidf":
        raise SchemaVersionError(f"{path}: missing vocabulary header")
    rows = [line.split("\t") for line in lines[1:]]
    return Vocabulary(
        tuple(r[0] for r in rows),
        np.array([int(r[1]) for r in rows], dtype=np.int64),
        np.array([float(r[2]) for r in rows]),
    )
