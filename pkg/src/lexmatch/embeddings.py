"""Word embedding I/O and normalization.

Embeddings are kept as a (Lexicon, EmbeddingMatrix) pair: the lexicon maps
words to contiguous integer ids, the matrix stores one embedding per column
so that column i belongs to word i of the lexicon.  File format is the
word2vec text format: a "n d" header line followed by n lines of
"word v1 ... vd", UTF-8 encoded.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

NORM_NONE = "none"
NORM_UNIT = "unit"
NORM_UNIT_CENTER_UNIT = "unit_center_unit"
NORMALIZATION_SCHEMES = (NORM_NONE, NORM_UNIT, NORM_UNIT_CENTER_UNIT)


@dataclass
class Lexicon:
    """Ordered vocabulary with O(1) word <-> id lookup.

    Ids are dense, start at 0 and follow file order (descending corpus
    frequency in the usual pretrained files, which is what the frequency
    rank restriction in the trainer relies on).
    """

    words: list[str]
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.index = {}
        for i, w in enumerate(self.words):
            if w in self.index:
                raise ValueError(f"duplicate word {w!r} in lexicon")
            self.index[w] = i

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.index

    def id(self, word: str) -> int:
        return self.index[word]

    def word(self, i: int) -> str:
        return self.words[i]


@dataclass
class EmbeddingMatrix:
    """Dense embedding matrix, shape (dim, n_words); column i = word i."""

    dim: int
    data: np.ndarray

    def __post_init__(self) -> None:
        self.data = np.ascontiguousarray(self.data)
        if self.data.ndim != 2 or self.data.shape[0] != self.dim:
            raise ValueError(
                f"embedding matrix must have shape ({self.dim}, n), got {self.data.shape}"
            )
        if not np.all(np.isfinite(self.data)):
            raise ValueError("embedding matrix contains non-finite entries")

    @property
    def n_words(self) -> int:
        return self.data.shape[1]


def load_embeddings(
    path: str,
    max_vocab: int | None = None,
    dtype=np.float64,
) -> tuple[Lexicon, EmbeddingMatrix]:
    """Read word2vec text format.

    Tolerates \\r\\n line endings and a missing trailing newline.  Raises
    ValueError with a 1-based line number for a malformed header, a row
    whose value count disagrees with the header dimension, a duplicate
    word, or a non-finite value.  max_vocab keeps only the first rows,
    i.e. the most frequent words in frequency-sorted files.
    """
    words: list[str] = []
    seen: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header:
            raise ValueError("line 1: empty file, expected 'n d' header")
        parts = header.rstrip("\r\n").split()
        if len(parts) != 2:
            raise ValueError(f"line 1: malformed header {header.rstrip()!r}, expected 'n d'")
        try:
            n_declared, dim = int(parts[0]), int(parts[1])
        except ValueError:
            raise ValueError(
                f"line 1: malformed header {header.rstrip()!r}, expected two integers"
            ) from None
        if n_declared < 0 or dim <= 0:
            raise ValueError(f"line 1: invalid header counts n={n_declared} d={dim}")

        n_keep = n_declared if max_vocab is None else min(n_declared, max_vocab)
        data = np.empty((n_keep, dim), dtype=dtype)
        for row in range(n_keep):
            lineno = row + 2
            line = fh.readline()
            if not line:
                raise ValueError(f"line {lineno}: unexpected end of file, header declared {n_declared} rows")
            fields = line.rstrip("\r\n").split(" ")
            # tolerate a trailing space before the newline
            if fields and fields[-1] == "":
                fields.pop()
            if len(fields) != dim + 1:
                raise ValueError(
                    f"line {lineno}: expected {dim} values for word {fields[0]!r}, got {len(fields) - 1}"
                )
            word = fields[0]
            if word in seen:
                raise ValueError(f"line {lineno}: duplicate word {word!r} (first at line {seen[word]})")
            seen[word] = lineno
            try:
                vec = np.asarray(fields[1:], dtype=dtype)
            except ValueError:
                raise ValueError(f"line {lineno}: unparseable value for word {word!r}") from None
            if not np.all(np.isfinite(vec)):
                raise ValueError(f"line {lineno}: non-finite value for word {word!r}")
            words.append(word)
            data[row] = vec

    return Lexicon(words), EmbeddingMatrix(dim, data.T)


def save_embeddings(path: str, lexicon: Lexicon, matrix: EmbeddingMatrix) -> None:
    """Write word2vec text format; inverse of load_embeddings up to float formatting."""
    if len(lexicon) != matrix.n_words:
        raise ValueError(
            f"lexicon size {len(lexicon)} != matrix column count {matrix.n_words}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(lexicon)} {matrix.dim}\n")
        for i, word in enumerate(lexicon.words):
            vals = " ".join(repr(float(v)) for v in matrix.data[:, i])
            fh.write(f"{word} {vals}\n")


def _unit_columns(data: np.ndarray, words: list[str] | None) -> np.ndarray:
    norms = np.linalg.norm(data, axis=0)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        i = int(zero[0])
        name = words[i] if words is not None else f"column {i}"
        raise ValueError(f"cannot unit-normalize zero vector for {name!r}")
    return data / norms


def normalize(
    matrix: EmbeddingMatrix,
    scheme: str,
    words: list[str] | None = None,
) -> EmbeddingMatrix:
    """Apply a normalization scheme, returning a new matrix.

    unit: scale each column to unit length.  unit_center_unit: unit-scale,
    subtract the per-dimension mean across the vocabulary, unit-scale
    again.  Zero-norm columns are an error (named via `words` when given);
    use normalize_pair with drop_zero=True to drop them instead.
    """
    if scheme not in NORMALIZATION_SCHEMES:
        raise ValueError(f"unknown normalization scheme {scheme!r}, expected one of {NORMALIZATION_SCHEMES}")
    if scheme == NORM_NONE:
        return EmbeddingMatrix(matrix.dim, matrix.data.copy())
    data = _unit_columns(matrix.data, words)
    if scheme == NORM_UNIT_CENTER_UNIT:
        data = data - data.mean(axis=1, keepdims=True)
        data = _unit_columns(data, words)
    return EmbeddingMatrix(matrix.dim, data)


def normalize_pair(
    lexicon: Lexicon,
    matrix: EmbeddingMatrix,
    scheme: str,
    drop_zero: bool = False,
) -> tuple[Lexicon, EmbeddingMatrix]:
    """normalize() on a (lexicon, matrix) pair.

    With drop_zero=True, words with zero-norm vectors are removed from
    both sides before normalizing (ids are recompacted); otherwise a zero
    vector raises naming the offending word.
    """
    if len(lexicon) != matrix.n_words:
        raise ValueError(
            f"lexicon size {len(lexicon)} != matrix column count {matrix.n_words}"
        )
    words = lexicon.words
    data = matrix.data
    if drop_zero and scheme != NORM_NONE:
        keep = np.linalg.norm(data, axis=0) != 0.0
        if not np.all(keep):
            words = [w for w, k in zip(words, keep) if k]
            data = data[:, keep]
    out = normalize(EmbeddingMatrix(matrix.dim, data), scheme, words)
    return Lexicon(list(words)), out
