"""Text normalization and tokenization shared by the sparse index and hash embedder.

Pipeline order: NFKD decomposition + combining-mark removal, lowercasing,
punctuation/symbol to space, whitespace tokenization, stopword removal,
suffix-strip stemming. Stopwords and the stemmer suffix table ship as data
files so the behavior is auditable and swappable per language pack.
"""

from __future__ import annotations

import unicodedata
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

_MIN_STEM_LEN = 3


class Stemmer(str, Enum):
    NONE = "none"
    SUFFIX_STRIP = "suffix_strip"


@dataclass(frozen=True)
class NormalizerConfig:
    strip_diacritics: bool = True
    lowercase: bool = True
    strip_punctuation: bool = True
    stopwords: frozenset[str] = frozenset()
    stemmer: Stemmer = Stemmer.NONE
    suffixes: tuple[str, ...] = ()
    language_pack: str = "custom"


@dataclass(frozen=True)
class TokenStream:
    tokens: tuple[str, ...] = ()

    def __iter__(self):
        return iter(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)


def _pack_dir(name: str) -> Path:
    return Path(str(resources.files("medmatch").joinpath("data", name)))


def load_language_pack(name_or_path: str) -> NormalizerConfig:
    """Load a language pack directory (stopwords.txt + suffixes.txt).

    `name_or_path` is either a shipped pack name (e.g. "ro") or a directory path.
    Stopwords are stored post-normalization so membership tests stay consistent.
    """
    path = Path(name_or_path)
    if not path.is_dir():
        path = _pack_dir(name_or_path)
    if not path.is_dir():
        raise FileNotFoundError(f"no language pack at {name_or_path}")

    base = NormalizerConfig()  # used to normalize the stopword file itself
    stopwords = set()
    stop_file = path / "stopwords.txt"
    if stop_file.exists():
        for line in stop_file.read_text(encoding="utf-8").splitlines():
            word = strip_diacritics(line.strip()).lower()
            if word:
                stopwords.add(word)

    suffixes: list[str] = []
    suffix_file = path / "suffixes.txt"
    if suffix_file.exists():
        for line in suffix_file.read_text(encoding="utf-8").splitlines():
            s = strip_diacritics(line.strip()).lower()
            if s:
                suffixes.append(s)
    # longest-match semantics regardless of file ordering
    suffixes.sort(key=len, reverse=True)

    return NormalizerConfig(
        stopwords=frozenset(stopwords),
        stemmer=Stemmer.SUFFIX_STRIP if suffixes else Stemmer.NONE,
        suffixes=tuple(suffixes),
        language_pack=name_or_path,
    )


def strip_diacritics(text: str) -> str:
    """Remove combining marks after NFKD decomposition (ă→a, ș→s, ț→t, ...)."""
    decomposed = unicodedata.normalize("NFKD", text)
    return "".join(c for c in decomposed if not unicodedata.combining(c))


def _is_separator(c: str) -> bool:
    # punctuation and symbols become token boundaries; digits are kept
    return unicodedata.category(c)[0] in ("P", "S")


def stem(token: str, suffixes: tuple[str, ...]) -> str:
    """Strip longest matching suffixes (to a fixpoint) leaving >= 3 chars.

    Iterating until nothing strips makes the pipeline idempotent: stemmed
    output passed back through the stemmer stays put.
    """
    while True:
        for suffix in suffixes:
            if token.endswith(suffix) and len(token) - len(suffix) >= _MIN_STEM_LEN:
                token = token[: -len(suffix)]
                break
        else:
            return token


def normalize(text: str, config: NormalizerConfig) -> TokenStream:
    """Run the full normalization pipeline on one text."""
    if config.strip_diacritics:
        text = strip_diacritics(text)
    if config.lowercase:
        text = text.lower()
    if config.strip_punctuation:
        text = "".join(" " if _is_separator(c) else c for c in text)

    tokens = []
    for token in text.split():
        if config.stopwords and token in config.stopwords:
            continue
        if config.stemmer is Stemmer.SUFFIX_STRIP:
            token = stem(token, config.suffixes)
        if token:
            tokens.append(token)
    return TokenStream(tokens=tuple(tokens))


def char_ngrams(text: str, n_min: int, n_max: int) -> Counter[str]:
    """Character n-grams of the diacritic-stripped lowercase text.

    The text is wrapped in boundary markers "^" and "$" so word edges are
    represented; returns a multiset.
    """
    if not (1 <= n_min <= n_max):
        raise ValueError("require 1 <= n_min <= n_max")
    cleaned = strip_diacritics(text).lower()
    if not cleaned.strip():
        return Counter()
    grams: Counter[str] = Counter()
    padded = "^" + cleaned + "$"
    for n in range(n_min, n_max + 1):
        for i in range(len(padded) - n + 1):
            grams[padded[i : i + n]] += 1
    return grams
