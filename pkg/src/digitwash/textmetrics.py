"""Dictionary/regex scanning of MD&A text.

Produces per firm-year: digital-transformation word share (DTW), firm-level
economic policy uncertainty share (FEPU), net-tone sentiment, and text length.
No word segmentation is attempted for Chinese text; terms are matched as
substrings (or regexes when flagged), which is a documented limitation.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass

import pandas as pd

from .errors import EmptyDocument, InvalidRegex

_WS = re.compile(r"\s+")


def normalize_text(text):
    """Collapse runs of whitespace to single spaces and strip the ends."""
    return _WS.sub(" ", text).strip()


@dataclass
class TermDictionary:
    """Ordered list of terms; each term is literal unless regex-flagged.

    Dictionary files are newline-delimited UTF-8; lines starting with ``re:``
    are treated as regular expressions, ``#`` lines are comments. Matching is
    case-insensitive for ASCII letters. Regexes are compiled at load time so
    a bad pattern fails here, never during scanning.
    """

    name: str
    terms: list  # list of (term, is_regex)

    def __post_init__(self):
        if not self.terms:
            raise ValueError(f"dictionary {self.name!r} has no terms")
        seen, deduped = set(), []
        for term, is_regex in self.terms:
            if (term, is_regex) in seen:
                continue
            seen.add((term, is_regex))
            deduped.append((term, is_regex))
        self.terms = deduped
        self._compiled = []
        for term, is_regex in self.terms:
            if is_regex:
                try:
                    self._compiled.append(re.compile(term, re.IGNORECASE))
                except re.error as exc:
                    raise InvalidRegex(term, str(exc)) from exc
            else:
                self._compiled.append(term.lower())

    @classmethod
    def from_terms(cls, name, terms):
        return cls(name, [(t, False) for t in terms])

    @classmethod
    def from_file(cls, path, name=None):
        terms = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if line.startswith("re:"):
                    terms.append((line[3:], True))
                else:
                    terms.append((line, False))
        return cls(name or str(path), terms)


def count_term_hits(text, dictionary):
    """Total non-overlapping occurrence count over all dictionary terms.

    Occurrences of different terms are counted independently; literal matching
    is case-insensitive.
    """
    if not text:
        return 0
    lowered = text.lower()
    hits = 0
    for pat in dictionary._compiled:
        if isinstance(pat, str):
            hits += lowered.count(pat)
        else:
            hits += len(pat.findall(text))
    return hits


def measure_length(text):
    """Count of Unicode scalar values excluding whitespace and control chars."""
    return sum(
        1 for ch in text
        if not ch.isspace() and not unicodedata.category(ch).startswith("C")
    )


@dataclass
class TextMetricsRecord:
    firm_id: str
    year: int
    total_words: int
    dt_hits: int
    dtw: float
    epu_hits: int
    fepu: float
    pos_hits: int
    neg_hits: int
    sentiment: float


def compute_text_metrics(doc, dt_dict, epu_dict, pos_dict, neg_dict):
    """Scan one MD&A document against the four dictionaries.

    Raises EmptyDocument when the text has zero countable characters.
    """
    text = normalize_text(doc.text)
    total = measure_length(text)
    if total == 0:
        raise EmptyDocument(doc.firm_id, doc.year)
    dt = count_term_hits(text, dt_dict)
    epu = count_term_hits(text, epu_dict)
    pos = count_term_hits(text, pos_dict)
    neg = count_term_hits(text, neg_dict)
    sentiment = (pos - neg) / (pos + neg) if (pos + neg) > 0 else 0.0
    return TextMetricsRecord(
        firm_id=doc.firm_id,
        year=doc.year,
        total_words=total,
        dt_hits=dt,
        dtw=dt / total,
        epu_hits=epu,
        fepu=epu / total,
        pos_hits=pos,
        neg_hits=neg,
        sentiment=sentiment,
    )


def compute_corpus_metrics(docs, dt_dict, epu_dict, pos_dict, neg_dict):
    """Scan a corpus; returns (DataFrame sorted by key, skipped list)."""
    rows, skipped = [], []
    for doc in docs:
        try:
            rec = compute_text_metrics(doc, dt_dict, epu_dict, pos_dict, neg_dict)
        except EmptyDocument:
            skipped.append({"firm_id": doc.firm_id, "year": doc.year, "reason": "empty document"})
            continue
        rows.append(vars(rec))
    df = pd.DataFrame(
        rows,
        columns=["firm_id", "year", "total_words", "dt_hits", "dtw",
                 "epu_hits", "fepu", "pos_hits", "neg_hits", "sentiment"],
    )
    df = df.sort_values(["firm_id", "year"], kind="mergesort").reset_index(drop=True)
    return df, skipped
