"""Lexicon-based concept matching: query text -> referenced categories.

A lexicon maps normalized terms (possibly several words long) to the categories
they may denote. A term with ``m`` candidate categories is ambiguous when
``m > 1``; each of its categories then receives weight ``1/m``.
"""

from __future__ import annotations

import csv
import re
from collections.abc import Iterable
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from eccf.datamodel import Interner
from eccf.errors import DataError

_PUNCT = re.compile(r"[^\w\s]|_")
_SPACE = re.compile(r"\s+")


def normalize_query(text: str) -> str:
    """Lowercase, turn punctuation into spaces, collapse and trim whitespace."""
    text = _PUNCT.sub(" ", text.lower())
    return _SPACE.sub(" ", text).strip()


@dataclass(frozen=True)
class QueryMatch:
    """Categories referenced by one query.

    ``ambiguous`` holds one ``(categories, weight)`` group per distinct
    ambiguous term, where ``weight == 1/len(categories)``.
    """

    unambiguous: frozenset[int] = frozenset()
    ambiguous: tuple[tuple[frozenset[int], Fraction], ...] = ()

    def __bool__(self) -> bool:
        return bool(self.unambiguous or self.ambiguous)

    @property
    def categories(self) -> frozenset[int]:
        out = set(self.unambiguous)
        for group, _ in self.ambiguous:
            out |= group
        return frozenset(out)


@dataclass
class Lexicon:
    categories: Interner
    terms: dict[str, frozenset[int]] = field(default_factory=dict)

    def __post_init__(self):
        for term, cats in self.terms.items():
            if not cats:
                raise DataError(f"lexicon term {term!r} maps to no category")
        self._max_len = max((len(t.split(" ")) for t in self.terms), default=0)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]], categories: Interner | None = None) -> Lexicon:
        """Aggregate ``(term, category name)`` pairs.

        With a frozen ``categories`` interner, unknown category names raise
        :class:`DataError`; otherwise new names are interned.
        """
        categories = categories if categories is not None else Interner(kind="category")
        agg: dict[str, set[int]] = {}
        for term, cat in pairs:
            norm = normalize_query(term)
            if not norm:
                raise DataError(f"lexicon term {term!r} is empty after normalization")
            cat = cat.strip()
            if categories.frozen and cat not in categories:
                raise DataError(f"lexicon category {cat!r} is not in the category universe")
            agg.setdefault(norm, set()).add(categories.intern(cat))
        return cls(categories, {t: frozenset(c) for t, c in agg.items()})

    def ambiguity(self, term: str) -> int:
        """Number of categories ``term`` may refer to (``m``)."""
        return len(self.terms[term])

    @property
    def max_term_length(self) -> int:
        return self._max_len

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: object) -> bool:
        return term in self.terms


def load_lexicon(path: str | Path, categories: Interner | None = None) -> Lexicon:
    """Read a ``term,category`` CSV into a :class:`Lexicon`."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"term", "category"} <= set(reader.fieldnames):
            raise DataError(f"{path}: expected header 'term,category'")
        return Lexicon.from_pairs(((row["term"], row["category"]) for row in reader), categories)


def match_query(text: str, lex: Lexicon) -> QueryMatch:
    """Greedy longest-match, left-to-right scan of ``text`` against ``lex``.

    ``text`` is normalized again here, which is idempotent for already
    normalized input.
    """
    tokens = normalize_query(text).split(" ")
    if tokens == [""]:
        return QueryMatch()
    unambiguous: set[int] = set()
    groups: dict[frozenset[int], Fraction] = {}
    i, n = 0, len(tokens)
    while i < n:
        for span in range(min(lex.max_term_length, n - i), 0, -1):
            cats = lex.terms.get(" ".join(tokens[i : i + span]))
            if cats is not None:
                if len(cats) == 1:
                    unambiguous |= cats
                else:
                    groups[cats] = Fraction(1, len(cats))
                i += span
                break
        else:
            i += 1
    ordered = tuple(sorted(groups.items(), key=lambda g: sorted(g[0])))
    return QueryMatch(frozenset(unambiguous), ordered)

