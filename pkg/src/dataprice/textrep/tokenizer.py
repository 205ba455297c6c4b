"""Tokenization with a fixed, versioned stopword list.

The stopword list is frozen inside the package so that vocabularies built
from the same corpus are reproducible across installs.
"""

from __future__ import annotations

import re

STOPWORDS_VERSION = "sw-1"

STOPWORDS = frozenset("""
about above after again against all am an and any are aren as at be because
been before being below between both but by can cannot could couldn did didn
do does doesn doing don down during each few for from further had hadn has
hasn have haven having he her here hers herself him himself his how if in
into is isn it its itself just me more most mustn my myself no nor not of
off on once only or other ought our ours ourselves out over own same shan
she should shouldn so some such than that the their theirs them themselves
then there these they this those through to too under until up very was
wasn we were weren what when where which while who whom why will with won
would wouldn you your yours yourself yourselves
""".split())

_SPLIT = re.compile(r"[^a-z]+")


def tokenize(text: str) -> list[str]:
    """Lowercase, split on non-alphabetic characters, keep tokens of length
    >= 2 that are not stopwords."""
    return [t for t in _SPLIT.split(text.lower())
            if len(t) >= 2 and t not in STOPWORDS]
