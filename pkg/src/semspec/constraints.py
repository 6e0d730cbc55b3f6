"""Synonym/antonym constraint pairs: loading, merging, protocol filtering.

Pairs are unordered and stored canonically (lexicographically sorted
within the pair), deduplicated, with self-pairs dropped. Two evaluation
protocols are supported: "disjoint" removes every pair containing a
benchmark word, "overlap" keeps them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .diagnostics import get_logger, kv_line
from .embeddings import SeenVocab, VectorSpace
from .errors import ValidationError

log = get_logger(__name__)

_LANG_PREFIX = re.compile(r"^[a-z]{2}_")

Pair = tuple[str, str]


def canonical(a: str, b: str) -> Pair:
    return (a, b) if a <= b else (b, a)


@dataclass
class ConstraintSet:
    """Deduplicated attract (synonym) and repel (antonym) pair sets."""

    synonyms: set = field(default_factory=set)
    antonyms: set = field(default_factory=set)
    source_tag: str = "external"

    def __post_init__(self):
        for pair in list(self.synonyms) + list(self.antonyms):
            if pair[0] == pair[1]:
                raise ValidationError(f"self-pair {pair!r} in constraint set")
            if pair != canonical(*pair):
                raise ValidationError(f"non-canonical pair {pair!r}")

    @property
    def tokens(self) -> set:
        out = set()
        for a, b in self.synonyms | self.antonyms:
            out.add(a)
            out.add(b)
        return out


def load_constraint_pairs(
    path, relation: str, tag: str = "external", strip_prefix: bool = False
) -> ConstraintSet:
    """Load one pair per line into the synonym or antonym set.

    Tokens may carry a two-letter language prefix ("en_word"); it is
    stripped when strip_prefix is set. Self-pairs are dropped and
    counted on the diagnostic stream.
    """
    if relation not in ("synonym", "antonym"):
        raise ValidationError(f"unknown relation {relation!r}")
    pairs = set()
    self_pairs = 0
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            fields = line.split()
            if not fields:
                continue
            if len(fields) != 2:
                raise ValidationError(f"{path}:{lineno}: expected 2 tokens, got {len(fields)}")
            a, b = fields
            if strip_prefix:
                a = _LANG_PREFIX.sub("", a)
                b = _LANG_PREFIX.sub("", b)
            if a == b:
                self_pairs += 1
                continue
            pairs.add(canonical(a, b))
    log.info(
        kv_line(
            event="constraints_loaded",
            path=str(path),
            relation=relation,
            pairs=len(pairs),
            self_pairs_dropped=self_pairs,
        )
    )
    if relation == "synonym":
        return ConstraintSet(synonyms=pairs, source_tag=tag)
    return ConstraintSet(antonyms=pairs, source_tag=tag)


def merge_and_deconflict(a: ConstraintSet, b: ConstraintSet) -> ConstraintSet:
    """Union of both sets; a pair listed as both synonym and antonym stays
    an antonym only.

    Antonym lists are far smaller and more curated than synonym lists,
    so a listed antonym is treated as the stronger signal.
    """
    synonyms = a.synonyms | b.synonyms
    antonyms = a.antonyms | b.antonyms
    conflicts = synonyms & antonyms
    if conflicts:
        synonyms = synonyms - conflicts
        log.info(kv_line(event="constraint_conflicts", antonym_wins=len(conflicts)))
    return ConstraintSet(synonyms=synonyms, antonyms=antonyms, source_tag="merged")


def filter_for_setting(
    cs: ConstraintSet,
    space: VectorSpace,
    eval_words: set,
    setting: str,
) -> tuple[ConstraintSet, SeenVocab]:
    """Restrict constraints to the space vocabulary and apply a protocol.

    Every pair with a token absent from the space is dropped. Under
    "disjoint", pairs where either token is an evaluation word are also
    dropped; "overlap" keeps them. Returns the filtered set and the
    vocabulary of words surviving in any pair.
    """
    if setting not in ("disjoint", "overlap"):
        raise ValidationError(f"unknown setting {setting!r}")

    def keep(pair: Pair) -> bool:
        a, b = pair
        if a not in space or b not in space:
            return False
        if setting == "disjoint" and (a in eval_words or b in eval_words):
            return False
        return True

    synonyms = {p for p in cs.synonyms if keep(p)}
    antonyms = {p for p in cs.antonyms if keep(p)}
    if not synonyms:
        raise ValidationError(
            f"no synonym pairs survive {setting!r} filtering; cannot specialize"
        )
    out = ConstraintSet(synonyms=synonyms, antonyms=antonyms, source_tag=cs.source_tag)
    log.info(
        kv_line(
            event="constraints_filtered",
            setting=setting,
            synonyms=len(synonyms),
            antonyms=len(antonyms),
            dropped=len(cs.synonyms) + len(cs.antonyms) - len(synonyms) - len(antonyms),
        )
    )
    return out, SeenVocab(frozenset(out.tokens))
