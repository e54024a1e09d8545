"""Seeded character-level typo generators for search queries.

Five perturbation operators (random letter insertion, random character
deletion, random letter substitution, adjacent-character transposition,
keyboard-neighbor substitution) plus the word-selection rules that inject
exactly one typo into a query. All randomness flows through explicit
``random.Random`` streams derived from a 64-bit seed and the query id, so
outputs are reproducible across runs, call orders, and thread counts.
"""

from __future__ import annotations

import hashlib
import random
import re
import string
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

SEED_MASK = (1 << 64) - 1

#: Words need more than this many characters to be typo targets.
MIN_TARGET_LEN = 3

_LOWER = string.ascii_lowercase
_ASCII_LETTERS = frozenset(string.ascii_letters)
_TOKEN_RE = re.compile(r"\S+")


class NotApplicableError(ValueError):
    """A generator has no valid target position in the given word."""


class TypoKind(Enum):
    """The five perturbation operators."""

    RAND_INSERT = "RandInsert"
    RAND_DELETE = "RandDelete"
    RAND_SUB = "RandSub"
    SWAP_NEIGHBOR = "SwapNeighbor"
    SWAP_ADJACENT = "SwapAdjacent"

    @classmethod
    def from_name(cls, name: str) -> "TypoKind":
        for kind in cls:
            if kind.value == name:
                return kind
        raise ValueError(
            f"unknown typo kind {name!r}; expected one of {sorted(KIND_NAMES)}"
        )


KIND_NAMES: tuple[str, ...] = tuple(kind.value for kind in TypoKind)

_QWERTY_ROWS = ("qwertyuiop", "asdfghjkl", "zxcvbnm")


@dataclass(frozen=True)
class KeyboardLayout:
    """Letter adjacency on a physical keyboard.

    ``adjacency`` maps each lowercase letter to its ordered neighbor list
    (row above left-to-right, same row left then right, row below
    left-to-right). The relation is symmetric and never contains the key
    itself.
    """

    adjacency: dict[str, tuple[str, ...]]

    def __post_init__(self) -> None:
        missing = set(_LOWER) - set(self.adjacency)
        if missing:
            raise ValueError(f"layout must cover all 26 letters; missing {sorted(missing)}")
        for key, neighbors in self.adjacency.items():
            if not neighbors:
                raise ValueError(f"empty adjacency list for {key!r}")
            if key in neighbors:
                raise ValueError(f"{key!r} lists itself as a neighbor")
            for other in neighbors:
                if key not in self.adjacency.get(other, ()):
                    raise ValueError(f"asymmetric adjacency: {key!r} -> {other!r}")

    def neighbors(self, char: str) -> tuple[str, ...]:
        """Neighbor letters of ``char`` (case-insensitive)."""
        return self.adjacency[char.lower()]

    @classmethod
    def qwerty(cls) -> "KeyboardLayout":
        """The built-in QWERTY layout.

        Rows are aligned column-on-column, and each key neighbors the
        horizontally, vertically, and diagonally adjacent keys, e.g.
        's' -> (q, w, e, a, d, z, x, c).
        """
        return _qwerty_layout()


@lru_cache(maxsize=1)
def _qwerty_layout() -> KeyboardLayout:
    adjacency: dict[str, tuple[str, ...]] = {}
    for r, row in enumerate(_QWERTY_ROWS):
        for c, key in enumerate(row):
            found = []
            for dr, dc in (
                (-1, -1), (-1, 0), (-1, 1),
                (0, -1), (0, 1),
                (1, -1), (1, 0), (1, 1),
            ):
                rr, cc = r + dr, c + dc
                if 0 <= rr < len(_QWERTY_ROWS) and 0 <= cc < len(_QWERTY_ROWS[rr]):
                    found.append(_QWERTY_ROWS[rr][cc])
            adjacency[key] = tuple(found)
    return KeyboardLayout(adjacency)


@dataclass(frozen=True)
class QueryToken:
    """One whitespace-delimited token and its location in the query."""

    text: str
    byte_span: tuple[int, int]

    @property
    def is_eligible(self) -> bool:
        """Whether the token is long enough to receive a typo."""
        return len(self.text) > MIN_TARGET_LEN


@dataclass(frozen=True)
class PerturbationRecord:
    """Audit trail of one applied typo."""

    query_id: str
    kind: TypoKind
    word_index: int
    original_word: str
    perturbed_word: str
    seed: int

    def to_json_dict(self) -> dict:
        return {
            "qid": self.query_id,
            "kind": self.kind.value,
            "word_index": self.word_index,
            "original_word": self.original_word,
            "perturbed_word": self.perturbed_word,
            "seed": self.seed,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "PerturbationRecord":
        return cls(
            query_id=data["qid"],
            kind=TypoKind.from_name(data["kind"]),
            word_index=data["word_index"],
            original_word=data["original_word"],
            perturbed_word=data["perturbed_word"],
            seed=data["seed"],
        )


def derive_stream_seed(global_seed: int, query_id: str) -> int:
    """Mix a 64-bit global seed with a query id into a per-query stream seed.

    Keyed BLAKE2b (8-byte digest, seed as key) keeps the derivation stable
    across processes and thread counts.
    """
    key = (global_seed & SEED_MASK).to_bytes(8, "little")
    digest = hashlib.blake2b(query_id.encode("utf-8"), digest_size=8, key=key)
    return int.from_bytes(digest.digest(), "little")


def tokenize(query_text: str) -> list[QueryToken]:
    """Split a query into maximal non-whitespace tokens with byte spans.

    Spans index into the UTF-8 encoding of ``query_text`` so untouched
    regions can be copied byte-for-byte when a token is replaced.
    """
    tokens = []
    byte_pos = 0
    char_pos = 0
    for match in _TOKEN_RE.finditer(query_text):
        byte_pos += len(query_text[char_pos : match.start()].encode("utf-8"))
        token_bytes = len(match.group().encode("utf-8"))
        tokens.append(QueryToken(match.group(), (byte_pos, byte_pos + token_bytes)))
        byte_pos += token_bytes
        char_pos = match.end()
    return tokens


def _require_target(word: str) -> None:
    if len(word) <= MIN_TARGET_LEN:
        raise ValueError(
            f"word must have more than {MIN_TARGET_LEN} characters, got {word!r}"
        )


def rand_insert(word: str, rng: random.Random) -> str:
    """Insert a uniformly random lowercase letter at a uniform position."""
    _require_target(word)
    pos = rng.randrange(len(word) + 1)
    return word[:pos] + rng.choice(_LOWER) + word[pos:]


def rand_delete(word: str, rng: random.Random) -> str:
    """Delete the character at a uniformly random position."""
    _require_target(word)
    pos = rng.randrange(len(word))
    return word[:pos] + word[pos + 1 :]


def rand_sub(word: str, rng: random.Random) -> str:
    """Replace a random letter with a different random lowercase letter.

    Only ASCII letter positions are candidates; the replacement never
    equals the original character case-insensitively (a no-op would not
    be a typo).
    """
    _require_target(word)
    positions = [i for i, ch in enumerate(word) if ch in _ASCII_LETTERS]
    if not positions:
        raise NotApplicableError(f"no letter position to substitute in {word!r}")
    pos = rng.choice(positions)
    original = word[pos].lower()
    replacement = rng.choice([c for c in _LOWER if c != original])
    return word[:pos] + replacement + word[pos + 1 :]


def swap_neighbor(word: str, rng: random.Random) -> str:
    """Transpose one adjacent character pair, chosen uniformly.

    Pairs of equal characters are excluded so the output always differs
    from the input.
    """
    _require_target(word)
    pairs = [i for i in range(len(word) - 1) if word[i] != word[i + 1]]
    if not pairs:
        raise NotApplicableError(f"all adjacent characters equal in {word!r}")
    i = rng.choice(pairs)
    return word[:i] + word[i + 1] + word[i] + word[i + 2 :]


def swap_adjacent(word: str, rng: random.Random, layout: KeyboardLayout | None = None) -> str:
    """Replace a random letter with one of its keyboard neighbors."""
    _require_target(word)
    if layout is None:
        layout = KeyboardLayout.qwerty()
    positions = [i for i, ch in enumerate(word) if ch.lower() in layout.adjacency]
    if not positions:
        raise NotApplicableError(f"no keyboard letter position in {word!r}")
    pos = rng.choice(positions)
    return word[:pos] + rng.choice(layout.neighbors(word[pos])) + word[pos + 1 :]


_KINDS = tuple(TypoKind)


def sample_kind(rng: random.Random) -> TypoKind:
    """Draw one of the five kinds uniformly."""
    return rng.choice(_KINDS)


def kind_applicable(kind: TypoKind, word: str, layout: KeyboardLayout | None = None) -> bool:
    """Whether ``kind`` has at least one valid target position in ``word``.

    Assumes ``word`` is already eligible (length > 3); insertion and
    deletion then always apply.
    """
    if kind in (TypoKind.RAND_INSERT, TypoKind.RAND_DELETE):
        return True
    if kind is TypoKind.SWAP_NEIGHBOR:
        return any(word[i] != word[i + 1] for i in range(len(word) - 1))
    if kind is TypoKind.RAND_SUB:
        return any(ch in _ASCII_LETTERS for ch in word)
    if layout is None:
        layout = KeyboardLayout.qwerty()
    return any(ch.lower() in layout.adjacency for ch in word)


def _apply_kind(kind: TypoKind, word: str, rng: random.Random, layout: KeyboardLayout) -> str:
    if kind is TypoKind.RAND_INSERT:
        return rand_insert(word, rng)
    if kind is TypoKind.RAND_DELETE:
        return rand_delete(word, rng)
    if kind is TypoKind.RAND_SUB:
        return rand_sub(word, rng)
    if kind is TypoKind.SWAP_NEIGHBOR:
        return swap_neighbor(word, rng)
    return swap_adjacent(word, rng, layout)


def _inject_with_stream(
    query_id: str,
    query_text: str,
    kind: TypoKind,
    rng: random.Random,
    layout: KeyboardLayout,
    seed: int,
) -> tuple[str, PerturbationRecord | None]:
    """Perturb one eligible token using an already-positioned stream.

    Shared by :func:`inject_typo` and the augmentation policy, which first
    consumes its coin flip and kind draw from the same stream.
    """
    tokens = tokenize(query_text)
    eligible = [(i, tok) for i, tok in enumerate(tokens) if tok.is_eligible]
    if not eligible:
        return query_text, None

    applied_kind = kind
    applicable = [
        (i, tok) for i, tok in eligible if kind_applicable(kind, tok.text, layout)
    ]
    if applicable:
        word_index, token = rng.choice(applicable)
    else:
        # No eligible token accepts this kind; keep the one-keyword
        # guarantee by falling back to an always-applicable operator.
        word_index, token = rng.choice(eligible)
        for fallback in (TypoKind.RAND_INSERT, TypoKind.RAND_DELETE):
            if kind_applicable(fallback, token.text, layout):
                applied_kind = fallback
                break

    perturbed_word = _apply_kind(applied_kind, token.text, rng, layout)
    source = query_text.encode("utf-8")
    start, end = token.byte_span
    perturbed_query = (
        source[:start] + perturbed_word.encode("utf-8") + source[end:]
    ).decode("utf-8")
    record = PerturbationRecord(
        query_id=query_id,
        kind=applied_kind,
        word_index=word_index,
        original_word=token.text,
        perturbed_word=perturbed_word,
        seed=seed & SEED_MASK,
    )
    return perturbed_query, record


def inject_typo(
    query_id: str,
    query_text: str,
    kind: TypoKind,
    seed: int,
    layout: KeyboardLayout | None = None,
) -> tuple[str, PerturbationRecord | None]:
    """Inject ``kind`` into exactly one eligible keyword of the query.

    The target token is chosen uniformly among eligible tokens on which
    the kind is applicable; if none accepts it, the operator falls back to
    insertion (then deletion) so a typo is still produced. Queries without
    any eligible keyword are returned unchanged with no record. All other
    tokens and the inter-token whitespace are preserved byte-for-byte.
    """
    if layout is None:
        layout = KeyboardLayout.qwerty()
    rng = random.Random(derive_stream_seed(seed, query_id))
    return _inject_with_stream(query_id, query_text, kind, rng, layout, seed)
