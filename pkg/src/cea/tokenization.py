"""Whitespace tokenization with punctuation detachment.

The tokenizer is deliberately simple: split on whitespace, then peel leading
and trailing punctuation characters into their own tokens. Internal
punctuation (contractions, abbreviations, hyphenated compounds) stays inside
the token. Case is preserved; victims that want case-folded input lower-case
on their side.

Substitution-only attacks need the token count of a document to be stable, so
the tokenizer never inserts, merges, or drops characters.
"""

from __future__ import annotations

import string

_PUNCT = set(string.punctuation)

# Unicode ranges treated as CJK for per-character tokenization.
_CJK_RANGES = (
    (0x4E00, 0x9FFF),    # CJK unified ideographs
    (0x3400, 0x4DBF),    # extension A
    (0xF900, 0xFAFF),    # compatibility ideographs
    (0x3000, 0x303F),    # CJK punctuation
    (0xFF00, 0xFFEF),    # full-width forms
)


def tokenize(text: str) -> list[str]:
    """Split *text* into tokens: whitespace chunks with edge punctuation detached."""
    tokens: list[str] = []
    for chunk in text.split():
        head: list[str] = []
        tail: list[str] = []
        while chunk and chunk[0] in _PUNCT:
            head.append(chunk[0])
            chunk = chunk[1:]
        while chunk and chunk[-1] in _PUNCT:
            tail.append(chunk[-1])
            chunk = chunk[:-1]
        tokens.extend(head)
        if chunk:
            tokens.append(chunk)
        tokens.extend(reversed(tail))
    return tokens


def detokenize(tokens: list[str] | tuple[str, ...]) -> str:
    """Join tokens with single spaces (the canonical victim-query text)."""
    return " ".join(tokens)


def is_cjk_char(ch: str) -> bool:
    code = ord(ch)
    return any(lo <= code <= hi for lo, hi in _CJK_RANGES)


def contains_cjk(text: str) -> bool:
    return any(is_cjk_char(ch) for ch in text)


def tokens_for_bleu(text: str) -> list[str]:
    """Tokenize for BLEU scoring: per-character for CJK text, word-level otherwise."""
    if contains_cjk(text):
        return [ch for ch in text if not ch.isspace()]
    return tokenize(text)
