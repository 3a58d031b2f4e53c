"""Candidate-space construction from precomputed substitution lexicons.

Lexicon files are JSON objects ``{"positions": [{"index": int, "original":
str, "candidates": [str, ...]}, ...]}`` with indices referring to
post-tokenization positions. Loading injects the identity candidate, so a
position can always stay unmodified; positions absent from the file become
identity-only. A batch of documents can keep per-document files in a
directory (``<record_index>.json``) or share one JSON-lines bundle with one
lexicon object per dataset line.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .errors import IndexOutOfRange, MalformedLexicon, OriginalMismatch
from .types import CandidateSpace, TokenizedDocument


def space_from_entries(
    doc: TokenizedDocument, entries: Sequence[dict]
) -> CandidateSpace:
    """Build a candidate space for *doc* from parsed lexicon position entries."""
    n = len(doc.tokens)
    per_position: dict[int, list[str]] = {}
    for entry in entries:
        try:
            idx = int(entry["index"])
            original = entry["original"]
            candidates = list(entry["candidates"])
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedLexicon(f"bad position entry {entry!r}") from exc
        if not 0 <= idx < n:
            raise IndexOutOfRange(
                f"lexicon index {idx} out of range for a {n}-token document"
            )
        if original != doc.tokens[idx]:
            raise OriginalMismatch(
                f"position {idx}: lexicon original {original!r} != "
                f"document token {doc.tokens[idx]!r}"
            )
        if idx in per_position:
            raise MalformedLexicon(f"duplicate lexicon entry for position {idx}")
        per_position[idx] = [str(c) for c in candidates]

    cand_lists: list[tuple[str, ...]] = []
    identity_index: list[int] = []
    for i, token in enumerate(doc.tokens):
        raw = per_position.get(i, [])
        seen: list[str] = []
        for c in raw:
            if c not in seen:
                seen.append(c)
        if token in seen:
            ident = seen.index(token)
        else:
            seen.insert(0, token)
            ident = 0
        cand_lists.append(tuple(seen))
        identity_index.append(ident)
    return CandidateSpace(
        candidates=tuple(cand_lists), identity_index=tuple(identity_index)
    )


def parse_lexicon_obj(obj: dict) -> list[dict]:
    if not isinstance(obj, dict) or "positions" not in obj:
        raise MalformedLexicon("lexicon object must contain a 'positions' list")
    positions = obj["positions"]
    if not isinstance(positions, list):
        raise MalformedLexicon("'positions' must be a list")
    return positions


def load_candidate_space(doc: TokenizedDocument, lexicon_file) -> CandidateSpace:
    """Load and align a lexicon file to *doc*.

    Raises
    ------
    MalformedLexicon
        If the file is not valid JSON or violates the schema.
    IndexOutOfRange / OriginalMismatch
        If an entry does not match the document.
    """
    try:
        with open(lexicon_file, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise MalformedLexicon(f"{lexicon_file}: {exc}") from exc
    return space_from_entries(doc, parse_lexicon_obj(obj))


def save_candidate_space(space: CandidateSpace, lexicon_file, meta: Optional[dict] = None) -> None:
    """Write a space back to the lexicon file format (round-trips with load)."""
    originals = space.original_tokens()
    positions = []
    for i, cands in enumerate(space.candidates):
        if len(cands) <= 1:
            continue
        positions.append(
            {"index": i, "original": originals[i], "candidates": list(cands)}
        )
    obj: dict = {"positions": positions}
    if meta:
        obj["meta"] = meta
    with open(lexicon_file, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True)
        fh.write("\n")


@dataclass(frozen=True)
class PositionFilter:
    """Policy trimming which positions keep their substitution candidates."""

    stopwords: frozenset[str] = frozenset()
    min_token_length: int = 0
    max_positions: Optional[int] = None

    @classmethod
    def from_dict(cls, d: dict) -> "PositionFilter":
        return cls(
            stopwords=frozenset(str(w).lower() for w in d.get("stopwords", [])),
            min_token_length=int(d.get("min_token_length", 0)),
            max_positions=d.get("max_positions"),
        )


def filter_positions(space: CandidateSpace, policy: PositionFilter) -> CandidateSpace:
    """Reduce filtered positions to identity-only candidate sets.

    Stopword and short-token positions lose their substitutes; if
    ``max_positions`` is set, only that many positions (largest candidate
    sets first, ties to the lowest index) keep theirs.
    """
    originals = space.original_tokens()
    keep = []
    for i, cands in enumerate(space.candidates):
        token = originals[i]
        if len(cands) <= 1:
            continue
        if token.lower() in policy.stopwords:
            continue
        if len(token) < policy.min_token_length:
            continue
        keep.append(i)
    if policy.max_positions is not None and len(keep) > policy.max_positions:
        ranked = sorted(keep, key=lambda i: (-len(space.candidates[i]), i))
        keep = ranked[: policy.max_positions]
    keep_set = set(keep)

    cand_lists = []
    identity_index = []
    for i, cands in enumerate(space.candidates):
        if i in keep_set:
            cand_lists.append(cands)
            identity_index.append(space.identity_index[i])
        else:
            cand_lists.append((originals[i],))
            identity_index.append(0)
    return CandidateSpace(
        candidates=tuple(cand_lists), identity_index=tuple(identity_index)
    )


def load_lexicon_bundle(path) -> list[list[dict]]:
    """Read a JSON-lines bundle: one lexicon object per dataset record."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLexicon(f"{path}:{lineno}: {exc}") from exc
            out.append(parse_lexicon_obj(obj))
    return out


class LexiconSource:
    """Resolve per-record candidate spaces from a directory or a bundle file."""

    def __init__(self, path):
        self._path = Path(path)
        self._bundle: Optional[list[list[dict]]] = None
        if self._path.is_file():
            self._bundle = load_lexicon_bundle(self._path)

    def space_for(self, record_index: int, doc: TokenizedDocument) -> CandidateSpace:
        if self._bundle is not None:
            if record_index >= len(self._bundle):
                raise MalformedLexicon(
                    f"bundle {self._path} has {len(self._bundle)} lexicons, "
                    f"record {record_index} requested"
                )
            return space_from_entries(doc, self._bundle[record_index])
        file = self._path / f"{record_index}.json"
        if not file.exists():
            raise FileNotFoundError(f"no lexicon file {file}")
        return load_candidate_space(doc, file)
