"""Generate the bundled desk-scale fixtures.

Builds a 500-example binary-sentiment corpus with per-record substitution
lexicons, a synonym-clustered embedding table, a trained naive-Bayes victim,
a 20-record small-space verification set, and the run configs that the tests
and README examples use.

The corpus is engineered so the victim is attackable but not trivially so:
each sentence carries a few "strong" adjective slots whose candidate lists
include a rare synonym that the training data associates with the opposite
class (it appears in mixed-tone sentences of that class). Flipping the
victim takes two or three coordinated rare-synonym substitutions; scattered
random edits mostly break the modification-rate constraint instead.

Run from the repository root:  python scripts/make_fixtures.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from cea.tokenization import tokenize  # noqa: E402
from cea.victims import VictimTrainConfig, save_victim, train_local_victim  # noqa: E402

OUT = Path(__file__).resolve().parent.parent / "src" / "cea" / "data"
SEED = 20240801
EMB_DIM = 32

# cluster = (6 interchangeable variants..., rare-poison, off-cluster distractor);
# variants all circulate in training, the poison only shows up in mixed-tone
# sentences of the opposite class, the distractor is a semantic outlier
POSITIVE_CLUSTERS = [
    ("great", "terrific", "fantastic", "superb", "excellent", "stellar",
     "splendid", "rusty"),
    ("wonderful", "delightful", "marvelous", "lovely", "glorious", "radiant",
     "dazzling", "soggy"),
    ("enjoyable", "pleasant", "satisfying", "agreeable", "rewarding", "fun",
     "amusing", "metallic"),
    ("brilliant", "inspired", "masterful", "ingenious", "dazzled", "deft",
     "luminous", "damp"),
    ("moving", "touching", "heartfelt", "tender", "poignant", "affecting",
     "stirring", "angular"),
    ("sharp", "crisp", "polished", "tight", "precise", "refined",
     "sleek", "muddy"),
    ("gripping", "absorbing", "riveting", "engrossing", "compelling", "tense",
     "hypnotic", "chalky"),
    ("charming", "endearing", "winning", "likable", "sweet", "graceful",
     "beguiling", "gritty"),
    ("funny", "hilarious", "witty", "playful", "comic", "droll",
     "uproarious", "frosty"),
    ("strong", "solid", "assured", "confident", "robust", "steady",
     "commanding", "hollowed"),
]
NEGATIVE_CLUSTERS = [
    ("terrible", "awful", "dreadful", "horrid", "atrocious", "dire",
     "abysmal", "velvet"),
    ("boring", "dull", "tedious", "dreary", "monotonous", "tiresome",
     "soporific", "chrome"),
    ("weak", "flimsy", "shallow", "thin", "feeble", "hollow",
     "anemic", "citrus"),
    ("messy", "sloppy", "clumsy", "untidy", "ragged", "careless",
     "shambolic", "marble"),
    ("annoying", "grating", "irritating", "tiring", "abrasive", "bothersome",
     "shrill", "pine"),
    ("bland", "flavorless", "lifeless", "stale", "flat", "vapid",
     "inert", "cobalt"),
    ("confusing", "muddled", "incoherent", "garbled", "jumbled", "unclear",
     "baffling", "amber"),
    ("predictable", "formulaic", "derivative", "generic", "familiar", "safe",
     "rote", "quartz"),
    ("cheap", "shoddy", "tacky", "crude", "clunky", "threadbare",
     "chintzy", "maroon"),
    ("slow", "plodding", "sluggish", "leaden", "draggy", "lumbering",
     "glacial", "sandy"),
]
N_VARIANTS = 6
POISON_IDX = 6
DISTRACTOR_IDX = 7

NOUNS = ["film", "movie", "story", "plot", "cast", "acting", "pacing",
         "script", "dialogue", "ending", "music", "direction"]
VERBS = ["was", "felt", "seemed", "stayed", "turned", "remained", "looked"]
OPENERS = ["honestly", "frankly", "overall", "ultimately", "somehow", "clearly"]


def cluster_for(polarity: int, idx: int):
    return (POSITIVE_CLUSTERS if polarity == 1 else NEGATIVE_CLUSTERS)[idx]


def build_sentence(rng, polarity, n_main, n_contrast, strong_ids, poison_mentions,
                   main_ids=None):
    """Assemble one review sentence.

    Returns (text, slot entries); an entry is (token_index, cluster polarity,
    cluster id, variant used, is_strong). Variant 0 is the canonical word,
    1 and 2 are its common synonyms (all three circulate in training, so
    synonym swaps barely move the victim).
    """

    if main_ids is None:
        main_ids = rng.choice(10, size=n_main, replace=False)
    contrast_ids = rng.choice(10, size=n_contrast, replace=False)
    tokens: list[str] = [str(rng.choice(OPENERS))]
    slots = []

    def emit_clause(ids, pol, connector=None):
        if connector:
            tokens.append(connector)
        pair_start = True
        for k, cid in enumerate(ids):
            if cid in poison_mentions.get(pol, {}):
                # mixed-tone mention: use the opposite polarity's rare word
                opp = 1 - pol
                word = cluster_for(opp, poison_mentions[pol][cid])[POISON_IDX]
                slot_meta = None
            else:
                variant = int(rng.choice(
                    N_VARIANTS, p=[0.4, 0.15, 0.15, 0.1, 0.1, 0.1]
                ))
                word = cluster_for(pol, cid)[variant]
                slot_meta = (
                    pol, int(cid), variant,
                    int(cid) in strong_ids.get(pol, set()),
                )
            if pair_start:
                tokens.extend(["the", str(rng.choice(NOUNS)), str(rng.choice(VERBS))])
            else:
                tokens.append("and")
            if slot_meta is not None:
                slots.append((len(tokens), *slot_meta))
            tokens.append(word)
            if not pair_start and k + 1 < len(ids):
                tokens.append(",")
            pair_start = not pair_start

    emit_clause(main_ids, polarity)
    if n_contrast:
        emit_clause(contrast_ids, 1 - polarity, connector="though")
    tokens.extend([str(rng.choice(["overall", "throughout", "in", "somehow"])), "."])
    return " ".join(tokens), slots


def slot_candidates(rng, cluster, variant, is_strong):
    """Substitutes offered at a slot: the unused common variants, the rare
    synonym on strong slots, and the off-cluster distractor."""
    cands = [cluster[v] for v in range(N_VARIANTS) if v != variant]
    if is_strong:
        cands.append(cluster[POISON_IDX])
    cands.append(cluster[DISTRACTOR_IDX])
    order = rng.permutation(len(cands))
    return [cands[j] for j in order]


def make_corpus(rng, n_records=500, noise_fraction=0.40):
    records = []
    lexicons = []
    for i in range(n_records):
        polarity = int(i % 2)
        n_main = int(rng.integers(8, 11))
        n_contrast = int(rng.integers(2, 5))
        main_ids = rng.choice(10, size=n_main, replace=False)

        poison_mentions: dict[int, dict[int, int]] = {}
        if rng.random() < noise_fraction:
            # this sentence lends a few of its slots to opposite-cluster rare words
            k = int(rng.integers(2, 4))
            lent = rng.choice(main_ids, size=min(k, n_main), replace=False)
            poison_mentions[polarity] = {
                int(cid): int(rng.integers(0, 10)) for cid in lent
            }

        # clusters that get an attackable rare synonym, drawn from the slots
        # that actually appear (and are not lent to a mixed-tone mention)
        usable = [int(c) for c in main_ids
                  if int(c) not in poison_mentions.get(polarity, {})]
        n_strong = min(int(rng.integers(4, 7)), len(usable))
        strong = set(
            int(c) for c in rng.choice(usable, size=n_strong, replace=False)
        )

        text, slots = build_sentence(
            rng, polarity, n_main, n_contrast, {polarity: strong}, poison_mentions,
            main_ids=main_ids,
        )
        records.append({"text": text, "label": polarity})

        toks = tokenize(text)
        positions = []
        for tok_idx, pol, cid, variant, is_strong in slots:
            cluster = cluster_for(pol, cid)
            assert toks[tok_idx] == cluster[variant], (toks[tok_idx], cluster[variant])
            positions.append({
                "index": tok_idx,
                "original": cluster[variant],
                "candidates": slot_candidates(rng, cluster, variant, is_strong),
            })
        lexicons.append({"positions": positions})
    return records, lexicons


def make_embeddings(rng):
    """Synonym clusters share a direction; distractors are large-norm
    outliers pointing away from their cluster, so even one of them drags the
    mean-pooled sentence vector off course."""
    vectors: dict[str, np.ndarray] = {}

    def unit(v):
        return v / np.linalg.norm(v)

    for clusters in (POSITIVE_CLUSTERS, NEGATIVE_CLUSTERS):
        for cluster in clusters:
            center = unit(rng.normal(size=EMB_DIM))
            for word in cluster[:DISTRACTOR_IDX]:
                vectors[word] = unit(center + 0.12 * rng.normal(size=EMB_DIM))
            vectors[cluster[DISTRACTOR_IDX]] = 12.0 * unit(
                -center + 0.12 * rng.normal(size=EMB_DIM)
            )
    for word in NOUNS + VERBS + OPENERS + [
        "the", "and", "though", ",", ".", "overall", "throughout", "in", "somehow",
    ]:
        if word not in vectors:
            vectors[word] = unit(rng.normal(size=EMB_DIM))
    return vectors


def make_verify_set(rng, n_records=20):
    """Small-space records: four slots, three candidates each (81 assignments)."""
    records, lexicons = [], []
    for i in range(n_records):
        polarity = int(i % 2)
        strong = set(rng.choice(10, size=2, replace=False).tolist())
        text, slots = build_sentence(rng, polarity, 4, 0, {polarity: strong}, {})
        records.append({"text": text, "label": polarity})
        toks = tokenize(text)
        positions = []
        for tok_idx, pol, cid, variant, is_strong in slots:
            cluster = cluster_for(pol, cid)
            assert toks[tok_idx] == cluster[variant]
            others = [cluster[v] for v in range(N_VARIANTS) if v != variant]
            cands = ([others[0], cluster[POISON_IDX]] if is_strong
                     else others[:2])
            positions.append({
                "index": tok_idx,
                "original": cluster[variant],
                "candidates": cands,
            })
        lexicons.append({"positions": positions})
    return records, lexicons


def write_jsonl(path, objs):
    with open(path, "w", encoding="utf-8") as fh:
        for obj in objs:
            fh.write(json.dumps(obj, sort_keys=True))
            fh.write("\n")


def write_embeddings(path, vectors):
    words = sorted(vectors)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(words)} {EMB_DIM}\n")
        for w in words:
            vals = " ".join(f"{x:.6f}" for x in vectors[w])
            fh.write(f"{w} {vals}\n")


def write_configs():
    # rho is set for the rare-event regime of hard-label flips: the elite
    # threshold is the batch maximum, so the first flipped sample found
    # immediately steers the distribution
    hard = {
        "attack": {
            "n_candidates": 50,
            "iterations": 20,
            "rho": 0.01,
            "gamma0": 0.5,
            "seed": 2024,
            "smoothing": 0.0,
            "full_trace": False,
        },
        "objective": {"kind": "hard-label"},
        "constraints": {"min_similarity": 0.7, "max_mod_rate": 0.25},
        "oracle": {"type": "local", "model": "bundled:victim_nb.json"},
        "metrics": {"embeddings": "bundled:embeddings.txt", "successes_only": True},
        "io": {"workers": 1},
    }
    soft = json.loads(json.dumps(hard))
    soft["objective"]["kind"] = "soft-label"
    soft["attack"]["n_candidates"] = 100
    soft["attack"]["iterations"] = 50
    soft["attack"]["rho"] = 0.5
    # sharper elite quantile plus smoothing pins the exact optimum on the
    # small verification spaces, where the soft-label landscape plateaus
    verify = json.loads(json.dumps(soft))
    verify["attack"]["rho"] = 0.05
    verify["attack"]["smoothing"] = 0.2
    for name, cfg in (("config_hard.json", hard), ("config_soft.json", soft),
                      ("config_verify.json", verify)):
        with open(OUT / name, "w", encoding="utf-8") as fh:
            json.dump(cfg, fh, indent=2, sort_keys=True)
            fh.write("\n")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(SEED)

    records, lexicons = make_corpus(rng)
    write_jsonl(OUT / "sentiment_500.jsonl", records)
    write_jsonl(OUT / "sentiment_lexicons.jsonl", lexicons)

    vectors = make_embeddings(rng)
    write_embeddings(OUT / "embeddings.txt", vectors)

    verify_records, verify_lexicons = make_verify_set(rng)
    write_jsonl(OUT / "verify_20.jsonl", verify_records)
    write_jsonl(OUT / "verify_lexicons.jsonl", verify_lexicons)

    pairs = [(r["text"], r["label"]) for r in records]
    model = train_local_victim(pairs, VictimTrainConfig(kind="naive-bayes", seed=SEED))
    save_victim(model, OUT / "victim_nb.json")

    write_configs()

    from cea.victims import training_accuracy
    print(f"victim training accuracy: {training_accuracy(model, pairs):.3f}")
    print(f"wrote fixtures to {OUT}")


if __name__ == "__main__":
    main()
