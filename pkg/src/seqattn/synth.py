"""Synthetic cue-word corpora standing in for real dialogue/key-term data.

Each example is noise tokens with a few class-specific cue tokens embedded
at random positions; the class (or gold term set) is fully determined by
the cues.  Generation is a pure function of the spec, so the same seed
always yields byte-identical corpora.

The key-term documents deliberately leave room between the baselines: a
gold term's literal token shows up in the text only with probability
`term_in_text`, and non-gold candidate tokens are sprinkled in as
distractors.  tf-idf sorting therefore beats random but stays well short
of a model that learns the cue-to-term association.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


class SynthSpecError(ValueError):
    """The generation spec is contradictory (overlapping vocabularies, bad range)."""


@dataclass
class SynthSpec:
    num_classes: int = 4
    cues_per_class: int = 3
    noise_vocab: int = 200
    length_min: int = 40
    length_max: int = 40
    examples_per_class: int = 200
    seed: int = 0
    cue_min: int = 1
    cue_max: int = 3
    terms_min: int = 2
    terms_max: int = 4
    term_in_text: float = 0.35
    distractor_rate: float = 0.08
    turns_per_conversation: int = 1
    noise_prefix: str = "w"
    cue_prefix: str = "cue"
    term_prefix: str = "term"
    act_prefix: str = "act"

    def __post_init__(self):
        if self.num_classes < 2:
            raise SynthSpecError("need at least 2 classes")
        if self.cues_per_class < 1 or self.noise_vocab < 1:
            raise SynthSpecError("cue and noise vocabularies must be non-empty")
        if not 1 <= self.length_min <= self.length_max:
            raise SynthSpecError("bad sequence length range")
        if not 1 <= self.cue_min <= self.cue_max:
            raise SynthSpecError("bad cue count range")
        if not 1 <= self.terms_min <= self.terms_max:
            raise SynthSpecError("bad gold term count range")
        if self.examples_per_class < 1 or self.turns_per_conversation < 1:
            raise SynthSpecError("bad example counts")
        overlap = set(self.noise_tokens()) & set(self.all_cue_tokens() + self.term_names())
        if overlap:
            raise SynthSpecError(
                f"cue/term vocabulary overlaps noise vocabulary: {sorted(overlap)[:5]}")

    def noise_tokens(self):
        return [f"{self.noise_prefix}{i:03d}" for i in range(self.noise_vocab)]

    def cue_tokens(self, cls):
        return [f"{self.cue_prefix}{cls}x{j}" for j in range(self.cues_per_class)]

    def all_cue_tokens(self):
        return [t for c in range(self.num_classes) for t in self.cue_tokens(c)]

    def term_names(self):
        return [f"{self.term_prefix}{c:02d}" for c in range(self.num_classes)]

    def act_names(self):
        return [f"{self.act_prefix}{c}" for c in range(self.num_classes)]


def _noisy_sequence(spec, rng, inserts):
    """Noise tokens of a random length with `inserts` placed at random positions."""
    noise = spec.noise_tokens()
    length = int(rng.integers(spec.length_min, spec.length_max + 1))
    length = max(length, len(inserts))
    tokens = [noise[i] for i in rng.integers(0, len(noise), size=length)]
    positions = rng.choice(length, size=len(inserts), replace=False)
    for pos, tok in zip(positions, inserts):
        tokens[int(pos)] = tok
    return tokens


def generate_dialogue(spec):
    """Balanced single-label records; every record carries >= 1 cue of its class."""
    rng = np.random.default_rng(spec.seed)
    acts = spec.act_names()
    classes = np.repeat(np.arange(spec.num_classes), spec.examples_per_class)
    rng.shuffle(classes)
    records = []
    for i, cls in enumerate(classes):
        cues = spec.cue_tokens(int(cls))
        k = int(rng.integers(spec.cue_min, spec.cue_max + 1))
        inserts = [cues[j] for j in rng.integers(0, len(cues), size=k)]
        tokens = _noisy_sequence(spec, rng, inserts)
        conv = i // spec.turns_per_conversation
        records.append({
            "conversation_id": f"conv{conv:05d}",
            "turn": i % spec.turns_per_conversation,
            "text": " ".join(tokens),
            "act": acts[int(cls)],
        })
    return records


def generate_keyterms(spec):
    """Multi-label documents: gold terms signalled by cues, term tokens optional."""
    if spec.terms_max > spec.num_classes:
        raise SynthSpecError(
            f"cannot draw up to {spec.terms_max} distinct gold terms "
            f"from {spec.num_classes} classes")
    rng = np.random.default_rng(spec.seed + 1)
    terms = spec.term_names()
    total = spec.num_classes * spec.examples_per_class
    records = []
    for i in range(total):
        g = int(rng.integers(spec.terms_min, spec.terms_max + 1))
        gold = sorted(rng.choice(spec.num_classes, size=g, replace=False))
        inserts = []
        for cls in gold:
            cues = spec.cue_tokens(int(cls))
            k = int(rng.integers(spec.cue_min, spec.cue_max + 1))
            inserts.extend(cues[j] for j in rng.integers(0, len(cues), size=k))
            if rng.random() < spec.term_in_text:
                inserts.append(terms[int(cls)])
        for cls in range(spec.num_classes):
            if cls not in gold and rng.random() < spec.distractor_rate:
                inserts.append(terms[cls])
        tokens = _noisy_sequence(spec, rng, inserts)
        records.append({
            "doc_id": f"doc{i:05d}",
            "text": " ".join(tokens),
            "terms": [terms[int(c)] for c in gold],
        })
    return records


def write_jsonl(records, path):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True, separators=(",", ":")))
            fh.write("\n")
