"""Tokenization, vocabulary, context windows, and training targets.

Datasets are JSONL, one UTF-8 object per line:

  dialogue acts: {"conversation_id": str, "turn": int, "text": str, "act": str}
  key terms:     {"doc_id": str, "text": str, "terms": [str, ...]}
"""

from __future__ import annotations

import json
import string
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
EOT_TOKEN = "<eot>"
SPECIAL_TOKENS = (PAD_TOKEN, UNK_TOKEN, EOT_TOKEN)
PAD_ID, UNK_ID, EOT_ID = 0, 1, 2

# Encoded sequences are capped here, dropping oldest context first so the
# utterance being classified survives.
MAX_SEQUENCE_LENGTH = 512

_PUNCT = frozenset(string.punctuation)


class DatasetError(ValueError):
    """A dataset file failed validation; the message names the line."""


def tokenize(text):
    """Lowercase, split on whitespace, peel leading/trailing ASCII punctuation.

    Punctuation stripped off a chunk becomes its own single-character tokens;
    interior punctuation (don't, e.g.) is left alone.  Empty tokens vanish.
    """
    tokens = []
    for chunk in text.lower().split():
        i, j = 0, len(chunk)
        while i < j and chunk[i] in _PUNCT:
            i += 1
        while j > i and chunk[j - 1] in _PUNCT:
            j -= 1
        tokens.extend(chunk[:i])
        if i < j:
            tokens.append(chunk[i:j])
        tokens.extend(chunk[j:])
    return tokens


class Vocabulary:
    """Token-index bijection with frequency filtering and fixed specials.

    PAD, UNK and EOT sit at indices 0, 1, 2 regardless of the corpus; the
    remaining indices are assigned by descending training frequency, ties
    broken lexicographically.
    """

    def __init__(self, tokens, min_count):
        self.min_count = min_count
        self._tokens = list(SPECIAL_TOKENS) + list(tokens)
        self._index = {t: i for i, t in enumerate(self._tokens)}
        if len(self._index) != len(self._tokens):
            raise ValueError("duplicate tokens in vocabulary")

    def __len__(self):
        return len(self._tokens)

    def __contains__(self, token):
        return token in self._index

    def index_of(self, token):
        return self._index.get(token, UNK_ID)

    def token_of(self, index):
        return self._tokens[index]

    def encode(self, tokens):
        index = self._index
        return [index.get(t, UNK_ID) for t in tokens]

    def decode(self, ids):
        return [self._tokens[i] for i in ids]

    def save(self, path):
        payload = {"min_count": self.min_count, "tokens": self._tokens[len(SPECIAL_TOKENS):]}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, ensure_ascii=False)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        return cls(payload["tokens"], payload["min_count"])


def build_vocabulary(corpus, min_count):
    """Count tokens over an iterable of token sequences and keep the frequent ones."""
    if min_count < 1:
        raise ValueError("min_count must be at least 1")
    counts = Counter()
    for tokens in corpus:
        counts.update(tokens)
    kept = sorted(
        (t for t, c in counts.items() if c >= min_count and t not in SPECIAL_TOKENS),
        key=lambda t: (-counts[t], t),
    )
    return Vocabulary(kept, min_count)


def encode_example(tokens, vocab):
    """Map tokens to indices, unknowns to UNK; order and length preserved."""
    return vocab.encode(tokens)


def attach_context(utterances, i, n):
    """Splice up to n previous utterances ahead of utterance i.

    Each included utterance (context and target alike) is followed by one
    EOT boundary token, so the output length is the sum of the included
    utterance lengths plus the number of included utterances.
    """
    if not 0 <= i < len(utterances):
        raise ValueError(f"utterance index {i} outside conversation of {len(utterances)}")
    if n < 0:
        raise ValueError("context size n must be non-negative")
    out = []
    for utt in utterances[max(0, i - n):i + 1]:
        out.extend(utt)
        out.append(EOT_TOKEN)
    return out


def truncate_front(ids, limit=MAX_SEQUENCE_LENGTH):
    """Keep the newest `limit` ids, dropping oldest context tokens first."""
    return ids[-limit:] if len(ids) > limit else ids


@dataclass
class CandidateSet:
    """Ordered candidate key terms; a term's position is its class index."""

    terms: list
    coverage: float
    _index: dict = field(init=False, repr=False)

    def __post_init__(self):
        self._index = {t: i for i, t in enumerate(self.terms)}
        if len(self._index) != len(self.terms):
            raise ValueError("duplicate candidate terms")

    def __len__(self):
        return len(self.terms)

    def __contains__(self, term):
        return term in self._index

    def index_of(self, term):
        return self._index[term]


def select_candidates(labels, k):
    """Top-k key terms by training frequency (ties lexicographic), with coverage.

    `labels` is the multiset of key-term label instances over the training
    set, as a flat iterable.  Coverage is the fraction of label instances
    that fall inside the selected candidate set.
    """
    if k < 1:
        raise ValueError("candidate count k must be at least 1")
    counts = Counter(labels)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:k]
    terms = [t for t, _ in ranked]
    total = sum(counts.values())
    covered = sum(counts[t] for t in terms)
    coverage = covered / total if total else 1.0
    return CandidateSet(terms, coverage)


def build_term_target(doc_labels, candidates):
    """Uniform 1/m distribution over the document's covered candidate labels.

    Returns None when none of the labels are candidates; such documents are
    dropped from training because no valid target distribution exists.
    """
    covered = sorted({candidates.index_of(t) for t in doc_labels if t in candidates})
    if not covered:
        return None
    target = np.zeros(len(candidates))
    target[covered] = 1.0 / len(covered)
    return target


@dataclass
class SequenceExample:
    """An encoded input sequence with its class target distribution."""

    token_ids: list
    target: np.ndarray
    doc_id: str = ""
    tokens: list = field(default_factory=list)


@dataclass
class DialogueRecord:
    conversation_id: str
    turn: int
    text: str
    act: str


@dataclass
class KeyTermRecord:
    doc_id: str
    text: str
    terms: list


_DIALOGUE_FIELDS = {"conversation_id": str, "turn": int, "text": str, "act": str}
_KEYTERM_FIELDS = {"doc_id": str, "text": str, "terms": list}


def _validate(obj, fields, where):
    for name, kind in fields.items():
        if name not in obj:
            raise DatasetError(f"{where}: missing field {name!r}")
        if not isinstance(obj[name], kind) or isinstance(obj[name], bool):
            raise DatasetError(f"{where}: field {name!r} must be {kind.__name__}")
    return obj


def load_dataset(path, task):
    """Decode and validate a JSONL dataset, preserving file order."""
    if task not in ("dialogue_act", "key_term"):
        raise ValueError(f"unknown task {task!r}")
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{where}: invalid JSON ({exc.msg})") from None
            if task == "dialogue_act":
                _validate(obj, _DIALOGUE_FIELDS, where)
                records.append(DialogueRecord(
                    obj["conversation_id"], obj["turn"], obj["text"], obj["act"]))
            else:
                _validate(obj, _KEYTERM_FIELDS, where)
                if not all(isinstance(t, str) for t in obj["terms"]):
                    raise DatasetError(f"{where}: field 'terms' must be a list of strings")
                records.append(KeyTermRecord(obj["doc_id"], obj["text"], obj["terms"]))
    return records


def group_conversations(records):
    """Conversations keyed by id in order of first appearance, turns sorted."""
    groups = {}
    for rec in records:
        groups.setdefault(rec.conversation_id, []).append(rec)
    for recs in groups.values():
        recs.sort(key=lambda r: r.turn)
    return groups


def act_labels(records):
    """Sorted unique dialogue-act tags of a training corpus."""
    return sorted({r.act for r in records})


def build_dialogue_examples(records, vocab, acts, context_n=0):
    """Encode dialogue-act records, splicing in-conversation context.

    `acts` is the fixed label list (training order); a record with a tag
    outside it raises, which is the unknown-label-at-eval-time contract.
    """
    act_index = {a: i for i, a in enumerate(acts)}
    examples = []
    for recs in group_conversations(records).values():
        token_seqs = [tokenize(r.text) for r in recs]
        for i, rec in enumerate(recs):
            if rec.act not in act_index:
                raise DatasetError(f"unknown act label {rec.act!r}")
            tokens = attach_context(token_seqs, i, context_n)
            ids = truncate_front(vocab.encode(tokens))
            tokens = tokens[-len(ids):]
            target = np.zeros(len(acts))
            target[act_index[rec.act]] = 1.0
            examples.append(SequenceExample(
                ids, target, doc_id=f"{rec.conversation_id}:{rec.turn}", tokens=tokens))
    return examples


def keyterm_tokens(record, vocab):
    """Token ids for a key-term document; blank documents fall back to UNK."""
    tokens = tokenize(record.text)
    ids = truncate_front(vocab.encode(tokens))
    if not ids:
        return [UNK_ID], [UNK_TOKEN]
    return ids, tokens[-len(ids):]


def build_keyterm_examples(records, vocab, candidates):
    """Encode key-term documents, dropping those with no covered label."""
    examples = []
    for rec in records:
        target = build_term_target(rec.terms, candidates)
        if target is None:
            continue
        ids, tokens = keyterm_tokens(rec, vocab)
        examples.append(SequenceExample(ids, target, doc_id=rec.doc_id, tokens=tokens))
    return examples
