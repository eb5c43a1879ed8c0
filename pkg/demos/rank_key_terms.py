"""Key-term extraction as ranking over a fixed candidate vocabulary.

Documents get 2-4 gold terms; each gold term is signalled by cue words
while its literal token only sometimes appears in the text.  MAP and P@R
are reported for the trained model, tf-idf sorting, the oracle (whose MAP
equals mean candidate coverage), and a random shuffle.
"""

import numpy as np

from seqattn import corpus, evaluation, synth, training
from seqattn.model import ModelConfig, SequenceClassifier
from seqattn.training import TrainConfig

CORPUS = dict(num_classes=12, cues_per_class=2, noise_vocab=80,
              length_min=20, length_max=30, cue_min=1, cue_max=2)

train_rows = synth.generate_keyterms(synth.SynthSpec(examples_per_class=15, seed=3, **CORPUS))
test_rows = synth.generate_keyterms(synth.SynthSpec(examples_per_class=4, seed=1003, **CORPUS))
train_recs = [corpus.KeyTermRecord(r["doc_id"], r["text"], r["terms"]) for r in train_rows]
test_recs = [corpus.KeyTermRecord(r["doc_id"], r["text"], r["terms"]) for r in test_rows]

token_seqs = [corpus.tokenize(r.text) for r in train_recs]
vocab = corpus.build_vocabulary(token_seqs, min_count=1)
candidates = corpus.select_candidates([t for r in train_recs for t in r.terms], k=10)
print(f"{len(candidates)} candidate terms cover {candidates.coverage:.1%} "
      f"of the training labels")

train_ex = corpus.build_keyterm_examples(train_recs, vocab, candidates)
model = SequenceClassifier(ModelConfig(
    vocab_size=len(vocab), num_classes=len(candidates), embed_dim=20, hidden_dim=14,
    fc_dim=24, attention="smoothing", seed=3))
training.train(model, train_ex, TrainConfig(epochs=6, learning_rate=1e-2, seed=3))

stats = evaluation.document_frequencies(token_seqs, candidates)
rng = np.random.default_rng(0)
systems = {"attention model": [], "tf-idf sorting": [], "oracle": [], "random": []}
judgments = []
for rec in test_recs:
    ids, tokens = corpus.keyterm_tokens(rec, vocab)
    judgment = evaluation.build_judgment(rec.doc_id, rec.terms, candidates)
    judgments.append(judgment)
    systems["attention model"].append(
        evaluation.predict_ranking(model.forward_ids(ids).value, rec.doc_id))
    systems["tf-idf sorting"].append(
        evaluation.tfidf_rank(tokens, candidates, stats, rec.doc_id))
    systems["oracle"].append(evaluation.oracle_ranking(judgment, len(candidates)))
    systems["random"].append(
        evaluation.predict_ranking(rng.random(len(candidates)), rec.doc_id))

coverage = np.mean([len(j.covered) / j.n_gold for j in judgments])
print(f"mean per-document coverage of the test set: {coverage:.3f}\n")
print(f"{'system':18s} {'MAP':>7s} {'P@R':>7s}")
for name, rankings in systems.items():
    map_score = evaluation.mean_average_precision(rankings, judgments)
    p_at_r = np.mean([evaluation.precision_at_r(r, j)
                      for r, j in zip(rankings, judgments)])
    print(f"{name:18s} {map_score:7.3f} {p_at_r:7.3f}")
print("\nnote: the oracle MAP equals mean coverage -- uncovered gold terms are unreachable")
