import numpy as np
import pytest
from scipy.special import expit

from seqattn import numerics as nx
from seqattn.model import (
    AttentionTrace,
    BagOfWordsClassifier,
    ModelConfig,
    SequenceClassifier,
    attention_readout,
    bag_of_words,
    normalize_sharpening,
    normalize_smoothing,
)
from seqattn.numerics import Node, ShapeError, Tape, finite_difference_check
from seqattn.training import cross_entropy


def tiny(mode="smoothing", seed=0, vocab=12, classes=4):
    return SequenceClassifier(ModelConfig(
        vocab_size=vocab, num_classes=classes, embed_dim=6, hidden_dim=5,
        fc_dim=7, attention=mode, seed=seed))


# ---------------------------------------------------------------------------
# config


def test_config_rejects_bad_mode():
    with pytest.raises(ValueError, match="attention"):
        ModelConfig(vocab_size=5, num_classes=2, attention="fuzzy")


def test_config_rejects_zero_dims():
    with pytest.raises(ValueError, match="hidden_dim"):
        ModelConfig(vocab_size=5, num_classes=2, hidden_dim=0)


# ---------------------------------------------------------------------------
# embedding


def test_embed_shapes():
    m = tiny()
    vecs = m.embed_sequence([3, 4, 5])
    assert len(vecs) == 3 and all(v.value.shape == (6,) for v in vecs)


def test_embed_pad_is_zero_and_frozen():
    m = tiny()
    tape = Tape()
    vecs = m.embed_sequence([0, 0], tape)
    assert all(np.array_equal(v.value, np.zeros(6)) for v in vecs)
    loss = nx.sum_all(nx.add(vecs[0], vecs[1], tape), tape)
    tape.backward(loss)
    assert np.array_equal(m.embedding.grad, np.zeros_like(m.embedding.value))


def test_embed_gradient_hits_only_used_rows():
    m = tiny()
    tape = Tape()
    vecs = m.embed_sequence([3, 7], tape)
    tape.backward(nx.sum_all(nx.add(vecs[0], vecs[1], tape), tape))
    used = np.zeros(m.config.vocab_size, dtype=bool)
    used[[3, 7]] = True
    assert np.all(m.embedding.grad[used] == 1.0)
    assert np.all(m.embedding.grad[~used] == 0.0)


def test_embed_rejects_out_of_range():
    with pytest.raises(IndexError, match="out of range"):
        tiny().embed_sequence([99])


# ---------------------------------------------------------------------------
# lstm


def _zero_weights(m):
    for p in (m.Wi, m.Wf, m.Wg, m.Wo):
        p.value[:] = 0.0
    for p in (m.bi, m.bf, m.bg, m.bo):
        p.value[:] = 0.0


def test_lstm_step_all_zero():
    m = tiny()
    _zero_weights(m)
    h, c = m.lstm_step(Node(np.ones(6)), Node(np.zeros(5)), Node(np.zeros(5)))
    assert np.array_equal(h.value, np.zeros(5))
    assert np.array_equal(c.value, np.zeros(5))


def test_lstm_step_forget_gate_decay():
    # zero weights, forget bias 1: c' = sigmoid(1) * c, candidate is killed
    m = tiny()
    _zero_weights(m)
    m.bf.value[:] = 1.0
    c_prev = np.array([1.0, -2.0, 0.5, 3.0, -1.0])
    h, c = m.lstm_step(Node(np.zeros(6)), Node(np.zeros(5)), Node(c_prev))
    assert np.allclose(c.value, expit(1.0) * c_prev, atol=1e-12)
    assert np.allclose(h.value, 0.5 * np.tanh(c.value), atol=1e-12)


def test_lstm_step_gradients():
    m = tiny(seed=3)
    x = np.linspace(-0.5, 0.5, 6)

    def f(tape):
        h, c = m.lstm_step(Node(x), Node(np.zeros(5)), Node(np.zeros(5)), tape)
        return nx.sum_all(nx.mul(h, h, tape), tape)

    params = [m.Wi, m.bi, m.Wf, m.bf, m.Wg, m.bg, m.Wo, m.bo]
    assert finite_difference_check(f, params) < 1e-4


def test_encode_single_token_equals_single_step():
    m = tiny()
    enc = m.encode_sequence([4])
    v = m.embed_sequence([4])[0]
    h, _ = m.lstm_step(v, Node(np.zeros(5)), Node(np.zeros(5)))
    assert np.array_equal(enc.final.value, h.value)


def test_encode_trailing_pad_is_noop():
    m = tiny()
    plain = m.encode_sequence([3, 4, 5]).final.value
    padded = m.encode_sequence([3, 4, 5, 0, 0, 0]).final.value
    assert np.array_equal(plain, padded)


def test_encode_order_sensitivity():
    m = tiny(seed=9)
    a = m.encode_sequence([3, 4, 5, 6]).final.value
    b = m.encode_sequence([3, 5, 4, 6]).final.value
    assert not np.allclose(a, b)


def test_encode_rejects_empty():
    with pytest.raises(ValueError):
        tiny().encode_sequence([])


# ---------------------------------------------------------------------------
# attention normalization (pure)


def test_sharpening_uniform():
    out = normalize_sharpening(np.zeros(4))
    assert np.allclose(out, 0.25, atol=1e-15)


def test_sharpening_spot_value():
    out = normalize_sharpening(np.array([1.0, 0.0]))
    assert out == pytest.approx([0.7310585786300049, 0.2689414213699951], abs=1e-6)


def test_smoothing_even_split():
    assert np.allclose(normalize_smoothing(np.zeros(2)), 0.5, atol=1e-15)


def test_smoothing_spot_value():
    # sigma(1)/(sigma(1)+sigma(0)) = 2e/(3e+1)
    out = normalize_smoothing(np.array([1.0, 0.0]))
    assert out == pytest.approx([0.5938454849513094, 0.4061545150486906], abs=1e-6)


def test_smoothing_less_peaked_than_sharpening_spot():
    e = np.array([1.0, 0.0])
    assert normalize_smoothing(e).max() < normalize_sharpening(e).max()


def test_sharpening_shift_invariant_smoothing_not():
    e = np.array([1.0, 0.0])
    assert np.allclose(normalize_sharpening(e + 5.0), normalize_sharpening(e), atol=1e-9)
    assert np.abs(normalize_smoothing(e + 5.0) - normalize_smoothing(e)).max() > 1e-3


def test_normalization_properties_random():
    rng = np.random.default_rng(7)
    for _ in range(300):
        n = int(rng.integers(2, 30))
        e = rng.uniform(-1, 1, size=n)
        mask = rng.random(n) < 0.8
        if not mask.any():
            mask[0] = True
        for fn in (normalize_sharpening, normalize_smoothing):
            out = fn(e, mask)
            assert np.all(out >= 0)
            assert abs(out.sum() - 1.0) < 1e-9
            assert np.all(out[~mask] == 0.0)
            perm = rng.permutation(n)
            assert np.allclose(fn(e[perm], mask[perm]), out[perm], atol=1e-12)
        assert normalize_smoothing(e, mask).max() <= normalize_sharpening(e, mask).max() + 1e-12


def test_selection_limit():
    # one dominating score: sharpening collapses onto it, smoothing cannot
    e = np.zeros(6)
    e[2] = 20.0
    sharp = normalize_sharpening(e)
    smooth = normalize_smoothing(e)
    assert sharp[2] > 1.0 - 1e-6
    expected = expit(20.0) / (expit(20.0) + 5 * expit(0.0))
    assert smooth[2] == pytest.approx(expected, abs=1e-12)
    assert smooth[2] < 0.5


def test_normalization_rejects_all_masked():
    with pytest.raises(ValueError):
        normalize_sharpening(np.ones(3), np.zeros(3, dtype=bool))
    with pytest.raises(ValueError):
        normalize_smoothing(np.ones(3), np.zeros(3, dtype=bool))


# ---------------------------------------------------------------------------
# readout and classifier


def test_readout_one_hot_selects():
    vecs = np.arange(12.0).reshape(3, 4)
    w = np.array([0.0, 1.0, 0.0])
    assert np.array_equal(attention_readout(w, vecs), vecs[1])


def test_readout_uniform_over_identical():
    vecs = np.tile([1.0, 2.0], (5, 1))
    out = attention_readout(np.full(5, 0.2), vecs)
    assert np.allclose(out, [1.0, 2.0], atol=1e-15)


def test_readout_linear_in_vectors():
    rng = np.random.default_rng(0)
    w = rng.dirichlet(np.ones(4))
    vecs = rng.normal(size=(4, 6))
    assert np.allclose(attention_readout(w, 2 * vecs),
                       2 * attention_readout(w, vecs), atol=1e-12)


def test_classify_sums_to_one():
    m = tiny()
    out = m.classify(Node(np.linspace(-1, 1, 6)))
    assert abs(out.value.sum() - 1.0) < 1e-12


def test_classify_zero_weights_uniform():
    m = tiny()
    m.fc_W.value[:] = 0.0
    m.fc_b.value[:] = 0.0
    m.out_W.value[:] = 0.0
    m.out_b.value[:] = 0.0
    out = m.classify(Node(np.ones(6)))
    assert np.allclose(out.value, 0.25, atol=1e-15)


# ---------------------------------------------------------------------------
# forward


def test_forward_single_position_trace():
    m = tiny("sharpening")
    probs, trace = m.forward([5])
    assert trace.weights.tolist() == [1.0]
    assert abs(probs.value.sum() - 1.0) < 1e-12


def test_forward_plain_mode_has_no_trace():
    probs, trace = tiny("none").forward([3, 4])
    assert trace is None


def test_forward_deterministic():
    a = tiny("smoothing", seed=4).forward([3, 4, 5, 6])[0].value
    b = tiny("smoothing", seed=4).forward([3, 4, 5, 6])[0].value
    assert np.array_equal(a, b)


def test_forward_trace_matches_pure_normalization():
    # the taped path and the array-level normalizers must agree exactly
    for mode, fn in (("sharpening", normalize_sharpening),
                     ("smoothing", normalize_smoothing)):
        m = tiny(mode, seed=11)
        ids = [3, 4, 0, 5, 6, 0]
        _, trace = m.forward(ids)
        mask = np.array([i != 0 for i in ids])
        assert np.allclose(trace.weights, fn(trace.scores, mask), atol=1e-12)
        assert np.all(trace.weights[~mask] == 0.0)
        assert abs(trace.weights.sum() - 1.0) < 1e-9


def test_forward_scores_are_cosines_in_range():
    m = tiny("smoothing", seed=2)
    _, trace = m.forward([3, 4, 5, 6, 7])
    assert np.all(trace.scores <= 1.0 + 1e-12)
    assert np.all(trace.scores >= -1.0 - 1e-12)


def test_forward_rejects_all_pad():
    with pytest.raises(ValueError):
        tiny("smoothing").forward([0, 0])


def test_padding_never_changes_predictions():
    for mode in ("none", "sharpening", "smoothing"):
        m = tiny(mode, seed=6)
        base = m.forward([3, 4, 5])[0].value
        padded = m.forward([3, 4, 5] + [0] * 7)[0].value
        assert np.array_equal(base, padded)


def test_embedding_is_shared_between_encoder_and_attention():
    # one table: editing row r moves both the summary path and the scores
    m = tiny("smoothing", seed=8)
    ids = [3, 4, 5]
    probs0, trace0 = m.forward(ids)
    m.embedding.value[4] += 0.7
    probs1, trace1 = m.forward(ids)
    assert not np.allclose(trace0.scores, trace1.scores)
    assert not np.allclose(probs0.value, probs1.value)


def test_end_to_end_gradients_both_attention_modes():
    ids = [5, 6, 7, 8, 9, 10, 11]
    target = np.array([0.0, 0.0, 1.0, 0.0])
    for mode, seed in (("sharpening", 22), ("smoothing", 19)):
        m = tiny(mode, seed=seed)

        def f(tape, m=m):
            return cross_entropy(m.forward_ids(ids, tape), target, tape)

        assert finite_difference_check(f, m.parameters()) < 1e-4


# ---------------------------------------------------------------------------
# MLP baseline


def test_bag_of_words_ignores_pad():
    counts = bag_of_words([0, 3, 3, 5, 0], 8)
    assert counts[0] == 0.0 and counts[3] == 2.0 and counts[5] == 1.0


def test_mlp_output_sums_to_one():
    m = BagOfWordsClassifier(10, 4, hidden_dim=8, num_layers=3, seed=0)
    out = m.forward(bag_of_words([3, 4, 5], 10))
    assert abs(out.value.sum() - 1.0) < 1e-12


def test_mlp_zero_input_uniform():
    m = BagOfWordsClassifier(10, 4, hidden_dim=8, num_layers=3, seed=0)
    out = m.forward(np.zeros(10))
    assert np.allclose(out.value, 0.25, atol=1e-15)


def test_mlp_rejects_wrong_dim():
    m = BagOfWordsClassifier(10, 4, hidden_dim=8, num_layers=3, seed=0)
    with pytest.raises(ShapeError):
        m.forward(np.zeros(9))


def test_mlp_gradients():
    m = BagOfWordsClassifier(12, 4, hidden_dim=9, num_layers=3, seed=3)
    counts = bag_of_words([3, 4, 5, 6, 7, 3, 11], 12)
    target = np.array([0.5, 0.5, 0.0, 0.0])

    def f(tape):
        return cross_entropy(m.forward(counts, tape), target, tape)

    assert finite_difference_check(f, m.parameters()) < 1e-4
