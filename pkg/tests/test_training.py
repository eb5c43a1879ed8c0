import numpy as np
import pytest

from seqattn import training
from seqattn.corpus import SequenceExample
from seqattn.model import BagOfWordsClassifier, ModelConfig, SequenceClassifier
from seqattn.numerics import Node, Parameter, ShapeError, Tape
from seqattn.training import (
    CheckpointIntegrityError,
    CheckpointVersionError,
    TrainConfig,
    TrainingError,
    clip_global_norm,
    cross_entropy,
    cross_entropy_loss,
    load_checkpoint,
    rmsprop_update,
    save_checkpoint,
    train,
    train_epoch,
)


def tiny_model(mode="smoothing", seed=0):
    return SequenceClassifier(ModelConfig(
        vocab_size=10, num_classes=4, embed_dim=6, hidden_dim=5, fc_dim=8,
        attention=mode, seed=seed))


def toy_examples(n=12, seed=0, classes=4, vocab=10, length=5):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        ids = list(rng.integers(3, vocab, size=length))
        target = np.zeros(classes)
        target[rng.integers(0, classes)] = 1.0
        out.append(SequenceExample(ids, target, doc_id=f"d{i}"))
    return out


# ---------------------------------------------------------------------------
# loss


def test_cross_entropy_uniform_vs_one_hot():
    assert cross_entropy_loss(np.full(4, 0.25), [1.0, 0, 0, 0]) == \
        pytest.approx(1.3862943611198906, abs=1e-9)


def test_cross_entropy_perfect_prediction():
    assert cross_entropy_loss([0.0, 1.0], [0.0, 1.0]) <= 1e-11


def test_cross_entropy_sparse_target_uniform_prediction():
    target = np.zeros(1000)
    target[[3, 77, 400, 999]] = 0.25
    assert cross_entropy_loss(np.full(1000, 1e-3), target) == \
        pytest.approx(6.907755278982137, abs=1e-9)


def test_cross_entropy_shape_mismatch():
    with pytest.raises(ShapeError):
        cross_entropy_loss([0.5, 0.5], [1.0, 0.0, 0.0])


def test_softmax_cross_entropy_logit_gradient():
    # closed form: dL/dz = softmax(z) - target
    from seqattn import numerics as nx
    rng = np.random.default_rng(0)
    for _ in range(20):
        z = Parameter("z", rng.normal(size=6))
        target = rng.dirichlet(np.ones(6))
        tape = Tape()
        probs = nx.softmax(z, tape)
        tape.backward(cross_entropy(probs, target, tape))
        assert np.allclose(z.grad, probs.value - target, atol=1e-9)


# ---------------------------------------------------------------------------
# optimizer


def test_rmsprop_first_step_size():
    p = Parameter("p", np.array([1.0]))
    p.grad = np.array([1.0])
    rmsprop_update(p, TrainConfig())
    # lr / (sqrt(0.1) + eps)
    assert p.value[0] == pytest.approx(1.0 - 0.0031622775601683824, abs=1e-12)
    assert np.array_equal(p.grad, [0.0])


def test_rmsprop_zero_gradient_decays_cache():
    p = Parameter("p", np.array([2.0]))
    p.grad = np.array([1.0])
    cfg = TrainConfig()
    rmsprop_update(p, cfg)
    cache_before = p.rms_cache.copy()
    p.grad = np.array([0.0])
    rmsprop_update(p, cfg)
    assert p.value[0] == pytest.approx(2.0 - 0.0031622775601683824, abs=1e-12)
    assert np.allclose(p.rms_cache, 0.9 * cache_before)


def test_rmsprop_repeated_step_shrinks():
    p = Parameter("p", np.array([0.0]))
    cfg = TrainConfig()
    p.grad = np.array([1.0])
    rmsprop_update(p, cfg)
    first = -p.value[0]
    p.grad = np.array([1.0])
    rmsprop_update(p, cfg)
    second = -p.value[0] - first
    assert second == pytest.approx(0.00229415728607404, abs=1e-12)
    assert second < first
    assert np.all(p.rms_cache >= 0)


def test_clip_global_norm():
    a = Parameter("a", np.zeros(3))
    b = Parameter("b", np.zeros(2))
    a.grad = np.array([3.0, 0.0, 0.0])
    b.grad = np.array([0.0, 4.0])
    total = clip_global_norm([a, b], 2.5)
    assert total == pytest.approx(5.0)
    assert np.sqrt(np.sum(a.grad ** 2) + np.sum(b.grad ** 2)) == pytest.approx(2.5)
    before = a.grad.copy()
    clip_global_norm([a, b], 100.0)
    assert np.array_equal(a.grad, before)


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(rms_decay=1.0)
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0.0)


# ---------------------------------------------------------------------------
# training loop


def test_training_is_reproducible():
    examples = toy_examples()
    runs = []
    for _ in range(2):
        m = tiny_model(seed=1)
        train(m, examples, TrainConfig(epochs=3, batch_size=4, seed=7))
        runs.append([p.value.copy() for p in m.parameters()])
    for a, b in zip(*runs):
        assert np.array_equal(a, b)


def test_padded_batch_matches_per_example_gradients():
    # padding to the batch max must leave every gradient untouched
    m = tiny_model(seed=2)
    examples = [
        SequenceExample([3, 4], np.array([1.0, 0, 0, 0])),
        SequenceExample([5, 6, 7, 8, 9], np.array([0, 1.0, 0, 0])),
    ]
    padded = training.pad_batch(examples)
    assert padded[0] == [3, 4, 0, 0, 0]
    for p in m.parameters():
        p.grad = np.zeros_like(p.value)
    for ids, ex in zip(padded, examples):
        tape = Tape()
        tape.backward(cross_entropy(m.forward_ids(ids, tape), ex.target, tape),
                      seed=1.0 / len(examples))
    batched = [p.grad.copy() for p in m.parameters()]

    for p in m.parameters():
        p.grad = np.zeros_like(p.value)
    for ex in examples:
        tape = Tape()
        tape.backward(cross_entropy(m.forward_ids(ex.token_ids, tape), ex.target, tape),
                      seed=1.0 / len(examples))
    unpadded = [p.grad.copy() for p in m.parameters()]
    for a, b in zip(batched, unpadded):
        assert np.abs(a - b).max() <= 1e-9


def test_train_epoch_reports_stats():
    m = tiny_model(seed=3)
    examples = toy_examples(8)
    stats = train_epoch(m, examples, TrainConfig(epochs=1, batch_size=4, seed=0),
                        np.random.default_rng(0))
    assert stats.examples_seen == 8
    assert np.isfinite(stats.mean_loss)


def test_train_loss_decreases_on_memorizable_data():
    m = tiny_model(seed=4)
    examples = toy_examples(6, seed=5)
    history = train(m, examples, TrainConfig(epochs=15, batch_size=6,
                                             learning_rate=3e-3, seed=1))
    assert history[-1].mean_loss < history[0].mean_loss


def test_train_rejects_empty_dataset():
    with pytest.raises(ValueError):
        train_epoch(tiny_model(), [], TrainConfig(), np.random.default_rng(0))


def test_non_finite_loss_aborts_with_diagnostics():
    class Exploding:
        def parameters(self):
            return [Parameter("p", np.ones(1))]

        def forward_ids(self, ids, tape=None):
            return Node(np.array([np.nan, 1.0 - np.nan]))

    with pytest.raises(TrainingError, match="batch 0"):
        train_epoch(Exploding(), toy_examples(2, classes=2),
                    TrainConfig(batch_size=2), np.random.default_rng(0))


# ---------------------------------------------------------------------------
# checkpoints


def test_checkpoint_round_trip_bit_identical(tmp_path):
    m = tiny_model(seed=5)
    train(m, toy_examples(4), TrainConfig(epochs=1, seed=0))
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, m, "dialogue_act", ["a", "b", "c", "d"],
                    metadata={"epoch": 1, "loss": 1.0, "seed": 0})
    loaded, descriptor, metadata = load_checkpoint(path)
    for p, q in zip(m.parameters(), loaded.parameters()):
        assert p.name == q.name
        assert np.array_equal(p.value, q.value)
    ids = [3, 4, 5]
    assert np.array_equal(m.forward_ids(ids).value, loaded.forward_ids(ids).value)
    assert descriptor["labels"] == ["a", "b", "c", "d"]
    assert metadata["seed"] == 0


def test_checkpoint_bytes_deterministic(tmp_path):
    blobs = []
    for name in ("one.ckpt", "two.ckpt"):
        m = tiny_model(seed=6)
        save_checkpoint(tmp_path / name, m, "dialogue_act", ["a", "b", "c", "d"],
                        metadata={"epoch": 0, "loss": 0.5, "seed": 6})
        blobs.append((tmp_path / name).read_bytes())
    assert blobs[0] == blobs[1]


def test_checkpoint_truncated_file_is_integrity_error(tmp_path):
    m = tiny_model(seed=7)
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, m, "dialogue_act", ["a", "b", "c", "d"])
    data = path.read_bytes()
    path.write_bytes(data[:len(data) - 16])
    with pytest.raises(CheckpointIntegrityError, match="truncated"):
        load_checkpoint(path)


def test_checkpoint_trailing_garbage_is_integrity_error(tmp_path):
    m = tiny_model(seed=7)
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, m, "dialogue_act", ["a", "b", "c", "d"])
    path.write_bytes(path.read_bytes() + b"\x00" * 8)
    with pytest.raises(CheckpointIntegrityError, match="trailing"):
        load_checkpoint(path)


def test_checkpoint_version_mismatch(tmp_path):
    m = tiny_model(seed=8)
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, m, "dialogue_act", ["a", "b", "c", "d"])
    head, _, blob = path.read_bytes().partition(b"\n")
    path.write_bytes(head.replace(b'"format_version":1', b'"format_version":9')
                     + b"\n" + blob)
    with pytest.raises(CheckpointVersionError):
        load_checkpoint(path)


def test_checkpoint_restores_mlp(tmp_path):
    m = BagOfWordsClassifier(10, 3, hidden_dim=6, num_layers=2, seed=1)
    path = tmp_path / "mlp.ckpt"
    save_checkpoint(path, m, "dialogue_act", ["a", "b", "c"])
    loaded, descriptor, _ = load_checkpoint(path)
    assert loaded.kind == "mlp"
    assert descriptor["spec"]["num_layers"] == 2
    ids = [3, 4, 4]
    assert np.array_equal(m.forward_ids(ids).value, loaded.forward_ids(ids).value)
