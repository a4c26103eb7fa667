import random

import numpy as np
import pytest
import torch

from ontoenrich.dataset import TermPair
from ontoenrich.embeddings import FixedVectorProvider, HashEmbeddingProvider
from ontoenrich.errors import ModelError
from ontoenrich.labels import LabelKind
from ontoenrich.model import (
    Hyperparams,
    TagVocabs,
    build_tag_vocabs,
    classify_pair,
    init_model,
    load_model,
    parameter_groups,
    save_model,
    train,
)
from ontoenrich.paths import (
    DependencyNode,
    DependencyPath,
    Direction,
    PairPaths,
    null_pair_paths,
)
from ontoenrich.synthetic import make_separable_dataset

SMALL_VOCABS = TagVocabs(pos=["NOUN", "VERB", "PROPN"], dep=["nsubj", "ROOT", "attr", "dobj"])


def small_hyperparams(**overrides):
    defaults = dict(
        hidden_dim=8,
        ffn_input_dim=12,
        num_layers=2,
        embedding_dropout=0.35,
        hidden_dropout=0.8,
        epochs=3,
        seed=0,
        pos_dim=3,
        dep_dim=3,
        dir_dim=2,
    )
    defaults.update(overrides)
    return Hyperparams(**defaults)


def small_provider(dim=12):
    return HashEmbeddingProvider(dim)


def node(lemma, pos="NOUN", dep="nsubj", direction=Direction.TOWARD_ROOT):
    return DependencyNode(lemma=lemma, pos=pos, dep=dep, dir=direction)


def three_node_path(count=1):
    return DependencyPath(
        nodes=(
            node("alpha", "NOUN", "nsubj", Direction.TOWARD_ROOT),
            node("be", "VERB", "ROOT", Direction.ROOT),
            node("beta", "NOUN", "attr", Direction.AWAY_FROM_ROOT),
        ),
        count=count,
    )


def other_path(count=1):
    return DependencyPath(
        nodes=(
            node("alpha", "NOUN", "nsubj", Direction.TOWARD_ROOT),
            node("run", "VERB", "ROOT", Direction.ROOT),
            node("beta", "NOUN", "dobj", Direction.AWAY_FROM_ROOT),
        ),
        count=count,
    )


def make_pair(a="alpha term", b="beta term"):
    return TermPair(a=a, b=b, label=LabelKind.HYPERNYM, source="endpoint")


class TestInit:
    def test_seeded_init_bitwise_equal(self):
        h = small_hyperparams()
        provider = small_provider()
        first = init_model(h, provider, SMALL_VOCABS)
        second = init_model(h, provider, SMALL_VOCABS)
        for (name, p1), (_, p2) in zip(
            first.named_parameters(), second.named_parameters()
        ):
            assert torch.equal(p1, p2), name

    def test_security_defaults_head_shape(self):
        h = Hyperparams()  # security column defaults
        provider = FixedVectorProvider({}, dimension=512)
        model = init_model(h, provider, SMALL_VOCABS)
        assert tuple(model.ffn2.weight.shape) == (5, 120)
        assert tuple(model.ffn1.weight.shape) == (120, 2 * 180 + 2 * 512)

    def test_zero_hidden_dim_rejected(self):
        with pytest.raises(ValueError):
            Hyperparams(hidden_dim=0)

    def test_dropout_range_validated(self):
        with pytest.raises(ValueError):
            Hyperparams(hidden_dropout=1.0)

    def test_empty_vocab_rejected(self):
        with pytest.raises(ModelError):
            init_model(small_hyperparams(), small_provider(), TagVocabs(pos=[], dep=[]))

    def test_all_parameters_finite(self):
        model = init_model(small_hyperparams(), small_provider(), SMALL_VOCABS)
        for param in model.parameters():
            assert torch.isfinite(param).all()

    def test_xavier_variance_on_large_matrices(self):
        h = Hyperparams()  # hidden 180
        provider = FixedVectorProvider({}, dimension=512)
        model = init_model(h, provider, SMALL_VOCABS)
        checked = 0
        for name, param in model.named_parameters():
            if param.dim() < 2 or param.numel() < 10_000:
                continue
            fan_out, fan_in = param.shape[0], param.shape[1]
            expected = 2.0 / (fan_in + fan_out)
            observed = param.var().item()
            assert abs(observed - expected) <= 0.2 * expected, name
            checked += 1
        assert checked >= 3  # lstm input/hidden weights and ffn1 at least


class TestEmbedNode:
    def test_node_vector_length_532_at_paper_dims(self):
        h = Hyperparams()
        provider = FixedVectorProvider({}, dimension=512)
        model = init_model(h, provider, SMALL_VOCABS)
        model.eval()
        vec = model.embed_node(node("security", "PROPN", "nsubj"))
        assert vec.shape == (512 + 8 + 8 + 4,)

    def test_eval_mode_deterministic(self):
        model = init_model(small_hyperparams(), small_provider(), SMALL_VOCABS)
        model.eval()
        first = model.embed_node(node("alpha"))
        second = model.embed_node(node("alpha"))
        assert torch.equal(first, second)

    def test_unseen_tag_uses_unk_row(self):
        model = init_model(small_hyperparams(), small_provider(), SMALL_VOCABS)
        model.eval()
        known = model.embed_node(node("alpha", pos="NOUN"))
        unseen = model.embed_node(node("alpha", pos="XWEIRD"))
        assert known.shape == unseen.shape
        assert torch.isfinite(unseen).all()

    def test_training_mode_applies_dropout(self):
        model = init_model(
            small_hyperparams(embedding_dropout=0.9), small_provider(), SMALL_VOCABS
        )
        model.train()
        torch.manual_seed(1)
        first = model.embed_node(node("alpha"))
        second = model.embed_node(node("alpha"))
        assert not torch.equal(first, second)


class TestEncodePath:
    def test_representation_length_twice_hidden(self):
        h = Hyperparams()
        provider = FixedVectorProvider({}, dimension=512)
        model = init_model(h, provider, SMALL_VOCABS)
        model.eval()
        rep = model.encode_path(three_node_path().nodes)
        assert rep.shape == (360,)

    def test_single_node_path(self):
        model = init_model(small_hyperparams(), small_provider(), SMALL_VOCABS)
        model.eval()
        rep = model.encode_path((node("alpha"),))
        assert rep.shape == (16,)
        assert torch.isfinite(rep).all()

    def test_direction_sensitivity(self):
        model = init_model(small_hyperparams(), small_provider(), SMALL_VOCABS)
        model.eval()
        nodes = three_node_path().nodes
        forward_rep = model.encode_path(nodes)
        backward_rep = model.encode_path(tuple(reversed(nodes)))
        assert not torch.allclose(forward_rep, backward_rep)


class TestContextVector:
    def test_singleton_equals_representation(self):
        model = init_model(small_hyperparams(), small_provider(), SMALL_VOCABS)
        model.eval()
        pp = PairPaths(pair=make_pair(), paths=[three_node_path()])
        ctx = model.context_vector(pp)
        rep = model.encode_path(three_node_path().nodes)
        assert torch.allclose(ctx, rep)

    def test_identical_paths_any_counts_equal_single(self):
        model = init_model(small_hyperparams(), small_provider(), SMALL_VOCABS)
        model.eval()
        pp = PairPaths(
            pair=make_pair(), paths=[three_node_path(count=1), three_node_path(count=3)]
        )
        ctx = model.context_vector(pp)
        rep = model.encode_path(three_node_path().nodes)
        assert torch.allclose(ctx, rep)

    def test_weighted_mean_scalar_oracle(self):
        model = init_model(small_hyperparams(), small_provider(), SMALL_VOCABS)
        model.eval()
        pp = PairPaths(
            pair=make_pair(), paths=[three_node_path(count=1), other_path(count=2)]
        )
        ctx = model.context_vector(pp)
        r1 = model.encode_path(three_node_path().nodes)
        r2 = model.encode_path(other_path().nodes)
        expected = (r1 + 2 * r2) / 3
        assert torch.allclose(ctx, expected)

    def test_unnormalized_switch(self):
        h = small_hyperparams(normalize_context=False)
        model = init_model(h, small_provider(), SMALL_VOCABS)
        model.eval()
        pp = PairPaths(pair=make_pair(), paths=[three_node_path(count=2)])
        ctx = model.context_vector(pp)
        rep = model.encode_path(three_node_path().nodes)
        assert torch.allclose(ctx, 2 * rep)


class TestClassifyPair:
    def test_probabilities_normalized(self):
        model = init_model(small_hyperparams(), small_provider(), SMALL_VOCABS)
        pair = make_pair()
        pp = PairPaths(pair=pair, paths=[three_node_path()])
        probs = classify_pair(pair, pp, model)
        assert np.exp(probs.log_probs).sum() == pytest.approx(1.0, abs=1e-6)
        assert probs.predicted is LabelKind(int(np.argmax(probs.log_probs)))
        assert probs.confidence == pytest.approx(float(np.exp(probs.log_probs.max())))

    def test_path_order_invariance(self):
        model = init_model(small_hyperparams(), small_provider(), SMALL_VOCABS)
        pair = make_pair()
        forward = PairPaths(pair=pair, paths=[three_node_path(2), other_path(3)])
        shuffled = PairPaths(pair=pair, paths=[other_path(3), three_node_path(2)])
        first = classify_pair(pair, forward, model)
        second = classify_pair(pair, shuffled, model)
        np.testing.assert_allclose(first.log_probs, second.log_probs, atol=1e-9)

    def test_count_split_invariance(self):
        model = init_model(small_hyperparams(), small_provider(), SMALL_VOCABS)
        pair = make_pair()
        merged = PairPaths(pair=pair, paths=[three_node_path(count=3)])
        split = PairPaths(
            pair=pair,
            paths=[three_node_path(count=1) for _ in range(3)],
        )
        first = classify_pair(pair, merged, model)
        second = classify_pair(pair, split, model)
        np.testing.assert_allclose(first.log_probs, second.log_probs, atol=1e-9)

    def test_null_path_classifiable(self):
        model = init_model(small_hyperparams(), small_provider(), SMALL_VOCABS)
        pair = make_pair()
        probs = classify_pair(pair, null_pair_paths(pair), model)
        assert np.isfinite(probs.log_probs).all()

    def test_eval_mode_pure(self):
        model = init_model(small_hyperparams(), small_provider(), SMALL_VOCABS)
        pair = make_pair()
        pp = PairPaths(pair=pair, paths=[three_node_path()])
        first = classify_pair(pair, pp, model)
        second = classify_pair(pair, pp, model)
        np.testing.assert_array_equal(first.log_probs, second.log_probs)


class TestTrain:
    def tiny_data(self):
        data = []
        for i in range(4):
            pair = TermPair(
                a=f"alpha {i}", b=f"beta {i}", label=LabelKind.HYPERNYM, source="endpoint"
            )
            data.append((PairPaths(pair=pair, paths=[three_node_path()]), LabelKind.HYPERNYM))
            pair2 = TermPair(
                a=f"gamma {i}", b=f"delta {i}", label=LabelKind.NONE, source="endpoint"
            )
            data.append((PairPaths(pair=pair2, paths=[other_path()]), LabelKind.NONE))
        return data

    def test_epochs_zero_returns_initial_params(self):
        data = self.tiny_data()
        h = small_hyperparams(epochs=0)
        provider = small_provider()
        model, report = train(data, h, provider)
        reference = init_model(h, provider, build_tag_vocabs(pp for pp, _ in data))
        assert report.epoch_losses == []
        for (name, p1), (_, p2) in zip(
            model.named_parameters(), reference.named_parameters()
        ):
            assert torch.equal(p1, p2), name

    def test_deterministic_final_loss(self):
        data = self.tiny_data()
        h = small_hyperparams(epochs=3)
        _, first = train(data, h, small_provider())
        _, second = train(data, h, small_provider())
        assert first.epoch_losses == second.epoch_losses
        assert first.epoch_accuracies == second.epoch_accuracies

    def test_loss_decreases_on_separable_data(self):
        data = self.tiny_data()
        h = small_hyperparams(epochs=12, hidden_dropout=0.2)
        _, report = train(data, h, small_provider())
        assert report.epoch_losses[-1] < report.epoch_losses[0]
        assert all(np.isfinite(report.epoch_losses))

    def test_non_finite_loss_aborts_with_diagnostic(self):
        data = self.tiny_data()
        h = small_hyperparams(epochs=2, learning_rate=1e200)
        with pytest.raises(ModelError, match="epoch"):
            train(data, h, small_provider())

    def test_empty_train_data_rejected(self):
        with pytest.raises(ValueError):
            train([], small_hyperparams(), small_provider())


class TestGradientCheck:
    def test_analytic_matches_central_differences(self):
        from gradcheck import max_relative_error

        torch.set_num_threads(1)
        h = small_hyperparams(epochs=0)
        provider = small_provider()
        data = [
            (PairPaths(pair=make_pair(), paths=[three_node_path(2), other_path()]),
             LabelKind.HYPERNYM),
            (PairPaths(
                pair=TermPair(a="gamma x", b="delta y", label=LabelKind.NONE, source="endpoint"),
                paths=[other_path()],
            ), LabelKind.NONE),
        ]
        model = init_model(h, provider, SMALL_VOCABS)
        assert max_relative_error(model, data) < 1e-4


class TestSaveLoad:
    def test_round_trip_bitwise(self, tmp_path):
        model = init_model(small_hyperparams(), small_provider(), SMALL_VOCABS)
        path = tmp_path / "model.json"
        save_model(model, str(path))
        loaded = load_model(str(path), small_provider())
        for (name, p1), (_, p2) in zip(
            model.named_parameters(), loaded.named_parameters()
        ):
            assert torch.equal(p1, p2), name
        assert loaded.h == model.h

    def test_round_trip_classification_identical(self, tmp_path):
        model = init_model(small_hyperparams(), small_provider(), SMALL_VOCABS)
        path = tmp_path / "model.json"
        save_model(model, str(path))
        loaded = load_model(str(path), small_provider())
        for i in range(10):
            pair = TermPair(
                a=f"term a{i}", b=f"term b{i}", label=LabelKind.NONE, source="endpoint"
            )
            pp = PairPaths(pair=pair, paths=[three_node_path()])
            first = classify_pair(pair, pp, model)
            second = classify_pair(pair, pp, loaded)
            np.testing.assert_array_equal(first.log_probs, second.log_probs)

    def test_truncated_file_is_error(self, tmp_path):
        model = init_model(small_hyperparams(), small_provider(), SMALL_VOCABS)
        path = tmp_path / "model.json"
        save_model(model, str(path))
        content = path.read_text()
        path.write_text(content[: len(content) // 2])
        with pytest.raises(ModelError):
            load_model(str(path), small_provider())

    def test_version_mismatch_is_error(self, tmp_path):
        import json

        model = init_model(small_hyperparams(), small_provider(), SMALL_VOCABS)
        path = tmp_path / "model.json"
        save_model(model, str(path))
        payload = json.loads(path.read_text())
        payload["version"] = 99
        path.write_text(json.dumps(payload))
        with pytest.raises(ModelError, match="version"):
            load_model(str(path), small_provider())

    def test_hyperparams_recorded(self, tmp_path):
        h = Hyperparams(hidden_dim=180, epochs=0)
        provider = small_provider()
        model = init_model(h, provider, SMALL_VOCABS)
        path = tmp_path / "model.json"
        save_model(model, str(path))
        loaded = load_model(str(path), provider)
        assert loaded.h.hidden_dim == 180

    def test_byte_identical_saves(self, tmp_path):
        h = small_hyperparams()
        first_model = init_model(h, small_provider(), SMALL_VOCABS)
        second_model = init_model(h, small_provider(), SMALL_VOCABS)
        p1 = tmp_path / "m1.json"
        p2 = tmp_path / "m2.json"
        save_model(first_model, str(p1))
        save_model(second_model, str(p2))
        assert p1.read_bytes() == p2.read_bytes()


def test_synthetic_dataset_shape():
    data = make_separable_dataset(seed=0)
    labels = [label for _, label in data]
    assert len(data) == 60
    for kind in LabelKind:
        assert labels.count(kind) == 12
    nulls = [pp for pp, _ in data if pp.is_null]
    assert len(nulls) == 4  # every third NONE pair trains the null route
    again = make_separable_dataset(seed=0)
    assert [pp.pair.key for pp, _ in again] == [pp.pair.key for pp, _ in data]
