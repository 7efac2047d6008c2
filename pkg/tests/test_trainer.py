import numpy as np
import pytest

from near import classifier as clf
from near import trainer as tr
from near.data import build_label_space, one_hot
from near.neighbors import build_candidate_sets
from near.synth import SynthConfig, generate

from conftest import make_dataset, unit


def small_config(**kw):
    base = dict(total_epochs=8, warm_epochs=3, batch_size=8, seed=0)
    base.update(kw)
    return tr.TrainConfig(**base)


def small_data(seed=0, noise=0.3):
    return generate(SynthConfig(num_classes=5, dim=16, shots=6, test_per_class=5,
                                noise_rate=noise, spurious_fraction=0.2, seed=seed))


class TestConfig:
    def test_defaults_match_contract(self):
        c = tr.TrainConfig()
        assert (c.kappa, c.shots, c.temperature) == (3, 3, 2.0)
        assert (c.total_epochs, c.warm_epochs) == (50, 10)
        assert (c.base_lr, c.batch_size) == (0.002, 32)

    def test_validation(self):
        with pytest.raises(ValueError):
            tr.TrainConfig(warm_epochs=60).validate()
        with pytest.raises(ValueError):
            tr.TrainConfig(batch_size=31).validate()
        with pytest.raises(ValueError):
            tr.TrainConfig(trainer_mode="bogus").validate()

    def test_from_dict_rejects_unknown(self):
        with pytest.raises(ValueError):
            tr.TrainConfig.from_dict({"bogus_key": 1})


class TestWarmup:
    def test_zero_epochs_unchanged(self, rng):
        train, _ = small_data()
        space = build_label_space(train)
        anchors = np.stack([train.label_embedding(l) for l in space.labels])
        params = clf.init_params(clf.SHARED_OFFSET, anchors)
        out = tr.warmup(params, train, space, small_config(), rng, epochs=0)
        np.testing.assert_array_equal(out.theta, params.theta)

    def test_single_step_loss_decreases(self, rng):
        le = {"a": np.array([1.0, 0, 0]), "b": np.array([0, 1.0, 0])}
        ds = make_dataset([[0.8, 0.6, 0], [0, 1.0, 0]], ["a", "b"],
                          label_embeddings=le, dim=3)
        space = build_label_space(ds)
        anchors = np.stack([ds.label_embedding(l) for l in space.labels])
        params = clf.init_params(clf.SHARED_OFFSET, anchors, 10.0)
        y = one_hot("a", space)
        x = ds.images[0].embedding
        before = clf.ce_loss(clf.forward(params, x), y)
        out = tr.warmup(params, ds, space, small_config(batch_size=2), rng, epochs=1)
        after = clf.ce_loss(clf.forward(out, x), y)
        assert after < before

    def test_deterministic(self):
        train, _ = small_data()
        space = build_label_space(train)
        anchors = np.stack([train.label_embedding(l) for l in space.labels])
        thetas = []
        for _ in range(2):
            params = clf.init_params(clf.SHARED_OFFSET, anchors)
            rng = np.random.default_rng(7)
            thetas.append(tr.warmup(params, train, space, small_config(), rng).theta)
        np.testing.assert_array_equal(thetas[0], thetas[1])


class TestTrainEpoch:
    def _setup(self, noise=0.3):
        train, _ = small_data(noise=noise)
        config = small_config()
        space = build_label_space(train)
        anchors = np.stack([train.label_embedding(l) for l in space.labels])
        params = clf.init_params(clf.SHARED_OFFSET, anchors)
        cands = build_candidate_sets(train, space, config.kappa, seed=config.seed)
        rng = np.random.default_rng(config.seed)
        params = tr.warmup(params, train, space, config, rng)
        return params, train, space, cands, config, rng

    def test_partition_covers_all(self):
        params, train, space, cands, config, rng = self._setup()
        _, _, diag = tr.train_epoch(params, train, space, cands, config, 4, rng)
        assert diag["n_clean"] + diag["n_noisy"] == len(train)

    def test_candidate_support_never_changes(self):
        params, train, space, cands, config, rng = self._setup()
        before = [set(np.flatnonzero(cands.confidence[i] > 0))
                  for i in range(len(train))]
        for epoch in range(4, 8):
            params, cands, _ = tr.train_epoch(params, train, space, cands,
                                              config, epoch, rng)
        after = [set(np.flatnonzero(cands.confidence[i] > 0))
                 for i in range(len(train))]
        assert before == after

    def test_deterministic_diagnostics(self):
        streams = []
        for _ in range(2):
            params, train, space, cands, config, rng = self._setup()
            diags = []
            for epoch in range(4, 7):
                params, cands, d = tr.train_epoch(params, train, space, cands,
                                                  config, epoch, rng)
                diags.append(d)
            streams.append(diags)
        assert streams[0] == streams[1]

    def test_mislabeled_image_lands_noisy(self):
        # one deliberately flipped label among 30 well-separated images
        hits = 0
        for seed in range(5):
            gen = np.random.default_rng(seed)
            centers = np.eye(3)
            embs, labels = [], []
            for c in range(3):
                for s in range(10):
                    embs.append(unit(centers[c] + 0.05 * gen.standard_normal(3)))
                    labels.append(f"c{c}")
            labels[0] = "c1"  # the corrupted image
            le = {f"c{c}": centers[c] for c in range(3)}
            ds = make_dataset(embs, labels, label_embeddings=le, dim=3)
            config = small_config(total_epochs=6, warm_epochs=4, seed=seed)
            space = build_label_space(ds)
            anchors = np.stack([ds.label_embedding(l) for l in space.labels])
            params = clf.init_params(clf.SHARED_OFFSET, anchors)
            cands = build_candidate_sets(ds, space, config.kappa, seed=seed)
            rng = np.random.default_rng(seed)
            params = tr.warmup(params, ds, space, config, rng)
            xs = ds.embedding_matrix()
            f_all = clf.forward_batch(params, xs)
            targets = np.stack([one_hot(l, space) for l in ds.mllm_labels()])
            losses = np.array([clf.ce_loss(f_all[i], targets[i])
                               for i in range(len(ds))])
            from near import mixture
            fit = mixture.fit_gmm_1d(losses)
            w = mixture.clean_posteriors(fit, losses)
            _, noisy = mixture.partition(w, mixture.adaptive_threshold(w))
            if 0 in noisy:
                hits += 1
        assert hits >= 4


class TestRun:
    def test_zeroshot_ignores_seed(self):
        train, test = small_data()
        _, r1 = tr.run(small_config(trainer_mode="zeroshot", seed=1), train, test)
        _, r2 = tr.run(small_config(trainer_mode="zeroshot", seed=99), train, test)
        assert r1.cacc == r2.cacc and r1.sacc == r2.sacc

    def test_zeroshot_matches_zero_shot_rule(self):
        train, test = small_data()
        model, _ = tr.run(small_config(trainer_mode="zeroshot"), train, test)
        preds = tr.predict_batch(model, test.embedding_matrix())
        space = build_label_space(train)
        expect = [clf.zero_shot_predict(train.label_embeddings, space.labels,
                                        im.embedding) for im in test.images]
        assert preds == expect

    def test_naive_keeps_full_label_space(self):
        train, test = small_data()
        model, _ = tr.run(small_config(trainer_mode="naive"), train, test)
        assert model.filtered_labels == model.space.labels

    def test_filtered_space_subset_and_predictions_inside(self):
        train, test = small_data()
        model, _ = tr.run(small_config(), train, test)
        assert set(model.filtered_labels) <= set(model.space.labels)
        assert len(model.filtered_labels) >= 1
        preds = tr.predict_batch(model, test.embedding_matrix())
        assert set(preds) <= set(model.filtered_labels)

    def test_bit_reproducible_artifact(self):
        train, test = small_data()
        blobs = [tr.run(small_config(seed=3), train, test)[0].to_json()
                 for _ in range(2)]
        assert blobs[0] == blobs[1]

    def test_model_round_trip(self, tmp_path):
        train, test = small_data()
        model, _ = tr.run(small_config(), train, test)
        p = tmp_path / "model.json"
        p.write_text(model.to_json())
        back = tr.load_model(p, test)
        np.testing.assert_array_equal(back.params.theta, model.params.theta)
        assert back.filtered_labels == model.filtered_labels
        assert tr.predict_batch(back, test.embedding_matrix()) == \
            tr.predict_batch(model, test.embedding_matrix())

    def test_filter_excludes_never_predicted_label(self):
        train, test = small_data(noise=0.4)
        model, _ = tr.run(small_config(total_epochs=12, warm_epochs=4), train, test)
        assert len(model.filtered_labels) <= model.space.k


class TestFilterLabels:
    def test_all_labels_survive_when_self_consistent(self):
        gen = np.random.default_rng(0)
        centers = np.eye(4)
        embs = [unit(centers[c] + 0.02 * gen.standard_normal(4))
                for c in range(4) for _ in range(3)]
        labels = [f"c{c}" for c in range(4) for _ in range(3)]
        le = {f"c{c}": centers[c] for c in range(4)}
        ds = make_dataset(embs, labels, label_embeddings=le, dim=4)
        space = build_label_space(ds)
        anchors = np.stack([ds.label_embedding(l) for l in space.labels])
        params = clf.init_params(clf.SHARED_OFFSET, anchors)
        cands = build_candidate_sets(ds, space, 3)
        assert tr.filter_labels(params, ds, space, cands) == space.labels

    def test_predict_singleton_space(self):
        train, test = small_data()
        model, _ = tr.run(small_config(), train, test)
        model.filtered_labels = [model.space.labels[0]]
        preds = tr.predict_batch(model, test.embedding_matrix())
        assert set(preds) == {model.space.labels[0]}
