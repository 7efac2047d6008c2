"""Acceptance suite. Each test covers one criterion at its stated tolerance
and prints a pass/fail line (run pytest with -s to see them inline)."""

import itertools
import json
import time

import numpy as np
import pytest
from click.testing import CliRunner

from near import classifier as clf
from near import trainer as tr
from near.cli import main as cli_main
from near.data import build_label_space
from near.metrics import candidate_quality, cluster_accuracy, semantic_accuracy
from near.mixture import clean_posteriors, fit_gmm_1d
from near.neighbors import build_candidate_sets
from near.refine import refine_label, rescale, sharpen, update_confidence
from near.synth import SynthConfig, generate

from conftest import unit
from test_classifier import finite_diff_grad, random_params
from test_metrics import brute_force_cacc


def report(num, name, ok):
    print(f"{'PASS' if ok else 'FAIL'} criterion {num}: {name}")
    assert ok, f"criterion {num} ({name}) failed"


ACCEPT_SYNTH = dict(num_classes=20, dim=64, shots=5, test_per_class=20,
                    noise_rate=0.3, spurious_fraction=0.2)


def _sweep(mode, noise, seeds=range(5)):
    out = []
    for seed in seeds:
        cfg = dict(ACCEPT_SYNTH, noise_rate=noise, seed=seed)
        train, test = generate(SynthConfig(**cfg))
        model, rep = tr.run(tr.TrainConfig(trainer_mode=mode, seed=seed), train, test)
        out.append((model, rep, train))
    return out


def test_criterion_1_assignment_oracle():
    rng = np.random.default_rng(2024)
    t0 = time.monotonic()
    ok = True
    for _ in range(200):
        m = int(rng.integers(1, 51))
        pred = [f"p{rng.integers(rng.integers(1, 8))}" for _ in range(m)]
        gt = [f"g{rng.integers(rng.integers(1, 8))}" for _ in range(m)]
        if cluster_accuracy(gt, pred) != brute_force_cacc(gt, pred):
            ok = False
            break
    elapsed = time.monotonic() - t0
    report(1, f"assignment-oracle equivalence ({elapsed:.1f}s < 10s)",
           ok and elapsed < 10)


def test_criterion_2_gmm_recovery():
    rng = np.random.default_rng(77)
    x = np.concatenate([rng.normal(0.2, 0.05, 150), rng.normal(2.0, 0.3, 150)])
    truth = np.array([0] * 150 + [1] * 150)
    t0 = time.monotonic()
    fit = fit_gmm_1d(x)
    w = clean_posteriors(fit, x)
    elapsed = time.monotonic() - t0
    assigned_noisy = (w < 0.5).astype(int)
    frac_correct = float(np.mean(assigned_noisy == truth))
    ok = (abs(fit.mean_clean - 0.2) <= 0.1 and abs(fit.mean_noisy - 2.0) <= 0.1
          and abs(fit.weight_clean - 0.5) <= 0.1 and frac_correct >= 0.95
          and elapsed < 1.0)
    report(2, f"GMM recovery (means {fit.mean_clean:.3f}/{fit.mean_noisy:.3f}, "
              f"{frac_correct:.1%} assigned, {elapsed:.2f}s)", ok)


def test_criterion_3_gradient_correctness():
    rng = np.random.default_rng(11)
    t0 = time.monotonic()
    worst = 0.0
    for i in range(100):
        mode = clf.SHARED_OFFSET if i % 2 == 0 else clf.LINEAR_PROBE
        params = random_params(rng, mode, k=int(rng.integers(2, 6)),
                               d=int(rng.integers(3, 8)))
        k, d = params.anchors.shape
        n = int(rng.integers(1, 4))
        xs = np.stack([unit(rng.standard_normal(d)) for _ in range(n)])
        t = rng.random((n, k))
        t /= t.sum(axis=1, keepdims=True)
        g = clf.grad(params, xs, t)
        fd = finite_diff_grad(params, xs, t)
        denom = np.maximum(np.maximum(np.abs(g), np.abs(fd)), 1e-4)
        worst = max(worst, float(np.max(np.abs(g - fd) / denom)))
    elapsed = time.monotonic() - t0
    report(3, f"gradient vs finite differences (worst rel err {worst:.2e}, "
              f"{elapsed:.1f}s < 30s)", worst <= 1e-4 and elapsed < 30)


def test_criterion_4_refinement_algebra():
    t0 = time.monotonic()
    ok = np.allclose(sharpen([0.8, 0.2], 2.0), [2 / 3, 1 / 3], atol=1e-12)
    ok &= np.allclose(rescale([0.7, 0.2, 0.1], [0, 0.5, 0.5]), [0, 2 / 3, 1 / 3],
                      atol=1e-12)
    ok &= np.allclose(update_confidence([0.6, 0.2, 0.2], [0.5, 0.5, 0]),
                      [0.75, 0.25, 0.0], atol=1e-12)
    rng = np.random.default_rng(5)
    for _ in range(1000):
        k = int(rng.integers(2, 10))
        f = rng.random(k) + 1e-9
        f /= f.sum()
        y = np.zeros(k)
        y[rng.integers(k)] = 1.0
        support = rng.permutation(k)[: int(rng.integers(1, k + 1))]
        q = np.zeros(k)
        q[support] = 1.0 / len(support)
        w = float(rng.random())
        temp = float(rng.uniform(0.5, 4.0))
        for vec in (sharpen(f, temp), refine_label(y, q, f, w, True, temp),
                    refine_label(y, q, f, w, False, temp), update_confidence(f, q)):
            ok &= bool(abs(vec.sum() - 1.0) < 1e-9 and np.all(vec >= 0))
        noisy = refine_label(y, q, f, w, False, temp)
        ok &= bool(np.all(noisy[q == 0] == 0.0))
        ok &= set(np.flatnonzero(update_confidence(f, q) > 0)) == set(support)
    elapsed = time.monotonic() - t0
    report(4, f"refinement algebra + 1000-case sweep ({elapsed:.1f}s < 5s)",
           bool(ok) and elapsed < 5)


def test_criterion_5_directional_win():
    t0 = time.monotonic()
    near = [r.cacc for _, r, _ in _sweep("near", 0.3)]
    naive = [r.cacc for _, r, _ in _sweep("naive", 0.3)]
    zs = [r.cacc for _, r, _ in _sweep("zeroshot", 0.3)]
    elapsed = time.monotonic() - t0
    m_near, m_naive, m_zs = map(np.median, (near, naive, zs))
    ok = m_near >= m_naive and m_near > m_zs and elapsed < 300
    report(5, f"noisy-data win (near {m_near:.3f} vs naive {m_naive:.3f} vs "
              f"zeroshot {m_zs:.3f}; {elapsed:.0f}s < 300s)", ok)


def test_criterion_6_no_harm_on_clean():
    near = np.median([r.cacc for _, r, _ in _sweep("near", 0.0)])
    naive = np.median([r.cacc for _, r, _ in _sweep("naive", 0.0)])
    ok = abs(near - naive) <= 0.02
    report(6, f"clean-data no harm (near {near:.3f} vs naive {naive:.3f})", ok)


def test_criterion_7_label_filtering():
    frac_deltas = []
    ok = True
    for model, _, train in _sweep("near", 0.3):
        c_all = model.space.labels
        c_test = model.filtered_labels
        ok &= len(c_test) <= len(c_all)

        def spurious_frac(labels):
            return sum("#v" in l for l in labels) / len(labels)

        frac_deltas.append(spurious_frac(c_all) - spurious_frac(c_test))
    ok &= np.median(frac_deltas) > 0
    report(7, f"label filtering (median spurious-fraction drop "
              f"{np.median(frac_deltas):.3f})", bool(ok))


def test_criterion_8_candidate_quality_ordering():
    knn, rnd, raw = [], [], []
    for seed in range(5):
        train, _ = generate(SynthConfig(**dict(ACCEPT_SYNTH, seed=seed)))
        space = build_label_space(train)
        gt = train.gt_labels()
        le = train.label_embeddings
        knn.append(candidate_quality(
            build_candidate_sets(train, space, 3, "knn", seed), gt, le))
        rnd.append(candidate_quality(
            build_candidate_sets(train, space, 3, "random", seed), gt, le))
        raw.append(semantic_accuracy(train.mllm_labels(), gt, le))
    mk, mr, mw = map(np.median, (knn, rnd, raw))
    ok = mk >= mr >= mw
    report(8, f"candidate quality ordering (knn {mk:.3f} >= random {mr:.3f} >= "
              f"raw {mw:.3f})", ok)


def test_criterion_9_determinism(tmp_path):
    runner = CliRunner()
    result = runner.invoke(cli_main, [
        "synth", "--classes", "10", "--dim", "32", "--shots", "4",
        "--test-per-class", "4", "--noise", "0.3", "--spurious", "0.2",
        "--seed", "3", "--out-train", str(tmp_path / "tr.json"),
        "--out-test", str(tmp_path / "te.json")])
    assert result.exit_code == 0, result.output
    blobs = []
    for _ in range(2):  # same command twice, same paths
        result = runner.invoke(cli_main, [
            "train", "--mode", "near", "--data", str(tmp_path / "tr.json"),
            "--test", str(tmp_path / "te.json"), "--seed", "3",
            "--epochs", "12", "--warm-epochs", "4", "--batch-size", "8",
            "--out", str(tmp_path / "m.json"),
            "--manifest", str(tmp_path / "mf.json")])
        assert result.exit_code == 0, result.output
        blobs.append(((tmp_path / "m.json").read_bytes(),
                      (tmp_path / "mf.json").read_bytes()))
    ok = blobs[0] == blobs[1]
    report(9, "byte-identical artifacts and manifests across identical-seed runs", ok)
