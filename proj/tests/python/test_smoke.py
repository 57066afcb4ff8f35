"""Smoke tests for the python bindings."""

import numpy as np
import pytest

import msse


def test_head_shape_contract():
    cfg = msse.MsseHeadConfig(in_channels=16, proj_channels=8, se_ratio=4, num_classes=9)
    head = msse.MsseHead(cfg)
    head.init(7)
    feats = np.random.default_rng(0).normal(size=(2, 16, 7, 7)).astype(np.float32)
    logits = head.forward(feats)
    assert logits.shape == (2, 9)
    assert np.isfinite(logits).all()
    # inference is deterministic
    again = head.forward(feats)
    np.testing.assert_array_equal(logits, again)


def test_backbone_extract_shape():
    net = msse.MiniDenseNet(input_size=56, stem_channels=16, blocks=[(4, 8), (4, 8)])
    net.init(3)
    images = np.random.default_rng(1).uniform(size=(2, 3, 56, 56)).astype(np.float32)
    feats = net.extract(images)
    assert feats.shape == (2, net.output_channels, 7, 7)
    assert net.output_channels == 56


def test_phash_and_dedup():
    rng = np.random.default_rng(2)
    img = rng.integers(0, 256, size=(48, 48, 3), dtype=np.uint8)
    h1 = msse.phash64(img)
    h2 = msse.phash64(img)
    assert h1 == h2
    assert msse.hamming(h1, h2) == 0
    assert msse.hamming(h1, ~h1 & 0xFFFFFFFFFFFFFFFF) == 64

    # exact duplicates collapse to one survivor
    other = rng.integers(0, 256, size=(48, 48, 3), dtype=np.uint8)
    kept = msse.dedup([h1, h1, h1, msse.phash64(other)], tau=1.0)
    assert kept[0] == 0
    assert 1 not in kept and 2 not in kept


def test_metrics_roundtrip():
    truth = [0, 0, 1, 1, 2, 2]
    pred = [0, 0, 1, 1, 2, 1]
    cm = msse.confusion(truth, pred, 3)
    assert cm.shape == (3, 3)
    assert cm.sum() == 6
    summary = msse.class_metrics(cm)
    assert summary["accuracy"] == pytest.approx(5 / 6)
    # weighted recall equals accuracy
    assert summary["weighted_recall"] == pytest.approx(summary["accuracy"])
    kappa, po, pe = msse.cohen_kappa(cm)
    assert po == pytest.approx(5 / 6)
    assert -1.0 <= kappa <= 1.0


def test_curves_perfect_scores():
    labels = [0, 1, 2, 0, 1, 2]
    scores = np.full((6, 3), 0.05)
    for i, lab in enumerate(labels):
        scores[i, lab] = 0.9
    assert msse.roc_auc(scores, labels) == pytest.approx(1.0)
    assert msse.average_precision(scores, labels) == pytest.approx(1.0)


def test_augment_preserves_shape():
    rng = np.random.default_rng(3)
    img = rng.integers(0, 256, size=(32, 40, 3), dtype=np.uint8)
    out = msse.augment(img, seed=5)
    assert out.shape == img.shape
    assert out.dtype == np.uint8
    np.testing.assert_array_equal(out, msse.augment(img, seed=5))


def test_grad_cam_and_overlay():
    cfg = msse.MsseHeadConfig(in_channels=8, proj_channels=4, se_ratio=4, num_classes=3)
    head = msse.MsseHead(cfg)
    head.init(11)
    feats = np.random.default_rng(4).normal(size=(1, 8, 5, 5)).astype(np.float32)
    heat = head.grad_cam(feats, target_class=1)
    assert heat.shape == (5, 5)
    assert heat.min() >= 0.0 and heat.max() <= 1.0

    img = np.zeros((20, 20, 3), dtype=np.uint8)
    overlay = msse.render_overlay(img, heat, alpha=1.0)
    assert overlay.shape == (20, 20, 3)


def test_fit_tiny_run():
    rng = np.random.default_rng(5)
    images = rng.uniform(size=(24, 3, 16, 16)).astype(np.float32)
    labels = [i % 3 for i in range(24)]
    # separate the classes crudely so two epochs make progress
    for i, lab in enumerate(labels):
        images[i, lab] += 1.0
    net = msse.MiniDenseNet(input_size=16, stem_channels=4, blocks=[(2, 4)])
    net.init(1)
    cfg = msse.MsseHeadConfig(
        in_channels=net.output_channels, proj_channels=4, se_ratio=4, num_classes=3
    )
    head = msse.MsseHead(cfg)
    head.init(1)
    log = msse.fit(
        net, head, images, labels,
        train_idx=list(range(18)), val_idx=list(range(18, 24)),
        epochs=2, batch_size=6, seed=9,
    )
    assert len(log) == 2
    epochs, losses, accs = zip(*log)
    assert epochs == (0, 1)
    assert all(np.isfinite(losses))
