import math

import numpy as np
import pytest

import halluguard as hg


def make_bundle(k=4, d=6, steps=4, seed=0):
    rng = np.random.default_rng(seed)
    b = hg.Bundle()
    b.prompt_id = "p0"
    b.prompt_text = "1+2="
    b.references = ["3"]
    b.embed_dim = d
    gens = []
    for i in range(k):
        g = hg.Generation()
        g.tokens = list(range(1, steps + 1))
        g.logprob = [-0.1 * (i + 1)] * steps
        g.step_entropy = [0.5] * steps
        g.step_lse = [2.0] * steps
        g.text = str(i)
        g.sent_embed = rng.normal(size=d).astype(np.float32).tolist()
        g.step_states = rng.normal(size=steps * d).astype(np.float32).tolist()
        gens.append(g)
    b.generations = gens
    return b


def test_bundle_round_trip(tmp_path):
    b = make_bundle()
    assert hg.validate_bundle(b) == []
    path = tmp_path / "b.hgb"
    n = hg.write_bundle(b, path)
    assert n == path.stat().st_size
    assert hg.read_bundle(path) == b


def test_invalid_bundle_reported():
    b = make_bundle()
    g = b.generations
    g[0].logprob = [0.5] * 4
    b.generations = g
    assert hg.validate_bundle(b)


def test_read_missing_file_raises(tmp_path):
    with pytest.raises(hg._core.Error):
        hg.read_bundle(tmp_path / "missing.hgb")


def test_gram_matches_numpy():
    e = np.random.default_rng(1).normal(size=(5, 8))
    g = hg.build_gram(e, 1e-3, True)
    u = e / np.linalg.norm(e, axis=1, keepdims=True)
    ref = u @ u.T + 1e-3 * np.eye(5)
    assert np.allclose(g, ref, atol=1e-12)
    s = hg.spectral_summary(g)
    w = np.linalg.eigvalsh(ref)
    assert math.isclose(s["log_det"], float(np.sum(np.log(w))), rel_tol=1e-9)
    assert math.isclose(s["kappa"], w[-1] / w[0], rel_tol=1e-9)
    assert math.isclose(hg.cholesky_log_det(g), s["log_det"], rel_tol=1e-9)


def test_components_and_score():
    b = make_bundle()
    c = hg.components(b)
    raw = c.log_det + c.log_sigma_max - c.log_kappa_sq
    assert math.isclose(hg.score(c), raw, rel_tol=1e-12)
    scores = hg.score_detectors(b)
    assert set(scores) == set(hg.all_detectors())
    assert scores["perplexity"] is not None


def test_metrics():
    assert hg.auroc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == pytest.approx(0.75)
    assert hg.auprc([0.9, 0.1], [1, 0]) == pytest.approx(1.0)
    assert hg.tpr_at_fpr([0.9, 0.8, 0.1, 0.2], [1, 1, 0, 0], 0.05) == pytest.approx(1.0)
    with pytest.raises(hg._core.Error):
        hg.auroc([0.1, 0.2], [1, 1])


def test_bound_terms():
    data, reasoning, total = hg.bound_terms(3)
    assert total == pytest.approx(8.25)
    assert total == pytest.approx(data + reasoning)
    assert hg.bound_terms(3, 0.0)[1] == 0.0
