from __future__ import annotations

import itertools
import json
import math

import numpy as np
import pytest

from metacorr.data import MetaEvalDataset, ScoreMatrix, save_dataset


def make_dataset(human, metrics, names=None, scales=None):
    human = ScoreMatrix.from_array(human)
    names = names or [f"m{k}" for k in range(len(metrics))]
    pairs = tuple(
        (name, ScoreMatrix(human.system_ids, human.input_ids, x)) for name, x in zip(names, metrics)
    )
    return MetaEvalDataset(human, pairs, scales or {})


def noisy_metrics_dataset(rng, N, M, sigmas, signal=True):
    """Human scores z ~ N(0, 1); metric k is z + sigma_k * noise (or pure noise)."""
    z = rng.standard_normal((N, M))
    metrics = []
    for s in sigmas:
        noise = rng.standard_normal((N, M))
        metrics.append(z + s * noise if signal else noise)
    return make_dataset(z, metrics)


def summeval_like(seed=0, N=16, M=100, K=32):
    """Likert-style 1-5 human scores averaged over 3 raters, K metrics of mixed quality."""
    rng = np.random.default_rng(seed)
    latent = rng.normal(0.0, 1.0, (N, 1)) * 0.5 + rng.normal(0.0, 1.0, (N, M))
    raters = np.clip(np.round(3 + latent[None] + rng.normal(0, 0.7, (3, N, M))), 1, 5)
    human = raters.mean(axis=0)
    metrics = []
    for k in range(K):
        q = (k + 1) / K
        x = latent + rng.normal(0, 0.3 + 2 * q, (N, M))
        if k % 4 == 0:
            x = np.clip(np.round(3 + x), 1, 5)  # LLM-style discrete scores
        metrics.append(x)
    return make_dataset(human, metrics)


# -- brute-force oracles ---------------------------------------------------


def kendall_bruteforce(x, y):
    """tau-b by enumerating all pairs; returns None when a denominator factor is zero."""
    n = len(x)
    c = d = 0
    for i, j in itertools.combinations(range(n), 2):
        s = (x[i] - x[j]) * (y[i] - y[j])
        if s > 0:
            c += 1
        elif s < 0:
            d += 1
    def tie_pairs(v):
        counts = {}
        for a in v:
            counts[a] = counts.get(a, 0) + 1
        return sum(t * (t - 1) // 2 for t in counts.values())
    n0 = n * (n - 1) // 2
    n1, n2 = tie_pairs(x), tie_pairs(y)
    if n0 == n1 or n0 == n2:
        return None
    return (c - d) / math.sqrt((n0 - n1) * (n0 - n2))


def pearson_direct(x, y):
    n = len(x)
    mx = math.fsum(x) / n
    my = math.fsum(y) / n
    num = math.fsum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = math.fsum((a - mx) ** 2 for a in x)
    syy = math.fsum((b - my) ** 2 for b in y)
    if sxx == 0 or syy == 0:
        return None
    return num / math.sqrt(sxx * syy)


def ranks_by_enumeration(x):
    """Average 1-based rank: 1 + #smaller + (#equal - 1) / 2."""
    return [1 + sum(b < a for b in x) + (sum(b == a for b in x) - 1) / 2 for a in x]


@pytest.fixture
def tiny_manifest(tmp_path):
    """2 systems x 3 inputs, one metric."""
    (tmp_path / "human.csv").write_text("system,d1,d2,d3\ns1,1,2,3\ns2,4,5,5\n")
    (tmp_path / "bleu.csv").write_text("system,d1,d2,d3\ns1,0.1,0.2,0.25\ns2,0.4,0.45,0.5\n")
    manifest = tmp_path / "manifest.json"
    manifest.write_text(json.dumps({
        "human": {"path": "human.csv", "scale": [1, 5]},
        "metrics": [{"name": "bleu", "path": "bleu.csv", "scale": [0, 1]}],
    }))
    return manifest


@pytest.fixture(scope="session")
def summeval_fixture(tmp_path_factory):
    ds = summeval_like()
    directory = tmp_path_factory.mktemp("summeval_like")
    return ds, save_dataset(ds, directory)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.RESULTS, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
