"""Smoke test for the copulasmote Python extension.

Build and install first:  pip install --no-build-isolation -e crates/py
Then run:                 python python/smoke_test.py
"""

import json
import math
import random
import tempfile
from pathlib import Path

import copulasmote as cs

DATA = Path(__file__).resolve().parent.parent / "data"


def imbalanced(n_maj=80, n_min=20, seed=0):
    rng = random.Random(seed)
    x, y = [], []
    for i in range(n_maj + n_min):
        minority = i >= n_maj
        z = rng.gauss(1.5 if minority else 0.0, 1.0)
        x.append([z, 0.6 * z + rng.gauss(0, 0.8), float(rng.random() < 0.4), rng.choice([-1.0, 0.0, 2.0])])
        y.append(1 if minority else 0)
    return x, y


def test_resample_methods():
    x, y = imbalanced()
    for method in ["copulasmote", "smote", "borderline", "adasyn"]:
        out = cs.resample(x, y, method=method, seed=7)
        assert sum(out.labels) * 2 == len(out.labels), method
        assert out.n_syn == 60 and sum(out.synthetic_mask) == 60
        assert len(out.features) == 160
    out = cs.resample(x, y, method="copulasmote", seed=7)
    assert out.vine is not None and out.vine.dimension == 4
    # every synthetic value is an observed minority value
    for j in range(4):
        observed = {row[j] for row, label in zip(x, y) if label == 1}
        synthetic = {row[j] for row, s in zip(out.features, out.synthetic_mask) if s}
        assert synthetic <= observed, j
    again = cs.resample(x, y, method="copulasmote", seed=7)
    assert again.features == out.features


def test_pair_copula():
    c = cs.PairCopula("clayton", [2.0])
    assert abs(c.kendall_tau() - 0.5) < 1e-12
    assert abs(c.cdf(0.5, 0.5) - 0.377964) < 1e-6
    p = c.h(0.3, 0.7)
    assert abs(c.inverse_h(p, 0.7) - 0.3) < 1e-9
    assert cs.PairCopula.from_json(c.to_json()).params == [2.0]
    rot = cs.PairCopula("gumbel", [2.0], rotation=90)
    assert rot.kendall_tau() < 0
    rng = random.Random(1)
    u = [rng.random() for _ in range(1000)]
    v = [c.inverse_h(rng.random(), b) for b in u]
    fit = cs.PairCopula.fit(v, u)
    assert fit.family == "clayton", fit
    assert abs(cs.kendall_tau(v, u) - 0.5) < 0.05


def test_vine_round_trip():
    x, y = imbalanced(0, 400, seed=3)
    u = cs.pseudo_observations([row[:2] for row in x], seed=1)
    model = cs.VineModel.fit(u)
    assert model.truncation_level == 1 and len(model.edges()) == 1
    s = model.sample(4000, seed=2)
    tau_src = cs.kendall_tau([r[0] for r in u], [r[1] for r in u])
    tau_syn = cs.kendall_tau([r[0] for r in s], [r[1] for r in s])
    assert abs(tau_src - tau_syn) < 0.05
    assert all(math.isfinite(d) for d in model.log_density(s[:10]))
    assert cs.VineModel.from_json(model.to_json()).to_json() == model.to_json()


def test_metrics_and_dietterich():
    m = cs.compute_metrics([0, 0, 1, 1], [0.1, 0.4, 0.35, 0.8])
    assert m["auc"] == 0.75
    assert cs.compute_metrics([1, 1], [0.2, 0.9])["auc"] is None
    t, p, df, degenerate = cs.dietterich_5x2([0.1, 0.3] * 5)
    assert abs(t - 0.70711) < 1e-5 and df == 5 and not degenerate
    assert 0.0 < p < 1.0


def test_run_experiment():
    with tempfile.TemporaryDirectory() as out:
        means = cs.run_experiment(
            str(DATA / "pima.csv"), str(DATA / "pima.spec.json"), methods=["copulasmote", "smote"], seed=0, out=out
        )
        assert set(means) == {"CopulaSMOTE", "SMOTE"}
        assert 0.6 < means["CopulaSMOTE"]["f1"] < 0.72
        pairs = json.loads((Path(out) / "pairwise.json").read_text())
        assert any(p["metric"] == "f1" for p in pairs)


def test_errors():
    x, y = imbalanced()
    for bad in [lambda: cs.resample(x, y, method="nope"), lambda: cs.PairCopula("clayton", [-5.0])]:
        try:
            bad()
        except ValueError:
            continue
        raise AssertionError("expected ValueError")


if __name__ == "__main__":
    tests = [(k, v) for k, v in sorted(globals().items()) if k.startswith("test_")]
    for name, fn in tests:
        fn()
        print(f"ok  {name}")
    print(f"{len(tests)} passed")
