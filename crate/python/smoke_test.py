"""Smoke test for the pampa_qspr_py extension module.

Build first with `pip install --no-build-isolation -e crates/py`, then run
`python python/smoke_test.py`.
"""

import json
import math
import os
import tempfile

import pampa_qspr_py as pq


def check_assay():
    r = pq.membrane_retention(100.0, 60.0, 20.0)
    assert abs(r - 0.0) < 1e-12, r
    ret, pe, log_pe = pq.evaluate_well(100.0, 50.0, 15.0)
    assert abs(ret - 0.2) < 1e-12
    assert pe is not None and abs(math.log10(pe) - log_pe) < 1e-12
    try:
        pq.evaluate_well(0.0, 1.0, 1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("zero donor concentration accepted")


def check_chem():
    assert pq.desalt("[Na+].[O-]C(=O)c1ccccc1") == "O=C(O)c1ccccc1"
    assert pq.canonical_smiles("OCC") == pq.canonical_smiles("CCO")
    assert len(pq.builtin_salts()) > 30
    assert pq.generic_scaffold("Cc1ccccc1") == "C1CCCCC1"
    assert pq.tanimoto([1, 2, 3], [2, 3, 4]) == 0.5


def check_pca():
    x, _ = pq.synthetic(1, 40, 5, 1)
    model = pq.Pca(x, 3)
    ratios = model.explained_variance_ratio
    assert len(ratios) == 3 and all(a >= b for a, b in zip(ratios, ratios[1:]))
    scores = model.transform(x)
    assert len(scores) == 40 and len(scores[0]) == 3


def check_models():
    x, y = pq.synthetic(2, 80, 6, 2, 0.1)
    params = json.dumps({"class": "MTEN", "alpha": 0.001, "l1_ratio": 0.5})
    model = pq.Model.fit(params, x, y, seed=3)
    assert model.model_class == "MTEN"
    pred = model.predict(x)
    r2, corr, rmse = pq.metrics([row[0] for row in y], [row[0] for row in pred])
    assert r2 > 0.9 and corr > 0.9 and rmse >= 0.0, (r2, corr, rmse)
    again = pq.Model.from_json(model.to_json())
    assert again.predict(x) == pred


def check_design():
    pool = [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.5, 0.5]]
    chosen, log_det = pq.d_optimal_select(pool, 2)
    assert len(chosen) == 2 and len(log_det) == 3
    assert all(a <= b + 1e-12 for a, b in zip(log_det, log_det[1:]))
    x, y = pq.synthetic(4, 60, 5, 1, 0.05)
    picked = pq.forward_feature_select(x, [row[0] for row in y], "ridge", 2)
    assert len(picked) == 2


def check_cli():
    with tempfile.TemporaryDirectory() as tmp:
        smi = os.path.join(tmp, "in.smi")
        with open(smi, "w") as f:
            f.write("id,smiles\nm1,[Na+].[O-]C(=O)c1ccccc1\n")
        out = os.path.join(tmp, "out")
        assert pq.run_cli(["desalt", "--smiles", smi, "--out", out]) == 0
        assert os.path.exists(os.path.join(out, "manifest.json"))
        assert pq.run_cli(["no-such-command"]) == 2


if __name__ == "__main__":
    for check in (check_assay, check_chem, check_pca, check_models, check_design, check_cli):
        check()
        print(f"{check.__name__}: ok")
