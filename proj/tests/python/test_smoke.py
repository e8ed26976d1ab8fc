import math
import os
from pathlib import Path

import pytest

import certfair


def toy_files(tmp_path: Path):
    schema = tmp_path / "toy.schema"
    schema.write_text(
        "option|name|toy\n"
        "feature|x0|continuous|0:1\n"
        "feature|x1|continuous|0:1\n"
        "sensitive|g|categorical|a,b\n"
        "label|y|categorical|0,1\n"
    )
    rows = ["x0,x1,g,y"]
    for i in range(200):
        x0, x1 = (i * 37 % 101) / 100, (i * 53 % 97) / 96
        rows.append(f"{x0},{x1},{'ab'[i % 2]},{int(x0 + x1 > 1)}")
    csv = tmp_path / "toy.csv"
    csv.write_text("\n".join(rows) + "\n")
    return csv, schema


def test_randomized_response():
    assert certfair.keep_probability(0.0, 2) == pytest.approx(0.5)
    assert certfair.keep_probability(math.log(3), 2) == pytest.approx(0.75)
    total = sum(certfair.response_prob(math.log(3), 4, 1, j) for j in range(4))
    assert abs(total - 1.0) <= 1e-15
    sol = certfair.solve_gamma_pair(1.0, -3.0)
    assert sol.feasible and sol.gamma == pytest.approx(math.log(3), abs=1e-8)
    assert not certfair.solve_gamma_pair(1.0, 1.0).feasible


def test_init_train_verify(tmp_path):
    csv, schema = toy_files(tmp_path)
    data = certfair.load_dataset(csv, schema)
    assert len(data) == 200
    assert data.sensitive_values == ["a", "b"]
    train, test = certfair.split(data, 0.2, 0)
    spec = certfair.network_for(data, [8, 4])
    domain = certfair.extract_domain(data)

    init = certfair.InitConfig()
    init.phi = 0.0
    init.fan_in_scaling = True
    start = certfair.init_until_verified(spec, init, domain)
    assert start.verdict.tag == certfair.VerdictTag.VERIFIED
    assert start.verdict.by_certificate

    config = certfair.TrainConfig()
    config.epochs = 5
    config.lr = 0.05
    result = certfair.train_fair(spec, start.params, train, config, test)
    assert len(result.epochs) == 6
    cert = certfair.structural_certificate(spec, result.params)
    assert cert.passed and cert.spread <= 1e-9
    fairness = certfair.empirical_fairness(spec, result.params, test)
    assert fairness.discriminatory == 0 and fairness.fairness_pct == 100.0
    assert certfair.grid_falsify(spec, result.params, domain, 20, 2000) is None
    assert 0.0 <= certfair.accuracy(spec, result.params, test) <= 100.0

    path = tmp_path / "model.ckpt"
    certfair.save_checkpoint(path, spec, result.params)
    spec2, params2 = certfair.load_checkpoint(path)
    assert spec2.layer_sizes == spec.layer_sizes
    assert params2.weights == result.params.weights


def test_errors(tmp_path):
    _, schema = toy_files(tmp_path)
    with pytest.raises(certfair.DataIoError):
        certfair.load_dataset(tmp_path / "missing.csv", schema)
    bad = tmp_path / "bad.schema"
    bad.write_text("feature|x|sideways\n")
    with pytest.raises(certfair.SchemaError):
        certfair.load_dataset(tmp_path / "missing.csv", bad)


@pytest.mark.skipif(not os.environ.get("CERTFAIR_DATA_DIR"), reason="data directory not set")
def test_bundled_credit_loads():
    root = Path(os.environ["CERTFAIR_DATA_DIR"])
    raw = root / "raw" / "german.data"
    if not raw.exists():
        pytest.skip("german.data absent")
    data = certfair.load_dataset(raw, root / "schemas" / "credit_age.schema")
    assert len(data) == 1000
