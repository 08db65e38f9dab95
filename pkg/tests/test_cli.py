import json

import pytest
from hypothesis import given, strategies as st

from floydlab.cli import main
from floydlab.config import ConfigError, RunConfig


def run(tmp_path, *args, config=None):
    argv = list(args) + ["--out", str(tmp_path / "out")]
    if config is not None:
        path = tmp_path / "config.json"
        RunConfig(**config).dump(path)
        argv += ["--config", str(path)]
    return main(argv)


def load(tmp_path, name):
    return json.loads((tmp_path / "out" / name).read_text())


@given(st.integers(1, 5), st.integers(1, 8), st.lists(st.integers(1, 4), min_size=1, max_size=3),
       st.sampled_from([{"kind": "tower"}, {"kind": "affine", "slope": 2, "offset": 0}]))
def test_config_round_trip(stages, radius, kappas, schedule):
    cfg = RunConfig(stages=stages, radius=radius, kappas=kappas, schedule=schedule)
    again = RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg and again.hash() == cfg.hash()


def test_config_validation():
    with pytest.raises(ConfigError):
        RunConfig(radius=0)
    with pytest.raises(ConfigError):
        RunConfig(schedule={"kind": "quadratic"})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"colour": 1})
    assert RunConfig(out="a").hash() == RunConfig(out="b").hash()


def test_build_defaults(tmp_path):
    assert run(tmp_path, "build") == 0
    d = load(tmp_path, "construction.json")
    assert [s["stage"] for s in d["construction"]["stages"]] == [1, 2]
    assert d["construction"]["stages"][1]["length"] == 255
    assert d["config_hash"] == RunConfig().hash()


def test_build_overflow_and_bad_seed(tmp_path):
    assert run(tmp_path, "build", "--stage", "4") == 1
    d = load(tmp_path, "construction.json")
    assert d["overflow"]["stage"] == 3 and len(d["construction"]["stages"]) == 2
    assert run(tmp_path, "build", config={"seed": "a b a b"}) == 3


def test_verify_requires_matching_build(tmp_path):
    assert run(tmp_path, "verify", "--check", "malnormal") == 3
    assert run(tmp_path, "build") == 0
    assert run(tmp_path, "verify", "--check", "malnormal", "--stage", "1") == 3  # other hash


def test_verify_checks(tmp_path):
    assert run(tmp_path, "build") == 0
    assert run(tmp_path, "verify", "--check", "malnormal", "c5", "relators") == 0
    cert = load(tmp_path, "cert-malnormal.json")
    assert [s["certificate"]["verdict"] for s in cert["result"]["stages"]] == [True, True]
    assert run(tmp_path, "verify", "--check", "property4") == 1
    rows = load(tmp_path, "cert-property4.json")["result"]["relators"]
    assert rows[1]["predicted_length"] == 31 and rows[1]["measured_length"] == 30


def test_verify_gsc_affine_reports_findings(tmp_path):
    cfg = {"schedule": {"kind": "affine", "slope": 1, "offset": 1}, "stages": 3}
    assert run(tmp_path, "build", config=cfg) == 0
    assert run(tmp_path, "verify", "--check", "gsc", config=cfg) == 1
    assert load(tmp_path, "cert-gsc.json")["result"]["clauses"]["GSC2"] == "fail"


def test_floyd_decay_and_raycheck_deterministic(tmp_path):
    cfg = {"schedule": {"kind": "affine", "slope": 1, "offset": 1}, "stages": 3,
           "decay_stages": [1, 2, 3], "radius": 4}
    outs = []
    for sub in ("one", "two"):
        d = tmp_path / sub
        d.mkdir()
        assert run(d, "floyd", "--experiment", "decay", "raycheck", config=cfg) == 0
        outs.append(d / "out")
    for name in ("decay.csv", "raycheck.csv"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    m = [json.loads((o / "manifest.json").read_text()) for o in outs]
    for x in m:
        x.pop("timestamp")
        x["config"].pop("out")
    assert m[0] == m[1]


def test_floyd_separation_small(tmp_path):
    cfg = {"depths": [1, 2], "kappas": [1], "radius": 4}
    assert run(tmp_path, "floyd", "--experiment", "separation", config=cfg) == 0
    lines = (tmp_path / "out" / "separation.csv").read_text().splitlines()
    assert lines[0].startswith("config_hash,pair,depth,kappa")
    assert len(lines) == 1 + 6 * 2
