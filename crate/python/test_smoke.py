"""Smoke test for the cutinit_py extension.

Build it first:
    cargo build --release -p cutinit-py --features extension-module
    cp target/release/libcutinit_py.so python/cutinit_py.so
"""
import json
import math

import pytest

cutinit_py = pytest.importorskip("cutinit_py")


def test_matern_closed_form():
    k = cutinit_py.matern_kernel([0.0], [1.0], 1.0, 1.0, 0.5)
    assert abs(k - math.exp(-1.0)) < 1e-12
    with pytest.raises(ValueError):
        cutinit_py.matern_kernel([0.0], [1.0], 1.0, 1.0, 2.0)


def test_config_round_trip():
    cfg = json.loads(cutinit_py.default_config())
    assert cfg["learning"]["n_max"] == 6
    h = cutinit_py.config_hash(json.dumps(cfg))
    assert len(h) == 12
    cfg["learning"]["n_max"] = 1
    with pytest.raises(ValueError):
        cutinit_py.config_hash(json.dumps(cfg))


def test_gp_surrogate():
    x = [[0.0], [1.0], [2.0], [3.0]]
    y = [1.0, 0.0, 1.0, 4.0]
    gp = cutinit_py.Surrogate.fit("gp", x, y)
    assert gp.kind == "gp" and gp.dim == 1
    mean, std = gp.predict_with_std([1.0])
    assert abs(mean) < 0.1 and std >= 0.0
    again = cutinit_py.Surrogate.from_json(gp.to_json())
    assert again.predict([2.5]) == gp.predict([2.5])


def test_policy_and_solve():
    small = json.dumps({"learning": {"n_max": 3}})
    inst = cutinit_py.held_out_instances(1, small)[0]
    f2 = cutinit_py.instance_features(inst, 2)
    f3 = cutinit_py.instance_features(inst, 3)
    assert len(f2) == 11
    tree = cutinit_py.Surrogate.fit("dt", [f2, f3], [5.0, 2.0])
    policy = cutinit_py.Policy(tree, 3)
    assert policy.candidates == [2, 3]
    assert policy.optimal_cuts(inst) == 3
    base = cutinit_py.solve(inst, 0, small)
    warm = cutinit_py.solve(inst, policy.optimal_cuts(inst), small)
    assert base["converged"] and warm["converged"]
    assert abs(base["objective"] - warm["objective"]) <= 2e-3 * abs(base["objective"])
