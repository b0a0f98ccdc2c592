# Copyright 2026 The Readout Lab Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import math

import numpy as np
import pytest

import readout_lab as rl


def test_version():
    assert rl.__version__ == "0.1.0"


def test_worked_examples_all_pass():
    checks = rl.run_worked_examples()
    assert checks
    assert all(c["pass"] for c in checks), [c for c in checks if not c["pass"]]


def test_prototypes_and_translation():
    z = np.array([[-2.0], [-1.0], [1.0], [2.0]])
    labels = [0, 0, 1, 1]
    p = rl.fit_prototypes(z, labels)
    np.testing.assert_allclose(p, [[-1.5], [1.5]])
    shifted = z + 5.0
    logits = rl.prototype_logits(rl.fit_prototypes(shifted, labels), shifted)
    assert (logits.argmax(axis=1) == 1).all()


def test_ridge_matches_numpy_primal():
    rng = np.random.default_rng(0)
    z = rng.normal(size=(9, 4))
    labels = np.arange(9) % 3
    w, b = rl.fit_ridge(z, labels, lam=10.0)
    za = np.hstack([z, np.ones((9, 1))])
    y = np.eye(3)[labels]
    primal = np.linalg.solve(za.T @ za + 10.0 * np.eye(5), za.T @ y)
    np.testing.assert_allclose(np.vstack([w, b]), primal, rtol=1e-8, atol=1e-12)
    np.testing.assert_allclose(rl.ridge_logits(w, b, z), za @ primal, atol=1e-10)


def test_hull_audit_of_inclusion_layout():
    protos = np.array([[0.0, 0.0], [-3.0, 0.0], [3.0, 0.0]])
    h = rl.hull_distance(protos, 0)
    assert h["distance"] <= 1e-7
    np.testing.assert_allclose(h["weights"], [0.0, 0.5, 0.5], atol=1e-7)
    report = rl.flag_interior(protos)
    assert [c["interior"] for c in report["classes"]] == [True, False, False]
    assert rl.eps_inclusion_margin(protos, 0, 2.0, 2000, 1) <= 1e-9


def test_calibration_helpers():
    probs = np.array([[0.9, 0.1], [0.8, 0.2], [0.3, 0.7]])
    r = rl.ece(probs, [0, 1, 1], 10)
    assert 0.0 <= r["ece"] <= 1.0
    assert sum(b["count"] for b in r["bins"]) == 3
    t, nll, degenerate = rl.temperature_fit(np.log(probs), [0, 1, 1])
    assert t > 0 and math.isfinite(nll) and not degenerate


def test_truncated_svd_singular_values():
    rng = np.random.default_rng(3)
    m = rng.normal(size=(20, 15))
    _, s, _ = rl.truncated_svd(m, 5, power_iters=6, seed=1)
    np.testing.assert_allclose(s, np.linalg.svd(m, compute_uv=False)[:5], rtol=1e-6)


def test_small_sweeps():
    t = rl.translation_sweep(n_seeds=2, t_grid=[0.0, 5.0], n=200, d=16)
    assert t["columns"] == ["proto_acc", "ridge_acc"]
    assert t["mean"].shape == (2, 2)
    assert t["mean"][1, 0] < t["mean"][0, 0]
    b = rl.bimodal_sweep(n_seeds=2, delta_grid=[3.0], d=8)
    assert b["summary"]["dominated_proto_recall_a"] == 0.0
    c = rl.calibration_suite(n_seeds=2)
    assert set(c) == {"origin-shifted", "varying-radius"}
    assert c["origin-shifted"]["prototype"]["ece_mean"] > c["origin-shifted"]["logistic"]["ece_mean"]


def test_short_meta_training_run():
    r = rl.train_bimodal_demo(seed=0, steps=30)
    assert r["loss"].shape == (30,)
    assert np.isfinite(r["loss"]).all()
    again = rl.train_bimodal_demo(seed=0, steps=30)
    np.testing.assert_array_equal(r["loss"], again["loss"])


def test_errors_map_to_python_exceptions():
    with pytest.raises(ValueError):
        rl.hull_distance(np.zeros((1, 2)), 0)
    with pytest.raises(ValueError):
        rl.fit_ridge(np.zeros((3, 2)), [0, 1, 1], lam=-1.0)
