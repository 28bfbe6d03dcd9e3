import math
import os
import pathlib

import pytest

import liftcut

DATA = pathlib.Path(os.environ.get("LIFTCUT_DATA_DIR", pathlib.Path(__file__).resolve().parents[2] / "data"))


def graph(name):
    return liftcut.Graph.load(str(DATA / name))


def test_theta_entropy():
    r = liftcut.entropy(graph("theta3.g"), 0.5)
    assert r["h_alpha"] == pytest.approx(math.log(2) / 6, abs=1e-9)
    assert r["s0"] == pytest.approx(1 / 3, abs=1e-9)
    assert all(w == pytest.approx(1 / 3) for w in r["w_hat"].values())


def test_regular_closed_form():
    for d in (4, 6, 8):
        r = liftcut.entropy(graph(f"bouquet{d}.g"), 0.0)
        assert r["h_alpha"] == pytest.approx((d - 2) * math.log(d - 1) / d, abs=1e-9)


def test_errors_map_to_python_exceptions():
    with pytest.raises(liftcut.RecurrentCover):
        liftcut.entropy(graph("sym3.g"))
    with pytest.raises(ValueError):
        liftcut.Graph.parse("vertex a; vertex b; edge e a b 0.5 1")


def test_assumptions_and_stationary():
    a = liftcut.check_assumptions(graph("theta3.g"))
    assert a["two_cycles"] and a["period"] == 2 and a["transience"] == "transient"
    pi = liftcut.stationary_distribution(graph("theta3_pendant.g"))
    assert pi == pytest.approx([0.5, 0.375, 0.125])


def test_lift_and_mixing():
    g = graph("theta3.g")
    lift = liftcut.generate_lift(g, 64, seed=3)
    assert lift.num_vertices == 128
    back = liftcut.lift_from_json(g, lift.to_json())
    assert back.to_json() == lift.to_json()
    curve = liftcut.mixing_curve(lift, 0, 0.5, [0.5, 0.25])
    tv = curve["tv"]
    assert all(b <= a + 1e-12 for a, b in zip(tv, tv[1:]))
    assert curve["t_eps"][0] <= curve["t_eps"][1]
    assert liftcut.spectrum_inheritance_check(lift, 0.0) < 1e-10
    assert liftcut.projection_identity_check(lift, 5, 0.5, 30) < 1e-12
    assert not liftcut.conductance_proxy(lift, 0.5)["disconnected"]


def test_cover_sim_and_sweep():
    g = graph("bouquet4.g")
    s = liftcut.cover_sim(g, alpha=0.5, steps=20000, trials=4, min_excursions=2000)
    h = liftcut.entropy(g, 0.5)["h_alpha"]
    assert abs(s["h_est"] - h) <= 4 * s["se_h"]
    r = liftcut.cutoff_sweep(graph("theta3.g"), [32, 64], seeds=2, starts="sample:2")
    assert r["predicted_slope"] == pytest.approx(6 / math.log(2))
    assert len(r["rows"]) > 0
    p = liftcut.predict_mixing_time(r["h_alpha"], None, 1000.0, 0.25)
    assert p["t_center"] == pytest.approx(math.log(1000) / r["h_alpha"])
    assert p["t_lower"] is None


def test_cli_exit_codes(tmp_path):
    assert liftcut.cli(["analyze", "--graph", str(DATA / "theta3.g"), "--out-dir", str(tmp_path)]) == 0
    assert (tmp_path / "analyze.json").exists()
    assert (tmp_path / "manifest.json").exists()
    assert liftcut.cli(["nonsense"]) == 3
