import json
import math

import numpy as np
import pytest

from kerrneg.errors import ConfigError
from kerrneg.harness import cli
from kerrneg.harness.config import canonical, config_hash, parse_config
from kerrneg.harness.experiments import DRIVERS, additive_residual, axis_residual
from kerrneg.harness.io import Table, fmt, read_csv, write_csv

EVOLVE = {
    "kind": "evolve",
    "name": "cat",
    "model": {"g": 1.0},
    "state": {"kind": "coherent", "alpha0": 2.0},
    "times": {"values": [0.0, math.pi / 2, math.pi]},
    "method": "exact-kerr",
}


def _write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return p


def test_every_kind_has_a_driver():
    from kerrneg.harness.config import KINDS

    assert set(KINDS) == set(DRIVERS)


@pytest.mark.parametrize("doc", [
    {"kind": "nope"},
    [1, 2],
    {"kind": "evolve", "state": {"kind": "vacuum"}},
    {**EVOLVE, "unexpected": 1},
    {**EVOLVE, "times": {"values": [0.0, 1.0, 0.5]}},
    {**EVOLVE, "model": {"gamma": -1.0}},
    {"kind": "scaled-collapse", "r0": [], "scaled_times": {"values": [0.1]}},
    {"kind": "scaled-collapse", "r0": [2.0, 1.0], "scaled_times": {"values": [0.1]}},
    {"kind": "coherent-plateau", "alpha0": [1.0, 2.0]},
    {"kind": "kerr-decay", "r0": [1.0], "tau0": [0.3], "decoherence": {"kind": "damping"},
     "growth_times": {"values": [0.1]}, "decay_times": {"values": [0.1]}},
    {"kind": "max-negativity-contour", "r0": [1.0], "damping_rates": list(range(1, 10)),
     "dephasing_rates": [1.0], "search": {"stop": 2.0}},
    {"kind": "evolve", "state": {"kind": "vacuum"}, "times": {"values": [0.0]},
     "grid": {"mode": "fixed"}},
])
def test_invalid_configs_raise_config_error(doc):
    with pytest.raises(ConfigError):
        parse_config(doc)


def test_hash_is_canonical():
    a = parse_config(EVOLVE)
    b = parse_config(dict(reversed(list(EVOLVE.items()))))
    assert canonical(a) == canonical(b)
    assert config_hash(a) == config_hash(b)
    c = parse_config({**EVOLVE, "name": "other"})
    assert config_hash(a) != config_hash(c)


def test_complex_inputs():
    cfg = parse_config({**EVOLVE, "state": {"kind": "coherent", "alpha0": {"re": 1, "im": -2}},
                        "model": {"g": 1.0, "eta": [0.1, 0.2]}})
    assert cfg.state.spec().alpha0 == 1 - 2j
    assert cfg.model.params().eta == 0.1 + 0.2j


def test_csv_format(tmp_path):
    t = Table("x", ["a", "b", "c"])
    t.add(1, 0.1 + 0.2, True)
    t.add(2, float("nan"), np.bool_(False))
    p = write_csv(tmp_path / "x.csv", t)
    raw = p.read_bytes()
    assert raw.count(b"\r\n") == 3
    back = read_csv(p)
    assert back.rows == [("1", "0.3", "true"), ("2", "nan", "false")]
    assert fmt(1 / 3) == "0.333333333333"


def test_cli_run_writes_outputs(tmp_path):
    out = tmp_path / "out"
    assert cli.main(["run", str(_write(tmp_path, EVOLVE)), "--out", str(out)]) == 0
    side = json.loads((out / "run.json").read_text())
    assert side["config"]["kind"] == "evolve"
    assert len(side["config_hash"]) == 64
    assert side["outputs"][0]["file"] == "evolution.csv"
    rows = read_csv(out / "evolution.csv").rows
    fid = [float(r[2]) for r in rows]
    assert fid[0] == pytest.approx(1.0) and fid[2] == pytest.approx(1.0)
    assert fid[1] < 0.6


def test_cli_deterministic(tmp_path):
    cfg = _write(tmp_path, EVOLVE)
    cli.main(["run", str(cfg), "--out", str(tmp_path / "a")])
    cli.main(["run", str(cfg), "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "evolution.csv").read_bytes() == (tmp_path / "b" / "evolution.csv").read_bytes()


def test_cli_exit_codes(tmp_path):
    assert cli.main(["run", str(tmp_path / "missing.json")]) == 2
    assert cli.main(["run", str(_write(tmp_path, "{not json"))]) == 2
    assert cli.main(["run", str(_write(tmp_path, {"kind": "nope"}))]) == 2
    assert cli.main(["run", str(_write(tmp_path, EVOLVE)), "--threads", "0"]) == 2
    bad = {**EVOLVE, "method": "exact-kerr", "model": {"g": 1.0, "gamma": 0.1}}
    assert cli.main(["run", str(_write(tmp_path, bad)), "--out", str(tmp_path / "o")]) == 2
    # a thermal bath that swamps the basis is a numerical failure
    hot = {"kind": "evolve", "model": {"g": 0.0, "gamma": 1.0, "nbar": 100.0},
           "state": {"kind": "vacuum"}, "times": {"values": [0.0, 5.0]},
           "solver": {"basis_size": 20}}
    assert cli.main(["run", str(_write(tmp_path, hot)), "--out", str(tmp_path / "o")]) == 3


def test_table_gen(tmp_path):
    out = tmp_path / "t"
    doc = {"kind": "table-gen", "table": "decay-table"}
    assert cli.main(["run", str(_write(tmp_path, doc)), "--out", str(out)]) == 0
    rows = read_csv(out / "decay_table.csv").rows
    assert [r[1] for r in rows] == ["2.72", "4.48", "7.39", "12.18", "20.09", "33.12", "54.6"]


def test_negativity_vs_time_small():
    cfg = parse_config({"kind": "negativity-vs-time", "state": {"kind": "coherent", "alpha0": 1.5},
                        "times": {"values": [0.0, 0.3]}, "grid": {"n_x": 61, "n_y": 61}})
    (table,), _ = DRIVERS[cfg.kind](cfg)
    nv = table.column("n_vol")
    assert nv[0] < 1e-9 < nv[1]


def test_kerr_decay_small():
    cfg = parse_config({"kind": "kerr-decay", "r0": [0.5], "tau0": [1.0],
                        "decoherence": {"kind": "dephasing", "gamma_phi": 1.0},
                        "growth_times": {"values": [0.5, 1.0]},
                        "decay_times": {"values": [0.0, 0.5, 4.0]},
                        "grid": {"n_x": 61, "n_y": 61}})
    (growth, decay), _ = DRIVERS[cfg.kind](cfg)
    nv = decay.column("n_vol")
    assert nv[0] > nv[1] > nv[2]
    assert growth.column("n_vol")[-1] == pytest.approx(nv[0], rel=1e-2)


def test_asymptotic_compare_small():
    cfg = parse_config({"kind": "asymptotic-compare", "r0": 1.5,
                        "scaled_times": {"values": [0.1, 0.2]}})
    (table,), _ = DRIVERS[cfg.kind](cfg)
    assert np.allclose(table.column("n_vol"), table.column("asym_n_vol"), rtol=0.1)


def test_contour_residuals():
    x = np.arange(4.0)
    t = np.add.outer(x, x**2)
    assert additive_residual(t)[0] < 1e-12
    t2 = t + 0.3 * np.outer(x, x)
    assert axis_residual(t2, x, x) < 1e-12
    assert additive_residual(t2)[0] > 0.1


def test_golden_search_refines_interior_maximum():
    from kerrneg.harness.experiments import _golden

    ts = np.linspace(0, 2, 9)
    f = lambda t: -((t - 0.93) ** 2)  # noqa: E731
    t, v, ok = _golden(f, ts, [f(x) for x in ts], 1e-4)
    assert ok and t == pytest.approx(0.93, abs=1e-3)
    # ties and endpoint maxima do not reach the bracketing step
    assert _golden(f, ts, [0, 1, 1, 0, 0, 0, 0, 0, 0], 1e-4) == (0.25, 1.0, True)
    assert _golden(f, ts, np.arange(9.0), 1e-4)[2] is False
