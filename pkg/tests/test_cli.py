import copy
import json

import pytest

from thermolam.cli import main
from thermolam.cli.config import (
    RunConfig, bundled_config_path, json_schema, load_bundled, parse_config, parse_config_text,
    validate_config,
)
from thermolam.cli.runner import EXIT_CONFIG, EXIT_IO, EXIT_OK, run
from thermolam.cli.svg import nice_ticks, svg_bands_vs_delta, svg_k2i, svg_k2r
from thermolam.cli.tables import (
    BAND_COLUMNS, SPECTRUM_COLUMNS, AtomicWriter, fmt_mpf, read_spectrum_csv, spectrum_csv,
)
from thermolam.errors import ConfigError

PHASE = {"E": 155e9, "nu": 0.3, "rho": 5532.0, "Kt": 2.64, "C_spec": 400.0, "alpha_t": 2.2205e-6, "D_over_q": 0.9e-5}


def _doc(**over):
    doc = {
        "cell": {"phases": {"a": dict(PHASE)}, "layers": [{"phase": "a", "thickness": 1e-3}]},
        "sweep": {"omega_values": [1e3, 1e5, 1e6], "deltas": [0.0, 1.0], "cross_check": False},
        "bands": {"families": ["shear"], "refine": False},
        "plots": {"enabled": True},
    }
    doc.update(over)
    return doc


@pytest.fixture
def small_cfg():
    return validate_config(_doc())


# configuration -----------------------------------------------------------------

def test_bundled_config_loads():
    cfg = load_bundled()
    assert isinstance(cfg, RunConfig)
    assert cfg.build_cell().L == pytest.approx(2e-3)
    assert len(cfg.omega_grid()) == 39
    assert bundled_config_path().name == "sofc_bilayer.json"


def test_schema_file_is_current():
    stored = json.loads(bundled_config_path("run_config.schema.json").read_text())
    assert stored == json_schema()


def test_empty_layers_message():
    d = _doc()
    d["cell"]["layers"] = []
    with pytest.raises(ConfigError, match=r"cell\.layers: at least one"):
        validate_config(d)


def test_incompressible_phase_message():
    d = _doc()
    d["cell"]["phases"]["a"]["nu"] = 0.5
    with pytest.raises(ConfigError, match=r"cell\.phases\.a: .*plane-strain"):
        validate_config(d)


@pytest.mark.parametrize(
    "mutate,pattern",
    [
        (lambda d: d["cell"]["layers"][0].update(phase="zz"), "not defined"),
        (lambda d: d["cell"]["layers"][0].update(thickness=0.0), r"thickness: must be positive"),
        (lambda d: d.update(extra=1), "extra: unknown key"),
        (lambda d: d.update(precision="octuple"), "precision"),
        (lambda d: d["sweep"].update(omega_values=[]), "at least one frequency"),
        (lambda d: d["sweep"].update(deltas=[-1.0]), "deltas"),
        (lambda d: d["bands"].update(families=["acoustic"]), "unknown family"),
        (lambda d: d["sweep"].update(omega_segments=[{"kind": "log", "start": 0, "stop": 1, "num": 3}]), "start > 0"),
    ],
)
def test_config_errors(mutate, pattern):
    d = copy.deepcopy(_doc())
    mutate(d)
    with pytest.raises(ConfigError, match=pattern):
        validate_config(d)


def test_json_syntax_error_has_location():
    with pytest.raises(ConfigError, match=r"cfg\.json:3:5: "):
        parse_config_text('{\n  "cell": 1,\n    ]\n}', "cfg.json")


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        parse_config(tmp_path / "absent.json")


def test_config_hash_is_canonical(small_cfg):
    again = validate_config(json.loads(json.dumps(_doc(), indent=4)))
    assert again.config_hash() == small_cfg.config_hash()
    other = validate_config(_doc(precision="qd"))
    assert other.config_hash() != small_cfg.config_hash()


# tables and plots -----------------------------------------------------------------

def test_fmt_mpf_extreme_exponent():
    import mpmath

    assert fmt_mpf(mpmath.mpf(2) ** 5000).endswith("e+1505")
    assert fmt_mpf(0) == "0"


def test_spectrum_csv_roundtrip(small_cfg, tmp_path):
    res = run(small_cfg, out_dir=tmp_path)
    assert res.exit_code == EXIT_OK
    text = (tmp_path / "spectrum_delta_1.csv").read_text()
    assert text.splitlines()[0] == ",".join(SPECTRUM_COLUMNS)
    back = read_spectrum_csv(text)
    orig = res.table.select(delta=1.0)
    assert len(back.points) == len(orig) == 24
    for a, b in zip(orig, back.points):
        assert (a.omega_star, a.branch, a.k2r_star, a.k2i_star, a.family) == (b.omega_star, b.branch, b.k2r_star, b.k2i_star, b.family)
        assert abs(a.lam - b.lam) <= 1e-16 * abs(a.lam)
    assert spectrum_csv(back.points) == text
    bands = (tmp_path / "bands.csv").read_text().splitlines()
    assert bands[0] == ",".join(BAND_COLUMNS)


def test_run_outputs_and_manifest(small_cfg, tmp_path):
    res = run(small_cfg, out_dir=tmp_path)
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == sorted([
        "bands.csv", "bands_vs_delta.svg", "manifest.json", "spectrum_delta_0.csv",
        "spectrum_delta_1.csv", "spectrum_k2i.svg", "spectrum_k2r.svg",
    ])
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["config_hash"] == small_cfg.config_hash()
    assert man["points"] == {"requested": 6, "evaluated": 6, "failed": 0}
    assert man["invariant_violations"] == [] and man["exit_code"] == 0
    assert res.manifest["outputs"] == man["outputs"]


def test_run_is_byte_deterministic(small_cfg, tmp_path):
    run(small_cfg, out_dir=tmp_path / "a")
    run(small_cfg, out_dir=tmp_path / "b")
    for f in (tmp_path / "a").iterdir():
        if f.suffix in (".csv", ".svg"):
            assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes(), f.name


def test_unwritable_output_writes_nothing(small_cfg, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    res = run(small_cfg, out_dir=blocker / "out")
    assert res.exit_code == EXIT_IO and res.table is None
    assert "error" in res.manifest
    assert sorted(p.name for p in tmp_path.iterdir()) == ["file"]


def test_atomic_writer_abort(tmp_path):
    w = AtomicWriter(tmp_path)
    w.add("a.csv", "1\n")
    assert not (tmp_path / "a.csv").exists()
    w.abort()
    assert list(tmp_path.iterdir()) == []
    w.add("b.csv", "2\n")
    w.commit()
    assert [p.name for p in tmp_path.iterdir()] == ["b.csv"]


def test_empty_plots_say_no_points():
    for svg in (svg_k2r([]), svg_k2i([]), svg_bands_vs_delta([])):
        assert "<svg" in svg and svg.rstrip().endswith("</svg>") and "no points" in svg


def test_nice_ticks():
    t = nice_ticks(0.0, 1.0)
    assert t[0] == 0.0 and t[-1] == 1.0 and len(t) >= 3


# command line -------------------------------------------------------------------

def _write(tmp_path, doc):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(doc))
    return str(p)


def test_cli_run(tmp_path, capsys):
    code = main(["run", _write(tmp_path, _doc()), "--out", str(tmp_path / "o")])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert "6 of 6 points evaluated, 0 failed, 0 invariant violations" in out
    assert (tmp_path / "o" / "manifest.json").exists()


def test_cli_precision_override(tmp_path):
    code = main(["run", _write(tmp_path, _doc()), "--precision", "qd", "--out", str(tmp_path / "o")])
    assert code == EXIT_OK
    man = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert man["precision"]["level"] == "qd"


def test_cli_config_error(tmp_path, capsys):
    d = _doc()
    d["cell"]["layers"] = []
    assert main(["run", _write(tmp_path, d)]) == EXIT_CONFIG
    assert "cell.layers: at least one" in capsys.readouterr().err


def test_cli_io_error(tmp_path, capsys):
    (tmp_path / "f").write_text("")
    assert main(["run", _write(tmp_path, _doc()), "--out", str(tmp_path / "f" / "o")]) == EXIT_IO
    assert "I/O error" in capsys.readouterr().err


def test_cli_no_command(capsys):
    assert main([]) == EXIT_CONFIG


def test_cli_check(tmp_path, capsys):
    code = main(["run", _write(tmp_path, _doc()), "--check", "--seed", "3"])
    out = capsys.readouterr().out
    assert code == EXIT_OK, out
    assert "PASS  charpoly-oracle" in out and "FAIL" not in out
