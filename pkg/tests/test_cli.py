import json

import numpy as np
import pytest

from pvtmodal.cli import EXIT_CONFIG, EXIT_ERROR, EXIT_MISSING, EXIT_NO_MODES, EXIT_OK, main
from pvtmodal.core import Mode, ModeSet, load_modeset, load_record, save_modeset, save_record
from conftest import make_record


@pytest.fixture
def modeset_file(tmp_path):
    rng = np.random.default_rng(0)
    ms = ModeSet(tuple(Mode(f, z, rng.standard_normal(7))
                       for f, z in ((2.48, 0.008), (13.37, 0.012), (24.10, 0.028))))
    path = tmp_path / "ref.json"
    save_modeset(ms, path)
    return path


def _small_config(tmp_path, **pipeline):
    cfg = {
        "campaign": {"seed": 5, "cases": [
            {"label": "i", "motor": "off", "duration": 60},
            {"label": "ii", "motor": "constant", "duration": 30, "throttle": [0.25]},
        ]},
        "pipeline": {"segment_length": 4096, **pipeline},
        "identify_cases": ["i"],
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def test_compare_with_itself_reports_zeros(tmp_path, modeset_file, capsys):
    rc = main(["compare", str(modeset_file), str(modeset_file), "--out-dir", str(tmp_path / "o")])
    assert rc == EXIT_OK
    text = (tmp_path / "o" / "compare_ref_vs_ref.txt").read_text()
    rows = [line.split() for line in text.splitlines() if line.strip()[:1].isdigit()]
    assert len(rows) == 3
    for r in rows:
        assert r[3] == "+0.00" and r[6] == "+0.00" and r[7] == "1.000"
    assert text.startswith("# config ")


def test_identify_all_zero_record_exits_no_modes(tmp_path):
    rec = make_record(np.zeros((3, 1066 * 60)), positions=[0.2, 0.5, 0.8])
    save_record(rec, tmp_path / "zero.txt")
    rc = main(["identify", str(tmp_path / "zero.txt"), "--out-dir", str(tmp_path)])
    assert rc == EXIT_NO_MODES


def test_missing_input_file(tmp_path, modeset_file):
    assert main(["compare", str(modeset_file), str(tmp_path / "nope.json")]) == EXIT_MISSING
    assert main(["identify", str(tmp_path / "nope.txt")]) == EXIT_MISSING
    assert main(["simulate", "--config", str(tmp_path / "nope.json")]) == EXIT_MISSING


@pytest.mark.parametrize("content", [
    "{not json",
    json.dumps({"pipeline": {"max_lag": -1}}),
    json.dumps({"pipeline": {"stab": {"k_step": 3}}}),
    json.dumps({"campaign": {"cases": [{"label": "x", "motor": "idle", "duration": 1}]}}),
    json.dumps({"extras": 1}),
])
def test_invalid_config(tmp_path, content):
    path = tmp_path / "bad.json"
    path.write_text(content)
    assert main(["simulate", "--config", str(path), "--out-dir", str(tmp_path)]) in (EXIT_CONFIG,)
    if "pipeline" in content:
        rec = make_record(np.zeros((1, 100)))
        save_record(rec, tmp_path / "r.txt")
        assert main(["identify", str(tmp_path / "r.txt"), "--config", str(path)]) == EXIT_CONFIG


def test_bad_override_flags(tmp_path):
    rec = make_record(np.zeros((1, 100)))
    save_record(rec, tmp_path / "r.txt")
    assert main(["identify", str(tmp_path / "r.txt"), "--orders", "32:60"]) == EXIT_CONFIG
    assert main(["identify", str(tmp_path / "r.txt"), "--band", "0:x"]) == EXIT_CONFIG


def test_processing_error_names_module(tmp_path, capsys):
    rec = make_record(np.random.default_rng(0).standard_normal((2, 500)))
    save_record(rec, tmp_path / "short.txt")
    rc = main(["spectra", str(tmp_path / "short.txt"), "--out-dir", str(tmp_path)])
    assert rc == EXIT_ERROR
    assert "pvtmodal.spectral" in capsys.readouterr().err


def test_simulate_spectra_identify_chain(tmp_path):
    cfg = _small_config(tmp_path)
    out = tmp_path / "sim"
    assert main(["simulate", "--config", str(cfg), "--out-dir", str(out), "--seed", "7"]) == EXIT_OK
    rec = load_record(out / "case_i.txt")
    assert rec.config["campaign"]["seed"] == 7 and rec.n_channels == 7
    assert main(["spectra", str(out / "case_ii.txt"), "--config", str(cfg),
                 "--out-dir", str(tmp_path / "sp"), "--band", "0:50"]) == EXIT_OK
    anpsd_text = (tmp_path / "sp" / "case_ii_anpsd.txt").read_text().splitlines()
    assert anpsd_text[0].startswith("# config ")
    peaks = [float(x) for x in anpsd_text[1].split()[2:]]
    assert any(abs(p - 42.0) < 0.5 for p in peaks)
    rc = main(["identify", str(out / "case_i.txt"), "--config", str(cfg),
               "--out-dir", str(tmp_path / "id"), "--orders", "32:2:50", "--reference", "A6"])
    assert rc == EXIT_OK
    modes = load_modeset(tmp_path / "id" / "case_i_modes.json")
    assert len(modes) == 3
    saved = json.loads((tmp_path / "id" / "case_i_modes.json").read_text())["config"]
    assert saved["pipeline"]["stab"]["k_max"] == 50 and saved["pipeline"]["reference"] == "A6"
    corr = (tmp_path / "id" / "case_i_correlations.txt").read_text().splitlines()
    assert corr[1] == "# reference A6" and corr[2].split()[1:3] == ["lag_s", "A1"]
    diag = (tmp_path / "id" / "case_i_diagram.txt").read_text().splitlines()
    assert diag[1].startswith("# order frequency_hz damping")
    rc = main(["compare", str(out / "ground_truth_modes.json"),
               str(tmp_path / "id" / "case_i_modes.json"), "--out-dir", str(tmp_path / "cmp")])
    assert rc == EXIT_OK


def test_identify_is_repeatable(tmp_path):
    rec_dir = tmp_path / "sim"
    cfg = _small_config(tmp_path)
    main(["simulate", "--config", str(cfg), "--out-dir", str(rec_dir)])
    for d in ("a", "b"):
        main(["identify", str(rec_dir / "case_i.txt"), "--config", str(cfg),
              "--out-dir", str(tmp_path / d), "--orders", "32:2:50"]) == EXIT_OK
    for name in ("case_i_modes.json", "case_i_diagram.txt", "case_i_correlations.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
