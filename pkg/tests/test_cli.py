import csv
import io
import json
from pathlib import Path

import pytest

from kvlat.cli import EXIT_BAND, EXIT_OK, EXIT_USAGE, main
from kvlat.model import hidable_latency_mem_only
from kvlat.params import OperationModelParams
from kvlat.sweep import INPUT_COLUMNS

GOLDEN = Path(__file__).parent / "golden"

MODEL_COLUMNS = ["point", *INPUT_COLUMNS, "variant", "reciprocal_s", "throughput_ops_per_s", "normalized"]
SIM_COLUMNS = [
    "point", *INPUT_COLUMNS, "seed", "best_n", "sim_throughput_ops_per_s", "stall_share",
    "mean_load_stall_s", "max_load_stall_s", "full_latency_load_fraction", "mean_op_latency_s",
]
SWEEP_COLUMNS = SIM_COLUMNS + ["mask_only_throughput_ops_per_s", "probabilistic_throughput_ops_per_s"]
COMPARE_COLUMNS = [
    "point", *INPUT_COLUMNS, "variant", "best_n", "model_throughput_ops_per_s",
    "sim_throughput_ops_per_s", "error",
]
QUICK_SIM = ["--threads", "16,32", "--measure-ops", "300", "--warmup-ops", "100"]


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def header(text):
    return text.splitlines()[0].split(",")


# -- schema and golden files -------------------------------------------------------

@pytest.mark.parametrize("name", ["model_pinned", "sweep_pinned"])
def test_golden_output(capsys, name):
    cmd = name.split("_")[0]
    code, out, _ = run_cli(capsys, cmd, "--config", str(GOLDEN / f"{name}.json"))
    assert code == EXIT_OK
    assert out == (GOLDEN / f"{name}.csv").read_text()


@pytest.mark.parametrize(
    "cmd, extra, columns",
    [
        ("model", [], MODEL_COLUMNS),
        ("sim", QUICK_SIM, SIM_COLUMNS),
        ("sweep", QUICK_SIM, SWEEP_COLUMNS),
        ("compare", QUICK_SIM + ["--band=-1,1"], COMPARE_COLUMNS),
    ],
)
def test_column_sets(capsys, cmd, extra, columns):
    code, out, _ = run_cli(capsys, cmd, "--l-mem-us", "2", *extra)
    assert code == EXIT_OK
    assert header(out) == columns
    assert all(c == c.lower() and " " not in c for c in columns)


def test_json_has_metadata_and_rows(capsys):
    code, out, _ = run_cli(capsys, "model", "--format", "json", "--axis", "m=1,5")
    doc = json.loads(out)
    assert code == EXIT_OK
    assert doc["metadata"]["points"] == 2
    assert len(doc["rows"]) == 4
    assert doc["rows"][0]["b_mem_bytes_per_s"] == "inf"


def test_empty_axes_single_baseline_point(capsys):
    _, out, _ = run_cli(capsys, "model", "--variants", "probabilistic")
    r = rows(out)
    assert len(r) == 1
    assert float(r[0]["l_mem_s"]) == OperationModelParams().l_mem
    assert float(r[0]["normalized"]) == 1.0


def test_microsecond_inputs_are_exact(capsys):
    _, out, _ = run_cli(capsys, "model", "--axis", "l_mem_us=0.1,0.3,5", "--t-io-pre-us", "3.5")
    got = {r["l_mem_s"] for r in rows(out)}
    assert got == {"1e-07", "3e-07", "5e-06"}
    assert {r["t_io_pre_s"] for r in rows(out)} == {"3.5e-06"}


# -- determinism ---------------------------------------------------------------------

@pytest.mark.parametrize("cmd", ["model", "sim", "sweep", "compare"])
def test_rerun_is_byte_identical(capsys, tmp_path, cmd):
    args = [cmd, "--axis", "l_mem_us=1,5", "--seed", "99", "--band=-1,1"]
    if cmd != "model":
        args += QUICK_SIM
    else:
        args.remove("--band=-1,1")
    outs = []
    for i in range(2):
        path = tmp_path / f"{i}.csv"
        assert main(args + ["--out", str(path)]) == EXIT_OK
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_parallel_matches_serial(tmp_path):
    base = ["sweep", "--axis", "l_mem_us=1,3,5", "--axis", "m=1,5", *QUICK_SIM]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(base + ["--out", str(a)]) == EXIT_OK
    assert main(base + ["--jobs", "3", "--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_seed_changes_sim(capsys):
    _, a, _ = run_cli(capsys, "sim", *QUICK_SIM, "--seed", "1")
    _, b, _ = run_cli(capsys, "sim", *QUICK_SIM, "--seed", "2")
    assert a != b


# -- config and overrides --------------------------------------------------------------

def test_flags_override_config(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"params": {"l_mem_us": 3, "m_accesses": 4}, "variants": ["mask_only"]}))
    _, out, _ = run_cli(capsys, "model", "--config", str(cfg))
    r = rows(out)[0]
    assert (r["l_mem_s"], r["m_accesses"]) == ("3e-06", "4.0")
    _, out, _ = run_cli(capsys, "model", "--config", str(cfg), "--l-mem-us", "7", "--m", "2")
    r = rows(out)[0]
    assert (r["l_mem_s"], r["m_accesses"]) == ("7e-06", "2.0")


def test_axis_flag_replaces_config_axis(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"axes": {"l_mem": [1e-6, 2e-6, 3e-6]}, "variants": ["mask_only"]}))
    _, out, _ = run_cli(capsys, "model", "--config", str(cfg), "--axis", "l_mem_us=9")
    assert [r["l_mem_s"] for r in rows(out)] == ["9e-06"]


def test_workload_preset(capsys):
    _, out, _ = run_cli(capsys, "model", "--workload", "block-cache", "--variants", "probabilistic")
    r = rows(out)[0]
    assert float(r["s_ios"]) == pytest.approx(0.33)
    assert float(r["m_accesses"]) == pytest.approx(10 / 0.33)


# -- exit codes ---------------------------------------------------------------------------

@pytest.mark.parametrize(
    "argv",
    [
        ["model", "--axis", "bogus=1"],
        ["model", "--axis", "l_mem_us"],
        ["model", "--variants", "fastest"],
        ["model", "--max-points", "2", "--axis", "l_mem_us=1,2,3"],
        ["model", "--config", "/nonexistent/spec.json"],
        ["model", "--m", "-1"],
        ["cpr", "--b", "0.2"],
        ["frobnicate"],
        [],
    ],
)
def test_usage_errors(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        raise SystemExit(main(argv))
    assert exc.value.code == EXIT_USAGE


def test_invalid_axis_names_token(capsys):
    code, _, err = run_cli(capsys, "model", "--axis", "l_mme_us=1")
    assert code == EXIT_USAGE
    assert "l_mme_us" in err


def test_compare_band_violation(capsys):
    code, _, err = run_cli(capsys, "compare", "--l-mem-us", "5", *QUICK_SIM, "--band=-0.0001,0.0001")
    assert code == EXIT_BAND
    assert "left the band" in err


# -- behaviour ----------------------------------------------------------------------------------

def test_mask_below_probabilistic_past_hidable(capsys):
    grid = [0.1, 0.3, 0.5, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10]
    _, out, _ = run_cli(capsys, "model", "--axis", "l_mem_us=" + ",".join(map(str, grid)))
    by_point = {}
    for r in rows(out):
        by_point.setdefault(float(r["l_mem_s"]), {})[r["variant"]] = float(r["throughput_ops_per_s"])
    l_star = hidable_latency_mem_only(OperationModelParams())
    for l, v in by_point.items():
        if l > l_star:
            assert v["mask_only"] < v["probabilistic"]
        else:
            assert v["mask_only"] == v["probabilistic"]


def test_compare_zero_wait_regime(capsys):
    l_star_us = hidable_latency_mem_only(OperationModelParams()) * 1e6
    code, out, _ = run_cli(
        capsys, "compare", "--axis", f"l_mem_us=0.5,1,{l_star_us!r}", "--axis", "m=1,10",
        "--threads", "64,128,256", "--measure-ops", "4000", "--band=-0.02,0.02",
    )
    errs = [float(r["error"]) for r in rows(out)]
    assert code == EXIT_OK
    assert len(errs) == 12
    assert max(abs(e) for e in errs) <= 0.02


def test_cpr_media_table(capsys):
    _, out, _ = run_cli(capsys, "cpr")
    r = {row["medium"]: row for row in rows(out)}
    assert float(r["compressed-dram"]["cpr_min"]) == pytest.approx(1.23, abs=0.01)
    assert float(r["compressed-dram"]["cpr_max"]) == pytest.approx(1.36, abs=0.01)
    assert float(r["low-latency-flash"]["cpr_min"]) == pytest.approx(1.19, abs=0.01)


def test_cpr_explicit_grid(capsys):
    _, out, _ = run_cli(capsys, "cpr", "--b", "0.2,0.5", "--d", "0,0.1")
    r = rows(out)
    assert len(r) == 4
    assert float(r[0]["cpr"]) == pytest.approx(1 / (0.4 * 0.2 + 0.6))
