"""
End-to-end tests for the piltz-lab command line.
"""
import argparse
import io
import json

import pandas as pd
import pytest

from conftest import SMALL_BLOCK, SMALL_STRIDE
from main import EXIT_LAB_ERROR, EXIT_OK, EXIT_USAGE, build_parser, integer, number, resolve_config, run


@pytest.fixture
def lab(cache_dir, capsys):
    """Runs the CLI against a private cache and returns (exit code, stdout)."""

    def invoke(*argv):
        args = list(argv) + ["--cache-dir", cache_dir, "--stride", str(SMALL_STRIDE), "--block-size", str(SMALL_BLOCK)]
        code = run(args)
        return code, capsys.readouterr().out

    return invoke


def test_number_types():
    assert number("1e7") == 10**7 and isinstance(number("1e7"), int)
    assert number("2.5") == 2.5
    assert integer("64") == 64
    with pytest.raises(argparse.ArgumentTypeError):
        integer("2.5")
    with pytest.raises(argparse.ArgumentTypeError):
        number("ten")


def _header(out, key):
    line = next(line for line in out.splitlines() if line.startswith(f"# {key}="))
    return json.loads(line.split("=", 1)[1])


def test_delta_at_a_point(lab):
    code, out = lab("delta", "--k", "1", "--x", "7.25")
    assert code == EXIT_OK
    frame = pd.read_csv(io.StringIO(out), comment="#")
    assert list(frame.columns) == ["x", "value", "side"]
    assert frame["value"].iloc[0] == pytest.approx(-0.25)
    assert frame["side"].iloc[0] == "right"
    assert _header(out, "checkpoint")["k"] == 1
    assert _header(out, "config")["extra"]["side"] == "right"


def test_delta_left_limit(lab):
    code, out = lab("delta", "--k", "1", "--x", "7", "--side", "left")
    assert code == EXIT_OK
    frame = pd.read_csv(io.StringIO(out), comment="#")
    assert (frame["value"].iloc[0], frame["side"].iloc[0]) == (-1.0, "left")


def test_delta_extremes(lab):
    code, out = lab("delta", "--k", "2", "--x", "1000", "--span", "500")
    assert code == EXIT_OK
    result = json.loads(out)["result"]
    assert 1000 <= result["argmax"] <= 1500
    assert result["exponent"] == 0.25


def test_unknown_subcommand(lab):
    assert run(["frobnicate"]) == EXIT_USAGE


def test_missing_required_flag():
    assert run(["moment", "--k", "2", "--X", "100"]) == EXIT_USAGE


def test_constants_k2(lab):
    code, out = lab("constants", "--k", "2")
    assert code == EXIT_OK
    result = json.loads(out)["result"]
    assert result["closed_form"]["euler_matches"] is True
    assert result["euler"]["method"] == "euler-product"


def test_moment_csv_is_thread_independent(lab, tmp_path):
    outputs = []
    for threads in ("1", "2"):
        path = tmp_path / f"moment-{threads}.csv"
        code, _ = lab("moment", "--k", "2", "--X", "2000", "--m", "2", "--threads", threads, "--out", str(path))
        assert code == EXIT_OK
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1]
    text = outputs[0].decode("utf-8")
    assert text.startswith("# tool_version=")
    frame = pd.read_csv(tmp_path / "moment-1.csv", comment="#")
    assert list(frame.columns) == ["k", "X", "kind", "param", "value", "error", "mode"]


def test_record_timing_adds_elapsed(lab, tmp_path):
    path = tmp_path / "timed.csv"
    code, _ = lab("moment", "--k", "1", "--X", "20", "--m", "1", "--record-timing", "--out", str(path))
    assert code == EXIT_OK
    frame = pd.read_csv(path, comment="#")
    assert "elapsed" in frame.columns
    assert frame["value"].iloc[0] == pytest.approx(-0.5)


def test_diff_moment_needs_exactly_one_shift(lab):
    code, _ = lab("diff-moment", "--k", "2", "--X", "1000", "--h", "5", "--T", "100")
    assert code == EXIT_USAGE
    code, _ = lab("diff-moment", "--k", "2", "--X", "1000")
    assert code == EXIT_USAGE


def test_diff_and_sup_moment(lab):
    code, out = lab("diff-moment", "--k", "1", "--X", "16", "--h", "0.5")
    assert code == EXIT_OK
    frame = pd.read_csv(io.StringIO(out), comment="#")
    assert frame["value"].iloc[0] == pytest.approx(0.25)
    code, out = lab("sup-moment", "--k", "1", "--X", "10", "--H", "1")
    assert code == EXIT_OK
    assert pd.read_csv(io.StringIO(out), comment="#")["value"].iloc[0] == pytest.approx(7 / 12, abs=1e-6)


def test_domain_error_exit_code(lab):
    code, _ = lab("moment", "--k", "2", "--X", "100", "--m", "5")
    assert code == EXIT_LAB_ERROR


def test_sv_check(lab):
    code, out = lab("sv-check", "--k", "1", "--X", "100", "--h", "1")
    assert code == EXIT_OK
    assert json.loads(out)["result"]["ok"] is True


def test_gapcount(lab):
    code, out = lab("gapcount", "--k", "3", "--W", "1000", "--alpha", "1.0", "2.0", "--rho", "0.1", "0.5")
    assert code == EXIT_OK
    frame = pd.read_csv(io.StringIO(out), comment="#")
    assert len(frame) == 4
    assert frame.loc[frame["rho"] == 0.5, "count"].tolist() == [1000, 1000]


def test_signchanges_and_main_term(lab):
    code, out = lab("signchanges", "--k", "1", "--lo", "10", "--hi", "200")
    assert code == EXIT_OK
    assert json.loads(out)["result"]["sign_changes"] == 0
    code, out = lab("main-term", "--k", "3", "--digits", "20")
    assert code == EXIT_OK
    result = json.loads(out)["result"]
    assert len(result["coeffs"]) == 3
    assert result["coeffs"][2].startswith("0.5")


def test_detect_requires_a_length(lab):
    code, _ = lab("detect", "--k", "2", "--X", "1000")
    assert code == EXIT_USAGE


def test_sieve_cache(lab):
    code, out = lab("sieve-cache", "--k", "3", "--limit", "1200")
    assert code == EXIT_OK
    result = json.loads(out)["result"]
    assert (result["limit"], result["entries"]) == (1500, 3)


def test_resolve_config_routes_unknown_flags_to_extra():
    args = build_parser().parse_args(["delta", "--k", "2", "--x", "50", "--span", "10"])
    cfg = resolve_config(args)
    assert cfg.command == "delta"
    assert cfg.x == 50
    assert cfg.extra["span"] == 10
    assert "x" not in cfg.extra


def test_qk_compare_csv(lab):
    code, out = lab("qk-compare", "--k", "2", "--X", "2000", "--Y", "1000", "--samples", "20", "--seed", "3")
    assert code == EXIT_OK
    frame = pd.read_csv(io.StringIO(out), comment="#")
    assert list(frame.columns) == ["x", "delta", "qk", "residual"]
    assert len(frame) == 20
    assert (frame["delta"] - frame["qk"] - frame["residual"]).abs().max() < 1e-12
    summary = _header(out, "summary")
    assert summary["samples"] == 20 and summary["seed"] == 3
    assert "x" not in summary


def test_detect_rejects_bad_margins(lab):
    code, _ = lab("detect", "--k", "2", "--X", "1000", "--H", "5", "--eta-frac", "-0.1")
    assert code == EXIT_USAGE
    code, _ = lab("detect", "--k", "3", "--X", "10000", "--xi", "-0.2")
    assert code == EXIT_USAGE


def test_detect_census(lab):
    code, out = lab("detect", "--k", "2", "--X", "2000", "--H", "1", "--eta-frac", "0.45", "--census")
    assert code == EXIT_OK
    result = json.loads(out)["result"]
    assert result["count"] == len(result["intervals"])
    assert result["jump_excluded"] >= 0
    assert all(record["sign_changes"] == 0 for record in result["intervals"])
