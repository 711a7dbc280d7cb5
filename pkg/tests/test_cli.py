import json
import math

import numpy as np
import pytest

from infector.analytic import analytic_report
from infector.cli import main
from infector.config import config_to_dict

from conftest import marked_config, single_type_config, symmetric_marked_config


def _write_config(tmp_path, cfg, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(config_to_dict(cfg)))
    return str(path)


def _read_csv(path):
    """(comment-lines, header, rows) of one output file."""
    comments, header, rows = [], None, []
    for line in path.read_text().splitlines():
        if line.startswith("#"):
            comments.append(line)
        elif header is None:
            header = line.split(",")
        else:
            rows.append(line.split(","))
    return comments, header, rows


# --------------------------------------------------------------------------
# exit codes
# --------------------------------------------------------------------------

def test_missing_config_file(tmp_path):
    rc = main(["simulate", "--config", str(tmp_path / "nope.json"),
               "--replicates", "1", "--output-dir", str(tmp_path / "o")])
    assert rc == 2


def test_malformed_config(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"population": {"n": 10}}')
    rc = main(["simulate", "--config", str(path), "--replicates", "1",
               "--output-dir", str(tmp_path / "o")])
    assert rc == 2


def test_unknown_subcommand():
    assert main(["frobnicate"]) == 2


def test_missing_required_argument(tmp_path):
    cfg = _write_config(tmp_path, single_type_config(n=50))
    assert main(["simulate", "--config", cfg]) == 2


def test_verify_subcritical_is_usage_error(tmp_path):
    cfg = _write_config(tmp_path, single_type_config(n=200, rate=0.5))
    rc = main(["verify", "--config", cfg, "--replicates", "5",
               "--output-dir", str(tmp_path / "o")])
    assert rc == 2


def test_verify_passes(tmp_path, capsys):
    cfg = _write_config(tmp_path, symmetric_marked_config(n=1500, seed=3))
    rc = main(["verify", "--config", cfg, "--replicates", "40",
               "--slack", "0.05", "--no-timestamp",
               "--output-dir", str(tmp_path / "o")])
    out = capsys.readouterr().out
    assert rc == 0
    assert "FAIL" not in out
    assert out.count("PASS") >= 4


def test_verify_verdict_failure(tmp_path):
    cfg = _write_config(tmp_path, symmetric_marked_config(n=800, seed=5))
    rc = main(["verify", "--config", cfg, "--replicates", "20",
               "--slack=-1", "--output-dir", str(tmp_path / "o")])
    assert rc == 1


def test_overwrite_refused_without_force(tmp_path):
    cfg = _write_config(tmp_path, single_type_config(n=300, rate=2.0, seed=7))
    args = ["simulate", "--config", cfg, "--replicates", "3",
            "--output-dir", str(tmp_path / "o")]
    assert main(args) == 0
    assert main(args) == 2
    assert main(args + ["--force"]) == 0


# --------------------------------------------------------------------------
# output format
# --------------------------------------------------------------------------

def test_provenance_header_and_timestamp_suppression(tmp_path):
    cfg = _write_config(tmp_path, single_type_config(n=300, rate=2.0, seed=9))
    main(["simulate", "--config", cfg, "--replicates", "2",
          "--output-dir", str(tmp_path / "a")])
    comments, _, _ = _read_csv(tmp_path / "a" / "replicates.csv")
    assert comments[0].startswith("# config_hash=")
    assert "seed=9" in comments[0]
    assert any(c.startswith("# timestamp=") for c in comments)

    main(["simulate", "--config", cfg, "--replicates", "2", "--no-timestamp",
          "--output-dir", str(tmp_path / "b")])
    comments, _, _ = _read_csv(tmp_path / "b" / "replicates.csv")
    assert not any(c.startswith("# timestamp=") for c in comments)


def test_simulate_outputs_deterministic(tmp_path):
    cfg = _write_config(tmp_path, symmetric_marked_config(n=600, seed=11))
    for d in ("a", "b"):
        main(["simulate", "--config", cfg, "--replicates", "5",
              "--no-timestamp", "--output-dir", str(tmp_path / d)])
    for name in ("replicates.csv", "summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == \
               (tmp_path / "b" / name).read_bytes()


def test_reals_round_trip_exactly(tmp_path):
    cfg = _write_config(tmp_path, symmetric_marked_config(n=600, seed=13))
    main(["simulate", "--config", cfg, "--replicates", "4", "--no-timestamp",
          "--output-dir", str(tmp_path / "o")])
    _, header, rows = _read_csv(tmp_path / "o" / "replicates.csv")
    col = header.index("final_fraction")
    fracs = [float(r[col]) for r in rows]
    # 17 significant digits reproduce the double exactly
    text = [format(f, ".17g") for f in fracs]
    assert [float(t) for t in text] == fracs
    assert any("." in t for t in text)


def test_seed_override_changes_output(tmp_path):
    cfg = _write_config(tmp_path, symmetric_marked_config(n=600, seed=15))
    main(["simulate", "--config", cfg, "--replicates", "5", "--no-timestamp",
          "--output-dir", str(tmp_path / "a")])
    main(["simulate", "--config", cfg, "--replicates", "5", "--no-timestamp",
          "--seed", "99", "--output-dir", str(tmp_path / "b")])
    a = (tmp_path / "a" / "replicates.csv").read_text()
    b = (tmp_path / "b" / "replicates.csv").read_text()
    assert a != b
    assert "seed=99" in b.splitlines()[0]


# --------------------------------------------------------------------------
# backward and bp-estimate
# --------------------------------------------------------------------------

def test_backward_output_columns(tmp_path):
    cfg = _write_config(tmp_path, marked_config(500, 0.4, 3.0, 2.0, seed=17))
    rc = main(["backward", "--config", cfg, "--roots-per-type", "4",
               "--t-star", "1.0", "--no-timestamp",
               "--output-dir", str(tmp_path / "o")])
    assert rc == 0
    _, header, rows = _read_csv(tmp_path / "o" / "backward.csv")
    assert header == ["root", "root_type", "explored", "restricted_size",
                      "collisions", "flagged"]
    assert len(rows) == 8
    for r in rows:
        assert int(r[2]) >= 1  # explored includes the root
        assert int(r[3]) >= 1
        assert r[5] in ("0", "1")


def test_backward_explicit_roots(tmp_path):
    cfg = _write_config(tmp_path, marked_config(500, 0.4, 3.0, 2.0, seed=19))
    main(["backward", "--config", cfg, "--roots", "0,5,250",
          "--t-star", "0.5", "--no-timestamp",
          "--output-dir", str(tmp_path / "o")])
    _, _, rows = _read_csv(tmp_path / "o" / "backward.csv")
    assert [r[0] for r in rows] == ["0", "5", "250"]


def test_bp_estimate_outputs(tmp_path, capsys):
    cfg = _write_config(tmp_path, symmetric_marked_config(n=400, seed=21))
    rc = main(["bp-estimate", "--config", cfg, "--type", "1",
               "--replicates", "150", "--horizon", "6", "--no-timestamp",
               "--output-dir", str(tmp_path / "o")])
    assert rc == 0
    assert "rho_11=" in capsys.readouterr().out
    _, header, rows = _read_csv(tmp_path / "o" / "bp_replicates.csv")
    assert header == ["replicate", "share_1", "share_2"]
    assert len(rows) == 150
    _, sh, srows = _read_csv(tmp_path / "o" / "bp_summary.csv")
    assert sh == ["target_type", "rho_1_1", "rho_2_1", "stderr_1", "stderr_2"]
    vals = [float(x) for x in srows[0][1:3]]
    assert all(np.isfinite(vals))


# --------------------------------------------------------------------------
# bounds and sweep
# --------------------------------------------------------------------------

def test_bounds_stdout_matches_report(tmp_path, capsys):
    rc = main(["bounds", "--p1", "0.5", "--m1", "2.0", "--m2", "2.0"])
    assert rc == 0
    out = capsys.readouterr().out
    rep = analytic_report(0.5, 2.0, 2.0)
    for name, value in rep.rows():
        line = next(l for l in out.splitlines() if l.startswith(name))
        assert float(line.split()[-1]) == pytest.approx(value, rel=1e-10)


def test_bounds_requires_parameters():
    assert main(["bounds", "--p1", "0.5"]) == 2


def test_bounds_from_config(tmp_path, capsys):
    cfg = _write_config(tmp_path, marked_config(500, 0.4, 3.0, 2.0))
    rc = main(["bounds", "--config", cfg, "--no-timestamp",
               "--output-dir", str(tmp_path / "o")])
    assert rc == 0
    _, header, rows = _read_csv(tmp_path / "o" / "bounds.csv")
    assert float(rows[0][header.index("p1")]) == 0.4
    rep = analytic_report(0.4, 3.0, 2.0)
    assert float(rows[0][header.index("rho1_plus")]) == pytest.approx(
        rep.rho1_plus, rel=1e-15
    )


def test_bounds_rejects_single_type_config(tmp_path):
    cfg = _write_config(tmp_path, single_type_config(n=50))
    assert main(["bounds", "--config", cfg]) == 2


def test_sweep_single_point_matches_bounds(tmp_path):
    main(["sweep", "--p1-grid", "0.4", "--m1-grid", "3.0", "--m2-grid", "2.0",
          "--no-timestamp", "--output-dir", str(tmp_path / "o")])
    _, header, rows = _read_csv(tmp_path / "o" / "sweep.csv")
    assert len(rows) == 1
    rep = analytic_report(0.4, 3.0, 2.0)
    for name, value in rep.rows():
        assert float(rows[0][header.index(name)]) == pytest.approx(value, rel=1e-15)
    assert rows[0][header.index("error")] == ""


def test_sweep_rho_plus_monotone_in_p1(tmp_path):
    main(["sweep", "--p1-grid", "0.2,0.4,0.6,0.8", "--m1-grid", "2.0",
          "--m2-grid", "2.0", "--no-timestamp",
          "--output-dir", str(tmp_path / "o")])
    _, header, rows = _read_csv(tmp_path / "o" / "sweep.csv")
    vals = [float(r[header.index("rho1_plus")]) for r in rows]
    assert vals == sorted(vals)


def test_sweep_subcritical_rows_marked(tmp_path):
    rc = main(["sweep", "--p1-grid", "0.5", "--m1-grid", "0.5,3.0",
               "--m2-grid", "0.5", "--no-timestamp",
               "--output-dir", str(tmp_path / "o")])
    assert rc == 0
    _, header, rows = _read_csv(tmp_path / "o" / "sweep.csv")
    errs = [r[header.index("error")] for r in rows]
    assert errs[0] != "" and math.isnan(float(rows[0][header.index("q1")]))
    assert errs[1] == ""
