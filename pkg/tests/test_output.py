from __future__ import annotations

import numpy as np
import pytest

from coupled_logistic import Params, State, build_grid
from coupled_logistic import continuation as cont
from coupled_logistic import output
from coupled_logistic.grid import load_field
from coupled_logistic.solvers import make_record

G = build_grid(1, 1.0, 5)
PR = Params(20.0, 21.0, 4.0, -0.25)


def record():
    s = State(np.array([0.1, 0.2, 0.3, 0.2, 0.1]), np.array([0.0, 0.1, -0.1, 0.0, 0.0]))
    return make_record(PR, G, s, "refined", 7, note="x", count=3, path=[s])


def test_provenance_lines():
    lines = output.provenance_lines("[a]\nb = 1   \n")
    assert lines[0].startswith("tool: coupled-logistic ")
    assert lines[1] == "config_sha256: " + output.config_hash("[a]\nb = 1   \n")
    assert lines[2:] == ["config| [a]", "config| b = 1"]
    assert output.provenance_lines(None) == lines[:1]


def test_record_round_trip():
    rec = record()
    text = output.record_to_text(rec, "[x]\n")
    assert "info.path" not in text
    back = output.record_from_text(text, rec.state)
    assert back.energy == rec.energy and back.grad_norm == rec.grad_norm
    assert back.flags == rec.flags
    assert back.params_used == rec.params_used
    assert back.iterations == 7 and back.info["note"] == "x" and back.info["count"] == "3"


def test_write_record_files(tmp_path):
    paths = output.write_record(tmp_path, "r", G, record(), "[cfg]\n")
    assert [p.name for p in paths] == ["r.txt", "r_u.dat", "r_v.dat"]
    g, v = load_field(paths[2])
    assert np.array_equal(v, record().state.v)
    assert paths[1].read_text().startswith("# tool: ")


def test_branch_csv(tmp_path):
    br = cont.Branch("ground", PR)
    br.append(0.0, record(), {"overlap": 0.5, "n0_count": 1})
    br.append(0.5, None, {"n0_count": 0}, "failed to converge")
    text = output.branch_to_csv(br, "[c]\n")
    assert "# csv_schema: 1" in text and "# branch: ground" in text
    rows = output.read_branch_csv(text)
    assert list(rows[0]) == list(cont.CSV_COLUMNS)
    assert float(rows[0]["energy"]) == record().energy
    assert rows[1]["energy"] == "" and rows[1]["flags"] == "failed"
    assert output.branch_to_csv(br, "[c]\n") == text


def test_summary_line():
    line = output.summary_line(record())
    assert line.startswith("refined: energy=") and "flags=" in line


@pytest.mark.parametrize("value,text", [(True, "true"), (3, "3"), (0.1, "0.1"), (None, ""), ("a", "a")])
def test_value_formatting(value, text):
    assert output._fmt(value) == text
