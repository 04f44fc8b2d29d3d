"""Text serialization of solution records, branches and reports.

Every artifact starts with ``#`` provenance lines: tool version, config
hash and (when given) the config text itself. Floats are written with
``repr`` so files round-trip exactly and identical runs give identical bytes.
"""

from __future__ import annotations

import csv
import hashlib
import io
from pathlib import Path

import numpy as np

from .continuation import CSV_COLUMNS, Branch
from .functional import Params, State
from .grid import Grid, dumps_field
from .solvers import Flags, SolutionRecord

TOOL_NAME = "coupled-logistic"
CSV_SCHEMA = 1


def tool_version() -> str:
    from . import __version__

    return __version__


def config_hash(config_text: str) -> str:
    return hashlib.sha256(config_text.encode("utf-8")).hexdigest()


def provenance_lines(config_text: str | None = None, *, echo: bool = True) -> list[str]:
    lines = [f"tool: {TOOL_NAME} {tool_version()}"]
    if config_text is not None:
        lines.append(f"config_sha256: {config_hash(config_text)}")
        if echo:
            lines.extend(("config| " + ln).rstrip() for ln in config_text.splitlines())
    return lines


def _comment(lines) -> str:
    return "".join(f"# {ln}\n" for ln in lines)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


# -- solution records ---------------------------------------------------------------------


def record_to_text(rec: SolutionRecord, config_text: str | None = None) -> str:
    """``key: value`` lines; info entries that are not scalars are skipped."""
    pr = rec.params_used
    fields = [
        ("kind", rec.kind),
        ("energy", rec.energy),
        ("grad_norm", rec.grad_norm),
        ("iterations", rec.iterations),
        ("lambda1", pr.lambda1),
        ("lambda2", pr.lambda2),
        ("p", pr.p),
        ("beta", pr.beta),
        ("flags", "|".join(rec.flags.names())),
    ]
    for k in sorted(rec.info):
        v = rec.info[k]
        if isinstance(v, (int, float, bool, str, np.integer, np.floating, np.bool_)) or v is None:
            fields.append((f"info.{k}", v))
    body = "".join(f"{k}: {_fmt(v)}\n" for k, v in fields)
    return _comment(provenance_lines(config_text)) + body


def record_from_text(text: str, state: State) -> SolutionRecord:
    """Parse :func:`record_to_text` output back; the state comes from the grid dumps."""
    kv = {}
    for ln in text.splitlines():
        if not ln.strip() or ln.startswith("#"):
            continue
        k, _, v = ln.partition(": ")
        kv[k] = v
    names = set(filter(None, kv.get("flags", "").split("|")))
    flags = Flags(*(name in names for name in Flags.__dataclass_fields__))
    pr = Params(float(kv["lambda1"]), float(kv["lambda2"]), float(kv["p"]), float(kv["beta"]))
    info = {k[5:]: v for k, v in kv.items() if k.startswith("info.")}
    return SolutionRecord(state, float(kv["energy"]), float(kv["grad_norm"]), kv["kind"], flags, pr,
                          int(kv["iterations"]), info)


def write_record(outdir, name: str, g: Grid, rec: SolutionRecord, config_text: str | None = None) -> list[Path]:
    """``name.txt`` plus per-component grid dumps ``name_u.dat`` and ``name_v.dat``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    head = provenance_lines(config_text, echo=False)
    paths = [outdir / f"{name}.txt", outdir / f"{name}_u.dat", outdir / f"{name}_v.dat"]
    paths[0].write_text(record_to_text(rec, config_text))
    paths[1].write_text(dumps_field(g, rec.state.u, head))
    paths[2].write_text(dumps_field(g, rec.state.v, head))
    return paths


# -- branches -----------------------------------------------------------------------------


def branch_to_csv(br: Branch, config_text: str | None = None) -> str:
    buf = io.StringIO()
    buf.write(_comment(provenance_lines(config_text) + [f"csv_schema: {CSV_SCHEMA}", f"branch: {br.kind}"]))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in br.rows():
        w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def read_branch_csv(text: str) -> list[dict]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def write_text(outdir, name: str, body: str, config_text: str | None = None) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / name
    path.write_text(_comment(provenance_lines(config_text)) + body)
    return path


def summary_line(rec: SolutionRecord) -> str:
    return f"{rec.kind}: energy={rec.energy!r} grad_norm={rec.grad_norm:.3e} flags={'|'.join(rec.flags.names()) or '-'}"
