#!/usr/bin/env python3
"""Drives the ionaddr executable and checks exit codes, reports and the sweep table.

usage: check_cli.py <ionaddr> <source-dir> <output-dir>
"""

import csv
import json
import pathlib
import shutil
import subprocess
import sys

import jsonschema

cli, source, out = sys.argv[1], pathlib.Path(sys.argv[2]), pathlib.Path(sys.argv[3])
scenarios = source / "scenarios"
schema = json.loads((source / "docs" / "report.schema.json").read_text())
validator = jsonschema.Draft202012Validator(schema)

shutil.rmtree(out, ignore_errors=True)
out.mkdir(parents=True)
failures = []


def run(*args, expect):
    proc = subprocess.run([cli, *map(str, args)], capture_output=True, text=True)
    label = " ".join(map(str, args[:2]))
    if proc.returncode != expect:
        failures.append(f"{label}: exit {proc.returncode}, expected {expect}\n{proc.stdout}{proc.stderr}")
    return proc


def report(path, status, **fields):
    path = pathlib.Path(path)
    if not path.exists():
        failures.append(f"{path.name}: missing")
        return None
    doc = json.loads(path.read_text())
    for err in validator.iter_errors(doc):
        failures.append(f"{path.name}: {err.json_path}: {err.message}")
    if doc.get("status") != status:
        failures.append(f"{path.name}: status {doc.get('status')}, expected {status}")
    for key, want in fields.items():
        got = doc.get("error", {}).get(key)
        if got != want:
            failures.append(f"{path.name}: error.{key} = {got!r}, expected {want!r}")
    return doc


proc = run("version", expect=0)
if "ionaddr" not in proc.stdout:
    failures.append("version: no toolkit name on stdout")

run("design", expect=2)  # missing positional argument
run("frobnicate", scenarios / "reference.json", expect=2)

(out / "broken.json").write_text('{\n  "trap": {"ion_count": 3,}\n}\n')
run("crystal", out / "broken.json", "--report", out / "broken.json.report", expect=2)
report(out / "broken.json.report", "error", stage="scenario", kind="parse", exit_code=2)

(out / "typo.json").write_text('{"targets": {"magnificaton": 0.6}}\n')
run("crystal", out / "typo.json", "--report", out / "typo.report.json", expect=2)
doc = report(out / "typo.report.json", "error", stage="scenario", exit_code=2)
if doc and "magnificaton" not in doc["error"]["message"]:
    failures.append("typo: message does not name the key")

(out / "bad_na.json").write_text('{"targets": {"numerical_aperture": 1.5}}\n')
run("crystal", out / "bad_na.json", "--report", out / "bad_na.report.json", expect=3)
report(out / "bad_na.report.json", "error", stage="scenario", exit_code=3)

run("crystal", out / "missing.json", "--report", out / "missing.report.json", expect=8)
report(out / "missing.report.json", "error", exit_code=8)

run("design", scenarios / "infeasible_targets.json", "--report", out / "infeasible.json", expect=4)
report(out / "infeasible.json", "error", stage="synthesis", kind="infeasible", exit_code=4)

run("sweep", scenarios / "single_ion.json", "--preset", "no-such-preset", "--report", out / "preset.json", expect=3)
report(out / "preset.json", "error", stage="scenario", exit_code=3)

run("sweep", scenarios / "single_ion.json", "--param", "chip_wedge:1:2", "--report", out / "param.json", expect=2)
report(out / "param.json", "error", stage="scenario", kind="parse")

# Default output location.
subprocess.run([cli, "crystal", scenarios / "reference.json"], capture_output=True,
               env={"IONADDR_OUTPUT_DIR": str(out), "PATH": "/usr/bin:/bin"})
doc = report(out / "reference.crystal.json", "ok")
if doc:
    if len(doc["crystal"]["gaps_um"]) != 9 or "timing" not in doc:
        failures.append("reference.crystal.json: expected 9 gaps and a timing block")
    if doc["scenario"]["trap"]["ion_count"] != 10:
        failures.append("reference.crystal.json: scenario echo lost ion_count")

for name in ["single_ion", "unit_magnification"]:
    run("crystal", scenarios / f"{name}.json", "--report", out / f"{name}.crystal.json", "--no-timing", expect=0)
    doc = report(out / f"{name}.crystal.json", "ok")
    if doc and "timing" in doc:
        failures.append(f"{name}.crystal.json: timing present with --no-timing")

# A small sweep of the single-ion layout.
run("sweep", scenarios / "single_ion.json", "--param", "z_offset:-1:1:3", "--grid", "2048,512,0.2",
    "--report", out / "small.sweep.json", "--csv", out / "small.sweep.csv", expect=0)
doc = report(out / "small.sweep.json", "ok")
header = ["point", "z_offset_um", "z_focus_um", "dz_focus_um", "mfd_fit_x_um", "mfd_fit_y_um", "dmfd_x_um",
          "dmfd_y_um", "centroid_x_um", "centroid_y_um", "dcentroid_x_nm", "dcentroid_y_nm", "clipped_fraction",
          "angle_x_deg", "angle_y_deg", "off_normal", "excess_clipping", "centroid_shift_reportable"]
if (out / "small.sweep.csv").exists():
    rows = list(csv.reader((out / "small.sweep.csv").open()))
    if rows[0] != header:
        failures.append(f"small.sweep.csv: header {rows[0]}")
    if len(rows) != 4:
        failures.append(f"small.sweep.csv: {len(rows) - 1} rows, expected 3")
    if doc and [float(r[1]) for r in rows[1:]] != [p["values"][0] for p in doc["sweep"]["points"]]:
        failures.append("small.sweep.csv: values disagree with the report")
    if doc and doc["sweep"]["grid"] != {"nx": 2048, "ny": 512, "pitch_um": 0.2}:
        failures.append(f"small.sweep.json: sweep grid {doc['sweep']['grid']}")
else:
    failures.append("small.sweep.csv: missing")

# A small design with a field dump.
run("design", scenarios / "single_ion.json", "--report", out / "single.design.json", "--dump-field",
    out / "single.sfld", expect=0)
doc = report(out / "single.design.json", "ok")
if doc:
    if doc["field_dump"]["channel"] != 0 or not (out / "single.sfld").exists():
        failures.append("single.design.json: field dump missing")
    if doc["crosstalk"]["nearest_neighbor"]["pairs"] != 0:
        failures.append("single.design.json: a single channel has no neighbors")

for f in failures:
    print("FAIL", f)
print(f"{len(failures)} problem(s)")
sys.exit(1 if failures else 0)
