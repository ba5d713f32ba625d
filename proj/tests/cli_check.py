#!/usr/bin/env python3
"""Runs the opideal binary end to end.

Each command runs at 1 and 8 threads. Reports must match once timing keys
are removed, and must validate against the report schema when jsonschema
is installed.
"""
import json
import subprocess
import sys
import tempfile
from pathlib import Path

TIMING = {"elapsed_ms", "wall_ms", "runtime"}

RUNS = [
    ["rip", "gen"],
    ["rip", "certify"],
    ["build"],
    ["factorize", "--lemma", "formal-id"],
    ["factorize", "--lemma", "identity-through-tn"],
    ["factorize", "--lemma", "embedding"],
    ["factorize", "--lemma", "large-ideals"],
    ["separate", "--samples", "150"],
    ["fss-probe", "--dims", "1,2"],
]


def strip(j):
    if isinstance(j, dict):
        return {k: strip(v) for k, v in j.items() if k not in TIMING}
    if isinstance(j, list):
        return [strip(v) for v in j]
    return j


def run(cli, args, threads, out):
    cmd = [cli, *args, "--threads", str(threads), "--out", str(out)]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise SystemExit(f"{' '.join(cmd)} exited {proc.returncode}\n{proc.stderr}")
    return json.loads(out.read_text())


def main():
    cli, schema_dir = sys.argv[1], Path(sys.argv[2])
    try:
        import jsonschema
        schema = json.loads((schema_dir / "report.schema.json").read_text())
        validate = lambda r: jsonschema.validate(r, schema)
    except ImportError:
        print("jsonschema not installed, skipping schema validation")
        validate = lambda r: None

    failures = 0
    with tempfile.TemporaryDirectory() as tmp:
        for args in RUNS:
            label = " ".join(args)
            one = run(cli, args, 1, Path(tmp) / "one.json")
            eight = run(cli, args, 8, Path(tmp) / "eight.json")
            ok = strip(one) == strip(eight)
            try:
                validate(one)
            except Exception as e:  # jsonschema.ValidationError
                print(f"schema: {label}: {e}")
                ok = False
            print(f"{'ok' if ok else 'FAIL'}  {label}")
            failures += not ok

        usage = subprocess.run([cli, "factorize", "--lemma", "magic"], capture_output=True)
        print(f"{'ok' if usage.returncode == 2 else 'FAIL'}  usage error exits 2")
        failures += usage.returncode != 2

    sys.exit(1 if failures else 0)


if __name__ == "__main__":
    main()
