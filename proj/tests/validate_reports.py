"""Runs the isolab binary on small inputs and validates every report against the schema."""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema


def main():
    binary, schema_path = sys.argv[1], sys.argv[2]
    schema = json.loads(Path(schema_path).read_text())
    validator = jsonschema.Draft202012Validator(schema)
    with tempfile.TemporaryDirectory() as tmp:
        cache = str(Path(tmp) / "cache")
        runs = [
            (["enumerate", "--p", "31"], 0),
            (["cgl", "--p", "31", "--ell", "2", "--msg", "0110"], 0),
            (["graph", "--p", "31", "--ell", "2"], 0),
            (["spectra", "report", "--p", "31", "--ell", "2,3"], 0),
            (["spectra", "report", "--p", "31", "--N", "3", "--kind", "endmod", "--ell", "2"], 0),
            (["spectra", "walk", "--p", "31", "--k", "10", "--samples", "500", "--boot", "10"], 0),
            (["reduce", "endring", "--p", "31", "--oracle", "honest", "--seed", "3"], 0),
            (["solve", "isogpath", "--p", "31", "--j1", "23"], 0),
            (["verify", "lemma-subspace", "--ell", "5"], 0),
            (["verify", "lemma-subspace", "--ell", "3"], 2),
            (["verify", "table", "--p", "31"], 0),
            (["solve", "isogpath", "--p", "31", "--j1", "5"], 1),
        ]
        bad = 0
        for i, (args, want) in enumerate(runs):
            out = Path(tmp) / f"r{i}.json"
            proc = subprocess.run([binary, *args, "--cache-dir", cache, "--out", str(out)],
                                  capture_output=True, text=True)
            report = json.loads(out.read_text())
            errors = sorted(validator.iter_errors(report), key=str)
            ok = proc.returncode == want and report["exit_code"] == want and not errors
            print(("ok   " if ok else "FAIL ") + " ".join(args), f"exit {proc.returncode}")
            for e in errors[:3]:
                print("     schema:", e.message)
            bad += not ok
        # unknown flags stop before any report is written
        proc = subprocess.run([binary, "enumerate", "--p", "31", "--bogus"], capture_output=True, text=True)
        print(("ok   " if proc.returncode == 1 else "FAIL ") + "unknown flag", f"exit {proc.returncode}")
        bad += proc.returncode != 1
    sys.exit(1 if bad else 0)


if __name__ == "__main__":
    main()
