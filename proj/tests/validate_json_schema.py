"""Runs every verb with --format json and validates the output against the schema."""
import json
import subprocess
import sys

import jsonschema

BIN, SCHEMA = sys.argv[1], sys.argv[2]

CASES = [
    (["threshold", "piecewise{x<0: x^2; x>=0: -(x^2)}"], 0),
    (["threshold", "-x^3"], 3),
    (["threshold", "x^3 + (-x^3)"], 4),
    (["envelope", "abs(x)", "--r", "1", "--range", "-5:5", "--steps", "11"], 0),
    (["envelope", "-x^2", "--r", "2", "--range", "-1:1", "--steps", "3"], 0),
    (["envelope", "x^2 + y^2", "--r", "1", "--range", "-1:1,-1:1", "--steps", "3"], 0),
    (["envelope", "abs(x)", "--function-only", "--range", "0:1", "--steps", "2"], 0),
    (["prox", "abs(x)", "--r", "1", "--x", "2"], 0),
    (["conjugate", "abs(x)", "--range", "-2:2", "--steps", "5"], 0),
    (["estimate", "-(x^2)", "--method", "both"], 0),
    (["estimate", "x^3", "--method", "liminf"], 3),
    (["check", "abs(x)"], 0),
]


def main():
    with open(SCHEMA) as f:
        schema = json.load(f)
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)
    failures = 0
    for args, want in CASES:
        proc = subprocess.run([BIN, *args, "--format", "json"], capture_output=True, text=True)
        label = " ".join(args)
        if proc.returncode != want:
            print(f"FAIL {label}: exit {proc.returncode}, want {want}\n{proc.stderr}")
            failures += 1
            continue
        errors = sorted(validator.iter_errors(json.loads(proc.stdout)), key=str)
        if errors:
            print(f"FAIL {label}: {errors[0].message}")
            failures += 1
        else:
            print(f"ok   {label}")
    sys.exit(1 if failures else 0)


if __name__ == "__main__":
    main()
