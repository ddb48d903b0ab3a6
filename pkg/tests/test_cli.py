import json
import subprocess
import sys
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"

CASES = {
    "invert_golden": [
        "invert",
        "--map", str(FIXTURES / "maps/plus_square.json"),
        "--field", str(FIXTURES / "fields/q5n4.json"),
        "--geometry", str(FIXTURES / "geo/invert_golden.json"),
    ],
    "certify_affine": [
        "certify",
        "--map", str(FIXTURES / "maps/affine.json"),
        "--field", str(FIXTURES / "fields/real.json"),
        "--geometry", str(FIXTURES / "geo/certify_affine.json"),
    ],
    "fixpoint_golden": [
        "fixpoint",
        "--map", str(FIXTURES / "maps/five_plus_square.json"),
        "--field", str(FIXTURES / "fields/q5n4.json"),
        "--geometry", str(FIXTURES / "geo/fixpoint_golden.json"),
    ],
    "implicit_golden": [
        "implicit",
        "--map", str(FIXTURES / "maps/saddle.json"),
        "--field", str(FIXTURES / "fields/q5n4.json"),
        "--geometry", str(FIXTURES / "geo/implicit_golden.json"),
    ],
    "check_clean": [
        "check",
        "--map", str(FIXTURES / "maps/plus_square.json"),
        "--field", str(FIXTURES / "fields/q5n4.json"),
        "--samples", "40",
        "--seed", "11",
    ],
}


def run_cli(args):
    return subprocess.run(
        [sys.executable, "-m", "ultrafix.cli", *args],
        capture_output=True,
        text=True,
    )


@pytest.mark.parametrize("name", sorted(CASES))
def test_cli_fixture_matches_golden_and_reruns_identically(name):
    first = run_cli(CASES[name])
    second = run_cli(CASES[name])
    assert first.returncode == 0, first.stdout + first.stderr
    assert first.stdout == second.stdout
    golden = (GOLDEN / f"{name}.json").read_text()
    assert first.stdout == golden


def test_cli_invert_solution_digits():
    out = run_cli(CASES["invert_golden"])
    payload = json.loads(out.stdout)
    assert payload["result"]["solution"] == [{"digits": [0, 1, 4, 1], "val": 0}]
    assert payload["result"]["certificate"]["sigma"] == "1/5"


def test_cli_fixpoint_digits():
    out = run_cli(CASES["fixpoint_golden"])
    payload = json.loads(out.stdout)
    assert payload["result"]["report"]["fixed_point"] == [
        {"digits": [0, 1, 1, 2], "val": 0}
    ]


def test_cli_check_mutant_fails_with_witness():
    result = run_cli(
        [
            "check",
            "--map", str(FIXTURES / "maps/plus_square.json"),
            "--field", str(FIXTURES / "fields/q5n4.json"),
            "--samples", "40",
            "--geometry", str(FIXTURES / "geo/check_mutant.json"),
        ]
    )
    assert result.returncode == 1
    payload = json.loads(result.stdout)
    assert payload["error"]["witness"]["failures"] > 0
    assert "counterexample" in payload["error"]["witness"]


def test_cli_schema_errors_exit_2():
    bad_map = run_cli(
        ["certify", "--map", '{"vars": 1}', "--field", '{"kind": "real"}']
    )
    assert bad_map.returncode == 2
    bad_field = run_cli(
        [
            "certify",
            "--map", str(FIXTURES / "maps/affine.json"),
            "--field", '{"kind": "padic"}',
        ]
    )
    assert bad_field.returncode == 2


def test_cli_solver_error_exit_1():
    # target outside the certified image
    result = run_cli(
        [
            "invert",
            "--map", str(FIXTURES / "maps/plus_square.json"),
            "--field", str(FIXTURES / "fields/q5n4.json"),
            "--geometry",
            json.dumps(
                {
                    "ball": {"center": ["0/1"], "radius": "1/5"},
                    "target": ["1/1"],
                }
            ),
        ]
    )
    assert result.returncode == 1
    payload = json.loads(result.stdout)
    assert payload["error"]["kind"] == "TargetOutsideGuarantee"
