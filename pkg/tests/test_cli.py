import io
import os
import subprocess
import sys

import pytest

from strengthlab import cli
from strengthlab import formats as fm

HERE = os.path.dirname(__file__)
INSTANCES = os.path.join(HERE, "..", "instances")


def inst_path(name):
    return os.path.join(INSTANCES, name)


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.run_command(argv, out, err)
    return code, out.getvalue(), err.getvalue()


def kv_lines(text, tag):
    rows = []
    for line in text.splitlines():
        parts = line.split()
        if parts and parts[0] == tag:
            rows.append(dict(p.split("=", 1) for p in parts[1:] if "=" in p))
    return rows


def test_constants_kv():
    code, out, _ = run(["constants", "--max-d", "5", "--format", "kv"])
    assert code == 0
    C = {int(r["d"]): int(r["value"]) for r in kv_lines(out, "C")}
    assert C == {3: 2, 4: 4, 5: 14}
    assert all(r["match"] == "1" for r in kv_lines(out, "theta_sym"))


def test_constants_human_mentions_values():
    code, out, _ = run(["constants"])
    assert code == 0
    assert "C_5 = 14" in out


def test_rank_of_diagonal_tensor_file():
    code, out, _ = run(["rank", inst_path("diag_r2.tensor"), "--format", "kv"])
    assert code == 0
    (row,) = kv_lines(out, "rank")
    assert row["exact"] == "1" and row["upper"] == "2"


def test_rank_writes_certificate_file(tmp_path):
    dest = tmp_path / "cert.txt"
    code, _, _ = run(["rank", inst_path("diag_r2.tensor"), "--cert-out", str(dest)])
    assert code == 0
    inst = fm.parse_text(dest.read_text())
    assert inst.certificates[0].rank == 2


def test_audit_fermat_file_exits_zero():
    code, out, _ = run(["audit", inst_path("fermat3_n4.inst"), "--tower", "2", "--format", "kv"])
    assert code == 0
    rows = kv_lines(out, "row")
    assert rows and not any(r["status"] == "violated" for r in rows)
    oracle = {r["id"]: r["status"] for r in rows if r["id"].startswith("oracle:")}
    assert oracle == {"oracle:strength": "holds", "oracle:g_sym": "holds", "oracle:c": "holds"}


def test_wrong_oracle_value_gives_violation_exit(tmp_path):
    text = open(inst_path("diag_r2.tensor")).read().replace("g=2", "g=3")
    bad = tmp_path / "bad.tensor"
    bad.write_text(text)
    code, out, _ = run(["audit", str(bad), "--format", "kv"])
    assert code == 3
    assert any(r["id"] == "oracle:g" and r["status"] == "violated" for r in kv_lines(out, "row"))


def test_budget_exhaustion_exit_code(tmp_path):
    path = tmp_path / "d3.tensor"
    # the extra entry breaks the monomial structure, so only a search can close the gap
    path.write_text("field GF(5^1; modulus=0,1)\ntensor 3 3 3 3\n0 0 0 : 1\n0 1 2 : 1\n1 1 1 : 1\n"
                    "2 2 2 : 1\nend\n")
    code, _, _ = run(["rank", str(path), "--budget", "2"])
    assert code == 2


def test_count_budget_exhaustion_exit_code(tmp_path):
    code, _, err = run(["counts", inst_path("diag_r2.tensor"), "--budget", "3"])
    assert code == 2
    assert "budget" in err


def test_usage_errors_exit_one(tmp_path):
    assert run([])[0] == 1
    assert run(["nonsense"])[0] == 1
    assert run(["rank", str(tmp_path / "missing.inst")])[0] == 1
    bad = tmp_path / "bad.inst"
    bad.write_text("field GF(5^1; modulus=0,1)\ntensor 2 2 2\n0 5 : 1\nend\n")
    code, _, err = run(["rank", str(bad)])
    assert code == 1 and "line 3" in err


def test_field_flag_supplies_missing_header(tmp_path):
    path = tmp_path / "nohdr.tensor"
    path.write_text("tensor 3 2 2 2\n0 0 0 : 1\nend\n")
    assert run(["rank", str(path)])[0] == 1
    code, out, _ = run(["rank", str(path), "--field", "5", "--format", "kv"])
    assert code == 0 and kv_lines(out, "rank")[0]["upper"] == "1"


def test_counts_kv_summary():
    code, out, _ = run(["counts", inst_path("diag_r2.tensor"), "--format", "kv", "--tower", "1"])
    assert code == 0
    (level,) = kv_lines(out, "level")
    assert level["N"] == str(9 * 9)


def test_invariants_and_derive_run():
    code, out, _ = run(["invariants", inst_path("fermat3_n4.inst"), "--format", "kv"])
    assert code == 0
    inv = {r["name"]: int(r["codim"]) for r in kv_lines(out, "invariant")}
    assert inv["g_sym"] == 4 and inv["c"] == 4
    code, out, _ = run(["derive", inst_path("fermat3_n4.inst")])
    assert code == 0 and out


def test_kappa_and_kernel_sections_run():
    code, _, _ = run(["kernel-sections", inst_path("hessian_fermat2.inst"), "--format", "kv"])
    assert code == 0
    code, _, _ = run(["kappa", inst_path("hessian_fermat2.inst"), "--format", "kv"])
    assert code == 0


def test_seed_determinism_and_env_precedence(monkeypatch):
    argv = ["audit", inst_path("fermat3_n4.inst"), "--format", "kv", "--directions", "3"]
    a = run(argv + ["--seed", "5"])[1]
    b = run(argv + ["--seed", "5"])[1]
    assert a == b
    monkeypatch.setenv("STRENGTHLAB_SEED", "5")
    assert run(argv)[1] == a
    # an explicit flag beats the environment
    monkeypatch.setenv("STRENGTHLAB_SEED", "999")
    assert run(argv + ["--seed", "5"])[1] == a


def test_bad_environment_value_is_usage_error(monkeypatch):
    monkeypatch.setenv("STRENGTHLAB_BUDGET", "lots")
    assert run(["constants"])[0] == 1


def test_env_budget_applies(monkeypatch):
    monkeypatch.setenv("STRENGTHLAB_BUDGET", "3")
    assert run(["counts", inst_path("diag_r2.tensor")])[0] == 2
    assert run(["counts", inst_path("diag_r2.tensor"), "--budget", "100000"])[0] == 0


def test_parse_field_forms():
    assert cli.parse_field("5").q == 5
    assert cli.parse_field("3,2").q == 9
    assert cli.parse_field("GF(3^2; modulus=2,2,1)").q == 9


def test_random_instances_are_seeded():
    a = fm.emit(cli.random_instance(4, 11))
    assert a == fm.emit(cli.random_instance(4, 11))


def test_small_corpus_run():
    code, out, _ = run(["corpus", "--random", "6", "--format", "kv"])
    assert code == 0
    assert "violated=0" in out.splitlines()[-1]


def test_console_entry_point_is_byte_deterministic():
    cmd = [sys.executable, "-m", "strengthlab.cli", "constants", "--format", "kv"]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b and b"C d=5 value=14" in a


@pytest.mark.parametrize("flag", ["--format", "--tower", "--budget", "--seed", "--field"])
def test_common_flags_are_accepted_everywhere(flag):
    value = {"--format": "kv", "--tower": "1", "--budget": "100000", "--seed": "1", "--field": "5"}[flag]
    assert run(["constants", flag, value])[0] == 0
