import io
import json
import subprocess
import sys

import pytest

from heisenjet.cli import main
from heisenjet.identity_suite import CATALOG_ENV


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), out=buf)
    return code, buf.getvalue()


@pytest.mark.parametrize(
    "src, pde, text",
    [
        ("f[a',a]", "--no-pde", "f[a,a'] - 2*n*I*f[0]"),
        ("f[a,a']", "--pde", "-n*(-I*f[0] + f[a]*f[a'] + exp((2+p)*f))"),
        ("0", "--no-pde", "0"),
    ],
)
def test_normalize(src, pde, text):
    code, out = run("normalize", src, pde)
    assert code == 0
    assert out.strip() == text


def test_normalize_defaults_to_no_pde():
    assert run("normalize", "f[a,a']")[1].strip() == "f[a,a']"


def test_parse_error_shows_caret(capsys):
    code, _ = run("normalize", "f[a]*f[a]")
    err = capsys.readouterr().err
    assert code == 2
    assert "parse error at 1:6" in err
    assert "       ^" in err


def test_term_cap_is_a_failure(capsys):
    code, _ = run("normalize", "f[a',b',c',a,b,c]", "--term-cap", "3")
    assert code == 1
    assert "term" in capsys.readouterr().err


def test_verify_single_case():
    code, out = run("verify", "eq2.5", "--points", "3")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("PASS eq2.5: residual 0 terms (lhs ")
    assert "n=1:0/3 bad n=2:0/3 bad" in lines[0]
    assert lines[-1] == "1/1 cases pass"


def test_verify_glob_is_sorted_by_id():
    code, out = run("verify", "eq2.1?", "--n", "none")
    ids = [line.split()[1].rstrip(":") for line in out.splitlines() if line.startswith("PASS")]
    assert code == 0
    assert ids == sorted(ids) and "eq2.10" in ids


def test_verify_failure_exit(tmp_path, monkeypatch):
    (tmp_path / "bad.jet").write_text("@id bad\n@pde no\nf[a,a'] == f[a',a]\n")
    monkeypatch.setenv(CATALOG_ENV, str(tmp_path))
    code, out = run("verify", "bad", "--n", "1", "--points", "2")
    assert code == 1
    assert out.startswith("FAIL bad")
    assert "residual:" in out


def test_records_are_reproducible():
    args = ("verify", "eq2.6", "--points", "4", "--seed", "5", "--format", "records")
    first, second = run(*args), run(*args)
    assert first == second
    rec = json.loads(first[1])
    assert rec["id"] == "eq2.6"
    assert "seconds" not in rec


def test_set_p_reports_tail():
    code, out = run("verify", "eq2.5", "--set", "p=0", "--n", "none")
    assert code == 0
    assert "p-tail 0 terms" in out
    assert "eq2.5[p=0]" in out


@pytest.mark.parametrize(
    "argv",
    [
        ("verify", "no-such-case"),
        ("verify", "eq2.5", "--set", "n=2"),
        ("verify", "eq2.5", "--points", "0"),
        ("positivity", "--n-max", "0"),
        ("yamabe", "--n", "3"),
        ("yamabe", "--lambda", "0.1i", "--mu", "1"),
        ("frobnicate",),
    ],
)
def test_usage_errors(argv, capsys):
    assert run(*argv)[0] == 2
    capsys.readouterr()


def test_missing_catalog(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(CATALOG_ENV, str(tmp_path / "gone"))
    assert run("verify")[0] == 2
    capsys.readouterr()


def test_positivity_small():
    code, out = run("positivity", "--n-max", "3", "--samples", "9")
    assert code == 0
    assert out.splitlines()[-1] == "PASS"


def test_yamabe():
    code, out = run("yamabe", "--n", "1", "--lambda", "i", "--mu", "0", "--points", "50")
    assert code == 0
    assert "mean 2," in out
    assert out.splitlines()[-1] == "PASS"


def test_yamabe_mu_broadcast():
    code, out = run("yamabe", "--n", "2", "--lambda", "2i", "--mu", "1", "--points", "10")
    assert code == 0
    assert "mu=((1+0j), (1+0j))" in out


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "heisenjet", "normalize", "f[a',a]"], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0
    assert proc.stdout.strip() == "f[a,a'] - 2*n*I*f[0]"
