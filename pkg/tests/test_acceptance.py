"""Acceptance gate: eleven criteria, one test each.

Each test prints a PASS/FAIL line (visible with pytest -s) and asserts the
criterion's "passed" flag.  Tolerances are fixed inside lacelab.acceptance:
  1  closed-form nn transform vs support sum, 1e-14 absolute
  2  four-step return probability vs 3/8, 1e-12 absolute
  3  beta k-space vs x-space, 1e-9 absolute, plus divergence flags
  4  d*beta non-increasing over d in 9..13; L^5*beta max/min <= 3
  5  SAW masses equal exact rational counts; d=1 chi limit within 1e-6
  6  lace coefficients reconstruct the series exactly (rational arithmetic)
  7  MC chi within 4 standard errors of exact for >= 48 of 50 seeds;
     derivative identity to 1e-12; tree-graph bound
  8  two-site identity to 1e-12; MC chi within 4 se for >= 48 of 50 seeds;
     single-step bound pointwise on exact instances
  9  bootstrap base point exact; free-model infrared deviation <= 1e-12
 10  zero violations across all randomized inequality suites
 11  cluster-tail sandwich holds on exact size laws, 1e-12 slack
"""

import pytest

from lacelab import acceptance


def _run(num: int) -> None:
    entry = next(c for c in acceptance.CRITERIA if c[0] == num)
    _, name, fn = entry
    res = fn()
    print("%s criterion %2d: %s" % ("PASS" if res["passed"] else "FAIL",
                                    num, name))
    assert res["passed"], res


def test_criterion_01_fourier_closed_form():
    _run(1)


def test_criterion_02_return_probability():
    _run(2)


def test_criterion_03_beta_consistency():
    _run(3)


def test_criterion_04_beta_scaling():
    _run(4)


def test_criterion_05_saw_counts():
    _run(5)


def test_criterion_06_lace_reconstruction():
    _run(6)


def test_criterion_07_percolation():
    _run(7)


def test_criterion_08_ising():
    _run(8)


def test_criterion_09_bootstrap_base():
    _run(9)


def test_criterion_10_inequalities():
    _run(10)


def test_criterion_11_magnetization_sandwich():
    _run(11)


def test_run_all_reports_every_criterion(capsys):
    summary = acceptance.run_all(verbose=True)
    out = capsys.readouterr().out
    assert summary["passed"]
    assert len(summary["results"]) == 11
    for num in range(1, 12):
        assert ("criterion %2d:" % num) in out
