"""Acceptance suite at full resolution; one pass/fail line per criterion."""

import pytest

from fractal_steiner import acceptance as acc


@pytest.fixture(scope="module")
def ctx():
    return acc.Context(acc.SuiteConfig())


@pytest.mark.parametrize("n", sorted(acc.CRITERIA))
def test_criterion(ctx, n, capsys):
    res = acc.run_criterion(n, ctx)
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, res.summary
