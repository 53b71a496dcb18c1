"""
Tests for ζ(s) and the Stieltjes constants.
"""
import mpmath
import pytest

from piltz_lab.errors import DomainError
from piltz_lab.numerics.zeta import MAX_STIELTJES_INDEX, stieltjes, stieltjes_mpf, zeta_em


@pytest.mark.parametrize("s", [1.5, 2, 3, 4.25, 10])
def test_zeta_matches_mpmath(s):
    with mpmath.workdps(40):
        assert abs(zeta_em(s) - mpmath.zeta(s)) < mpmath.mpf(10) ** -30


def test_zeta_two():
    with mpmath.workdps(40):
        assert abs(zeta_em(2) - mpmath.pi**2 / 6) < mpmath.mpf(10) ** -30


def test_zeta_rejects_pole():
    with pytest.raises(DomainError):
        zeta_em(1)


@pytest.mark.parametrize("n", range(MAX_STIELTJES_INDEX + 1))
def test_stieltjes_matches_mpmath(n):
    with mpmath.workdps(40):
        reference = mpmath.stieltjes(n)
        assert abs(stieltjes_mpf(n) - reference) <= mpmath.mpf(10) ** -30 * max(1, abs(reference))


def test_euler_constant_to_thirty_digits():
    gamma0 = stieltjes(0)
    assert gamma0.to_decimal(30).startswith("0.577215664901532860606512090082")
    assert float(gamma0) == float(mpmath.euler)


def test_stieltjes_rounding_digits():
    assert float(stieltjes(1, digits=5)) == pytest.approx(-0.072816, rel=1e-15)


@pytest.mark.parametrize("n, digits", [(-1, 30), (MAX_STIELTJES_INDEX + 1, 30), (0, 0), (0, 31)])
def test_stieltjes_domain(n, digits):
    with pytest.raises(DomainError):
        stieltjes(n, digits)
