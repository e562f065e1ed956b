"""Acceptance criteria 1 to 10, one PASS/FAIL line each (run with -s to see them)."""

import pytest

from parabren import checks

CRITERIA = [
    pytest.param(checks.check_comptype, id="01-comptype-enumeration"),
    pytest.param(checks.check_oracle, id="02-gleaning-oracle"),
    pytest.param(checks.check_abel, id="03-abel-residuals"),
    pytest.param(checks.check_horn, id="04-horn-equivariance"),
    pytest.param(checks.check_zexpz_basin, id="05-zexpz-immediate-basin"),
    pytest.param(checks.check_dyn2, id="06-zexpz-renormalization"),
    pytest.param(checks.check_pearls, id="07-pearl-census", marks=pytest.mark.slow),
    pytest.param(checks.check_gleaning, id="08-gleaning-on-A-component", marks=pytest.mark.slow),
    pytest.param(checks.check_virtual, id="09-virtual-basins", marks=pytest.mark.slow),
    pytest.param(checks.check_determinism, id="10-determinism", marks=pytest.mark.slow),
]


@pytest.mark.parametrize("check", CRITERIA)
def test_criterion(check, tmp_path, monkeypatch):
    monkeypatch.setenv("PARABREN_CACHE", str(tmp_path / "cache"))
    result = check()
    print("\n" + result.line())
    assert result.passed, result.details
