import pytest

from frakgeo.core.config import Settings


def test_settings_fields():
    assert "env" not in Settings.model_fields
    s = Settings()
    assert s.boundary_margin >= 0
    assert s.fractional_tol > 0


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("FRAKGEO_GRID_SCHEME", "l1")
    monkeypatch.setenv("FRAKGEO_LOG_LEVEL", "debug")
    monkeypatch.setenv("FRAKGEO_BOUNDARY_MARGIN", "3")
    s = Settings()
    assert s.grid_scheme == "l1"
    assert s.log_level == "DEBUG"
    assert s.boundary_margin == 3


@pytest.mark.parametrize(
    "name, value",
    [("GRID_SCHEME", "trapezoid"), ("LOG_LEVEL", "chatty"), ("GRID_TOL", "0"), ("BOUNDARY_MARGIN", "-1")],
)
def test_invalid_environment_values(monkeypatch, name, value):
    monkeypatch.setenv(f"FRAKGEO_{name}", value)
    with pytest.raises(ValueError):
        Settings()
