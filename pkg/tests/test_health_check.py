# tests/test_health_check.py

from scripts import health_check


def test_dependencies_available():
    assert health_check.check_dependencies()


def test_schemas_load():
    assert health_check.check_schemas()


def test_salvetti_smoke():
    assert health_check.check_salvetti_smoke()


def test_missing_config_uses_defaults(tmp_path):
    assert health_check.check_config_file(tmp_path / "config")


def test_config_with_unknown_section(tmp_path):
    config = tmp_path / "config"
    config.write_text("[search]\ngroup_cap = 8\n\n[racing]\nvenue = tokyo\n", encoding="utf-8")
    assert not health_check.check_config_file(config)
    config.write_text("[search]\ngroup_cap = 8\n", encoding="utf-8")
    assert health_check.check_config_file(config)


def test_main_reports_failures(monkeypatch):
    monkeypatch.setattr(health_check, "CHECKS", [("ok", lambda: True), ("broken", lambda: 1 / 0)])
    assert health_check.main() == 1
    monkeypatch.setattr(health_check, "CHECKS", [("ok", lambda: True)])
    assert health_check.main() == 0
