"""Tests for the package import hooks."""

import importlib
import sys
import types

import pytest

import rtmpc_il


@pytest.fixture
def restore_package(monkeypatch):
    """Re-import the package with the real environment after the test."""
    yield
    monkeypatch.undo()
    importlib.reload(rtmpc_il)


def _scitex_config_stub(loader):
    module = types.ModuleType("scitex_config")
    module.PriorityConfig = type("PriorityConfig", (), {"load_dotenv": staticmethod(loader)})
    return module


def test_import_without_scitex_config(monkeypatch, restore_package):
    monkeypatch.setitem(sys.modules, "scitex_config", None)

    module = importlib.reload(rtmpc_il)

    assert module.__version__


def test_dotenv_read_errors_are_not_swallowed(monkeypatch, restore_package):
    # Arrange
    def broken_loader(walk_up, stop_at):
        raise PermissionError("cannot read .env")

    monkeypatch.setitem(sys.modules, "scitex_config", _scitex_config_stub(broken_loader))
    # Act / Assert
    with pytest.raises(PermissionError, match=".env"):
        importlib.reload(rtmpc_il)


def test_dotenv_loader_walks_up_to_home(monkeypatch, restore_package):
    calls = []
    monkeypatch.setitem(
        sys.modules, "scitex_config", _scitex_config_stub(lambda **kw: calls.append(kw))
    )

    importlib.reload(rtmpc_il)

    assert calls and calls[0]["walk_up"] is True
