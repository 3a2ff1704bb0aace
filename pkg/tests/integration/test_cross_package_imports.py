"""Runtime cross-package import gate.

This test imports every cross-package module that rtmpc-il references
in its source tree. Three outcomes:

- Module installed AND import succeeds: the test PASSES.
- Module installed BUT import fails (e.g. internal rename): the test FAILS loudly.
- Module NOT installed: the test is SKIPPED via `pytest.importorskip`.
"""

import pytest

CROSS_PACKAGE_IMPORTS = [
    "scitex_config",
    "scitex_dev",
    "scitex_dev._cli._completion",
]


@pytest.mark.parametrize("module_path", CROSS_PACKAGE_IMPORTS)
def test_cross_package_import_resolves_module(module_path: str) -> None:
    """Each cross-package import resolves cleanly when the peer is installed."""
    # Arrange
    name = module_path
    # Act
    mod = pytest.importorskip(name)
    # Assert
    assert mod.__name__ == name or mod.__name__.startswith(name.split(".", 1)[0])
