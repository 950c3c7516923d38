"""Arguments for pytest"""
import pytest


def pytest_addoption(parser) -> None:  # type: ignore
    """arguments for pytest"""
    parser.addoption("--run-slow", action="store_true", default=False, help="run acceptance-scale studies")


def pytest_configure(config) -> None:  # type: ignore
    config.addinivalue_line("markers", "slow: acceptance-scale study, runs with --run-slow")


def pytest_collection_modifyitems(config, items) -> None:  # type: ignore
    """
    Skip the slow studies unless --run-slow is given.
    """
    if config.getoption("--run-slow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)
