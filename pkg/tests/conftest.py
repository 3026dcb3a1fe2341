import pytest


def pytest_addoption(parser):
    parser.addoption("--slow", action="store_true", default=False,
                     help="also run the long (multi-minute to hour) tier")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--slow"):
        return
    skip = pytest.mark.skip(reason="slow tier; enable with --slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)
