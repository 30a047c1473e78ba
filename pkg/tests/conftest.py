import sys
from pathlib import Path

# make sibling test modules importable (shared helpers in test_pipeline)
sys.path.insert(0, str(Path(__file__).parent))


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "full: full-fidelity benchmark replays (minutes of compute)"
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("-m"):
        return
    import pytest

    skip_full = pytest.mark.skip(reason="full-fidelity run; enable with -m full")
    for item in items:
        if "full" in item.keywords:
            item.add_marker(skip_full)
