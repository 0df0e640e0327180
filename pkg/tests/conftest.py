"""Shared fixtures and the acceptance-suite reporter.

Tests in test_acceptance.py cover the release gate; the hook below prints
one PASS/FAIL line per criterion at the end of every run.
"""

import numpy as np
import pytest

from matcast.imaging import ForegroundMask, RasterImage

_acceptance_lines: list[tuple[str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if "test_acceptance" not in item.nodeid:
        return
    if report.when == "call":
        status = "PASS" if report.passed else "FAIL"
        _acceptance_lines.append((item.name, status))
    elif report.when == "setup" and report.skipped:
        _acceptance_lines.append((item.name, "SKIP"))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_lines:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, status in _acceptance_lines:
        terminalreporter.write_line(f"{status:<5} {name}")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_image(rng, height, width, channels=3) -> RasterImage:
    return RasterImage(rng.integers(0, 256, (height, width, channels), dtype=np.uint8))


def solid_image(height, width, color) -> RasterImage:
    return RasterImage(np.full((height, width, len(color)), color, dtype=np.uint8))


def rect_mask(height, width, y0, y1, x0, x1) -> ForegroundMask:
    data = np.zeros((height, width))
    data[y0:y1, x0:x1] = 1.0
    return ForegroundMask(data)


def random_blob_mask(rng, height, width) -> ForegroundMask:
    """A random nonempty rectangular blob with soft edges."""
    while True:
        y0, x0 = int(rng.integers(0, height)), int(rng.integers(0, width))
        y1, x1 = int(rng.integers(y0 + 1, height + 1)), int(rng.integers(x0 + 1, width + 1))
        data = np.zeros((height, width))
        data[y0:y1, x0:x1] = rng.uniform(0.6, 1.0, (y1 - y0, x1 - x0))
        mask = ForegroundMask(data)
        if not mask.is_empty():
            return mask
