import os

import numpy as np
import pytest

_ACCEPTANCE = {}


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def resolve_image(name):
    """Locate a canonical test image: $RWE_IMAGE_DIR first, then data/images/.

    Returns the path or None; callers skip loudly when None so a missing
    corpus is visible in the test report rather than silently green.
    """
    repo_dir = os.path.join(os.path.dirname(__file__), os.pardir, "data", "images")
    roots = [os.environ.get("RWE_IMAGE_DIR"), repo_dir]
    for root in roots:
        if not root:
            continue
        for ext in (".pgm", ".png", ".ppm"):
            path = os.path.join(root, name + ext)
            if os.path.isfile(path):
                return path
    return None


def record_criterion(num, status, detail):
    _ACCEPTANCE[num] = (status, detail)


def criterion_check(num, passed, detail):
    record_criterion(num, "PASS" if passed else "FAIL", detail)
    assert passed, "criterion %02d: %s" % (num, detail)


def criterion_skip(num, reason):
    record_criterion(num, "SKIP", reason)
    pytest.skip(reason)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        status, detail = _ACCEPTANCE[num]
        terminalreporter.write_line("criterion %02d %s  %s" % (num, status, detail))
