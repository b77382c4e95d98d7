import numpy as np
import pytest

from matk import rng
from matk.datasets import HashTokenizer, MemeRecord, generate_synthetic_dataset
from matk.preprocess import FeatureCacheEntry, grid_boxes


@pytest.fixture(autouse=True)
def _seeded():
    rng.seed_everything(0)
    yield


@pytest.fixture
def tokenizer():
    return HashTokenizer()


@pytest.fixture(scope="session")
def synthetic_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("synthetic") / "data"
    generate_synthetic_dataset(64, 3, root)
    return root


class RandomFeatures:
    """Deterministic region features for any id."""

    def __init__(self, n_regions=4, d=64):
        self.n, self.d = n_regions, d

    def get(self, id):
        g = np.random.default_rng(sum(map(ord, id)))
        return FeatureCacheEntry(id, "regions", g.random((self.n, self.d)).astype(np.float32),
                                 grid_boxes(self.n).astype(np.float32))


@pytest.fixture
def features():
    return RandomFeatures()


@pytest.fixture
def records():
    return [
        MemeRecord("a", "img/a.png", "look at this kaboom now", {"hateful": 1}),
        MemeRecord("b", "img/b.png", "hi there", {"hateful": 0}),
    ]


_VERDICTS = []


@pytest.fixture
def verdict():
    """Record and print one PASS/FAIL line for an acceptance criterion, then assert it."""

    def check(number, title, ok, detail, elapsed, limit):
        in_time = elapsed < limit
        status = "PASS" if ok and in_time else "FAIL"
        line = f"[{status}] criterion {number}: {title}: {detail} ({elapsed:.2f} s, limit {limit} s)"
        _VERDICTS.append(line)
        print(line)
        assert ok, detail
        assert in_time, f"took {elapsed:.2f} s, limit {limit} s"

    return check


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_VERDICTS, key=lambda l: int(l.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
