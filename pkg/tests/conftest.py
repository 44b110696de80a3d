from __future__ import annotations

import pytest

from emtk._data import read_data_bytes
from emtk.corpus import parse_corpus


@pytest.fixture(scope="session")
def polarity_sample():
    return parse_corpus(read_data_bytes("polarity", "gold_sample.csv"), "c", has_label=True)


@pytest.fixture(scope="session")
def emotion_sample():
    return parse_corpus(read_data_bytes("emotions", "sample.csv"), "sc", has_label=True)


def pytest_report_header(config):
    from emtk import _kernel

    return f"emtk compiled kernel available: {_kernel.compiled_available()}"
