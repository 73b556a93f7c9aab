"""One PASS/FAIL line per acceptance criterion; run with ``pytest -s`` to see them."""

import pytest

from zkdecay import acceptance as A


@pytest.fixture(scope="module")
def out_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


CRITERIA = [
    ("weights", lambda out: A.criterion_1()),
    ("region parameters", lambda out: A.criterion_2()),
    ("suprema and volume", lambda out: A.criterion_3()),
    ("conservation", A.criterion_4),
    ("ground states", lambda out: A.criterion_5()),
    ("virial bound", A.criterion_6),
    ("decay accumulator", A.criterion_7),
    ("far-region identity", A.criterion_8),
    ("time sequence", lambda out: A.criterion_9()),
    ("determinism", A.criterion_10),
]


@pytest.mark.parametrize("label,check", CRITERIA, ids=[c[0] for c in CRITERIA])
def test_criterion(out_dir, label, check):
    result = check(out_dir)
    print()
    print(result.line())
    assert result.passed, result.line()
