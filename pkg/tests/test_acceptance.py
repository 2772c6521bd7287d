"""The ten acceptance criteria, each at its stated tolerance and time budget.

Every criterion prints one ``[PASS]``/``[FAIL]`` line, even under capture.
"""

import json

import pytest

from gmech.verify import CRITERIA


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    result = CRITERIA[number]()
    with capsys.disabled():
        print(f"\n{result.line()}")
    assert result.passed, json.dumps(result.to_json()["details"], default=str)[:2000]
