import json

import numpy as np
import pytest

from biflab.census import branch_census, contraction_window, measured_exponent
from biflab.errors import TreeBudgetExceeded
from biflab.sphere import polynomial_map, power_map


@pytest.fixture(scope="module")
def square():
    return branch_census(power_map(2), 1.0, 0.2, 12)


def test_identity_branch(square):
    assert square.counts[0] == 1


def test_growth_rate_of_power_map(square):
    assert square.counts[4:].min() > 0
    s, _ = square.slope(4, 12)
    assert abs(s - np.log(2)) < 0.15 * np.log(2)


def test_growth_rate_of_chebyshev():
    # 2 is postcritical for z^2 - 2; the tree is rooted nearby instead
    c = branch_census(polynomial_map([-2, 0, 1]), 2.0, 0.2, 12)
    assert c.root != 2
    s, _ = c.slope(4, 12)
    assert abs(s - np.log(2)) < 0.15 * np.log(2)


def test_power_map_branches_contract_at_rate_two(square):
    # every inverse branch of z^2 near the unit circle contracts by 1/2 per step
    for n, m, lo, hi in square.contraction_stats():
        assert lo == pytest.approx(0.5, abs=0.02) and hi == pytest.approx(0.5, abs=0.02)


def test_contraction_window_power_map(square):
    K, within = contraction_window(square, np.log(2))
    assert K == pytest.approx(1, abs=0.05)
    assert all(2 * w >= m for (n, w), m in zip(within, square.counts[4:]))


def test_budget_is_enforced():
    with pytest.raises(TreeBudgetExceeded):
        branch_census(power_map(3), 1.0, 0.2, 16)


def test_ball_without_mass_is_refused():
    with pytest.raises(ValueError):
        branch_census(power_map(2), 0.0, 0.2, 4)


def test_json_export(square):
    data = json.loads(json.dumps(square.to_json()))
    assert data["counts"][0] == [0, 1]
    assert data["slope"] == pytest.approx(square.slope()[0])


def test_measured_exponent():
    assert measured_exponent(power_map(2), 10000) == pytest.approx(np.log(2))
