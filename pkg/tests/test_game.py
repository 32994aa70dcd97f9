import itertools

import pytest
from hypothesis import given, strategies as st

from ipdmoran.game import C, D, DEFAULT_MATRIX, Action, PayoffConstraintError, PayoffMatrix, score_round, validate_matrix


def test_action_order_and_flip():
    assert list(Action) == [D, C]
    assert D < C
    assert C.flip() is D and D.flip() is C
    assert Action.from_char("c") is C


def test_validate_default():
    assert validate_matrix(PayoffMatrix(3, 0, 5, 1)) == PayoffMatrix(3, 0, 5, 1)


@pytest.mark.parametrize(
    "m, message",
    [
        (PayoffMatrix(3, 0, 7, 1), "2R > T + S violated"),
        (PayoffMatrix(1, 0, 5, 3), "T > R > P > S violated"),
    ],
)
def test_validate_rejects(m, message):
    with pytest.raises(PayoffConstraintError, match=message.replace("+", r"\+")):
        validate_matrix(m)


def test_validate_rejects_non_finite():
    with pytest.raises(PayoffConstraintError):
        validate_matrix(PayoffMatrix(3, 0, float("inf"), 1))


def test_score_round_cells():
    assert score_round(C, C) == (3, 3)
    assert score_round(D, C) == (5, 0)
    assert score_round(C, D) == (0, 5)
    assert score_round(D, D) == (1, 1)


def test_parse_matrix():
    assert PayoffMatrix.parse("3,0,5,1") == DEFAULT_MATRIX
    assert PayoffMatrix.parse("3.5, 0, 5, 1").R == 3.5
    with pytest.raises(ValueError):
        PayoffMatrix.parse("3,0,5")


pd_matrices = st.tuples(
    st.floats(-10, 10), st.floats(0.01, 5), st.floats(0.01, 5), st.floats(0.01, 5)
).map(lambda t: PayoffMatrix(R=t[0] + t[1] + t[2], S=t[0], T=t[0] + t[1] + t[2] + t[3], P=t[0] + t[1]))


@given(pd_matrices)
def test_swap_symmetry_and_entries(m):
    try:
        validate_matrix(m)
    except PayoffConstraintError:
        return
    for a, b in itertools.product(Action, repeat=2):
        x, y = score_round(a, b, m)
        assert (y, x) == score_round(b, a, m)
        assert {x, y} <= {m.R, m.S, m.T, m.P}
    mean_alternation = (sum(score_round(C, D, m)) + sum(score_round(D, C, m))) / 2
    assert sum(score_round(C, C, m)) > mean_alternation
