import io

import numpy as np
import pytest

from psychfit import (
    BankItem,
    ItemBank,
    LikertTable,
    ResponseMatrix,
    column_standardize,
    parse_response_csv,
    parse_score_csv,
)
from psychfit.errors import (
    DegenerateColumn,
    DuplicateId,
    EmptyMatrix,
    MalformedCell,
    MissingCell,
    NonFinite,
    TooFewRows,
)


def bank_two_items():
    return ItemBank((
        BankItem("q1", "Know&Understand", "stem 1", ("A", "B", "C"), "B"),
        BankItem("q2", "Ethics", "stem 2", ("A", "B", "C", "D"), "C"),
    ))


class TestParseResponseCsv:
    def test_scored_direct_copy(self):
        m = parse_response_csv(io.StringIO("id,q1,q2\np1,1,0\np2,0,1"))
        assert m.cells.tolist() == [[1, 0], [0, 1]]
        assert m.examinee_ids == ("p1", "p2")
        assert m.item_ids == ("q1", "q2")

    def test_raw_key_match(self):
        m = parse_response_csv(io.StringIO("id,q1,q2\np1,B,A"), mode="raw", key=bank_two_items())
        assert m.cells.tolist() == [[1, 0]]

    def test_scored_cell_out_of_domain(self):
        with pytest.raises(MalformedCell):
            parse_response_csv(io.StringIO("id,q1,q2\np1,2,0"))

    def test_missing_cell_rejected(self):
        with pytest.raises(MissingCell):
            parse_response_csv(io.StringIO("id,q1,q2\np1,1,"))

    def test_duplicate_examinee_ids(self):
        with pytest.raises(DuplicateId):
            parse_response_csv(io.StringIO("id,q1,q2\np1,1,0\np1,0,1"))

    def test_empty_matrix(self):
        with pytest.raises(EmptyMatrix):
            parse_response_csv(io.StringIO("id,q1,q2\n"))

    def test_round_trip_canonical(self):
        text = "id,q1,q2,q3\np1,1,0,1\np2,0,1,1\n"
        m = parse_response_csv(io.StringIO(text))
        assert m.to_csv() == text

    def test_raw_equals_prescored(self):
        # scoring in raw mode matches scored mode on the key-applied matrix
        rng = np.random.default_rng(42)
        bank = bank_two_items()
        for _ in range(20):
            labels = [
                [rng.choice(it.options) for it in bank.items]
                for _ in range(5)
            ]
            raw_csv = "id,q1,q2\n" + "\n".join(
                f"p{i+1}," + ",".join(row) for i, row in enumerate(labels)
            )
            scored = [
                [1 if lab == it.key else 0 for lab, it in zip(row, bank.items)]
                for row in labels
            ]
            scored_csv = "id,q1,q2\n" + "\n".join(
                f"p{i+1}," + ",".join(map(str, row)) for i, row in enumerate(scored)
            )
            m_raw = parse_response_csv(io.StringIO(raw_csv), mode="raw", key=bank)
            m_scored = parse_response_csv(io.StringIO(scored_csv))
            assert (m_raw.cells == m_scored.cells).all()


class TestParseScoreCsv:
    def test_basic(self):
        t = parse_score_csv(io.StringIO("glat,vlat\n1,2\n3,4\n5,6"))
        assert set(t.columns) == {"glat", "vlat"}
        assert t.n == 3

    def test_too_few_rows(self):
        with pytest.raises(TooFewRows):
            parse_score_csv(io.StringIO("glat\n1\n2"))

    def test_non_finite(self):
        with pytest.raises(NonFinite):
            parse_score_csv(io.StringIO("glat\n1\nNaN\n2"))

    def test_non_numeric(self):
        with pytest.raises(MalformedCell):
            parse_score_csv(io.StringIO("glat\n1\nx\n2"))


class TestColumnStandardize:
    def test_symmetric_spacing(self):
        assert column_standardize([1, 2, 3]).tolist() == [-1.0, 0.0, 1.0]

    def test_constant_column(self):
        with pytest.raises(DegenerateColumn):
            column_standardize([5, 5, 5])

    def test_two_values(self):
        z = column_standardize([10, 20])
        assert z == pytest.approx([-0.7071, 0.7071], abs=1e-4)

    def test_moments(self):
        rng = np.random.default_rng(0)
        xs = rng.normal(3.0, 7.0, size=40)
        z = column_standardize(xs)
        assert abs(z.mean()) < 1e-12
        assert abs(z.std(ddof=1) - 1.0) < 1e-12

    def test_idempotent(self):
        rng = np.random.default_rng(1)
        xs = rng.normal(size=25)
        once = column_standardize(xs)
        twice = column_standardize(once)
        assert np.abs(once - twice).max() < 1e-12


class TestLikertTable:
    def test_bounds_enforced(self):
        with pytest.raises(MalformedCell):
            LikertTable(np.array([[1, 6]]), lo=1, hi=5)

    def test_ok(self):
        t = LikertTable(np.array([[1, 5], [3, 3]]))
        assert t.cells.shape == (2, 2)


class TestResponseMatrix:
    def test_invariants(self):
        with pytest.raises(MalformedCell):
            ResponseMatrix(("p1",), ("q1", "q2"), np.array([[0, 2]]))
        with pytest.raises(EmptyMatrix):
            ResponseMatrix(("p1",), ("q1",), np.array([[1]]))

    def test_select_items(self, small_matrix):
        sub = small_matrix.select_items(["q3", "q1"])
        assert sub.item_ids == ("q3", "q1")
        assert (sub.cells[:, 0] == small_matrix.cells[:, 2]).all()
