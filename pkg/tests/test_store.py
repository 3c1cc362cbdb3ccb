from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tablezoomer.errors import EmptyTableError, MalformedTableError
from tablezoomer.store import (
    Column,
    DataType,
    column_stats,
    infer_column_type,
    is_null,
    load_table,
    naive_column_stats,
    parse_number,
)

from helpers import write_csv


class TestLoadTable:
    def test_one_cell_numeric(self, tmp_path):
        path = write_csv(tmp_path / "t.csv", ["a"], [["1"]])
        table = load_table(path)
        assert table.row_count == 1
        assert table.columns[0].name == "a"
        assert table.columns[0].dtype is DataType.NUMERIC
        assert table.columns[0].cells == [1]

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_table(tmp_path / "nope.csv")

    def test_empty_table(self, tmp_path):
        (tmp_path / "t.csv").write_text("a,b\n", encoding="utf-8")
        with pytest.raises(EmptyTableError):
            load_table(tmp_path / "t.csv")

    def test_ragged_beyond_tolerance(self, tmp_path):
        (tmp_path / "t.csv").write_text("a,b\n1,2\n3\n", encoding="utf-8")
        with pytest.raises(MalformedTableError):
            load_table(tmp_path / "t.csv")

    def test_ragged_within_tolerance_padded(self, tmp_path):
        (tmp_path / "t.csv").write_text("a,b\n1,2\n3\n", encoding="utf-8")
        table = load_table(tmp_path / "t.csv", ragged_tolerance=1)
        assert table.row_count == 2
        assert table.column("b").cells[1] is None

    def test_duplicate_headers_deduplicated(self, tmp_path):
        path = write_csv(tmp_path / "t.csv", ["x", "x", " x "], [["1", "2", "3"]])
        table = load_table(path)
        assert table.column_names == ["x", "x_2", "x_3"]

    def test_tsv_sniffing(self, tmp_path):
        (tmp_path / "t.tsv").write_text("a\tb\n1\tx\n", encoding="utf-8")
        table = load_table(tmp_path / "t.tsv")
        assert table.column_names == ["a", "b"]
        assert table.column("b").cells == ["x"]

    def test_jsonl_records(self, tmp_path):
        lines = [
            json.dumps({"a": 1, "b": "x"}),
            json.dumps({"a": 2.5, "b": None, "c": True}),
        ]
        (tmp_path / "t.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")
        table = load_table(tmp_path / "t.jsonl")
        assert table.column_names == ["a", "b", "c"]
        assert table.column("a").cells == [1, 2.5]
        assert table.column("c").cells == [None, True]

    def test_jsonl_nested_values_stringified(self, tmp_path):
        (tmp_path / "t.jsonl").write_text(
            json.dumps({"ratings": {"overall": 4}}) + "\n", encoding="utf-8"
        )
        table = load_table(tmp_path / "t.jsonl")
        assert table.column("ratings").cells == ['{"overall": 4}']

    def test_large_fixture_roundtrip(self, tmp_path):
        rng = random.Random(13)
        rows = [[str(i), f"{rng.uniform(0, 9):.4f}", f"tag{rng.randrange(8)}"] for i in range(10_000)]
        path = write_csv(tmp_path / "big.csv", ["id", "value", "tag"], rows)
        table_a = load_table(path)
        table_b = load_table(path)
        assert table_a.row_count == 10_000
        assert table_a == table_b  # same bytes in, same Table out

    def test_format_hint_forces_delimiter(self, tmp_path):
        # commas inside a tab-separated file must not confuse a forced hint
        (tmp_path / "t.txt").write_text("a\tb\nhello, world\t1\n", encoding="utf-8")
        table = load_table(tmp_path / "t.txt", format_hint="tsv")
        assert table.column("a").cells == ["hello, world"]


class TestInferColumnType:
    @pytest.mark.parametrize(
        "cells,expected",
        [
            (["1", "2", "3"], DataType.NUMERIC),
            (["1.5", "-2", "3e2"], DataType.NUMERIC),
            (["a", "b", "a"], DataType.CATEGORICAL),
            (["true", "false", "true"], DataType.BOOLEAN),
            (["yes", "no"], DataType.BOOLEAN),
            (["0", "1"], DataType.NUMERIC),  # numeric rule fires first
            (["2021-01-05", "2020-12-31"], DataType.DATETIME),
            (["2021-01-05T10:00:00Z", "2021-01-05"], DataType.DATETIME),
            ([None, None], DataType.TEXTUAL),
            (["nan", "inf"], DataType.CATEGORICAL),  # not parsed as numbers
        ],
    )
    def test_rule_table(self, cells, expected):
        assert infer_column_type(cells) is expected

    def test_high_cardinality_text(self):
        cells = [f"unique free text {i}" for i in range(1000)]
        distinct = len(set(cells))
        assert distinct > max(20, 0.05 * len(cells))  # oracle: rule threshold
        assert infer_column_type(cells) is DataType.TEXTUAL

    def test_categorical_five_percent_rule(self):
        # 30 distinct over 1000 rows: above the floor of 20, under 5% = 50
        cells = [f"cat{i % 30}" for i in range(1000)]
        assert infer_column_type(cells) is DataType.CATEGORICAL


class TestColumnStats:
    def test_numeric_symmetric(self):
        col = Column("n", DataType.NUMERIC, [1, 2, 3])
        stats = column_stats(col)
        assert (stats.minimum, stats.maximum, stats.mean, stats.median) == (1, 3, 2, 2)

    def test_categorical_counts(self):
        col = Column("c", DataType.CATEGORICAL, ["x", "x", "y"])
        stats = column_stats(col)
        assert stats.distinct_count == 2
        assert stats.top_items == [("x", 2), ("y", 1)]

    def test_nulls_ignored(self):
        col = Column("n", DataType.NUMERIC, [1, None, 3, 5, None])
        stats = column_stats(col)
        assert stats.mean == 3
        assert stats.null_count == 2
        assert stats.non_null_count == 3

    def test_even_median_is_mean_of_central_pair(self):
        col = Column("n", DataType.NUMERIC, [1, 2, 3, 10])
        assert column_stats(col).median == 2.5

    def test_all_null_column(self):
        col = Column("n", DataType.TEXTUAL, [None, ""])
        stats = column_stats(col)
        assert stats.non_null_count == 0
        assert stats.minimum is None

    def test_top_items_tie_broken_by_first_appearance(self):
        col = Column("c", DataType.CATEGORICAL, ["b", "a", "b", "a", "c"])
        stats = column_stats(col)
        assert stats.top_items == [("b", 2), ("a", 2), ("c", 1)]

    def test_datetime_stats_ordered(self):
        col = Column("d", DataType.DATETIME, ["2021-01-03", "2021-01-01", "2021-01-02"])
        stats = column_stats(col)
        assert stats.minimum == "2021-01-01"
        assert stats.maximum == "2021-01-03"
        assert stats.median.startswith("2021-01-02")

    @given(
        st.lists(
            st.one_of(st.none(), st.integers(-1000, 1000), st.floats(-1e6, 1e6)),
            min_size=0,
            max_size=1000,
        )
    )
    @settings(max_examples=60, deadline=None)
    def test_numeric_agrees_with_naive_reference(self, cells):
        col = Column("n", DataType.NUMERIC, cells)
        got, want = column_stats(col), naive_column_stats(col)
        assert got.null_count == want.null_count
        assert got.non_null_count == want.non_null_count
        if want.non_null_count:
            assert got.minimum == want.minimum
            assert got.maximum == want.maximum
            assert got.mean == pytest.approx(want.mean)
            assert got.median == pytest.approx(want.median)

    @given(st.lists(st.sampled_from(["a", "b", "c", None, "d"]), max_size=200))
    @settings(max_examples=60, deadline=None)
    def test_categorical_agrees_with_naive_reference(self, cells):
        col = Column("c", DataType.CATEGORICAL, cells)
        got, want = column_stats(col), naive_column_stats(col)
        assert got.distinct_count == want.distinct_count
        assert got.top_items == want.top_items

    def test_min_le_median_le_max_and_null_identity(self, tmp_path):
        rng = random.Random(5)
        rows = [[f"{rng.uniform(-5, 5):.3f}" if rng.random() > 0.2 else ""] for _ in range(500)]
        path = write_csv(tmp_path / "t.csv", ["v"], rows)
        table = load_table(path)
        stats = column_stats(table.columns[0])
        assert stats.minimum <= stats.median <= stats.maximum
        assert stats.null_count + stats.non_null_count == table.row_count

    def test_table_wide_null_identity(self, tmp_path):
        path = write_csv(tmp_path / "t.csv", ["a", "b"], [["1", ""], ["", "x"], ["3", "y"]])
        table = load_table(path)
        total = sum(
            column_stats(c).null_count + column_stats(c).non_null_count for c in table.columns
        )
        assert total == table.row_count * len(table.columns)


class TestParseHelpers:
    def test_parse_number_rejects_nan_inf_and_bool(self):
        assert parse_number("nan") is None
        assert parse_number("inf") is None
        assert parse_number(True) is None
        assert parse_number("1_000") is None

    def test_is_null_on_whitespace(self):
        assert is_null("   ")
        assert not is_null("0")
