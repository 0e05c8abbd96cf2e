import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from roughbattery.tabular import (
    BEACHES,
    CATEGORICAL,
    CHICAGO_SCHEMA,
    NUMERIC,
    SYNTH_SCHEMA,
    TARGET,
    TIMESTAMP,
    ColumnSchema,
    CsvParseError,
    DataTable,
    DiscretizationSpec,
    EncoderMap,
    SchemaError,
    ScalerParams,
    decode_one_hot,
    discretize,
    drop_columns,
    impute_mean,
    load_csv,
    one_hot_encode,
    retype_categorical,
    standard_scale,
    synth_battery,
    synth_generate,
    validate_ranges,
)

HEADER = ",".join(c.name for c in CHICAGO_SCHEMA)
ROW = "Montrose Beach,08/30/2013 08:00:00 AM,20.3,1.18,0.891,0.08,3,9.4,MontroseBeach201308300800,MontroseBeach201308300800"


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def num_table(**cols):
    return DataTable(tuple(ColumnSchema(n) for n in cols), cols)


def cat_table(**cols):
    return DataTable(tuple(ColumnSchema(n, CATEGORICAL) for n in cols), cols)


def test_chicago_schema_has_ten_columns_and_two_time_tags():
    assert len(CHICAGO_SCHEMA) == 10
    kinds = [c.kind for c in CHICAGO_SCHEMA]
    assert kinds.count(NUMERIC) == 6
    assert kinds.count(CATEGORICAL) == 1
    assert [c.name for c in SYNTH_SCHEMA][-1] == TARGET


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(name="x", kind="date"),
        dict(name="x", soft_range=(2.0, 1.0)),
        dict(name="x", kind=CATEGORICAL, soft_range=(0.0, 1.0)),
    ],
)
def test_bad_column_schema(kwargs):
    with pytest.raises(SchemaError):
        ColumnSchema(**kwargs)


def test_duplicate_schema_names():
    with pytest.raises(SchemaError, match="duplicate"):
        DataTable((ColumnSchema("a"), ColumnSchema("a")), {"a": [1.0]})


def test_load_clean_rows(tmp_path):
    path = write(tmp_path, "\n".join([HEADER, ROW, ROW, ROW]) + "\n")
    table = load_csv(path, CHICAGO_SCHEMA)
    assert table.n_rows == 3
    assert table.missing_count() == 0
    assert len(table.names) == 10
    assert table.column("Water Temperature")[0] == 20.3


def test_empty_cell_is_missing(tmp_path):
    row = ROW.replace(",1.18,", ",,")
    table = load_csv(write(tmp_path, f"{HEADER}\n{row}\n"), CHICAGO_SCHEMA)
    assert table.missing_mask("Turbidity").tolist() == [True]
    assert table.missing_count() == 1


@pytest.mark.parametrize("cell", ["NA", "abc", "inf"])
def test_unparseable_numeric_is_missing(tmp_path, cell):
    row = ROW.replace(",1.18,", f",{cell},")
    table = load_csv(write(tmp_path, f"{HEADER}\n{row}\n"), CHICAGO_SCHEMA)
    assert math.isnan(table.column("Turbidity")[0])


def test_header_order_is_free(tmp_path):
    path = write(tmp_path, "b,a\n1,2\n")
    table = load_csv(path, (ColumnSchema("a"), ColumnSchema("b")))
    assert table.names == ("b", "a")
    assert table.column("a").tolist() == [2.0]


def test_missing_file():
    with pytest.raises(OSError):
        load_csv("/nonexistent/file.csv", CHICAGO_SCHEMA)


def test_header_names_unknown_column(tmp_path):
    path = write(tmp_path, HEADER.replace("Turbidity", "Turbid") + "\n")
    with pytest.raises(SchemaError, match="Turbid"):
        load_csv(path, CHICAGO_SCHEMA)


def test_header_lacks_schema_column(tmp_path):
    path = write(tmp_path, "a\n1\n")
    with pytest.raises(SchemaError, match="'b'"):
        load_csv(path, (ColumnSchema("a"), ColumnSchema("b")))


def test_wrong_field_count_reports_line(tmp_path):
    path = write(tmp_path, f"{HEADER}\n{ROW}\n{ROW},extra\n")
    with pytest.raises(CsvParseError) as info:
        load_csv(path, CHICAGO_SCHEMA)
    assert info.value.lineno == 3
    assert ":3:" in str(info.value)


def test_csv_roundtrip_is_exact(tmp_path):
    table = synth_generate(50, 3)
    path = write(tmp_path, table.to_csv())
    assert load_csv(path, SYNTH_SCHEMA).equals(table)


@pytest.mark.parametrize(
    "column, value, expected",
    [
        (TARGET, 13.3, 0),
        (TARGET, 14.0, 1),
        (TARGET, 4.8, 0),
        (TARGET, 4.79, 1),
        ("Transducer Depth", -0.082, 0),
    ],
)
def test_validate_ranges(column, value, expected):
    schema = tuple(c for c in CHICAGO_SCHEMA if c.name == column)
    table = DataTable(schema, {column: [value, np.nan]})
    report = validate_ranges(table)
    assert report.violations[column] == expected
    assert report.checked[column] == 1


def test_validate_does_not_mutate():
    table = synth_generate(20, 1)
    before = table.to_csv()
    validate_ranges(table)
    assert table.to_csv() == before


def test_drop_timestamp_columns(tmp_path):
    table = load_csv(write(tmp_path, f"{HEADER}\n{ROW}\n"), CHICAGO_SCHEMA)
    stamps = [c.name for c in table.schema if c.kind == TIMESTAMP]
    out = drop_columns(table, stamps)
    # the two time-tag columns plus the derived label and id columns
    assert len(out.names) == 10 - len(stamps)
    assert out.n_rows == 1


def test_drop_two_from_eight_feature_table():
    table = synth_generate(10, 0)
    assert len(table.names) == 8
    out = drop_columns(table, ["Measurement Timestamp", "Turbidity"])
    assert len(out.names) == 6


def test_drop_nothing_is_identity():
    table = synth_generate(10, 0)
    assert drop_columns(table, []).equals(table)


def test_drop_unknown_column():
    with pytest.raises(SchemaError, match="nope"):
        drop_columns(synth_generate(5, 0), ["nope"])


def test_impute_numeric_mean():
    out = impute_mean(num_table(x=[1.0, np.nan, 3.0]))
    assert out.column("x").tolist() == [1.0, 2.0, 3.0]


def test_impute_categorical_mode():
    out = impute_mean(cat_table(c=["A", "A", None, "B"]))
    assert out.column("c").tolist() == ["A", "A", "A", "B"]


def test_impute_mode_tie_breaks_lexicographically():
    out = impute_mean(cat_table(c=["b", "a", None, "b", "a"]))
    assert out.column("c")[2] == "a"


def test_impute_without_gaps_is_identity():
    table = num_table(x=[1.0, 2.0])
    assert impute_mean(table).equals(table)


def test_impute_all_missing_names_column():
    with pytest.raises(ValueError, match="'x'"):
        impute_mean(num_table(x=[np.nan, np.nan]))


def test_impute_with_external_fills():
    out = impute_mean(num_table(x=[np.nan, 5.0]), {"x": 10.0})
    assert out.column("x").tolist() == [10.0, 5.0]


@given(st.lists(st.one_of(st.none(), st.floats(-1e6, 1e6)), min_size=1, max_size=30).filter(
    lambda v: any(x is not None for x in v)
))
def test_impute_idempotent_and_preserves_present_cells(values):
    table = num_table(x=[np.nan if v is None else v for v in values])
    once = impute_mean(table)
    assert once.missing_count() == 0
    assert impute_mean(once).equals(once)
    for v, out in zip(values, once.column("x")):
        if v is not None:
            assert out == v


def test_one_hot_two_labels():
    out, enc = one_hot_encode(cat_table(b=["Montrose", "Calumet", "Montrose"]))
    assert out.names == ("b=Calumet", "b=Montrose")
    assert out.matrix().tolist() == [[0, 1], [1, 0], [0, 1]]
    assert enc.labels("b") == ("Calumet", "Montrose")


def test_one_hot_no_categorical_columns():
    table = num_table(x=[1.0, 2.0])
    out, enc = one_hot_encode(table)
    assert out.equals(table)
    assert enc.categories == ()


def test_one_hot_keeps_numeric_position():
    table = DataTable(
        (ColumnSchema("x"), ColumnSchema("c", CATEGORICAL), ColumnSchema("y")),
        {"x": [1.0, 2.0], "c": ["p", "q"], "y": [3.0, 4.0]},
    )
    out, _ = one_hot_encode(table)
    assert out.names == ("x", "c=p", "c=q", "y")


def test_one_hot_unseen_label_names_label_and_column():
    _, enc = one_hot_encode(cat_table(b=["A", "B"]))
    with pytest.raises(ValueError, match="'C'.*|.*'b'"):
        one_hot_encode(cat_table(b=["A", "C"]), enc)


def test_one_hot_ignore_gives_zero_row():
    _, enc = one_hot_encode(cat_table(b=["A", "B"]))
    out, _ = one_hot_encode(cat_table(b=["C", "B"]), enc, unknown="ignore")
    assert out.matrix().tolist() == [[0, 0], [0, 1]]


def test_one_hot_rejects_missing():
    with pytest.raises(ValueError, match="impute"):
        one_hot_encode(cat_table(b=["A", None]))


def test_encoded_synthetic_width():
    table = drop_columns(synth_generate(200, 5), ["Measurement Timestamp"])
    out, enc = one_hot_encode(table)
    assert len(out.names) == len(table.names) - 1 + len(BEACHES)
    assert enc.labels("Beach Name") == tuple(sorted(BEACHES))


labels = st.lists(st.sampled_from(["x", "y", "z", "w w", "1.5"]), min_size=1, max_size=20)


@given(labels, labels)
def test_one_hot_row_sum_and_roundtrip(a, b):
    n = min(len(a), len(b))
    table = cat_table(a=a[:n], b=b[:n])
    out, enc = one_hot_encode(table)
    for col, labs in enc.categories:
        assert np.all(out.matrix(EncoderMap.derived(col, labs)).sum(axis=1) == 1)
    assert decode_one_hot(out, enc).equals(table)
    again, _ = one_hot_encode(table, EncoderMap.from_dict(enc.to_dict()))
    assert again.equals(out)


def test_encoder_rejects_clashing_names():
    with pytest.raises(SchemaError):
        EncoderMap((("a=b", ("c",)), ("a", ("b=c",))))


def test_retype_categorical():
    out = retype_categorical(num_table(x=[1.0, 2.0], y=[3.0, 4.0]), ["x"])
    assert out.spec("x").kind == CATEGORICAL
    assert out.spec("y").kind == NUMERIC
    assert out.column("x").tolist() == ["1.0", "2.0"]


def test_scale_worked_column():
    out, params = standard_scale(num_table(x=[2.0, 4.0, 6.0]))
    assert out.column("x") == pytest.approx([-1.2247, 0.0, 1.2247], abs=1e-4)
    assert params.mean == (4.0,)
    assert params.std[0] == pytest.approx(math.sqrt(8 / 3))


def test_scale_constant_column():
    out, params = standard_scale(num_table(x=[5.0, 5.0, 5.0]))
    assert out.column("x").tolist() == [0.0, 0.0, 0.0]
    assert params.std == (0.0,)


def test_scale_param_mismatch():
    _, params = standard_scale(num_table(x=[1.0, 2.0]))
    with pytest.raises(SchemaError):
        standard_scale(num_table(y=[1.0, 2.0]), params)


def test_scale_rejects_categorical():
    with pytest.raises(SchemaError):
        standard_scale(cat_table(c=["a"]))


def test_scaler_params_roundtrip():
    _, params = standard_scale(num_table(x=[1.0, 2.0], y=[0.0, 9.0]))
    assert ScalerParams.from_dict(params.to_dict()) == params


finite = st.floats(-1e4, 1e4, allow_nan=False)


@given(st.lists(finite, min_size=2, max_size=40))
def test_scale_standardises_and_refits(values):
    table = num_table(x=values)
    out, params = standard_scale(table)
    col = out.column("x")
    if params.std[0] > 0:
        assert abs(col.mean()) < 1e-9
        assert abs(col.std() - 1) < 1e-9
    else:
        assert np.all(col == 0)
    applied, same = standard_scale(table, params)
    assert applied.equals(out)
    assert same == params


def test_discretize_median_split():
    table = num_table(x=np.arange(1.0, 11.0))
    out = discretize(table, DiscretizationSpec(2, 2))
    assert out.column("x").tolist() == [0] * 5 + [1] * 5


def test_discretize_ties_go_low():
    # cut at sorted[1] == 2; both 2s stay in bin 0
    out = discretize(num_table(x=[1.0, 2.0, 2.0, 3.0, 4.0]), DiscretizationSpec(2, 2))
    assert out.column("x").tolist() == [0, 0, 0, 1, 1]


def test_discretize_binary_column():
    out = discretize(num_table(x=[0.0, 1.0, 1.0, 0.0]), DiscretizationSpec(10, 5))
    assert sorted(set(out.column("x"))) == [0, 1]


def test_discretize_constant_column():
    out = discretize(num_table(x=[3.0] * 6))
    assert out.column("x").tolist() == [0] * 6


def test_discretize_decision_uses_its_own_bins():
    table = num_table(x=np.arange(20.0), y=np.arange(20.0))
    out = discretize(table, DiscretizationSpec(10, 4), decision="y")
    assert len(set(out.column("x"))) == 10
    assert len(set(out.column("y"))) == 4


def test_discretize_empty():
    with pytest.raises(ValueError):
        discretize(num_table(x=[]))


@pytest.mark.parametrize("bins", [1, 0])
def test_spec_needs_two_bins(bins):
    with pytest.raises(ValueError):
        DiscretizationSpec(bins, 5)


@given(st.integers(2, 60), st.integers(2, 12), st.randoms(use_true_random=False))
def test_discretize_equal_occupancy(n, bins, rnd):
    bins = min(bins, n)
    values = list(range(n))
    rnd.shuffle(values)
    out = discretize(num_table(x=np.array(values, dtype=float)), DiscretizationSpec(bins, 2))
    counts = np.bincount(out.column("x").astype(int))
    assert len(counts) == bins
    assert counts.max() - counts.min() <= 1


@given(st.lists(st.integers(0, 5), min_size=1, max_size=40))
def test_discretize_labels_contiguous_and_monotone(values):
    x = np.array(values, dtype=float)
    out = discretize(num_table(x=x), DiscretizationSpec(3, 2)).column("x")
    assert sorted(set(out)) == list(range(len(set(out))))
    order = np.argsort(x, kind="stable")
    assert np.all(np.diff(out[order]) >= 0)


def test_synth_deterministic_bytes():
    assert synth_generate(100, 7).to_csv() == synth_generate(100, 7).to_csv()
    assert synth_generate(100, 7).to_csv() != synth_generate(100, 8).to_csv()


def test_synth_within_ranges():
    table = synth_generate(2000, 11)
    assert table.names == tuple(c.name for c in SYNTH_SCHEMA)
    assert validate_ranges(table).total == 0
    temp = table.column("Water Temperature")
    assert temp.min() >= 9.1 and temp.max() <= 31.5


def test_synth_single_row():
    table = synth_generate(1, 123)
    assert table.n_rows == 1
    assert table.missing_count() == 0


def test_synth_target_follows_planted_function():
    table = synth_generate(300, 2)
    rows = zip(table.column("Beach Name"), table.column("Water Temperature"), table.column("Wave Height"))
    clean = np.array([synth_battery(*r) for r in rows])
    resid = table.column(TARGET) - clean
    # output is rounded to millivolts
    assert np.all(np.abs(resid) <= 0.25 + 5e-4)


def test_synth_noiseless_is_exact():
    table = synth_generate(50, 2, noise=0.0)
    rows = zip(table.column("Beach Name"), table.column("Water Temperature"), table.column("Wave Height"))
    assert table.column(TARGET) == pytest.approx([synth_battery(*r) for r in rows], abs=5e-4)


def test_table_is_read_only():
    table = num_table(x=[1.0])
    with pytest.raises(ValueError):
        table.column("x")[0] = 2.0
