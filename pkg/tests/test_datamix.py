"""Deterministic subsampling, mixing, JSONL round trips."""

from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mergeforge.datamix import (
    RecordDataset,
    mix_datasets,
    read_jsonl,
    subsample,
    write_jsonl,
)
from mergeforge.errors import InvalidRatio


def dataset(n, prefix=b"rec"):
    return RecordDataset([prefix + b"-%d" % i for i in range(n)], source_id="synthetic")


def test_subsample_full_ratio_is_identity():
    ds = dataset(10)
    out = subsample(ds, 1.0, seed=5)
    assert out.records == ds.records


def test_subsample_floor_count():
    out = subsample(dataset(10), 0.25, seed=1)
    assert out.count == 2


def test_subsample_decimal_exact_floor():
    # floor at the written decimal: 0.7 of 10 is 7, not 6 through float noise
    assert subsample(dataset(10), 0.7, seed=1).count == 7


def test_subsample_respects_table_scale():
    out = subsample(dataset(268_000), 0.25, seed=9)
    assert out.count == 67_000


def test_subsample_preserves_relative_order():
    ds = dataset(50)
    out = subsample(ds, 0.5, seed=3)
    positions = [ds.records.index(r) for r in out.records]
    assert positions == sorted(positions)


def test_subsample_deterministic_and_seed_sensitive():
    ds = dataset(200)
    assert subsample(ds, 0.5, seed=7).records == subsample(ds, 0.5, seed=7).records
    assert subsample(ds, 0.5, seed=7).records != subsample(ds, 0.5, seed=8).records


def test_subsample_output_is_subset():
    ds = dataset(100)
    out = subsample(ds, 0.33, seed=2)
    assert set(out.records) <= set(ds.records)


def test_subsample_invalid_ratio():
    for ratio in (0.0, -0.5, 1.5):
        with pytest.raises(InvalidRatio):
            subsample(dataset(5), ratio, seed=0)


def test_mix_single_part_is_permutation():
    ds = dataset(64)
    out = mix_datasets([ds], seed=11)
    assert Counter(out.records) == Counter(ds.records)
    assert out.records != ds.records  # shuffled with overwhelming probability


def test_mix_count_additivity():
    out = mix_datasets([dataset(3, b"a"), dataset(2, b"b")], seed=0)
    assert out.count == 5


def test_mix_conserves_multiset_with_duplicates():
    a = RecordDataset([b"x", b"x", b"y"])
    b = RecordDataset([b"y", b"z"])
    out = mix_datasets([a, b], seed=4)
    assert Counter(out.records) == Counter([b"x", b"x", b"y", b"y", b"z"])


def test_mix_requires_a_part():
    with pytest.raises(ValueError):
        mix_datasets([], seed=0)


def test_mix_deterministic_bytes(tmp_path):
    parts = [dataset(100, b"a"), dataset(50, b"b")]
    p1, p2 = tmp_path / "m1.jsonl", tmp_path / "m2.jsonl"
    write_jsonl(mix_datasets(parts, seed=17), p1)
    write_jsonl(mix_datasets(parts, seed=17), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_subsample_of_mix_composition():
    parts = [dataset(30, b"a"), dataset(20, b"b")]
    mixed = mix_datasets(parts, seed=2)
    assert subsample(mixed, 1.0, seed=99).records == mixed.records


def test_jsonl_round_trip(tmp_path):
    records = [b'{"text": "hello"}', b'{"text": "\\u00e9"}', b"", b"plain line"]
    ds = RecordDataset(records)
    path = tmp_path / "data.jsonl"
    write_jsonl(ds, path)
    back = read_jsonl(path)
    assert back.records == records
    assert path.read_bytes().endswith(b"\n")


def test_jsonl_empty_file(tmp_path):
    path = tmp_path / "empty.jsonl"
    write_jsonl(RecordDataset([]), path)
    assert path.read_bytes() == b""
    assert read_jsonl(path).records == []


@settings(max_examples=50, deadline=None)
@given(
    n=st.integers(min_value=0, max_value=200),
    ratio=st.one_of(st.just(1.0), st.floats(min_value=0.01, max_value=1.0)),
    seed=st.integers(min_value=0, max_value=2**64 - 1),
)
def test_subsample_conservation_property(n, ratio, seed):
    ds = dataset(n)
    out = subsample(ds, ratio, seed)
    assert out.count <= ds.count
    assert set(out.records) <= set(ds.records)
    assert len(set(out.records)) == out.count  # no duplication
