import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bid.bitdata import DistanceHistogram, distance_histogram, pack_bits
from bid.errors import FormatError
from bid.io import (
    decode_bidb,
    encode_bidb,
    load_histogram,
    read_bidb,
    read_bidf,
    read_histogram,
    read_real_matrix,
    write_bidb,
    write_bidf,
    write_histogram,
)


def test_bidb_layout():
    buf = encode_bidb(pack_bits([[1, 0, 0, 0, 0, 0, 0, 0, 1]]))
    assert buf[:4] == b"BIDB"
    assert int.from_bytes(buf[4:8], "little") == 1
    assert int.from_bytes(buf[8:16], "little") == 1
    assert int.from_bytes(buf[16:24], "little") == 9
    assert buf[24:] == bytes([0x01, 0x01])


@settings(max_examples=50)
@given(st.integers(1, 10).flatmap(
    lambda n: st.integers(1, 70).flatmap(lambda N: arrays(np.uint8, (n, N), elements=st.integers(0, 1)))
))
def test_bidb_round_trip(x):
    ds = pack_bits(x)
    assert decode_bidb(encode_bidb(ds)) == ds


def test_bidb_file_round_trip(tmp_path):
    ds = pack_bits(np.random.default_rng(0).integers(0, 2, (40, 100), dtype=np.uint8))
    write_bidb(tmp_path / "a.bidb", ds)
    assert read_bidb(tmp_path / "a.bidb") == ds


def test_bidb_rejects_bad_input():
    good = encode_bidb(pack_bits([[1, 0, 1]]))
    with pytest.raises(FormatError, match="magic"):
        decode_bidb(b"XXXX" + good[4:])
    with pytest.raises(FormatError):
        decode_bidb(good[:-1])
    with pytest.raises(FormatError):
        decode_bidb(good + b"\0")
    with pytest.raises(FormatError, match="truncated"):
        decode_bidb(good[:10])
    with pytest.raises(FormatError, match="version"):
        decode_bidb(good[:4] + (2).to_bytes(4, "little") + good[8:])
    with pytest.raises(FormatError, match="padding"):
        decode_bidb(good[:-1] + bytes([0xFF]))


def test_bidf_round_trip(tmp_path):
    m = np.random.default_rng(1).normal(size=(7, 5)).astype(np.float32)
    write_bidf(tmp_path / "m.bidf", m)
    np.testing.assert_array_equal(read_bidf(tmp_path / "m.bidf"), m)
    np.testing.assert_array_equal(read_real_matrix(tmp_path / "m.bidf"), m)


def test_csv_matrix(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("1.0,-2.0\n0.5,3\n")
    np.testing.assert_array_equal(read_real_matrix(p), [[1.0, -2.0], [0.5, 3.0]])
    p.write_text("a,b\n")
    with pytest.raises(FormatError):
        read_real_matrix(p)


def test_histogram_json_round_trip(tmp_path):
    h = DistanceHistogram(4, 5, np.array([1, 2, 3, 4, 0]))
    write_histogram(tmp_path / "h.json", h)
    assert read_histogram(tmp_path / "h.json") == h
    assert load_histogram(tmp_path / "h.json") == h
    (tmp_path / "bad.json").write_text("{}")
    with pytest.raises(FormatError):
        read_histogram(tmp_path / "bad.json")


def test_load_histogram_from_dataset(tmp_path):
    ds = pack_bits(np.random.default_rng(2).integers(0, 2, (20, 30), dtype=np.uint8))
    write_bidb(tmp_path / "d.bidb", ds)
    assert load_histogram(tmp_path / "d.bidb") == distance_histogram(ds)
