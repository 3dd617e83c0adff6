import io

import numpy as np
import pytest

from scholarlink.binio import Reader, Writer, VERSION
from scholarlink.errors import FormatVersionError


def roundtrip_buffer() -> io.BytesIO:
    buf = io.BytesIO()
    w = Writer(buf)
    w.header(b"TEST")
    w.u8(7)
    w.u32(123456)
    w.u64(1 << 40)
    w.f64(-2.5)
    w.text("héllo world")
    w.f64_array(np.array([1.0, 0.5, -0.25]))
    buf.seek(0)
    return buf


def test_roundtrip_all_field_types():
    r = Reader(roundtrip_buffer())
    r.header(b"TEST")
    assert r.u8() == 7
    assert r.u32() == 123456
    assert r.u64() == 1 << 40
    assert r.f64() == -2.5
    assert r.text() == "héllo world"
    assert np.array_equal(r.f64_array(), np.array([1.0, 0.5, -0.25]))
    r.expect_eof()


def test_header_magic_mismatch():
    r = Reader(roundtrip_buffer())
    with pytest.raises(FormatVersionError):
        r.header(b"ELSE")


def test_header_version_mismatch():
    buf = io.BytesIO(b"TEST" + bytes([VERSION + 1]))
    with pytest.raises(FormatVersionError):
        Reader(buf).header(b"TEST")


def test_truncation_raises_not_partial():
    full = roundtrip_buffer().getvalue()
    for cut in (0, 3, 5, 9, len(full) - 1):
        r = Reader(io.BytesIO(full[:cut]))
        with pytest.raises(FormatVersionError):
            r.header(b"TEST")
            r.u8()
            r.u32()
            r.u64()
            r.f64()
            r.text()
            r.f64_array()


def test_trailing_bytes_detected():
    buf = io.BytesIO(roundtrip_buffer().getvalue() + b"x")
    r = Reader(buf)
    r.header(b"TEST")
    r.u8(), r.u32(), r.u64(), r.f64(), r.text(), r.f64_array()
    with pytest.raises(FormatVersionError):
        r.expect_eof()


def test_writes_are_deterministic():
    assert roundtrip_buffer().getvalue() == roundtrip_buffer().getvalue()
