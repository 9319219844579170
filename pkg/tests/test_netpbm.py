import numpy as np
import pytest

from skesim.errors import InvalidInputError
from skesim.netpbm import read_gray, read_pnm, write_pbm, write_pgm, write_ppm


def test_plain_pbm_with_comments_and_packed_digits(tmp_path):
    p = tmp_path / "a.pbm"
    p.write_bytes(b"P1\n# comment\n4 # inline\n2\n1001\n0 1 1 0\n")
    magic, pix, maxval = read_pnm(p)
    assert magic == "P1" and maxval == 1
    assert pix.tolist() == [[1, 0, 0, 1], [0, 1, 1, 0]]


def test_plain_pgm(tmp_path):
    p = tmp_path / "a.pgm"
    p.write_bytes(b"P2\n3 2\n# c\n15\n0 7 15\n15 7 0\n")
    magic, pix, maxval = read_pnm(p)
    assert (magic, maxval) == ("P2", 15)
    assert pix.tolist() == [[0, 7, 15], [15, 7, 0]]
    assert read_gray(p).tolist() == [[0, 119, 255], [255, 119, 0]]


def test_raw_pgm_16bit_is_big_endian(tmp_path):
    p = tmp_path / "a.pgm"
    p.write_bytes(b"P5\n2 1\n65535\n" + bytes([0x01, 0x02, 0xFF, 0xFF]))
    _, pix, maxval = read_pnm(p)
    assert maxval == 65535
    assert pix.tolist() == [[0x0102, 0xFFFF]]


def test_raw_pbm_row_padding(tmp_path):
    p = tmp_path / "a.pbm"
    # width 10 -> two bytes per row, trailing bits ignored
    p.write_bytes(b"P4\n10 2\n" + bytes([0b10000000, 0b01000000, 0b00000001, 0b11111111]))
    _, pix, _ = read_pnm(p)
    assert pix.tolist() == [[1, 0, 0, 0, 0, 0, 0, 0, 0, 1],
                            [0, 0, 0, 0, 0, 0, 0, 1, 1, 1]]


def test_bitmap_reads_as_black_on_white(tmp_path):
    p = tmp_path / "a.pbm"
    p.write_bytes(b"P1\n2 1\n1 0\n")
    assert read_gray(p).tolist() == [[0, 255]]


def test_pgm_round_trip(tmp_path):
    g = np.arange(60, dtype=np.uint8).reshape(6, 10) * 4
    write_pgm(tmp_path / "g.pgm", g)
    assert np.array_equal(read_gray(tmp_path / "g.pgm"), g)


def test_pbm_round_trip_long_rows(tmp_path):
    rng = np.random.default_rng(3)
    b = rng.random((5, 150)) < 0.5
    write_pbm(tmp_path / "b.pbm", b)
    text = (tmp_path / "b.pbm").read_text()
    assert max(len(line) for line in text.splitlines()) <= 70
    _, pix, _ = read_pnm(tmp_path / "b.pbm")
    assert np.array_equal(pix.astype(bool), b)


def test_ppm_header_and_size(tmp_path):
    c = np.zeros((3, 4, 3), dtype=np.uint8)
    c[1, 2] = (255, 0, 0)
    write_ppm(tmp_path / "c.ppm", c)
    data = (tmp_path / "c.ppm").read_bytes()
    assert data.startswith(b"P6\n4 3\n255\n")
    assert len(data) == len(b"P6\n4 3\n255\n") + 36


def test_matches_pillow(tmp_path):
    Image = pytest.importorskip("PIL.Image")
    rng = np.random.default_rng(0)
    g = rng.integers(0, 256, (17, 23), dtype=np.uint8)
    Image.fromarray(g).save(tmp_path / "pil.pgm")
    assert np.array_equal(read_gray(tmp_path / "pil.pgm"), g)
    b = rng.random((9, 21)) < 0.3
    Image.fromarray(~b).convert("1").save(tmp_path / "pil.pbm")
    _, pix, _ = read_pnm(tmp_path / "pil.pbm")
    assert np.array_equal(pix.astype(bool), b)


@pytest.mark.parametrize("payload", [
    b"P3\n1 1\n255\n0 0 0\n",
    b"P5\n2 2\n255\n\x00",
    b"P2\n2 1\n10\n3 11\n",
    b"P1\n2 2\n1 0 1\n",
    b"P2\n0 1\n255\n",
    b"P5\n2 x\n255\n",
])
def test_rejects_malformed(tmp_path, payload):
    p = tmp_path / "bad.pnm"
    p.write_bytes(payload)
    with pytest.raises(InvalidInputError):
        read_pnm(p)


def test_missing_file_is_os_error(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_pnm(tmp_path / "nope.pgm")
