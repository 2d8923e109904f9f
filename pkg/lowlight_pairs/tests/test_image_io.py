import struct

import numpy as np
import pytest

from ..image_io import (FormatError, quantize8, read_pnm16, write_bmp8,
                        write_pnm16, write_pnm8)
from ..raster import Domain, MultiImage


def _random_image(seed, high, domain):
    rng = np.random.default_rng(seed)
    height, width = rng.integers(1, 12, size=2)
    return MultiImage(rng.integers(0, high + 1, size=(3, height, width)),
                      domain)


@pytest.mark.parametrize('seed', range(100))
def test_pnm_round_trip(tmp_path, seed):
    '''
    Test integer images are read back bit-exactly.
    '''
    image8 = _random_image(seed, 255, Domain.ALIGNED8)
    assert read_pnm16(write_pnm8(image8, tmp_path / 'a.ppm')).equals(image8)
    image16 = _random_image(seed, 65535, Domain.RAW16)
    assert read_pnm16(write_pnm16(image16,
                                  tmp_path / 'b.ppm')).equals(image16)


def test_read_handcrafted(tmp_path):
    '''
    Test reading a 2x1 16-bit file with big-endian samples.
    '''
    filepath = tmp_path / 'tiny.ppm'
    filepath.write_bytes(b'P6 2 1 65535\n' +
                         struct.pack('>6H', 1, 2, 3, 4, 5, 65535))
    image = read_pnm16(filepath)
    assert image.domain == Domain.RAW16
    assert image.shape == (1, 2)
    assert image.planes[:, 0, 0].tolist() == [1, 2, 3]
    assert image.planes[:, 0, 1].tolist() == [4, 5, 65535]


def test_read_comment(tmp_path):
    filepath = tmp_path / 'comment.ppm'
    filepath.write_bytes(b'P6\n# made by hand\n1 1\n255\n\x01\x02\x03')
    image = read_pnm16(filepath)
    assert image.domain == Domain.ALIGNED8
    assert image.planes.ravel().tolist() == [1, 2, 3]


def test_read_truncated(tmp_path):
    data = b'P6\n2 1\n65535\n' + struct.pack('>6H', *range(6))
    filepath = tmp_path / 'truncated.ppm'
    filepath.write_bytes(data[:-1])
    with pytest.raises(FormatError) as exc_info:
        read_pnm16(filepath)
    assert exc_info.value.offset == len(data) - 1


def test_read_bad_header(tmp_path):
    filepath = tmp_path / 'bad.ppm'
    filepath.write_bytes(b'P5\n1 1\n255\n\x00')
    with pytest.raises(FormatError) as exc_info:
        read_pnm16(filepath)
    assert exc_info.value.offset == 0

    filepath.write_bytes(b'P6\n1 1\n4095\n' + b'\x00' * 6)
    with pytest.raises(FormatError) as exc_info:
        read_pnm16(filepath)
    assert exc_info.value.offset == len(b'P6\n1 1\n')


def test_write_rounding(tmp_path):
    '''
    Test writers round half away from zero and clamp.
    '''
    image = MultiImage([[[2.5, 1.4999]], [[254.5, 0.49]], [[0.5, 128.]]],
                       Domain.ALIGNED8)
    expected = [[[3, 1]], [[255, 0]], [[1, 128]]]
    assert np.array_equal(quantize8(image).planes, expected)
    assert np.array_equal(read_pnm16(write_pnm8(image, tmp_path /
                                                'r.ppm')).planes, expected)

    raw = MultiImage(np.full((3, 1, 1), 300.4), Domain.RAW16)
    assert np.all(read_pnm16(write_pnm8(raw, tmp_path /
                                        'c.ppm')).planes == 255)


def test_write_bmp(tmp_path):
    '''
    Test BMP headers, row padding and bottom-up BGR layout.
    '''
    planes = np.arange(3 * 2 * 3).reshape(3, 2, 3)
    image = MultiImage(planes, Domain.ALIGNED8)
    data = write_bmp8(image, tmp_path / 'image.bmp').bytes()
    # Rows of 9 bytes padded to 12.
    assert len(data) == 54 + 2 * 12
    magic, file_size, _, _, data_offset = struct.unpack('<2sIHHI', data[:14])
    assert (magic, file_size, data_offset) == (b'BM', 78, 54)
    (info_size, width, height, planes_count, bits,
     compression) = struct.unpack('<IiiHHI', data[14:34])
    assert (info_size, width, height) == (40, 3, 2)
    assert (planes_count, bits, compression) == (1, 24, 0)
    # First stored row is the bottom row, blue first.
    first = data[54:66]
    assert list(first[:3]) == [planes[2, 1, 0], planes[1, 1, 0],
                               planes[0, 1, 0]]
    assert first[9:] == b'\x00\x00\x00'
    second = data[66:78]
    assert list(second[3:6]) == [planes[2, 0, 1], planes[1, 0, 1],
                                 planes[0, 0, 1]]
