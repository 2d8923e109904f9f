'''
Bit-exact codecs for the file formats of the pipeline.

 - binary PPM (``P6``) with maxval 255 or 65535 (big-endian samples), read and
   written;
 - uncompressed 24-bit bottom-up ``BI_RGB`` BMP, written.

Writers round half away from zero, then clamp to the target range.
'''
import logging
import struct

from logging_helpers import _L
import numpy as np
import path_helpers as ph

from .raster import Domain, MultiImage, RasterError


logger = logging.getLogger(__name__)

PNM_WHITESPACE = b' \t\n\r\v\f'
BMP_HEADER_SIZE = 14
BMP_INFO_SIZE = 40
#: 72 DPI expressed in pixels per metre.
BMP_PIXELS_PER_METRE = 2835


class FormatError(RasterError):
    '''
    Attributes
    ----------
    offset : int
        Byte offset in the input at which the problem was detected.
    '''
    def __init__(self, message, offset):
        super(FormatError, self).__init__('%s (byte offset %d)' %
                                          (message, offset))
        self.offset = offset


def _round_clamp(planes, high):
    rounded = np.sign(planes) * np.floor(np.abs(planes) + 0.5)
    return np.clip(rounded, 0, high)


def quantize8(image):
    '''
    Returns
    -------
    MultiImage
        Integer-valued :attr:`Domain.ALIGNED8` copy of ``image``, exactly as
        it would be read back from an 8-bit file.
    '''
    return MultiImage(_round_clamp(image.planes, 255), Domain.ALIGNED8)


def quantize16(image):
    return MultiImage(_round_clamp(image.planes, 65535), Domain.RAW16)


def _parse_pnm_header(data):
    '''
    Parameters
    ----------
    data : bytes
        Complete file contents.

    Returns
    -------
    tuple
        ``(width, height, maxval, payload_offset)``.
    '''
    if data[:2] != b'P6':
        raise FormatError('Not a binary PPM (P6) file', 0)
    pos = 2
    fields = []
    offsets = []
    while len(fields) < 3:
        # Skip whitespace and comments between header fields.
        while pos < len(data):
            char = data[pos:pos + 1]
            if char in PNM_WHITESPACE:
                pos += 1
            elif char == b'#':
                end = data.find(b'\n', pos)
                if end < 0:
                    raise FormatError('Unterminated header comment', pos)
                pos = end + 1
            else:
                break
        start = pos
        while pos < len(data) and data[pos:pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise FormatError('Expected an unsigned integer header field',
                              start)
        fields.append(int(data[start:pos]))
        offsets.append(start)
    if pos >= len(data) or data[pos:pos + 1] not in PNM_WHITESPACE:
        raise FormatError('Expected whitespace after maxval', pos)
    width, height, maxval = fields
    if width < 1:
        raise FormatError('Invalid width %d' % width, offsets[0])
    if height < 1:
        raise FormatError('Invalid height %d' % height, offsets[1])
    if maxval not in (255, 65535):
        raise FormatError('Unsupported maxval %d' % maxval, offsets[2])
    return width, height, maxval, pos + 1


def read_pnm16(filepath):
    '''
    Read a binary PPM file.

    Parameters
    ----------
    filepath : str
        Path to a ``P6`` file with maxval 65535 or 255.

    Returns
    -------
    MultiImage
        :attr:`Domain.RAW16` image for maxval 65535, :attr:`Domain.ALIGNED8`
        image for maxval 255.

    Raises
    ------
    FormatError
        If the header is malformed, the maxval is unsupported or the payload
        is truncated.
    '''
    with open(filepath, 'rb') as input_:
        data = input_.read()
    width, height, maxval, offset = _parse_pnm_header(data)
    dtype = np.dtype('>u2') if maxval == 65535 else np.dtype('u1')
    payload_size = width * height * 3 * dtype.itemsize
    if len(data) - offset < payload_size:
        raise FormatError('Truncated payload: expected %d bytes, found %d' %
                          (payload_size, len(data) - offset), len(data))
    if len(data) - offset > payload_size:
        _L().debug('ignoring %d trailing bytes in `%s`',
                   len(data) - offset - payload_size, filepath)
    samples = np.frombuffer(data, dtype=dtype, count=width * height * 3,
                            offset=offset)
    domain = Domain.RAW16 if maxval == 65535 else Domain.ALIGNED8
    return MultiImage.from_hwc(samples.reshape(height, width, 3), domain)


def _write(filepath, chunks):
    filepath = ph.path(filepath).abspath()
    filepath.parent.makedirs_p()
    with open(filepath, 'wb') as output:
        for chunk_i in chunks:
            output.write(chunk_i)
    return filepath


def _pnm_header(image, maxval):
    return b'P6\n%d %d\n%d\n' % (image.width, image.height, maxval)


def write_pnm8(image, filepath):
    '''
    Write ``image`` as an 8-bit binary PPM file.

    Returns
    -------
    path_helpers.path
        Absolute path of the written file.
    '''
    samples = quantize8(image).to_hwc().astype('u1')
    return _write(filepath, [_pnm_header(image, 255), samples.tobytes()])


def write_pnm16(image, filepath):
    samples = quantize16(image).to_hwc().astype('>u2')
    return _write(filepath, [_pnm_header(image, 65535), samples.tobytes()])


def write_bmp8(image, filepath):
    '''
    Write ``image`` as an uncompressed 24-bit bottom-up BMP file.

    Rows are stored bottom-up in BGR order and padded to a multiple of 4
    bytes.
    '''
    width, height = image.width, image.height
    samples = quantize8(image).to_hwc().astype('u1')
    row_size = (3 * width + 3) & ~3
    rows = np.zeros((height, row_size), dtype='u1')
    rows[:, :3 * width] = samples[::-1, :, ::-1].reshape(height, 3 * width)
    image_size = row_size * height
    data_offset = BMP_HEADER_SIZE + BMP_INFO_SIZE
    file_header = struct.pack('<2sIHHI', b'BM', data_offset + image_size, 0,
                              0, data_offset)
    info_header = struct.pack('<IiiHHIIiiII', BMP_INFO_SIZE, width, height, 1,
                              24, 0, image_size, BMP_PIXELS_PER_METRE,
                              BMP_PIXELS_PER_METRE, 0, 0)
    return _write(filepath, [file_header, info_header, rows.tobytes()])
