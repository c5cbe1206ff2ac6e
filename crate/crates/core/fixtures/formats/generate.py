"""Regenerates the reference format fixtures.

Rasters come from Pillow's TIFF writer (little-endian) and a hand-packed
big-endian writer; shapefiles come from pyshp. None of these share code with
the crate under test.
"""
import struct
from pathlib import Path

import numpy as np
import shapefile
from PIL import Image, TiffImagePlugin

HERE = Path(__file__).parent


def geotags():
    info = TiffImagePlugin.ImageFileDirectory_v2()
    info[33550] = (30.0, 30.0, 0.0)
    info.tagtype[33550] = 12
    info[33922] = (0.0, 0.0, 0.0, 500000.0, 4100000.0, 0.0)
    info.tagtype[33922] = 12
    info[42113] = "-9999"
    info.tagtype[42113] = 2
    return info


def pillow_rasters():
    values = np.arange(1, 7, dtype=np.float32).reshape(2, 3)
    im = Image.fromarray(values, mode="F")
    im.save(HERE / "float32_le_3x2.tif", tiffinfo=geotags())
    im.save(HERE / "float32_le_3x2_deflate.tif", tiffinfo=geotags(),
            compression="tiff_adobe_deflate")
    # no georeferencing at all
    im.save(HERE / "float32_le_nogeo.tif")


def big_endian_raster(path, fmt, bits, sample_format, values, width, height):
    """Minimal MM TIFF, one strip, tags sorted ascending."""
    data = b"".join(struct.pack(">" + fmt, v) for v in values)
    entries = []
    extra = b""
    header = 8
    n_tags = 13
    ifd_size = 2 + n_tags * 12 + 4
    extra_base = header + ifd_size

    def put_extra(blob):
        nonlocal extra
        off = extra_base + len(extra)
        extra += blob
        if len(extra) % 2:
            extra += b"\0"
        return off

    scale_off = put_extra(struct.pack(">3d", 30.0, 30.0, 0.0))
    tie_off = put_extra(struct.pack(">6d", 0.0, 0.0, 0.0, 500000.0, 4100000.0, 0.0))
    nodata_off = put_extra(b"-9999\0")
    strip_off = extra_base + len(extra)

    def short(tag, v):
        return struct.pack(">HHI", tag, 3, 1) + struct.pack(">H", v) + b"\0\0"

    def long(tag, v):
        return struct.pack(">HHII", tag, 4, 1, v)

    entries.append(long(256, width))
    entries.append(long(257, height))
    entries.append(short(258, bits))
    entries.append(short(259, 1))
    entries.append(short(262, 1))
    entries.append(long(273, strip_off))
    entries.append(short(277, 1))
    entries.append(long(278, height))
    entries.append(long(279, len(data)))
    entries.append(short(339, sample_format))
    entries.append(struct.pack(">HHII", 33550, 12, 3, scale_off))
    entries.append(struct.pack(">HHII", 33922, 12, 6, tie_off))
    entries.append(struct.pack(">HHII", 42113, 2, 6, nodata_off))
    assert len(entries) == n_tags
    ifd = struct.pack(">H", n_tags) + b"".join(entries) + struct.pack(">I", 0)
    blob = b"MM" + struct.pack(">HI", 42, 8) + ifd + extra + data
    path.write_bytes(blob)


def le_twin_int16(path, values, width, height):
    """Same logical raster as the MM int16 fixture, stored little-endian by Pillow."""
    arr = np.array(values, dtype=np.int16).reshape(height, width)
    Image.fromarray(arr).save(path, tiffinfo=geotags())


def shapefiles():
    with shapefile.Writer(str(HERE / "point_3000_4000"), shapeType=shapefile.POINT) as w:
        w.field("id", "N")
        w.point(3000, 4000)
        w.record(1)
    with shapefile.Writer(str(HERE / "null_only"), shapeType=shapefile.POINT) as w:
        w.field("id", "N")
        w.null()
        w.record(1)
    with shapefile.Writer(str(HERE / "roads_multipart"), shapeType=shapefile.POLYLINE) as w:
        w.field("id", "N")
        w.line([[[0, 0], [1000, 0], [2000, 500]], [[5000, 5000], [6000, 7000]]])
        w.record(1)
        w.line([[[100, 200], [300, 400]]])
        w.record(2)
    with shapefile.Writer(str(HERE / "square_with_hole"), shapeType=shapefile.POLYGON) as w:
        w.field("id", "N")
        outer = [[0, 0], [0, 10000], [10000, 10000], [10000, 0], [0, 0]]
        hole = [[3000, 3000], [7000, 3000], [7000, 7000], [3000, 7000], [3000, 3000]]
        w.poly([outer, hole])
        w.record(1)


if __name__ == "__main__":
    pillow_rasters()
    ints = [1, -2, 300, 4, 5, -600]
    big_endian_raster(HERE / "int16_be_3x2.tif", "h", 16, 2, ints, 3, 2)
    le_twin_int16(HERE / "int16_le_3x2.tif", ints, 3, 2)
    big_endian_raster(HERE / "float64_be_3x2.tif", "d", 64, 3,
                      [1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 3, 2)
    shapefiles()
    for p in list(HERE.glob("*.dbf")) + list(HERE.glob("*.shx")):
        p.unlink()
