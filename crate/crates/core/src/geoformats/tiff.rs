//! Striped single-band GeoTIFF reader and float64 writer.

use std::collections::BTreeMap;
use std::io::Read;

use flate2::read::ZlibDecoder;

use super::{GeoTransform, RasterDataset, RasterKind};
use crate::error::{Error, Result};

const IMAGE_WIDTH: u16 = 256;
const IMAGE_LENGTH: u16 = 257;
const BITS_PER_SAMPLE: u16 = 258;
const COMPRESSION: u16 = 259;
const PHOTOMETRIC: u16 = 262;
const IMAGE_DESCRIPTION: u16 = 270;
const STRIP_OFFSETS: u16 = 273;
const SAMPLES_PER_PIXEL: u16 = 277;
const ROWS_PER_STRIP: u16 = 278;
const STRIP_BYTE_COUNTS: u16 = 279;
const PLANAR_CONFIGURATION: u16 = 284;
const PREDICTOR: u16 = 317;
const TILE_WIDTH: u16 = 322;
const TILE_LENGTH: u16 = 323;
const TILE_OFFSETS: u16 = 324;
const TILE_BYTE_COUNTS: u16 = 325;
const SAMPLE_FORMAT: u16 = 339;
const MODEL_PIXEL_SCALE: u16 = 33550;
const MODEL_TIEPOINT: u16 = 33922;
const MODEL_TRANSFORMATION: u16 = 34264;
const GEO_KEY_DIRECTORY: u16 = 34735;
const GDAL_NODATA: u16 = 42113;

const TYPE_ASCII: u16 = 2;
const TYPE_SHORT: u16 = 3;
const TYPE_LONG: u16 = 4;
const TYPE_DOUBLE: u16 = 12;

const COMPRESSION_NONE: u64 = 1;
const COMPRESSION_DEFLATE: u64 = 8;
const COMPRESSION_DEFLATE_OLD: u64 = 32946;

const ROWS_PER_STRIP_OUT: usize = 8;
const DESCRIPTION_PREFIX: &str = "poachgrid;";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ByteOrder {
    Little,
    Big,
}

struct Bytes<'a> {
    data: &'a [u8],
    order: ByteOrder,
}

impl<'a> Bytes<'a> {
    fn slice(&self, offset: usize, len: usize) -> Result<&'a [u8]> {
        offset
            .checked_add(len)
            .and_then(|end| self.data.get(offset..end))
            .ok_or_else(|| {
                Error::Tiff(format!(
                    "truncated: need {len} bytes at offset {offset}, file has {}",
                    self.data.len()
                ))
            })
    }

    fn array<const N: usize>(&self, offset: usize) -> Result<[u8; N]> {
        let mut out = [0u8; N];
        out.copy_from_slice(self.slice(offset, N)?);
        if self.order == ByteOrder::Big {
            out.reverse();
        }
        Ok(out)
    }

    fn u16(&self, offset: usize) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array(offset)?))
    }

    fn u32(&self, offset: usize) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array(offset)?))
    }
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    tag: u16,
    typ: u16,
    count: usize,
    /// Position of the 4-byte value/offset field.
    field: usize,
}

fn type_size(typ: u16) -> Option<usize> {
    match typ {
        1 | 2 | 6 | 7 => Some(1),
        3 | 8 => Some(2),
        4 | 9 | 11 => Some(4),
        5 | 10 | 12 => Some(8),
        _ => None,
    }
}

fn tag_name(tag: u16) -> &'static str {
    match tag {
        IMAGE_WIDTH => "ImageWidth",
        IMAGE_LENGTH => "ImageLength",
        BITS_PER_SAMPLE => "BitsPerSample",
        COMPRESSION => "Compression",
        STRIP_OFFSETS => "StripOffsets",
        SAMPLES_PER_PIXEL => "SamplesPerPixel",
        ROWS_PER_STRIP => "RowsPerStrip",
        STRIP_BYTE_COUNTS => "StripByteCounts",
        PLANAR_CONFIGURATION => "PlanarConfiguration",
        PREDICTOR => "Predictor",
        TILE_WIDTH => "TileWidth",
        TILE_LENGTH => "TileLength",
        TILE_OFFSETS => "TileOffsets",
        TILE_BYTE_COUNTS => "TileByteCounts",
        SAMPLE_FORMAT => "SampleFormat",
        MODEL_PIXEL_SCALE => "ModelPixelScaleTag",
        MODEL_TIEPOINT => "ModelTiepointTag",
        MODEL_TRANSFORMATION => "ModelTransformationTag",
        GDAL_NODATA => "GDAL_NODATA",
        _ => "tag",
    }
}

struct Ifd<'a> {
    bytes: Bytes<'a>,
    entries: BTreeMap<u16, Entry>,
}

impl<'a> Ifd<'a> {
    fn parse(bytes: Bytes<'a>, offset: usize) -> Result<Self> {
        let n = bytes.u16(offset)? as usize;
        let mut entries = BTreeMap::new();
        for i in 0..n {
            let at = offset + 2 + i * 12;
            let tag = bytes.u16(at)?;
            let typ = bytes.u16(at + 2)?;
            let count = bytes.u32(at + 4)? as usize;
            entries.insert(tag, Entry { tag, typ, count, field: at + 8 });
        }
        Ok(Self { bytes, entries })
    }

    fn has(&self, tag: u16) -> bool {
        self.entries.contains_key(&tag)
    }

    fn raw(&self, e: &Entry) -> Result<(usize, usize)> {
        let size = type_size(e.typ).ok_or_else(|| {
            Error::Tiff(format!("tag {} ({}) has unknown field type {}", e.tag, tag_name(e.tag), e.typ))
        })?;
        let len = size * e.count;
        let start = if len <= 4 { e.field } else { self.bytes.u32(e.field)? as usize };
        self.bytes.slice(start, len)?;
        Ok((start, size))
    }

    /// Numeric values of a tag, widened to f64.
    fn numbers(&self, tag: u16) -> Result<Option<Vec<f64>>> {
        let Some(e) = self.entries.get(&tag) else {
            return Ok(None);
        };
        let (start, size) = self.raw(e)?;
        let b = &self.bytes;
        let mut out = Vec::with_capacity(e.count);
        for i in 0..e.count {
            let at = start + i * size;
            let v = match e.typ {
                1 | 7 => b.slice(at, 1)?[0] as f64,
                6 => b.slice(at, 1)?[0] as i8 as f64,
                3 => b.u16(at)? as f64,
                8 => b.u16(at)? as i16 as f64,
                4 => b.u32(at)? as f64,
                9 => b.u32(at)? as i32 as f64,
                11 => f32::from_le_bytes(b.array(at)?) as f64,
                12 => f64::from_le_bytes(b.array(at)?),
                5 => b.u32(at)? as f64 / b.u32(at + 4)? as f64,
                10 => b.u32(at)? as i32 as f64 / b.u32(at + 4)? as i32 as f64,
                _ => {
                    return Err(Error::Tiff(format!(
                        "tag {tag} ({}) is not numeric (type {})",
                        tag_name(tag),
                        e.typ
                    )))
                }
            };
            out.push(v);
        }
        Ok(Some(out))
    }

    fn integers(&self, tag: u16) -> Result<Option<Vec<u64>>> {
        Ok(self
            .numbers(tag)?
            .map(|v| v.into_iter().map(|x| x as u64).collect()))
    }

    fn single(&self, tag: u16) -> Result<Option<u64>> {
        Ok(self.integers(tag)?.and_then(|v| v.first().copied()))
    }

    fn required(&self, tag: u16) -> Result<u64> {
        self.single(tag)?
            .ok_or_else(|| Error::Tiff(format!("missing required tag {tag} ({})", tag_name(tag))))
    }

    fn ascii(&self, tag: u16) -> Result<Option<String>> {
        let Some(e) = self.entries.get(&tag) else {
            return Ok(None);
        };
        let (start, _) = self.raw(e)?;
        let raw = self.bytes.slice(start, e.count)?;
        let text = String::from_utf8_lossy(raw);
        Ok(Some(text.trim_end_matches('\0').trim().to_string()))
    }
}

#[derive(Debug, Clone, Copy)]
enum SampleType {
    Unsigned,
    Signed,
    Float,
}

fn decode_sample(chunk: &[u8], order: ByteOrder, typ: SampleType) -> f64 {
    let mut buf = [0u8; 8];
    let n = chunk.len();
    buf[..n].copy_from_slice(chunk);
    if order == ByteOrder::Big {
        buf[..n].reverse();
    }
    match (typ, n) {
        (SampleType::Unsigned, 1) => buf[0] as f64,
        (SampleType::Signed, 1) => buf[0] as i8 as f64,
        (SampleType::Unsigned, 2) => u16::from_le_bytes([buf[0], buf[1]]) as f64,
        (SampleType::Signed, 2) => i16::from_le_bytes([buf[0], buf[1]]) as f64,
        (SampleType::Unsigned, 4) => u32::from_le_bytes(buf[..4].try_into().unwrap()) as f64,
        (SampleType::Signed, 4) => i32::from_le_bytes(buf[..4].try_into().unwrap()) as f64,
        (SampleType::Float, 4) => f32::from_le_bytes(buf[..4].try_into().unwrap()) as f64,
        (SampleType::Unsigned, 8) => u64::from_le_bytes(buf) as f64,
        (SampleType::Signed, 8) => i64::from_le_bytes(buf) as f64,
        (SampleType::Float, 8) => f64::from_le_bytes(buf),
        _ => unreachable!("sample width validated before decoding"),
    }
}

/// Parses a striped, single-band GeoTIFF into a [`RasterDataset`].
pub fn read_geotiff(data: &[u8]) -> Result<RasterDataset> {
    if data.len() < 8 {
        return Err(Error::Tiff(format!("file too short ({} bytes)", data.len())));
    }
    let order = match &data[..2] {
        b"II" => ByteOrder::Little,
        b"MM" => ByteOrder::Big,
        other => {
            return Err(Error::Tiff(format!(
                "bad byte-order mark {:02x}{:02x}, expected \"II\" or \"MM\"",
                other[0], other[1]
            )))
        }
    };
    let bytes = Bytes { data, order };
    match bytes.u16(2)? {
        42 => {}
        43 => return Err(Error::Tiff("BigTIFF is not supported".into())),
        v => return Err(Error::Tiff(format!("bad TIFF version {v}, expected 42"))),
    }
    let ifd_offset = bytes.u32(4)? as usize;
    let ifd = Ifd::parse(bytes, ifd_offset)?;

    for tag in [TILE_WIDTH, TILE_LENGTH, TILE_OFFSETS, TILE_BYTE_COUNTS] {
        if ifd.has(tag) {
            return Err(Error::Tiff(format!(
                "tiled layout (tag {tag} {}) is not supported",
                tag_name(tag)
            )));
        }
    }
    let width = ifd.required(IMAGE_WIDTH)? as usize;
    let height = ifd.required(IMAGE_LENGTH)? as usize;
    if width == 0 || height == 0 {
        return Err(Error::Tiff(format!("empty image {width}x{height}")));
    }
    let spp = ifd.single(SAMPLES_PER_PIXEL)?.unwrap_or(1);
    if spp != 1 {
        return Err(Error::Tiff(format!(
            "{spp} samples per pixel (tag {SAMPLES_PER_PIXEL} SamplesPerPixel); only single-band rasters are supported"
        )));
    }
    let planar = ifd.single(PLANAR_CONFIGURATION)?.unwrap_or(1);
    if planar != 1 {
        return Err(Error::Tiff(format!(
            "unsupported planar configuration {planar} (tag {PLANAR_CONFIGURATION} PlanarConfiguration)"
        )));
    }
    let compression = ifd.single(COMPRESSION)?.unwrap_or(COMPRESSION_NONE);
    if ![COMPRESSION_NONE, COMPRESSION_DEFLATE, COMPRESSION_DEFLATE_OLD].contains(&compression) {
        return Err(Error::Tiff(format!(
            "unsupported compression {compression} (tag {COMPRESSION} Compression)"
        )));
    }
    let predictor = ifd.single(PREDICTOR)?.unwrap_or(1);
    if predictor != 1 {
        return Err(Error::Tiff(format!(
            "unsupported predictor {predictor} (tag {PREDICTOR} Predictor)"
        )));
    }
    let bits = ifd.single(BITS_PER_SAMPLE)?.unwrap_or(1);
    let sample_type = match ifd.single(SAMPLE_FORMAT)?.unwrap_or(1) {
        1 => SampleType::Unsigned,
        2 => SampleType::Signed,
        3 => SampleType::Float,
        f => {
            return Err(Error::Tiff(format!(
                "unsupported sample format {f} (tag {SAMPLE_FORMAT} SampleFormat)"
            )))
        }
    };
    let valid_bits = match sample_type {
        SampleType::Float => matches!(bits, 32 | 64),
        _ => matches!(bits, 8 | 16 | 32 | 64),
    };
    if !valid_bits {
        return Err(Error::Tiff(format!(
            "unsupported bits per sample {bits} for {sample_type:?} samples (tag {BITS_PER_SAMPLE} BitsPerSample)"
        )));
    }
    let sample_bytes = (bits / 8) as usize;

    let offsets = ifd.integers(STRIP_OFFSETS)?.ok_or_else(|| {
        Error::Tiff(format!("missing required tag {STRIP_OFFSETS} (StripOffsets)"))
    })?;
    let counts = ifd.integers(STRIP_BYTE_COUNTS)?.ok_or_else(|| {
        Error::Tiff(format!("missing required tag {STRIP_BYTE_COUNTS} (StripByteCounts)"))
    })?;
    let rows_per_strip = (ifd.single(ROWS_PER_STRIP)?.unwrap_or(height as u64) as usize).min(height).max(1);
    let n_strips = height.div_ceil(rows_per_strip);
    if offsets.len() < n_strips || counts.len() < n_strips {
        return Err(Error::Tiff(format!(
            "{n_strips} strips expected, StripOffsets has {} and StripByteCounts has {}",
            offsets.len(),
            counts.len()
        )));
    }

    let mut values = Vec::with_capacity(width * height);
    for strip in 0..n_strips {
        let rows = rows_per_strip.min(height - strip * rows_per_strip);
        let expected = rows * width * sample_bytes;
        let offset = offsets[strip] as usize;
        let count = counts[strip] as usize;
        let raw = data.get(offset..offset.saturating_add(count)).ok_or_else(|| {
            Error::Tiff(format!(
                "strip {strip} truncated: {count} bytes declared at offset {offset}, file has {}",
                data.len()
            ))
        })?;
        let decoded;
        let payload: &[u8] = if compression == COMPRESSION_NONE {
            raw
        } else {
            let mut buf = Vec::with_capacity(expected);
            ZlibDecoder::new(raw).read_to_end(&mut buf).map_err(|e| {
                Error::Tiff(format!("strip {strip} at offset {offset}: deflate stream error: {e}"))
            })?;
            decoded = buf;
            &decoded
        };
        if payload.len() < expected {
            return Err(Error::Tiff(format!(
                "strip {strip} truncated at offset {offset}: {} bytes of {expected} expected",
                payload.len()
            )));
        }
        values.extend(
            payload[..expected]
                .chunks_exact(sample_bytes)
                .map(|c| decode_sample(c, order, sample_type)),
        );
    }

    if ifd.has(MODEL_TRANSFORMATION) && !ifd.has(MODEL_TIEPOINT) {
        return Err(Error::Tiff(format!(
            "georeferencing via tag {MODEL_TRANSFORMATION} (ModelTransformationTag) is not supported; need tiepoint + pixel scale"
        )));
    }
    let scale = ifd.numbers(MODEL_PIXEL_SCALE)?.ok_or_else(|| {
        Error::Tiff(format!("missing georeferencing tag {MODEL_PIXEL_SCALE} (ModelPixelScaleTag)"))
    })?;
    let tie = ifd.numbers(MODEL_TIEPOINT)?.ok_or_else(|| {
        Error::Tiff(format!("missing georeferencing tag {MODEL_TIEPOINT} (ModelTiepointTag)"))
    })?;
    if scale.len() < 2 || tie.len() < 6 {
        return Err(Error::Tiff("georeferencing tags too short".into()));
    }
    let (sx, sy) = (scale[0], scale[1]);
    let transform = GeoTransform::new(tie[3] - tie[0] * sx, tie[4] + tie[1] * sy, sx, sy)
        .map_err(|e| Error::Tiff(format!("bad georeferencing: {e}")))?;

    let nodata = match ifd.ascii(GDAL_NODATA)? {
        Some(text) if !text.is_empty() => Some(text.parse::<f64>().map_err(|_| {
            Error::Tiff(format!("tag {GDAL_NODATA} (GDAL_NODATA) is not a number: {text:?}"))
        })?),
        _ => None,
    };

    let mut kind = RasterKind::Continuous;
    let mut crs_code = String::new();
    let description = ifd.ascii(IMAGE_DESCRIPTION)?;
    match description.as_deref().and_then(|d| d.strip_prefix(DESCRIPTION_PREFIX)) {
        Some(rest) => {
            for field in rest.splitn(2, ';') {
                if let Some(k) = field.strip_prefix("kind=") {
                    kind = RasterKind::parse(k).unwrap_or(RasterKind::Continuous);
                } else if let Some(c) = field.strip_prefix("crs=") {
                    crs_code = c.to_string();
                }
            }
        }
        None => crs_code = crs_from_geokeys(&ifd)?.unwrap_or_default(),
    }

    let raster = RasterDataset {
        width,
        height,
        transform,
        values,
        nodata,
        kind,
        crs_code,
    };
    raster.validate()?;
    Ok(raster)
}

fn crs_from_geokeys(ifd: &Ifd) -> Result<Option<String>> {
    let Some(keys) = ifd.integers(GEO_KEY_DIRECTORY)? else {
        return Ok(None);
    };
    if keys.len() < 4 {
        return Ok(None);
    }
    let n = keys[3] as usize;
    for k in keys[4..].chunks_exact(4).take(n) {
        // ProjectedCSTypeGeoKey, then GeographicTypeGeoKey; value stored inline
        if (k[0] == 3072 || k[0] == 2048) && k[1] == 0 && k[3] != 32767 {
            return Ok(Some(format!("EPSG:{}", k[3])));
        }
    }
    Ok(None)
}

struct TagWriter {
    entries: Vec<(u16, u16, u32, Vec<u8>)>,
}

impl TagWriter {
    fn shorts(&mut self, tag: u16, v: &[u16]) {
        let bytes = v.iter().flat_map(|x| x.to_le_bytes()).collect();
        self.entries.push((tag, TYPE_SHORT, v.len() as u32, bytes));
    }

    fn longs(&mut self, tag: u16, v: &[u32]) {
        let bytes = v.iter().flat_map(|x| x.to_le_bytes()).collect();
        self.entries.push((tag, TYPE_LONG, v.len() as u32, bytes));
    }

    fn doubles(&mut self, tag: u16, v: &[f64]) {
        let bytes = v.iter().flat_map(|x| x.to_le_bytes()).collect();
        self.entries.push((tag, TYPE_DOUBLE, v.len() as u32, bytes));
    }

    fn ascii(&mut self, tag: u16, s: &str) {
        let mut bytes = s.as_bytes().to_vec();
        bytes.push(0);
        self.entries.push((tag, TYPE_ASCII, bytes.len() as u32, bytes));
    }
}

fn geokeys(crs: &str) -> Vec<u16> {
    // GTModelType = projected, GTRasterType = PixelIsArea
    let mut keys = vec![1024, 0, 1, 1, 1025, 0, 1, 1];
    if let Some(code) = crs.strip_prefix("EPSG:").and_then(|c| c.parse::<u16>().ok()) {
        keys.extend([3072, 0, 1, code]);
    }
    let mut dir = vec![1, 1, 0, (keys.len() / 4) as u16];
    dir.extend(keys);
    dir
}

/// Encodes `raster` as a little-endian, uncompressed float64 GeoTIFF with
/// at most eight rows per strip.
pub fn write_geotiff(raster: &RasterDataset) -> Vec<u8> {
    let (width, height) = (raster.width, raster.height);
    let rows_per_strip = ROWS_PER_STRIP_OUT.min(height);
    let n_strips = height.div_ceil(rows_per_strip);
    let strip_len = |s: usize| rows_per_strip.min(height - s * rows_per_strip) * width * 8;

    let t = &raster.transform;
    let mut tags = TagWriter { entries: Vec::new() };
    tags.longs(IMAGE_WIDTH, &[width as u32]);
    tags.longs(IMAGE_LENGTH, &[height as u32]);
    tags.shorts(BITS_PER_SAMPLE, &[64]);
    tags.shorts(COMPRESSION, &[1]);
    tags.shorts(PHOTOMETRIC, &[1]);
    tags.ascii(
        IMAGE_DESCRIPTION,
        &format!("{DESCRIPTION_PREFIX}kind={};crs={}", raster.kind.as_str(), raster.crs_code),
    );
    // strip offsets are patched once the layout is known
    tags.longs(STRIP_OFFSETS, &vec![0; n_strips]);
    tags.shorts(SAMPLES_PER_PIXEL, &[1]);
    tags.longs(ROWS_PER_STRIP, &[rows_per_strip as u32]);
    tags.longs(
        STRIP_BYTE_COUNTS,
        &(0..n_strips).map(|s| strip_len(s) as u32).collect::<Vec<_>>(),
    );
    tags.shorts(PLANAR_CONFIGURATION, &[1]);
    tags.shorts(SAMPLE_FORMAT, &[3]);
    tags.doubles(MODEL_PIXEL_SCALE, &[t.pixel_w, t.pixel_h, 0.0]);
    tags.doubles(MODEL_TIEPOINT, &[0.0, 0.0, 0.0, t.origin_x, t.origin_y, 0.0]);
    tags.shorts(GEO_KEY_DIRECTORY, &geokeys(&raster.crs_code));
    if let Some(nd) = raster.nodata {
        tags.ascii(GDAL_NODATA, &format!("{nd}"));
    }
    tags.entries.sort_by_key(|e| e.0);

    let ifd_offset = 8usize;
    let ifd_len = 2 + tags.entries.len() * 12 + 4;
    let mut extra_offset = ifd_offset + ifd_len;
    let mut placements = Vec::with_capacity(tags.entries.len());
    for (_, _, _, bytes) in &tags.entries {
        if bytes.len() > 4 {
            placements.push(Some(extra_offset));
            extra_offset += bytes.len() + bytes.len() % 2;
        } else {
            placements.push(None);
        }
    }
    let data_offset = extra_offset + extra_offset % 8;
    let mut strip_offsets = Vec::with_capacity(n_strips);
    let mut at = data_offset;
    for s in 0..n_strips {
        strip_offsets.push(at as u32);
        at += strip_len(s);
    }
    for entry in tags.entries.iter_mut().filter(|e| e.0 == STRIP_OFFSETS) {
        entry.3 = strip_offsets.iter().flat_map(|x| x.to_le_bytes()).collect();
    }

    let mut out = Vec::with_capacity(at);
    out.extend_from_slice(b"II");
    out.extend_from_slice(&42u16.to_le_bytes());
    out.extend_from_slice(&(ifd_offset as u32).to_le_bytes());
    out.extend_from_slice(&(tags.entries.len() as u16).to_le_bytes());
    for ((tag, typ, count, bytes), place) in tags.entries.iter().zip(&placements) {
        out.extend_from_slice(&tag.to_le_bytes());
        out.extend_from_slice(&typ.to_le_bytes());
        out.extend_from_slice(&count.to_le_bytes());
        match place {
            Some(off) => out.extend_from_slice(&(*off as u32).to_le_bytes()),
            None => {
                let mut field = [0u8; 4];
                field[..bytes.len()].copy_from_slice(bytes);
                out.extend_from_slice(&field);
            }
        }
    }
    out.extend_from_slice(&0u32.to_le_bytes());
    for ((_, _, _, bytes), place) in tags.entries.iter().zip(&placements) {
        if place.is_some() {
            out.extend_from_slice(bytes);
            if bytes.len() % 2 == 1 {
                out.push(0);
            }
        }
    }
    out.resize(data_offset, 0);
    for v in &raster.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    debug_assert_eq!(out.len(), at);
    out
}
