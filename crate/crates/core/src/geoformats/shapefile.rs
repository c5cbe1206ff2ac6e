//! `.shp` main-file reader and writer for Point, PolyLine and Polygon shapes.

use super::{Bbox, Geometry, GeometryKind, Point2, VectorDataset};
use crate::error::{Error, Result};

const FILE_CODE: i32 = 9994;
const VERSION: i32 = 1000;
const HEADER_LEN: usize = 100;

const SHAPE_NULL: i32 = 0;
const SHAPE_POINT: i32 = 1;
const SHAPE_POLYLINE: i32 = 3;
const SHAPE_POLYGON: i32 = 5;

/// Header bbox may be rounded by the producing tool.
const BBOX_TOLERANCE: f64 = 1e-6;

fn be_i32(b: &[u8], at: usize) -> i32 {
    i32::from_be_bytes(b[at..at + 4].try_into().unwrap())
}

fn le_i32(b: &[u8], at: usize) -> i32 {
    i32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn le_f64(b: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

fn shape_name(t: i32) -> &'static str {
    match t {
        SHAPE_NULL => "Null",
        SHAPE_POINT => "Point",
        SHAPE_POLYLINE => "PolyLine",
        SHAPE_POLYGON => "Polygon",
        _ => "unsupported",
    }
}

/// Parses a `.shp` main file. Multi-part polylines become one geometry per
/// part; null shapes are skipped. The dataset bbox is the header bbox, which
/// must contain every vertex.
pub fn read_shapefile(data: &[u8]) -> Result<VectorDataset> {
    if data.len() < HEADER_LEN {
        return Err(Error::Shapefile(format!("file too short ({} bytes)", data.len())));
    }
    let code = be_i32(data, 0);
    if code != FILE_CODE {
        return Err(Error::Shapefile(format!("bad file code {code}, expected {FILE_CODE}")));
    }
    let declared = be_i32(data, 24) as i64 * 2;
    if declared != data.len() as i64 {
        return Err(Error::Shapefile(format!(
            "header declares {declared} bytes, file has {}",
            data.len()
        )));
    }
    let version = le_i32(data, 28);
    if version != VERSION {
        return Err(Error::Shapefile(format!("unsupported version {version}")));
    }
    let header_type = le_i32(data, 32);
    if ![SHAPE_NULL, SHAPE_POINT, SHAPE_POLYLINE, SHAPE_POLYGON].contains(&header_type) {
        return Err(Error::Shapefile(format!("unsupported shape type {header_type}")));
    }
    let header_bbox = Bbox {
        min_x: le_f64(data, 36),
        min_y: le_f64(data, 44),
        max_x: le_f64(data, 52),
        max_y: le_f64(data, 60),
    };

    let mut geometries = Vec::new();
    let mut seen_type: Option<i32> = None;
    let mut at = HEADER_LEN;
    let mut index = 0usize;
    while at < data.len() {
        if at + 8 > data.len() {
            return Err(Error::Shapefile(format!("record {index}: truncated record header")));
        }
        let content_len = be_i32(data, at + 4) as i64 * 2;
        let start = at + 8;
        if content_len < 4 || start as i64 + content_len > data.len() as i64 {
            return Err(Error::Shapefile(format!(
                "record {index}: content length {content_len} inconsistent with file size"
            )));
        }
        let content = &data[start..start + content_len as usize];
        let shape_type = le_i32(content, 0);
        if shape_type != SHAPE_NULL {
            match seen_type {
                Some(t) if t != shape_type => {
                    return Err(Error::Shapefile(format!(
                        "record {index}: {} shape in a file of {} shapes",
                        shape_name(shape_type),
                        shape_name(t)
                    )))
                }
                _ => seen_type = Some(shape_type),
            }
            if header_type != SHAPE_NULL && shape_type != header_type {
                return Err(Error::Shapefile(format!(
                    "record {index}: {} shape but header declares {}",
                    shape_name(shape_type),
                    shape_name(header_type)
                )));
            }
        }
        parse_record(content, shape_type, &mut geometries)
            .map_err(|e| e.context(format!("record {index}")))?;
        at = start + content_len as usize;
        index += 1;
    }

    let dataset = VectorDataset::new(geometries)?;
    if !header_bbox.is_empty() {
        if let Some(p) = dataset
            .geometries
            .iter()
            .flat_map(|g| g.vertices())
            .find(|p| !header_bbox.contains(*p, BBOX_TOLERANCE))
        {
            return Err(Error::Shapefile(format!(
                "vertex ({}, {}) lies outside the header bbox",
                p.x, p.y
            )));
        }
    }
    let bbox = if header_bbox.is_empty() { dataset.bbox } else { header_bbox };
    Ok(VectorDataset { bbox, ..dataset })
}

fn parse_record(content: &[u8], shape_type: i32, out: &mut Vec<Geometry>) -> Result<()> {
    let need = |n: usize| -> Result<()> {
        if content.len() != n {
            return Err(Error::Shapefile(format!(
                "{} content is {} bytes, layout requires {n}",
                shape_name(shape_type),
                content.len()
            )));
        }
        Ok(())
    };
    match shape_type {
        SHAPE_NULL => Ok(()),
        SHAPE_POINT => {
            need(20)?;
            out.push(Geometry::Point(Point2::new(le_f64(content, 4), le_f64(content, 12))));
            Ok(())
        }
        SHAPE_POLYLINE | SHAPE_POLYGON => {
            if content.len() < 44 {
                return Err(Error::Shapefile(format!(
                    "{} content is {} bytes, shorter than its fixed header",
                    shape_name(shape_type),
                    content.len()
                )));
            }
            let n_parts = le_i32(content, 36);
            let n_points = le_i32(content, 40);
            if n_parts < 1 || n_points < 0 {
                return Err(Error::Shapefile(format!("bad part/point counts {n_parts}/{n_points}")));
            }
            let (n_parts, n_points) = (n_parts as usize, n_points as usize);
            need(44 + 4 * n_parts + 16 * n_points)?;
            let parts: Vec<usize> = (0..n_parts).map(|i| le_i32(content, 44 + 4 * i) as usize).collect();
            let base = 44 + 4 * n_parts;
            let points: Vec<Point2> = (0..n_points)
                .map(|i| Point2::new(le_f64(content, base + 16 * i), le_f64(content, base + 16 * i + 8)))
                .collect();
            let mut slices = Vec::with_capacity(n_parts);
            for (i, &begin) in parts.iter().enumerate() {
                let end = parts.get(i + 1).copied().unwrap_or(n_points);
                if begin > end || end > n_points {
                    return Err(Error::Shapefile(format!("part {i} index range {begin}..{end} invalid")));
                }
                slices.push(points[begin..end].to_vec());
            }
            if shape_type == SHAPE_POLYLINE {
                out.extend(slices.into_iter().map(Geometry::Polyline));
            } else {
                out.push(Geometry::Polygon(slices));
            }
            Ok(())
        }
        other => Err(Error::Shapefile(format!("unsupported shape type {other}"))),
    }
}

/// Encodes `dataset` as a `.shp` main file. Each geometry becomes one record.
pub fn write_shapefile(dataset: &VectorDataset) -> Vec<u8> {
    let shape_type = match dataset.kind() {
        None => SHAPE_NULL,
        Some(GeometryKind::Point) => SHAPE_POINT,
        Some(GeometryKind::Polyline) => SHAPE_POLYLINE,
        Some(GeometryKind::Polygon) => SHAPE_POLYGON,
    };
    let mut records = Vec::new();
    for (i, g) in dataset.geometries.iter().enumerate() {
        let mut content = Vec::new();
        content.extend_from_slice(&shape_type.to_le_bytes());
        match g {
            Geometry::Point(p) => {
                content.extend_from_slice(&p.x.to_le_bytes());
                content.extend_from_slice(&p.y.to_le_bytes());
            }
            Geometry::Polyline(pts) => write_parts(&mut content, std::slice::from_ref(pts)),
            Geometry::Polygon(rings) => write_parts(&mut content, rings),
        }
        records.extend_from_slice(&(i as i32 + 1).to_be_bytes());
        records.extend_from_slice(&((content.len() / 2) as i32).to_be_bytes());
        records.extend_from_slice(&content);
    }
    let bbox = if dataset.bbox.is_empty() {
        Bbox { min_x: 0.0, min_y: 0.0, max_x: 0.0, max_y: 0.0 }
    } else {
        dataset.bbox
    };
    let mut out = Vec::with_capacity(HEADER_LEN + records.len());
    out.extend_from_slice(&FILE_CODE.to_be_bytes());
    out.extend_from_slice(&[0u8; 20]);
    out.extend_from_slice(&(((HEADER_LEN + records.len()) / 2) as i32).to_be_bytes());
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&shape_type.to_le_bytes());
    for v in [bbox.min_x, bbox.min_y, bbox.max_x, bbox.max_y, 0.0, 0.0, 0.0, 0.0] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&records);
    out
}

fn write_parts(content: &mut Vec<u8>, parts: &[Vec<Point2>]) {
    let bbox = Bbox::of_points(parts.iter().flatten().copied());
    for v in [bbox.min_x, bbox.min_y, bbox.max_x, bbox.max_y] {
        content.extend_from_slice(&v.to_le_bytes());
    }
    let n_points: usize = parts.iter().map(Vec::len).sum();
    content.extend_from_slice(&(parts.len() as i32).to_le_bytes());
    content.extend_from_slice(&(n_points as i32).to_le_bytes());
    let mut start = 0i32;
    for p in parts {
        content.extend_from_slice(&start.to_le_bytes());
        start += p.len() as i32;
    }
    for p in parts.iter().flatten() {
        content.extend_from_slice(&p.x.to_le_bytes());
        content.extend_from_slice(&p.y.to_le_bytes());
    }
}
