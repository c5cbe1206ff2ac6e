//! D8 drainage direction and flow accumulation.
//!
//! Direction codes: 0 = sink, 1..8 = E, SE, S, SW, W, NW, N, NE.

use std::collections::VecDeque;

use super::FeatureLayer;
use crate::error::{Error, Result};
use crate::geoformats::{RasterDataset, RasterKind};
use crate::NODATA;

/// (drow, dcol) for codes 1..8; rows grow southward.
pub const D8_OFFSETS: [(isize, isize); 8] = [
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
];

fn neighbor(row: usize, col: usize, code: usize, w: usize, h: usize) -> Option<(usize, usize)> {
    let (dr, dc) = D8_OFFSETS[code - 1];
    let r = row as isize + dr;
    let c = col as isize + dc;
    (r >= 0 && c >= 0 && (r as usize) < h && (c as usize) < w).then_some((r as usize, c as usize))
}

/// Steepest-descent neighbor per cell (drop / distance, diagonal distance
/// res·√2). Ties go to the earlier code; cells without a strictly lower
/// neighbor are sinks. Nodata cells stay nodata and never receive flow.
pub fn d8_flow_direction(dem: &FeatureLayer) -> FeatureLayer {
    let r = &dem.raster;
    let (w, h) = (r.width, r.height);
    let (dx, dy) = (r.transform.pixel_w, r.transform.pixel_h);
    let diag = dx.hypot(dy);
    let mut dirs = vec![NODATA; w * h];
    for row in 0..h {
        for col in 0..w {
            let Some(z) = r.value(row, col) else {
                continue;
            };
            let mut best = (0usize, 0.0f64);
            for code in 1..=8 {
                let Some((nr, nc)) = neighbor(row, col, code, w, h) else {
                    continue;
                };
                let Some(zn) = r.value(nr, nc) else {
                    continue;
                };
                let (drow, dcol) = D8_OFFSETS[code - 1];
                let dist = match (drow, dcol) {
                    (0, _) => dx,
                    (_, 0) => dy,
                    _ => diag,
                };
                let gradient = (z - zn) / dist;
                if gradient > best.1 {
                    best = (code, gradient);
                }
            }
            dirs[row * w + col] = best.0 as f64;
        }
    }
    FeatureLayer::new(
        "drainage_direction",
        dem.source,
        RasterDataset {
            width: w,
            height: h,
            transform: r.transform,
            values: dirs,
            nodata: Some(NODATA),
            kind: RasterKind::Categorical,
            crs_code: r.crs_code.clone(),
        },
    )
}

/// Number of upstream cells draining through each cell, excluding itself.
///
/// Processes cells in topological order (Kahn); a direction pointing off the
/// grid or into nodata ends the path there. Fails on codes outside 0..=8 or
/// on cycles.
pub fn flow_accumulation(dirs: &FeatureLayer) -> Result<FeatureLayer> {
    let r = &dirs.raster;
    let (w, h) = (r.width, r.height);
    let n = w * h;
    let mut downstream: Vec<Option<usize>> = vec![None; n];
    let mut valid = vec![false; n];
    for row in 0..h {
        for col in 0..w {
            let Some(v) = r.value(row, col) else {
                continue;
            };
            if v.fract() != 0.0 || !(0.0..=8.0).contains(&v) {
                return Err(Error::Raster(format!(
                    "drainage direction {v} at ({row}, {col}) is not a D8 code"
                )));
            }
            valid[row * w + col] = true;
            let code = v as usize;
            if code > 0 {
                downstream[row * w + col] = neighbor(row, col, code, w, h).map(|(nr, nc)| nr * w + nc);
            }
        }
    }
    for d in downstream.iter_mut() {
        if d.is_some_and(|d| !valid[d]) {
            *d = None;
        }
    }
    let mut indegree = vec![0u32; n];
    for d in downstream.iter().flatten() {
        indegree[*d] += 1;
    }
    let mut acc = vec![0.0f64; n];
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| valid[i] && indegree[i] == 0).collect();
    let mut processed = 0usize;
    while let Some(i) = queue.pop_front() {
        processed += 1;
        if let Some(d) = downstream[i] {
            acc[d] += acc[i] + 1.0;
            indegree[d] -= 1;
            if indegree[d] == 0 {
                queue.push_back(d);
            }
        }
    }
    let n_valid = valid.iter().filter(|v| **v).count();
    if processed != n_valid {
        return Err(Error::Raster(format!(
            "drainage directions contain a cycle ({} cells never drained)",
            n_valid - processed
        )));
    }
    let values = (0..n).map(|i| if valid[i] { acc[i] } else { NODATA }).collect();
    Ok(FeatureLayer::new(
        "flow_accumulation",
        dirs.source,
        RasterDataset {
            width: w,
            height: h,
            transform: r.transform,
            values,
            nodata: Some(NODATA),
            kind: RasterKind::Continuous,
            crs_code: r.crs_code.clone(),
        },
    ))
}
