//! Deterministic synthetic park.
//!
//! Everything is a pure function of [`SynthConfig`]. Each component draws
//! from its own ChaCha8 stream (`seed`, stream id), so changing one part of
//! the generator never shifts the random numbers of another.
//!
//! Terrain is three octaves of bilinear lattice noise (lattice spacing 8, 4
//! and 2 park cells, amplitudes 1, 0.5, 0.25) on top of a northward tilt.
//! Rivers are DEM pixels whose D8 accumulation is above the 95th percentile.
//! True attack probability is `logistic(b + w . z)` where `z` are the
//! standardized grid features the pipeline itself derives; observed labels
//! require an attack and a detection with probability `1 - exp(-lambda * effort)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{write_activities, write_efforts, ActivityRecord, EffortRecord};
use crate::error::{Error, Result};
use crate::geoformats::{
    write_geotiff, write_shapefile, GeoTransform, Geometry, Point2, RasterDataset, RasterKind,
    VectorDataset,
};
use crate::grid::{build_grid, ParkGrid};
use crate::rasterops::{
    d8_flow_direction, distance_to_geometries, flow_accumulation, resample_to_grid, slope_aspect, standardize,
    standardize_pooled, FeatureLayer, Source, D8_OFFSETS,
};
use crate::temporal::{aggregate_quarters, Quarter, TimeStampedLayer, YearMonth};
use crate::NODATA;

const STREAM_DEM: u64 = 1;
const STREAM_NPP_FIELD: u64 = 2;
const STREAM_LAND_COVER: u64 = 3;
const STREAM_BOUNDARY: u64 = 4;
const STREAM_ROADS: u64 = 5;
const STREAM_DYNAMIC: u64 = 6;
const STREAM_EFFORT: u64 = 7;
const STREAM_OUTCOME: u64 = 8;
const STREAM_PLACEMENT: u64 = 9;

/// Cloud-gap rate for dynamic pixels.
const GAP_RATE: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiskWeights {
    pub elevation: f64,
    pub slope: f64,
    pub river_distance: f64,
    pub road_distance: f64,
    pub npp: f64,
    pub temperature: f64,
    pub intercept: f64,
}

impl Default for RiskWeights {
    fn default() -> Self {
        Self {
            elevation: -0.8,
            slope: -0.3,
            river_distance: -0.9,
            road_distance: -0.5,
            npp: 0.8,
            temperature: 0.3,
            intercept: -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    /// Park cells per side.
    pub size: usize,
    pub years: usize,
    pub start_year: i32,
    /// Park grid resolution in meters.
    pub resolution: f64,
    pub dem_pixel: f64,
    pub dynamic_pixel: f64,
    pub weights: RiskWeights,
    /// Detection rate per unit of effort.
    pub detection_rate: f64,
    /// Patrol visits per quarter.
    pub effort_budget: usize,
    pub crs: String,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 20190601,
            size: 40,
            years: 4,
            start_year: 2016,
            resolution: 1000.0,
            dem_pixel: 250.0,
            dynamic_pixel: 500.0,
            weights: RiskWeights::default(),
            detection_rate: 0.7,
            effort_budget: 1200,
            crs: "EPSG:32736".into(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Dataset(format!("synth config: {m}")));
        if self.size < 8 {
            return bad(format!("size must be at least 8, got {}", self.size));
        }
        if self.years < 4 {
            return bad(format!("years must be at least 4, got {}", self.years));
        }
        if self.detection_rate.is_nan() || self.detection_rate <= 0.0 {
            return bad("detection_rate must be positive".into());
        }
        if self.effort_budget == 0 {
            return bad("effort_budget must be positive".into());
        }
        for (name, px) in [("dem_pixel", self.dem_pixel), ("dynamic_pixel", self.dynamic_pixel)] {
            let ratio = self.resolution / px;
            if !(px > 0.0 && ratio >= 1.0 && (ratio - ratio.round()).abs() < 1e-9) {
                return bad(format!("{name} must divide the resolution {}", self.resolution));
            }
        }
        Ok(())
    }

    pub fn first_year(&self) -> i32 {
        self.start_year
    }

    pub fn last_year(&self) -> i32 {
        self.start_year + self.years as i32 - 1
    }

    pub fn quarters(&self) -> Vec<Quarter> {
        Quarter::span(self.first_year(), self.last_year())
    }
}

/// Ground truth kept alongside the generated inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub quarters: Vec<Quarter>,
    /// Flat grid index of each masked cell, in cell-id order.
    pub cells: Vec<usize>,
    /// `p[q][cell]`: true attack probability.
    pub p: Vec<Vec<f64>>,
    pub attacks: Vec<Vec<u8>>,
    pub effort: Vec<Vec<f64>>,
    pub observed: Vec<Vec<u8>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub config: SynthConfig,
    pub grid: GridInfo,
    pub files: Vec<String>,
    pub truth: Truth,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridInfo {
    pub origin_x: f64,
    pub origin_y: f64,
    pub resolution: f64,
    pub width: usize,
    pub height: usize,
    pub n_masked: usize,
}

/// Relative paths of the files [`SynthPark::write`] produces.
pub mod paths {
    pub const BOUNDARY: &str = "boundary.shp";
    pub const ROADS: &str = "roads.shp";
    pub const PARK_RIVERS: &str = "park_rivers.shp";
    pub const ELEVATION: &str = "rasters/elevation.tif";
    pub const RIVERS: &str = "rasters/rivers.tif";
    pub const LAND_COVER: &str = "rasters/land_cover.tif";
    pub const DYNAMIC_DIR: &str = "dynamic";
    pub const EFFORTS: &str = "efforts.csv";
    pub const ACTIVITIES: &str = "activities.csv";
    pub const MANIFEST: &str = "manifest.json";
}

/// Names of the monthly dynamic products.
pub const DYNAMIC_NAMES: [&str; 2] = ["npp", "temperature"];

#[derive(Debug, Clone)]
pub struct SynthPark {
    pub config: SynthConfig,
    pub grid: ParkGrid,
    pub boundary: VectorDataset,
    pub roads: VectorDataset,
    pub park_rivers: VectorDataset,
    pub elevation: RasterDataset,
    /// 1 on river pixels, 0 elsewhere, at DEM resolution.
    pub rivers: RasterDataset,
    pub land_cover: RasterDataset,
    pub dynamic: BTreeMap<String, Vec<(YearMonth, RasterDataset)>>,
    pub efforts: Vec<EffortRecord>,
    pub activities: Vec<ActivityRecord>,
    pub truth: Truth,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(id);
    r
}

/// Bilinear value noise over a regular lattice.
struct Lattice {
    x0: f64,
    y0: f64,
    spacing: f64,
    nx: usize,
    values: Vec<f64>,
}

impl Lattice {
    fn new(rng: &mut ChaCha8Rng, x0: f64, y0: f64, extent: f64, spacing: f64) -> Self {
        let nx = (extent / spacing).ceil() as usize + 2;
        let values = (0..nx * nx).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        Self { x0, y0, spacing, nx, values }
    }

    fn at(&self, x: f64, y: f64) -> f64 {
        let fx = ((x - self.x0) / self.spacing).clamp(0.0, (self.nx - 1) as f64 - 1e-9);
        let fy = ((y - self.y0) / self.spacing).clamp(0.0, (self.nx - 1) as f64 - 1e-9);
        let (i, j) = (fx.floor() as usize, fy.floor() as usize);
        let (tx, ty) = (fx - i as f64, fy - j as f64);
        let v = |a: usize, b: usize| self.values[b * self.nx + a];
        let top = v(i, j) * (1.0 - tx) + v(i + 1, j) * tx;
        let bottom = v(i, j + 1) * (1.0 - tx) + v(i + 1, j + 1) * tx;
        top * (1.0 - ty) + bottom * ty
    }
}

/// Three octaves, spacing 8/4/2 park cells, persistence 0.5.
struct OctaveNoise(Vec<(Lattice, f64)>);

impl OctaveNoise {
    fn new(rng: &mut ChaCha8Rng, x0: f64, y0: f64, extent: f64, cell: f64) -> Self {
        let octaves = [(8.0, 1.0), (4.0, 0.5), (2.0, 0.25)]
            .iter()
            .map(|&(s, amp)| (Lattice::new(rng, x0, y0, extent, s * cell), amp))
            .collect();
        Self(octaves)
    }

    fn at(&self, p: Point2) -> f64 {
        self.0.iter().map(|(l, a)| a * l.at(p.x, p.y)).sum()
    }
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Regular raster covering the park square at `pixel` meters.
fn square_raster(cfg: &SynthConfig, pixel: f64, kind: RasterKind, f: impl FnMut(Point2) -> f64) -> RasterDataset {
    let extent = cfg.size as f64 * cfg.resolution;
    let n = (extent / pixel).round() as usize;
    let (x0, y_top) = origin(cfg);
    let t = GeoTransform::new(x0, y_top, pixel, pixel).expect("positive pixel size");
    let values = (0..n * n).map(|i| t.pixel_center(i / n, i % n)).map(f).collect();
    RasterDataset::new(n, n, t, values, Some(NODATA), kind)
        .expect("consistent raster")
        .with_crs(cfg.crs.clone())
}

/// Top-left corner of the park square.
fn origin(_cfg: &SynthConfig) -> (f64, f64) {
    (500_000.0, 9_100_000.0)
}

fn boundary_polygon(cfg: &SynthConfig) -> Result<VectorDataset> {
    let mut rng = stream(cfg.seed, STREAM_BOUNDARY);
    let extent = cfg.size as f64 * cfg.resolution;
    let (x0, y_top) = origin(cfg);
    let (cx, cy) = (x0 + extent / 2.0, y_top - extent / 2.0);
    let radius = 0.48 * extent;
    // clockwise outer ring
    let ring: Vec<Point2> = (0..12)
        .map(|k| {
            let a = -2.0 * PI * k as f64 / 12.0;
            let r = radius * (0.78 + 0.22 * rng.random::<f64>());
            Point2::new(cx + r * a.cos(), cy + r * a.sin())
        })
        .collect();
    VectorDataset::new(vec![Geometry::Polygon(vec![ring])])
}

fn road_network(cfg: &SynthConfig) -> Result<VectorDataset> {
    let mut rng = stream(cfg.seed, STREAM_ROADS);
    let extent = cfg.size as f64 * cfg.resolution;
    let (x0, y_top) = origin(cfg);
    let phase = rng.random::<f64>() * 2.0 * PI;
    let y_mid = y_top - extent * (0.35 + 0.3 * rng.random::<f64>());
    let east_west: Vec<Point2> = (0..=40)
        .map(|k| {
            let t = k as f64 / 40.0;
            Point2::new(x0 + t * extent, y_mid + 0.12 * extent * (2.6 * PI * t + phase).sin())
        })
        .collect();
    let phase2 = rng.random::<f64>() * 2.0 * PI;
    let x_mid = x0 + extent * (0.25 + 0.2 * rng.random::<f64>());
    let north_south: Vec<Point2> = (0..=20)
        .map(|k| {
            let t = k as f64 / 20.0;
            Point2::new(x_mid + 0.08 * extent * (2.0 * PI * t + phase2).sin(), y_top - t * (y_top - y_mid))
        })
        .collect();
    VectorDataset::new(vec![Geometry::Polyline(east_west), Geometry::Polyline(north_south)])
}

/// River pixels and the polylines joining each to its downstream river pixel.
fn river_network(dem: &RasterDataset) -> Result<(RasterDataset, VectorDataset)> {
    let dem_layer = FeatureLayer::new("elevation", Source::RemoteSensing, dem.clone());
    let dirs = d8_flow_direction(&dem_layer);
    let acc = flow_accumulation(&dirs)?;
    let mut sorted: Vec<f64> = acc.raster.values.clone();
    sorted.sort_by(f64::total_cmp);
    let p95 = sorted[((sorted.len() as f64 * 0.95).ceil() as usize).min(sorted.len()) - 1];
    let is_river: Vec<bool> = acc.raster.values.iter().map(|&v| v > p95).collect();
    let mut rivers = dem.clone();
    rivers.kind = RasterKind::Continuous;
    rivers.values = is_river.iter().map(|&r| if r { 1.0 } else { 0.0 }).collect();

    let (w, h) = (dem.width, dem.height);
    let mut segments = Vec::new();
    for row in 0..h {
        for col in 0..w {
            let i = row * w + col;
            let code = dirs.raster.values[i];
            if !is_river[i] || !(1.0..=8.0).contains(&code) {
                continue;
            }
            let (dr, dc) = D8_OFFSETS[code as usize - 1];
            let (nr, nc) = (row as isize + dr, col as isize + dc);
            if nr < 0 || nc < 0 || nr as usize >= h || nc as usize >= w {
                continue;
            }
            let (nr, nc) = (nr as usize, nc as usize);
            if is_river[nr * w + nc] {
                segments.push(Geometry::Polyline(vec![
                    dem.transform.pixel_center(row, col),
                    dem.transform.pixel_center(nr, nc),
                ]));
            }
        }
    }
    if segments.is_empty() {
        return Err(Error::Dataset("synthetic terrain produced no river segments".into()));
    }
    Ok((rivers, VectorDataset::new(segments)?))
}

fn random_day(rng: &mut ChaCha8Rng, q: Quarter) -> NaiveDate {
    let month = (q.index - 1) * 3 + 1 + rng.random_range(0..3u32);
    let day = rng.random_range(1..=28u32);
    NaiveDate::from_ymd_opt(q.year, month, day).expect("valid day")
}

fn random_point_in_cell(rng: &mut ChaCha8Rng, grid: &ParkGrid, flat: usize) -> Point2 {
    let c = grid.transform.pixel_center(flat / grid.width, flat % grid.width);
    let half = 0.45 * grid.resolution;
    Point2::new(
        c.x + (rng.random::<f64>() * 2.0 - 1.0) * half,
        c.y + (rng.random::<f64>() * 2.0 - 1.0) * half,
    )
}

/// Builds the whole synthetic park in memory.
pub fn generate_park(cfg: &SynthConfig) -> Result<SynthPark> {
    cfg.validate()?;
    let extent = cfg.size as f64 * cfg.resolution;
    let (x0, y_top) = origin(cfg);
    let y_bottom = y_top - extent;

    let boundary = boundary_polygon(cfg)?;
    let grid = build_grid(&boundary, cfg.resolution)?;
    let roads = road_network(cfg)?;

    let dem_noise = OctaveNoise::new(&mut stream(cfg.seed, STREAM_DEM), x0, y_bottom, extent, cfg.resolution);
    let elevation_at = |p: Point2| 1000.0 + 300.0 * dem_noise.at(p) + 0.01 * (p.y - y_bottom);
    let elevation = square_raster(cfg, cfg.dem_pixel, RasterKind::Continuous, elevation_at);
    let (rivers, park_rivers) = river_network(&elevation)?;

    let lc_noise = OctaveNoise::new(&mut stream(cfg.seed, STREAM_LAND_COVER), x0, y_bottom, extent, cfg.resolution);
    let land_cover = square_raster(cfg, cfg.dynamic_pixel, RasterKind::Categorical, |p| {
        match lc_noise.at(p) {
            v if v < -0.5 => 1.0,
            v if v < 0.0 => 2.0,
            v if v < 0.4 => 3.0,
            v if v < 0.8 => 4.0,
            _ => 5.0,
        }
    });

    let npp_field = OctaveNoise::new(&mut stream(cfg.seed, STREAM_NPP_FIELD), x0, y_bottom, extent, cfg.resolution);
    let mut dyn_rng = stream(cfg.seed, STREAM_DYNAMIC);
    let mut dynamic: BTreeMap<String, Vec<(YearMonth, RasterDataset)>> = BTreeMap::new();
    for year in cfg.first_year()..=cfg.last_year() {
        let year_shift = dyn_rng.random::<f64>() * 2.0 - 1.0;
        for month in 1..=12u32 {
            let ym = YearMonth::new(year, month)?;
            let season = (2.0 * PI * (month as f64 - 3.0) / 12.0).sin();
            let warm = (2.0 * PI * (month as f64 - 1.0) / 12.0).sin();
            let npp = square_raster(cfg, cfg.dynamic_pixel, RasterKind::Continuous, |p| {
                let s = npp_field.at(p);
                let v = 400.0 + 150.0 * s + 120.0 * season * (1.0 + 0.5 * s) + 25.0 * year_shift
                    + 30.0 * (dyn_rng.random::<f64>() * 2.0 - 1.0);
                if dyn_rng.random::<f64>() < GAP_RATE {
                    NODATA
                } else {
                    v
                }
            });
            let temperature = square_raster(cfg, cfg.dynamic_pixel, RasterKind::Continuous, |p| {
                let v = 24.0 - 0.006 * (elevation_at(p) - 1000.0) + 3.0 * warm + 0.4 * year_shift
                    + 0.5 * (dyn_rng.random::<f64>() * 2.0 - 1.0);
                if dyn_rng.random::<f64>() < GAP_RATE {
                    NODATA
                } else {
                    v
                }
            });
            dynamic.entry("npp".into()).or_default().push((ym, npp));
            dynamic.entry("temperature".into()).or_default().push((ym, temperature));
        }
    }

    // true risk from the grid features the pipeline derives
    let quarters = cfg.quarters();
    let elev_grid = resample_to_grid(&elevation, &grid, RasterKind::Continuous, "elevation", Source::RemoteSensing)?;
    let (slope, _) = slope_aspect(&elev_grid);
    let river_d = distance_to_geometries(&grid, &park_rivers, "park_rivers", Source::Park)?;
    let road_d = distance_to_geometries(&grid, &roads, "roads", Source::Park)?;
    let statics = standardize(&[elev_grid, slope, river_d, road_d.clone()]);
    let mut dyn_z: BTreeMap<&str, BTreeMap<Quarter, FeatureLayer>> = BTreeMap::new();
    for name in DYNAMIC_NAMES {
        let monthly: Vec<TimeStampedLayer> = dynamic[name]
            .iter()
            .map(|(ym, r)| {
                Ok(TimeStampedLayer {
                    timestamp: *ym,
                    layer: resample_to_grid(r, &grid, RasterKind::Continuous, name, Source::RemoteSensing)?,
                })
            })
            .collect::<Result<_>>()?;
        let by_q = aggregate_quarters(&monthly)?;
        let keys: Vec<Quarter> = by_q.keys().copied().collect();
        let z = standardize_pooled(&by_q.into_values().collect::<Vec<_>>());
        dyn_z.insert(name, keys.into_iter().zip(z).collect());
    }
    let w = &cfg.weights;
    let cells: Vec<usize> = grid.masked_indices().to_vec();
    let z_at = |l: &FeatureLayer, flat: usize| {
        let v = l.raster.values[flat];
        if l.raster.is_valid(v) {
            v
        } else {
            0.0
        }
    };
    let p: Vec<Vec<f64>> = quarters
        .iter()
        .map(|q| {
            cells
                .iter()
                .map(|&flat| {
                    let logit = w.intercept
                        + w.elevation * z_at(&statics[0], flat)
                        + w.slope * z_at(&statics[1], flat)
                        + w.river_distance * z_at(&statics[2], flat)
                        + w.road_distance * z_at(&statics[3], flat)
                        + w.npp * z_at(&dyn_z["npp"][q], flat)
                        + w.temperature * z_at(&dyn_z["temperature"][q], flat);
                    logistic(logit)
                })
                .collect()
        })
        .collect();

    // patrols favour cells near roads
    let access: Vec<f64> = cells.iter().map(|&f| 1.0 / (1.0 + road_d.raster.values[f] / 1000.0)).collect();
    let mut cumulative = Vec::with_capacity(access.len());
    let mut total = 0.0;
    for a in &access {
        total += a;
        cumulative.push(total);
    }
    let mut eff_rng = stream(cfg.seed, STREAM_EFFORT);
    let mut efforts = Vec::new();
    let mut effort = vec![vec![0.0; cells.len()]; quarters.len()];
    for (qi, &q) in quarters.iter().enumerate() {
        for _ in 0..cfg.effort_budget {
            let u = eff_rng.random::<f64>() * total;
            let id = cumulative.partition_point(|&c| c <= u).min(cells.len() - 1);
            let amount = 0.5 + eff_rng.random::<f64>();
            effort[qi][id] += amount;
            let at = random_point_in_cell(&mut eff_rng, &grid, cells[id]);
            efforts.push(EffortRecord::new(at.x, at.y, random_day(&mut eff_rng, q), amount)?);
        }
    }

    // outcome and placement draws happen for every cell so that the
    // detection rate never shifts other random numbers
    let mut out_rng = stream(cfg.seed, STREAM_OUTCOME);
    let mut place_rng = stream(cfg.seed, STREAM_PLACEMENT);
    let mut attacks = vec![vec![0u8; cells.len()]; quarters.len()];
    let mut observed = vec![vec![0u8; cells.len()]; quarters.len()];
    let mut activities = Vec::new();
    for (qi, &q) in quarters.iter().enumerate() {
        for (id, &flat) in cells.iter().enumerate() {
            let u_attack: f64 = out_rng.random();
            let u_detect: f64 = out_rng.random();
            let at = random_point_in_cell(&mut place_rng, &grid, flat);
            let date = random_day(&mut place_rng, q);
            let attack = u_attack < p[qi][id];
            let e = effort[qi][id];
            let detected = e > 0.0 && u_detect < 1.0 - (-cfg.detection_rate * e).exp();
            attacks[qi][id] = attack as u8;
            if attack && detected {
                observed[qi][id] = 1;
                activities.push(ActivityRecord { x: at.x, y: at.y, date });
            }
        }
    }

    Ok(SynthPark {
        config: cfg.clone(),
        grid,
        boundary,
        roads,
        park_rivers,
        elevation,
        rivers,
        land_cover,
        dynamic,
        efforts,
        activities,
        truth: Truth { quarters, cells, p, attacks, effort, observed },
    })
}

impl SynthPark {
    /// Writes every input file plus `manifest.json` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<String>> {
        let mut files: Vec<(String, Vec<u8>)> = vec![
            (paths::BOUNDARY.into(), write_shapefile(&self.boundary)),
            (paths::ROADS.into(), write_shapefile(&self.roads)),
            (paths::PARK_RIVERS.into(), write_shapefile(&self.park_rivers)),
            (paths::ELEVATION.into(), write_geotiff(&self.elevation)),
            (paths::RIVERS.into(), write_geotiff(&self.rivers)),
            (paths::LAND_COVER.into(), write_geotiff(&self.land_cover)),
        ];
        for (name, series) in &self.dynamic {
            for (ym, r) in series {
                files.push((format!("{}/{name}/{ym}.tif", paths::DYNAMIC_DIR), write_geotiff(r)));
            }
        }
        let mut buf = Vec::new();
        write_efforts(&mut buf, &self.efforts)?;
        files.push((paths::EFFORTS.into(), buf));
        let mut buf = Vec::new();
        write_activities(&mut buf, &self.activities)?;
        files.push((paths::ACTIVITIES.into(), buf));

        let names: Vec<String> = files.iter().map(|f| f.0.clone()).collect();
        let manifest = Manifest {
            format: "poachgrid-synth".into(),
            config: self.config.clone(),
            grid: GridInfo {
                origin_x: self.grid.transform.origin_x,
                origin_y: self.grid.transform.origin_y,
                resolution: self.grid.resolution,
                width: self.grid.width,
                height: self.grid.height,
                n_masked: self.grid.n_masked(),
            },
            files: names.clone(),
            truth: self.truth.clone(),
        };
        files.push((paths::MANIFEST.into(), serde_json::to_vec_pretty(&manifest)?));

        for (rel, bytes) in &files {
            let path = dir.join(rel);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(&path, bytes)?;
        }
        Ok(names)
    }

    /// Positive rate of observed labels over patrolled (cell, quarter) pairs.
    pub fn observed_positive_rate(&self) -> f64 {
        let (mut n, mut pos) = (0usize, 0usize);
        for (e, o) in self.truth.effort.iter().zip(&self.truth.observed) {
            for (&e, &o) in e.iter().zip(o) {
                if e > 0.0 {
                    n += 1;
                    pos += o as usize;
                }
            }
        }
        pos as f64 / n.max(1) as f64
    }
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(dir.join(paths::MANIFEST))?;
    Ok(serde_json::from_str(&text)?)
}
