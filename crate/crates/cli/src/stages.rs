//! Pipeline stages. Each stage reads the previous stage's files from the
//! output directory, so any stage can be rerun on its own.
//!
//! Output layout:
//!
//! ```text
//! out/features/mask.tif                 grid mask (1 inside the park)
//! out/features/<name>.tif               static feature layers
//! out/features/<name>/<YYYYQn>.tif      quarterly dynamic layers
//! out/features/catalog.json             column order, sources, quarters
//! out/model-<year>-<condition>.json     trained ensembles
//! out/risk-<year>-<condition>-e<e>.tif  risk at effort e (+ .png preview)
//! out/roughness.csv                     roughness of each risk map
//! out/metrics.csv                       test AUC per (year, condition)
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use poachgrid_core::dataset::{
    assemble, layers_for_quarter, read_activities, read_efforts, FeatureSpec, Temporality,
};
use poachgrid_core::eval::{evaluate_model, prepare_split, roughness, train_cell, with_averages, write_metrics};
use poachgrid_core::geoformats::{read_geotiff, read_shapefile, write_geotiff};
use poachgrid_core::grid::build_grid;
use poachgrid_core::model::{ensemble_from_json, ensemble_to_json, predict_risk_map};
use poachgrid_core::rasterops::{
    d8_flow_direction, distance_to_cells, distance_to_geometries, flow_accumulation, resample_to_grid, slope_aspect,
    standardize, standardize_pooled, CellPredicate,
};
use poachgrid_core::synth::{generate_park, paths, SynthConfig, DYNAMIC_NAMES};
use poachgrid_core::temporal::{aggregate_quarters, TimeStampedLayer};
use poachgrid_core::{
    Condition, FeatureCatalog, FeatureInput, FeatureLayer, IWareEnsemble, ObservationTable, ParkGrid, Quarter,
    RasterDataset, RasterKind, Source, TrainConfig, YearMonth, NODATA,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{
    CellTest, DeriveOp, DynamicFeature, LoadedConfig, PipelineConfig, StaticFeature, StaticInput, CONFIG_VERSION,
};
use crate::error::{CliError, CliResult, StageExt};
use crate::render::risk_png;

pub const FEATURES_DIR: &str = "features";
pub const MASK_FILE: &str = "mask.tif";
pub const CATALOG_FILE: &str = "catalog.json";
pub const METRICS_FILE: &str = "metrics.csv";
pub const ROUGHNESS_FILE: &str = "roughness.csv";

pub fn model_file(year: i32, condition: Condition) -> String {
    format!("model-{year}-{condition}.json")
}

pub fn risk_stem(year: i32, condition: Condition, effort: f64) -> String {
    format!("risk-{year}-{condition}-e{effort}")
}

fn read_bytes(stage: &str, path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).input_err(stage, path)
}

fn write_file(stage: &str, path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).internal_err(stage)?;
    }
    fs::write(path, bytes).map_err(|e| CliError::internal(stage, format!("{}: {e}", path.display())))
}

fn stamp(mut layer: FeatureLayer, name: &str, source: Source, crs: &str) -> FeatureLayer {
    layer.name = name.to_string();
    layer.source = source;
    layer.raster.crs_code = crs.to_string();
    layer
}

// ---------------------------------------------------------------- synth

/// Generates a synthetic park next to `config_path` and writes a pipeline
/// config for it.
pub fn synth(config_path: &Path, seed: Option<u64>) -> CliResult<()> {
    const STAGE: &str = "synth";
    let mut cfg = SynthConfig::default();
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let dir = config_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let park = generate_park(&cfg).internal_err(STAGE)?;
    fs::create_dir_all(&dir).internal_err(STAGE)?;
    park.write(&dir).internal_err(STAGE)?;
    let pipeline = synth_pipeline_config(&cfg, seed.unwrap_or(0));
    let text = serde_json::to_string_pretty(&pipeline).internal_err(STAGE)?;
    write_file(STAGE, config_path, text.as_bytes())
}

/// The pipeline config matching the files [`SynthPark::write`] produces.
///
/// [`SynthPark::write`]: poachgrid_core::synth::SynthPark::write
pub fn synth_pipeline_config(cfg: &SynthConfig, train_seed: u64) -> PipelineConfig {
    let rs = Source::RemoteSensing;
    let feature = |name: &str, source, input| StaticFeature { name: name.into(), source, input };
    let derive = |op| StaticInput::Derive { op, from: "elevation".into() };
    PipelineConfig {
        version: CONFIG_VERSION,
        park: "synthetic".into(),
        crs: cfg.crs.clone(),
        boundary: paths::BOUNDARY.into(),
        resolution: cfg.resolution,
        static_features: vec![
            feature("roads", Source::Park, StaticInput::Vector { path: paths::ROADS.into() }),
            feature("park_rivers", Source::Park, StaticInput::Vector { path: paths::PARK_RIVERS.into() }),
            feature(
                "elevation",
                rs,
                StaticInput::Raster { path: paths::ELEVATION.into(), kind: RasterKind::Continuous },
            ),
            feature("slope", rs, derive(DeriveOp::Slope)),
            feature("aspect", rs, derive(DeriveOp::Aspect)),
            feature("drainage_direction", rs, derive(DeriveOp::DrainageDirection)),
            feature("flow_accumulation", rs, derive(DeriveOp::FlowAccumulation)),
            feature(
                "rivers",
                rs,
                StaticInput::CellDistance {
                    path: paths::RIVERS.into(),
                    kind: RasterKind::Continuous,
                    test: CellTest::AtLeast(0.1),
                },
            ),
            feature(
                "land_cover",
                rs,
                StaticInput::Raster { path: paths::LAND_COVER.into(), kind: RasterKind::Categorical },
            ),
        ],
        dynamic_features: DYNAMIC_NAMES
            .iter()
            .map(|n| DynamicFeature {
                name: n.to_string(),
                source: rs,
                dir: PathBuf::from(paths::DYNAMIC_DIR).join(n),
                kind: RasterKind::Continuous,
            })
            .collect(),
        efforts: paths::EFFORTS.into(),
        activities: paths::ACTIVITIES.into(),
        test_years: vec![cfg.last_year()],
        conditions: Condition::ALL.to_vec(),
        effort_thresholds: vec![1.0, 3.0],
        standardize: false,
        train: TrainConfig { seed: train_seed, ..Default::default() },
        output: "out".into(),
    }
}

// ------------------------------------------------------------ featurize

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogFile {
    pub version: u32,
    pub park: String,
    pub quarters: Vec<Quarter>,
    pub features: FeatureCatalog,
}

fn static_layer(
    lc: &LoadedConfig,
    grid: &ParkGrid,
    f: &StaticFeature,
    rasters: &BTreeMap<String, FeatureLayer>,
) -> CliResult<FeatureLayer> {
    const STAGE: &str = "featurize";
    let ctx = |e: poachgrid_core::Error| CliError::input(STAGE, format!("feature {:?}: {e}", f.name));
    let layer = match &f.input {
        StaticInput::Vector { path } => {
            let p = lc.resolve(path);
            let v = read_shapefile(&read_bytes(STAGE, &p)?).input_err(STAGE, &p)?;
            distance_to_geometries(grid, &v, &f.name, f.source).map_err(ctx)?
        }
        StaticInput::Raster { path, kind } => {
            let p = lc.resolve(path);
            let r = read_geotiff(&read_bytes(STAGE, &p)?).input_err(STAGE, &p)?;
            resample_to_grid(&r, grid, *kind, &f.name, f.source).map_err(ctx)?
        }
        StaticInput::Derive { op, from } => {
            let base = &rasters[from];
            match op {
                DeriveOp::Slope => slope_aspect(base).0,
                DeriveOp::Aspect => slope_aspect(base).1,
                DeriveOp::DrainageDirection => d8_flow_direction(base),
                DeriveOp::FlowAccumulation => flow_accumulation(&d8_flow_direction(base)).map_err(ctx)?,
            }
        }
        StaticInput::CellDistance { path, kind, test } => {
            let p = lc.resolve(path);
            let r = read_geotiff(&read_bytes(STAGE, &p)?).input_err(STAGE, &p)?;
            let on_grid = resample_to_grid(&r, grid, *kind, &f.name, f.source).map_err(ctx)?;
            let predicate = match *test {
                CellTest::AtLeast(t) => CellPredicate::AtLeast(t),
                CellTest::Equals(v) => CellPredicate::Equals(v),
            };
            distance_to_cells(grid, &on_grid, predicate, &f.name, f.source).map_err(ctx)?
        }
    };
    Ok(stamp(layer, &f.name, f.source, &lc.config.crs))
}

fn dynamic_layers(
    lc: &LoadedConfig,
    grid: &ParkGrid,
    f: &DynamicFeature,
    quarters: &[Quarter],
) -> CliResult<BTreeMap<Quarter, FeatureLayer>> {
    const STAGE: &str = "featurize";
    let dir = lc.resolve(&f.dir);
    let entries = fs::read_dir(&dir).input_err(STAGE, &dir)?;
    let mut files: Vec<(YearMonth, PathBuf)> = Vec::new();
    for e in entries {
        let p = e.input_err(STAGE, &dir)?.path();
        if p.extension().and_then(|s| s.to_str()) != Some("tif") {
            continue;
        }
        let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let ym: YearMonth = stem
            .parse()
            .map_err(|_| CliError::input(STAGE, format!("{}: file name must be YYYY-MM.tif", p.display())))?;
        if quarters.contains(&ym.quarter()) {
            files.push((ym, p));
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(CliError::input(
            STAGE,
            format!("{}: no monthly layers for {}..{}", dir.display(), quarters[0], quarters[quarters.len() - 1]),
        ));
    }
    let monthly = files
        .par_iter()
        .map(|(ym, p)| {
            let r = read_geotiff(&read_bytes(STAGE, p)?).input_err(STAGE, p)?;
            let layer = resample_to_grid(&r, grid, f.kind, &f.name, f.source).input_err(STAGE, p)?;
            Ok(TimeStampedLayer { timestamp: *ym, layer })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let by_q = aggregate_quarters(&monthly).data_err(STAGE)?;
    Ok(by_q
        .into_iter()
        .map(|(q, l)| (q, stamp(l, &f.name, f.source, &lc.config.crs)))
        .collect())
}

pub fn featurize(lc: &LoadedConfig) -> CliResult<()> {
    const STAGE: &str = "featurize";
    let cfg = &lc.config;
    let specs: Vec<FeatureSpec> = cfg
        .static_features
        .iter()
        .map(|f| FeatureSpec {
            name: f.name.clone(),
            source: f.source,
            temporality: Temporality::Static,
            kind: static_kind(f),
        })
        .chain(cfg.dynamic_features.iter().map(|f| FeatureSpec {
            name: f.name.clone(),
            source: f.source,
            temporality: Temporality::Dynamic,
            kind: f.kind,
        }))
        .collect();
    let catalog = FeatureCatalog::new(specs).map_err(|e| CliError::config(STAGE, e.to_string()))?;

    let boundary_path = lc.resolve(&cfg.boundary);
    let boundary = read_shapefile(&read_bytes(STAGE, &boundary_path)?).input_err(STAGE, &boundary_path)?;
    let grid = build_grid(&boundary, cfg.resolution).input_err(STAGE, &boundary_path)?;
    let (first, last) = cfg.year_span();
    let quarters = Quarter::span(first, last);

    let mut rasters: BTreeMap<String, FeatureLayer> = BTreeMap::new();
    let mut statics = Vec::new();
    for f in &cfg.static_features {
        let layer = static_layer(lc, &grid, f, &rasters)?;
        if matches!(f.input, StaticInput::Raster { .. }) {
            rasters.insert(f.name.clone(), layer.clone());
        }
        statics.push(layer);
    }
    let mut dynamics = Vec::new();
    for f in &cfg.dynamic_features {
        dynamics.push(dynamic_layers(lc, &grid, f, &quarters)?);
    }
    if cfg.standardize {
        statics = standardize(&statics);
        for d in &mut dynamics {
            let keys: Vec<Quarter> = d.keys().copied().collect();
            let z = standardize_pooled(&d.values().cloned().collect::<Vec<_>>());
            *d = keys.into_iter().zip(z).collect();
        }
    }

    let dir = lc.output_dir().join(FEATURES_DIR);
    if dir.exists() {
        fs::remove_dir_all(&dir).internal_err(STAGE)?;
    }
    let mut mask = grid.mask_raster();
    mask.crs_code = cfg.crs.clone();
    write_file(STAGE, &dir.join(MASK_FILE), &write_geotiff(&mask))?;
    for l in &statics {
        write_file(STAGE, &dir.join(format!("{}.tif", l.name)), &write_geotiff(&l.raster))?;
    }
    for (f, d) in cfg.dynamic_features.iter().zip(&dynamics) {
        for (q, l) in d {
            write_file(STAGE, &dir.join(&f.name).join(format!("{q}.tif")), &write_geotiff(&l.raster))?;
        }
    }
    let file = CatalogFile { version: 1, park: cfg.park.clone(), quarters, features: catalog };
    let text = serde_json::to_string_pretty(&file).internal_err(STAGE)?;
    write_file(STAGE, &dir.join(CATALOG_FILE), text.as_bytes())
}

fn static_kind(f: &StaticFeature) -> RasterKind {
    match &f.input {
        StaticInput::Raster { kind, .. } => *kind,
        StaticInput::Derive { op: DeriveOp::DrainageDirection, .. } => RasterKind::Categorical,
        _ => RasterKind::Continuous,
    }
}

// ------------------------------------------------------- shared loading

/// Features written by `featurize`, read back.
pub struct Features {
    pub grid: ParkGrid,
    pub catalog: CatalogFile,
    pub inputs: Vec<FeatureInput>,
}

fn missing_stage(stage: &str, path: &Path, producer: &str) -> CliError {
    CliError::input(
        stage,
        format!("{} not found; run `poachgrid {producer}` first", path.display()),
    )
}

pub fn load_features(lc: &LoadedConfig, stage: &str) -> CliResult<Features> {
    let dir = lc.output_dir().join(FEATURES_DIR);
    let catalog_path = dir.join(CATALOG_FILE);
    if !catalog_path.exists() {
        return Err(missing_stage(stage, &catalog_path, "featurize"));
    }
    let catalog: CatalogFile = serde_json::from_slice(&read_bytes(stage, &catalog_path)?).input_err(stage, &catalog_path)?;
    let read_raster = |p: &Path| -> CliResult<RasterDataset> {
        read_geotiff(&read_bytes(stage, p)?).input_err(stage, p)
    };
    let mask_path = dir.join(MASK_FILE);
    let mask = read_raster(&mask_path)?;
    let flags = mask.values.iter().map(|&v| mask.is_valid(v) && v == 1.0).collect();
    let grid = ParkGrid::from_mask(mask.transform, mask.width, mask.height, flags).input_err(stage, &mask_path)?;
    let mut inputs = Vec::new();
    for spec in catalog.features.entries() {
        match spec.temporality {
            Temporality::Static => {
                let r = read_raster(&dir.join(format!("{}.tif", spec.name)))?;
                inputs.push(FeatureInput::Static(FeatureLayer::new(spec.name.clone(), spec.source, r)));
            }
            Temporality::Dynamic => {
                let mut quarters = BTreeMap::new();
                for q in &catalog.quarters {
                    let p = dir.join(&spec.name).join(format!("{q}.tif"));
                    if p.exists() {
                        quarters.insert(*q, FeatureLayer::new(spec.name.clone(), spec.source, read_raster(&p)?));
                    }
                }
                inputs.push(FeatureInput::Dynamic {
                    name: spec.name.clone(),
                    source: spec.source,
                    kind: spec.kind,
                    quarters,
                });
            }
        }
    }
    Ok(Features { grid, catalog, inputs })
}

/// Features joined with the patrol records.
pub fn load_table(lc: &LoadedConfig, features: &Features, stage: &str) -> CliResult<ObservationTable> {
    let e_path = lc.resolve(&lc.config.efforts);
    let a_path = lc.resolve(&lc.config.activities);
    let efforts = read_efforts(read_bytes(stage, &e_path)?.as_slice()).input_err(stage, &e_path)?;
    let activities = read_activities(read_bytes(stage, &a_path)?.as_slice()).input_err(stage, &a_path)?;
    let (table, _) = assemble(&features.grid, &features.inputs, &efforts, &activities, &features.catalog.quarters)
        .data_err(stage)?;
    Ok(table)
}

fn cells(cfg: &PipelineConfig) -> Vec<(i32, Condition)> {
    cfg.test_years
        .iter()
        .flat_map(|&y| cfg.conditions.iter().map(move |&c| (y, c)))
        .collect()
}

fn load_model(lc: &LoadedConfig, stage: &str, year: i32, condition: Condition) -> CliResult<IWareEnsemble> {
    let p = lc.output_dir().join(model_file(year, condition));
    if !p.exists() {
        return Err(missing_stage(stage, &p, "train"));
    }
    let text = String::from_utf8(read_bytes(stage, &p)?).input_err(stage, &p)?;
    ensemble_from_json(&text).input_err(stage, &p)
}

// ---------------------------------------------------------------- train

pub fn train(lc: &LoadedConfig) -> CliResult<()> {
    const STAGE: &str = "train";
    let features = load_features(lc, STAGE)?;
    let table = load_table(lc, &features, STAGE)?;
    let out = lc.output_dir();
    let models = cells(&lc.config)
        .par_iter()
        .map(|&(y, c)| {
            let (ens, _) = train_cell(&table, y, c, &lc.config.train).data_err(STAGE)?;
            Ok((model_file(y, c), ensemble_to_json(&ens)))
        })
        .collect::<CliResult<Vec<_>>>()?;
    for (name, text) in models {
        write_file(STAGE, &out.join(name), text.as_bytes())?;
    }
    Ok(())
}

// -------------------------------------------------------------- predict

/// Risk at effort `e` averaged over the quarters of `year`.
pub fn year_risk_map(
    ens: &IWareEnsemble,
    features: &Features,
    year: i32,
    effort: f64,
) -> poachgrid_core::Result<FeatureLayer> {
    let quarters: Vec<Quarter> = features.catalog.quarters.iter().copied().filter(|q| q.year == year).collect();
    let mut sum: Option<FeatureLayer> = None;
    for &q in &quarters {
        let map = predict_risk_map(ens, &features.grid, &layers_for_quarter(&features.inputs, q), effort)?;
        match &mut sum {
            None => sum = Some(map),
            Some(s) => {
                for (a, b) in s.raster.values.iter_mut().zip(&map.raster.values) {
                    if *a != NODATA {
                        *a += b;
                    }
                }
            }
        }
    }
    let mut map = sum.ok_or_else(|| poachgrid_core::Error::Model(format!("no quarters for year {year}")))?;
    let n = quarters.len() as f64;
    for v in map.raster.values.iter_mut().filter(|v| **v != NODATA) {
        *v /= n;
    }
    Ok(map)
}

pub fn predict(lc: &LoadedConfig, efforts: &[f64]) -> CliResult<()> {
    const STAGE: &str = "predict";
    let cfg = &lc.config;
    let efforts: Vec<f64> = if efforts.is_empty() { cfg.effort_thresholds.clone() } else { efforts.to_vec() };
    if let Some(e) = efforts.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
        return Err(CliError::config(STAGE, format!("effort {e} must be a nonnegative number")));
    }
    let features = load_features(lc, STAGE)?;
    let out = lc.output_dir();
    let mut models = Vec::new();
    for (y, c) in cells(cfg) {
        models.push((y, c, load_model(lc, STAGE, y, c)?));
    }
    let jobs: Vec<(usize, f64)> = (0..models.len()).flat_map(|m| efforts.iter().map(move |&e| (m, e))).collect();
    let maps = jobs
        .par_iter()
        .map(|&(m, e)| {
            let (y, c, ens) = &models[m];
            let mut map = year_risk_map(ens, &features, *y, e).data_err(STAGE)?;
            map.raster.crs_code = cfg.crs.clone();
            let rough = roughness(&map).data_err(STAGE)?;
            Ok((risk_stem(*y, *c, e), map, *y, *c, e, rough))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut rough_csv = String::from("park,test_year,condition,effort,roughness\n");
    for (stem, map, y, c, e, rough) in &maps {
        write_file(STAGE, &out.join(format!("{stem}.tif")), &write_geotiff(&map.raster))?;
        write_file(STAGE, &out.join(format!("{stem}.png")), &risk_png(&map.raster))?;
        rough_csv.push_str(&format!("{},{y},{c},{e},{rough:.6}\n", cfg.park));
    }
    write_file(STAGE, &out.join(ROUGHNESS_FILE), rough_csv.as_bytes())
}

// ------------------------------------------------------------- evaluate

pub fn evaluate(lc: &LoadedConfig) -> CliResult<()> {
    const STAGE: &str = "evaluate";
    let cfg = &lc.config;
    let mut models = Vec::new();
    for (y, c) in cells(cfg) {
        models.push((y, c, load_model(lc, STAGE, y, c)?));
    }
    let features = load_features(lc, STAGE)?;
    let table = load_table(lc, &features, STAGE)?;
    let rows = models
        .par_iter()
        .map(|(y, c, ens)| {
            let (_, test) = prepare_split(&table, *y, *c).data_err(STAGE)?;
            evaluate_model(&cfg.park, ens, &test, *y, *c).data_err(STAGE)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut buf = Vec::new();
    write_metrics(&with_averages(rows), &mut buf).internal_err(STAGE)?;
    write_file(STAGE, &lc.output_dir().join(METRICS_FILE), &buf)
}

pub fn run(lc: &LoadedConfig, efforts: &[f64]) -> CliResult<()> {
    featurize(lc)?;
    train(lc)?;
    predict(lc, efforts)?;
    evaluate(lc)
}
