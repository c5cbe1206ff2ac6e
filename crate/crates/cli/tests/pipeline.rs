mod common;

use std::fs;

use common::*;
use poachgrid_cli::config::LoadedConfig;
use poachgrid_cli::stages::{self, model_file, risk_stem};
use poachgrid_core::eval::read_metrics;
use poachgrid_core::geoformats::read_geotiff;
use poachgrid_core::model::ensemble_from_json;
use poachgrid_core::{Condition, YearLabel};

#[test]
fn featurize_alone_writes_only_features() {
    let dir = tempfile::tempdir().unwrap();
    let config = synth_park(dir.path());
    ok(&["featurize", "--config", config.to_str().unwrap()], None);
    let out = dir.path().join("out");
    let entries: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert_eq!(entries, vec!["features".to_string()]);

    let files = tree(&out.join("features"));
    let mask = read_geotiff(&files[&std::path::PathBuf::from("mask.tif")]).unwrap();
    let mut tifs = 0;
    for (path, bytes) in &files {
        if path.extension().is_some_and(|e| e == "tif") {
            let r = read_geotiff(bytes).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert_eq!(r.transform, mask.transform, "{}", path.display());
            assert_eq!((r.width, r.height), (mask.width, mask.height));
            tifs += 1;
        }
    }
    // mask + 9 static + 2 dynamic features over 16 quarters
    assert_eq!(tifs, 1 + 9 + 2 * 16);
    assert!(files.contains_key(&std::path::PathBuf::from("catalog.json")));
}

#[test]
fn stage_errors_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let config = synth_park(dir.path());
    let cfg = config.to_str().unwrap();

    // evaluate before featurize/train
    let out = poachgrid(&["evaluate", "--config", cfg], None);
    assert_eq!(out.status.code(), Some(3));
    let report = error_report(&out);
    assert_eq!(report["error"]["stage"], "evaluate");
    assert!(report["error"]["message"].as_str().unwrap().contains("poachgrid train"), "{report}");

    // predict after featurize but before train
    ok(&["featurize", "--config", cfg], None);
    let out = poachgrid(&["predict", "--config", cfg], None);
    assert_eq!(out.status.code(), Some(3));
    assert!(error_report(&out)["error"]["message"].as_str().unwrap().contains("poachgrid train"));

    // missing shapefile
    edit_config(&config, |v| v["boundary"] = "missing/park.shp".into());
    let out = poachgrid(&["featurize", "--config", cfg], None);
    assert_eq!(out.status.code(), Some(3));
    let report = error_report(&out);
    assert_eq!(report["error"]["kind"], "input");
    assert_eq!(report["error"]["stage"], "featurize");
    assert!(report["error"]["message"].as_str().unwrap().contains("missing/park.shp"), "{report}");

    // malformed config
    edit_config(&config, |v| v["version"] = 9.into());
    let out = poachgrid(&["run", "--config", cfg], None);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_report(&out)["error"]["kind"], "config");

    let out = poachgrid(&["run", "--config", dir.path().join("nope.json").to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));

    let out = poachgrid(&["frobnicate", "--config", cfg], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = synth_park(dir.path());
    let mut cmd = std::process::Command::new(BIN);
    cmd.args(["featurize", "--config", config.to_str().unwrap()]).env("POACHGRID_THREADS", "zero");
    assert_eq!(cmd.output().unwrap().status.code(), Some(2));
}

#[test]
fn full_run_then_predict_at_two_efforts() {
    let dir = tempfile::tempdir().unwrap();
    let config = synth_park(dir.path());
    let cfg = config.to_str().unwrap();
    ok(&["run", "--config", cfg], None);
    let out = dir.path().join("out");

    let rows = read_metrics(fs::File::open(out.join("metrics.csv")).unwrap()).unwrap();
    let lc = LoadedConfig::load(&config).unwrap();
    let years = &lc.config.test_years;
    assert_eq!(rows.len(), (years.len() + 1) * 3);
    for y in years {
        for c in Condition::ALL {
            assert!(rows.iter().any(|r| r.test_year == YearLabel::Year(*y) && r.condition == c));
            assert!(out.join(risk_stem(*y, c, 1.0) + ".tif").exists());
            assert!(out.join(risk_stem(*y, c, 1.0) + ".png").exists());
        }
    }

    let (e1, e2) = (0.5, 4.0);
    ok(&["predict", "--config", cfg, "--effort", "0.5", "--effort", "4"], None);
    let year = years[0];
    for c in Condition::ALL {
        let a = read_geotiff(&fs::read(out.join(risk_stem(year, c, e1) + ".tif")).unwrap()).unwrap();
        let b = read_geotiff(&fs::read(out.join(risk_stem(year, c, e2) + ".tif")).unwrap()).unwrap();
        assert_eq!(a.transform, b.transform);
        assert!(a.values.iter().zip(&b.values).all(|(x, y)| (*x == a.nodata.unwrap()) == (*y == b.nodata.unwrap())));
        let ens = ensemble_from_json(&fs::read_to_string(out.join(model_file(year, c))).unwrap()).unwrap();
        let (q1, q2) = (ens.qualified(e1), ens.qualified(e2));
        assert!(q1.iter().all(|m| q2.contains(m)), "{q1:?} not within {q2:?}");
    }
}

#[test]
fn standardizing_features_keeps_auc() {
    let dir = tempfile::tempdir().unwrap();
    let config = synth_park(dir.path());
    let cfg = config.to_str().unwrap();
    let read = |name: &str| {
        ok(&["run", "--config", cfg], None);
        let rows = read_metrics(fs::File::open(dir.path().join(name).join("metrics.csv")).unwrap()).unwrap();
        rows.into_iter().map(|r| (r.condition, r.auc)).collect::<Vec<_>>()
    };
    let plain = read("out");
    edit_config(&config, |v| {
        v["standardize"] = true.into();
        v["output"] = "out-z".into();
    });
    let z = read("out-z");
    assert_eq!(plain.len(), z.len());
    for ((c1, a1), (c2, a2)) in plain.iter().zip(&z) {
        assert_eq!(c1, c2);
        assert!((a1 - a2).abs() < 1e-9, "{c1}: {a1} vs {a2}");
    }
}

#[test]
fn seed_flag_overrides_training_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config = synth_park(dir.path());
    let cfg = config.to_str().unwrap();
    ok(&["featurize", "--config", cfg], None);
    let lc = LoadedConfig::load(&config).unwrap();
    let year = lc.config.test_years[0];
    let model = || fs::read_to_string(lc.output_dir().join(model_file(year, Condition::Baseline))).unwrap();
    ok(&["train", "--config", cfg], None);
    let a = model();
    ok(&["train", "--config", cfg, "--seed", "12345"], None);
    let b = model();
    ok(&["train", "--config", cfg], None);
    assert_ne!(a, b);
    assert_eq!(a, model());
}

#[test]
fn stages_are_callable_as_a_library() {
    let dir = tempfile::tempdir().unwrap();
    let config = synth_park(dir.path());
    let lc = LoadedConfig::load(&config).unwrap();
    stages::featurize(&lc).unwrap();
    let features = stages::load_features(&lc, "test").unwrap();
    let table = stages::load_table(&lc, &features, "test").unwrap();
    assert_eq!(table.catalog.len(), 11);
    assert!(table.rows.iter().any(|r| r.label == 1));
}
