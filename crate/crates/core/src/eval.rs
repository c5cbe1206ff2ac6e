//! ROC-AUC, the conditions-by-years experiment and risk-map roughness.

use std::fmt;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{select_feature_set, split_by_year, Condition, ObservationTable};
use crate::error::{Error, Result};
use crate::model::{train_iware, IWareEnsemble, TrainConfig};
use crate::rasterops::FeatureLayer;

/// Mann-Whitney AUC with midranks for ties.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Eval(format!("{} scores for {} labels", scores.len(), labels.len())));
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::Eval(format!("score {i} is NaN")));
    }
    if let Some(i) = labels.iter().position(|&l| l > 1) {
        return Err(Error::Eval(format!("label {i} is {}, expected 0 or 1", labels[i])));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Eval(format!(
            "AUC undefined with {n_pos} positive and {n_neg} negative labels"
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1..=j+1 share their mean
        let mid = (i + j + 2) as f64 / 2.0;
        rank_sum += mid * order[i..=j].iter().filter(|&&k| labels[k] == 1).count() as f64;
        i = j + 1;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Mean absolute difference over 4-adjacent pairs of valid cells.
pub fn roughness(risk: &FeatureLayer) -> Result<f64> {
    let r = &risk.raster;
    let (mut sum, mut pairs) = (0.0, 0usize);
    for row in 0..r.height {
        for col in 0..r.width {
            let Some(a) = r.value(row, col) else { continue };
            if col + 1 < r.width {
                if let Some(b) = r.value(row, col + 1) {
                    sum += (a - b).abs();
                    pairs += 1;
                }
            }
            if row + 1 < r.height {
                if let Some(b) = r.value(row + 1, col) {
                    sum += (a - b).abs();
                    pairs += 1;
                }
            }
        }
    }
    if pairs == 0 {
        return Err(Error::Eval(format!("{} has no adjacent valid cells", risk.name)));
    }
    Ok(sum / pairs as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum YearLabel {
    Year(i32),
    /// Unweighted mean over the test years.
    Avg,
}

impl fmt::Display for YearLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            YearLabel::Year(y) => write!(f, "{y}"),
            YearLabel::Avg => f.write_str("avg"),
        }
    }
}

impl Serialize for YearLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for YearLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s == "avg" {
            return Ok(YearLabel::Avg);
        }
        s.parse().map(YearLabel::Year).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub park: String,
    pub test_year: YearLabel,
    pub condition: Condition,
    pub auc: f64,
    pub n_test: usize,
    pub n_positive: usize,
}

/// Feature selection then the three-years-before split.
pub fn prepare_split(
    table: &ObservationTable,
    test_year: i32,
    condition: Condition,
) -> Result<(ObservationTable, ObservationTable)> {
    let ctx = || format!("test year {test_year}, condition {condition}");
    let selected = select_feature_set(table, condition).map_err(|e| e.context(ctx()))?;
    split_by_year(&selected, test_year).map_err(|e| e.context(ctx()))
}

/// Scores each test row at its own recorded effort.
pub fn score_test(ens: &IWareEnsemble, test: &ObservationTable) -> Result<Vec<f64>> {
    test.rows.iter().map(|r| ens.predict_at_effort(&r.features, r.effort)).collect()
}

pub fn evaluate_model(
    park: &str,
    ens: &IWareEnsemble,
    test: &ObservationTable,
    test_year: i32,
    condition: Condition,
) -> Result<MetricsRow> {
    let scores = score_test(ens, test)?;
    let labels: Vec<u8> = test.rows.iter().map(|r| r.label).collect();
    let auc = roc_auc(&scores, &labels).map_err(|e| e.context(format!("test year {test_year}, condition {condition}")))?;
    Ok(MetricsRow {
        park: park.to_string(),
        test_year: YearLabel::Year(test_year),
        condition,
        auc,
        n_test: test.len(),
        n_positive: test.n_positive(),
    })
}

/// One trained model per (year, condition).
pub fn train_cell(
    table: &ObservationTable,
    test_year: i32,
    condition: Condition,
    config: &TrainConfig,
) -> Result<(IWareEnsemble, ObservationTable)> {
    let (train, test) = prepare_split(table, test_year, condition)?;
    let ens = train_iware(&train, config).map_err(|e| e.context(format!("test year {test_year}, condition {condition}")))?;
    Ok((ens, test))
}

/// Trains and scores every (year, condition) pair, year-major in the given
/// order, then appends one average row per condition.
pub fn run_experiment(
    park: &str,
    table: &ObservationTable,
    test_years: &[i32],
    conditions: &[Condition],
    config: &TrainConfig,
) -> Result<Vec<MetricsRow>> {
    let cells: Vec<(i32, Condition)> =
        test_years.iter().flat_map(|&y| conditions.iter().map(move |&c| (y, c))).collect();
    let rows = cells
        .par_iter()
        .map(|&(y, c)| {
            let (ens, test) = train_cell(table, y, c, config)?;
            evaluate_model(park, &ens, &test, y, c)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(with_averages(rows))
}

/// Appends per-condition averages: unweighted mean AUC, summed counts.
pub fn with_averages(mut rows: Vec<MetricsRow>) -> Vec<MetricsRow> {
    let mut conditions: Vec<Condition> = Vec::new();
    for r in &rows {
        if !conditions.contains(&r.condition) {
            conditions.push(r.condition);
        }
    }
    let avgs: Vec<MetricsRow> = conditions
        .iter()
        .map(|&c| {
            let group: Vec<&MetricsRow> =
                rows.iter().filter(|r| r.condition == c && r.test_year != YearLabel::Avg).collect();
            MetricsRow {
                park: group[0].park.clone(),
                test_year: YearLabel::Avg,
                condition: c,
                auc: group.iter().map(|r| r.auc).sum::<f64>() / group.len() as f64,
                n_test: group.iter().map(|r| r.n_test).sum(),
                n_positive: group.iter().map(|r| r.n_positive).sum(),
            }
        })
        .collect();
    rows.extend(avgs);
    rows
}

pub const METRICS_HEADER: [&str; 6] = ["park", "test_year", "condition", "auc", "n_test", "n_positive"];

/// Writes metrics.csv; AUC with six decimals.
pub fn write_metrics<W: Write>(rows: &[MetricsRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRICS_HEADER)?;
    for r in rows {
        w.write_record([
            r.park.clone(),
            r.test_year.to_string(),
            r.condition.to_string(),
            format!("{:.6}", r.auc),
            r.n_test.to_string(),
            r.n_positive.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metrics<R: std::io::Read>(input: R) -> Result<Vec<MetricsRow>> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != METRICS_HEADER {
        return Err(Error::Eval(format!("unexpected metrics header {header:?}")));
    }
    rd.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Shuffles labels among the rows with positive effort, leaving features
/// and efforts in place. Used as a null model.
pub fn permute_labels(table: &ObservationTable, seed: u64) -> ObservationTable {
    let idx: Vec<usize> = (0..table.rows.len()).filter(|&i| table.rows[i].effort > 0.0).collect();
    let mut labels: Vec<u8> = idx.iter().map(|&i| table.rows[i].label).collect();
    labels.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = table.clone();
    for (&i, l) in idx.iter().zip(labels) {
        out.rows[i].label = l;
    }
    out
}
