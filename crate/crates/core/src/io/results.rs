//! Score files, evaluation results, rankings and plot-ready report tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::debug;
use serde::{Deserialize, Serialize};

use super::manifest::{RunManifest, MANIFEST_SUFFIX};
use crate::downstream::{AccuracyRejectionCurve, DetectionResult};
use crate::error::{Error, Result};
use crate::measures::{Measure, UncertaintyScore};
use crate::stats::{
    aggregate_across_models, pairwise_tests, NetWinTable, PairwiseTest, RunContext, RunMatrix,
    Scope, WilcoxonConfig,
};

pub const SCORE_HEADER: [&str; 3] = ["sample_id", "measure", "score"];

/// 17 significant digits: enough to recover every `f64` exactly.
pub fn format_score(value: f64) -> String {
    format!("{value:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub sample_id: String,
    pub measure: Measure,
    pub score: f64,
}

/// Writes one line per sample and measure, samples in input order.
pub fn write_scores<W: Write>(writer: W, scores: &[(String, Vec<UncertaintyScore>)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(SCORE_HEADER).map_err(csv_error)?;
    for (id, sample) in scores {
        for s in sample {
            out.write_record([id.as_str(), s.measure.as_str(), &format_score(s.value)])
                .map_err(csv_error)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_scores(path: impl AsRef<Path>) -> Result<Vec<ScoreRow>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
    let header = reader.headers().map_err(csv_error)?.clone();
    if !header.iter().eq(SCORE_HEADER) {
        return Err(Error::invalid(format!(
            "{} does not start with the header {}",
            path.display(),
            SCORE_HEADER.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::Parse {
            line,
            msg: e.to_string(),
        })?;
        let parse_err = |msg: String| Error::Parse { line, msg };
        let measure = record[1].parse::<Measure>().map_err(|e| parse_err(e.to_string()))?;
        let score = record[2]
            .parse::<f64>()
            .map_err(|_| parse_err(format!("`{}` is not a number", &record[2])))?;
        rows.push(ScoreRow {
            sample_id: record[0].to_string(),
            measure,
            score,
        });
    }
    Ok(rows)
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::invalid(format!("{other:?}")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureDetection {
    pub measure: Measure,
    #[serde(flatten)]
    pub result: DetectionResult,
}

/// Output of `eval`: one curve or one detection result per measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EvalResult {
    Selective { curves: Vec<AccuracyRejectionCurve> },
    Ood { detections: Vec<MeasureDetection> },
}

impl EvalResult {
    pub fn task(&self) -> &'static str {
        match self {
            EvalResult::Selective { .. } => "selective",
            EvalResult::Ood { .. } => "ood",
        }
    }

    /// The benchmark score of each measure: AUARC or AUROC, higher is better.
    pub fn performance(&self) -> Vec<(Measure, f64)> {
        match self {
            EvalResult::Selective { curves } => curves.iter().map(|c| (c.measure, c.auarc)).collect(),
            EvalResult::Ood { detections } => detections
                .iter()
                .map(|d| (d.measure, d.result.auroc))
                .collect(),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(self, path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        read_json(path)
    }
}

/// Rankings of one dataset/model/task combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankGroup {
    pub context: RunContext,
    pub runs: Vec<usize>,
    pub tests: Vec<PairwiseTest>,
    pub table: NetWinTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub scope: Scope,
    pub alpha: f64,
    pub measures: Vec<Measure>,
    pub groups: Vec<RankGroup>,
    pub aggregate: NetWinTable,
}

impl RankReport {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(self, path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        read_json(path)
    }
}

/// Run matrices gathered from the evaluation manifests in `dir`.
#[derive(Debug, Clone)]
pub struct CollectedRuns {
    pub matrices: Vec<RunMatrix>,
    pub manifests: Vec<PathBuf>,
}

/// Scans `dir` for evaluation manifests and groups their results by
/// dataset, model and task.
///
/// Every result must match the hash in its manifest, and runs of one group
/// must agree on measures and settings.
pub fn collect_runs(dir: impl AsRef<Path>) -> Result<CollectedRuns> {
    let dir = dir.as_ref();
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::invalid(format!("cannot list {}: {e}", dir.display())))?
        .map(|entry| entry.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.to_string_lossy().ends_with(MANIFEST_SUFFIX));
    paths.sort();

    let mut matrices: BTreeMap<RunContext, RunMatrix> = BTreeMap::new();
    let mut settings: BTreeMap<RunContext, (Vec<Measure>, String)> = BTreeMap::new();
    let mut used = Vec::new();
    for path in paths {
        let manifest = RunManifest::load(&path)?;
        if !manifest.command.starts_with("eval") {
            debug!("skipping {} ({})", path.display(), manifest.command);
            continue;
        }
        let result = EvalResult::load(manifest.verified_output(&path)?)?;
        let run = manifest.run.ok_or_else(|| {
            Error::invalid(format!("manifest {} has no run index", path.display()))
        })?;
        let context = RunContext {
            dataset: manifest.dataset.clone().unwrap_or_else(|| "unnamed".into()),
            model: manifest.model.clone().unwrap_or_else(|| "unnamed".into()),
            task: manifest.task.clone().unwrap_or_else(|| result.task().into()),
        };
        let performance = result.performance();
        let measures: Vec<Measure> = performance.iter().map(|(m, _)| *m).collect();
        if measures != manifest.measures {
            return Err(Error::invalid(format!(
                "manifest {} lists different measures than its result",
                path.display()
            )));
        }
        let fingerprint = format!(
            "{}|{:?}|{:?}",
            result.task(),
            manifest.betas,
            manifest.settings
        );
        match settings.get(&context) {
            Some((m, f)) if *m != measures || *f != fingerprint => {
                return Err(Error::invalid(format!(
                    "manifest mismatch: {} differs from earlier runs of {}/{}/{} in measures or settings",
                    path.display(),
                    context.dataset,
                    context.model,
                    context.task
                )));
            }
            Some(_) => {}
            None => {
                settings.insert(context.clone(), (measures, fingerprint));
            }
        }
        let matrix = matrices
            .entry(context.clone())
            .or_insert_with(|| RunMatrix::new(context));
        for (measure, score) in performance {
            matrix.insert(measure, run, score)?;
        }
        used.push(path);
    }
    if matrices.is_empty() {
        return Err(Error::invalid(format!(
            "no evaluation manifests found in {}",
            dir.display()
        )));
    }
    Ok(CollectedRuns {
        matrices: matrices.into_values().collect(),
        manifests: used,
    })
}

/// Pairwise tests and net wins per group, plus their sum over groups.
pub fn rank_runs(
    matrices: &[RunMatrix],
    measures: &[Measure],
    alpha: f64,
    config: &WilcoxonConfig,
) -> Result<RankReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha {alpha} is outside (0, 1)")));
    }
    let mut groups = Vec::with_capacity(matrices.len());
    for matrix in matrices {
        let present: BTreeSet<Measure> = matrix.measures().collect();
        if let Some(missing) = measures.iter().find(|m| !present.contains(m)) {
            return Err(Error::invalid(format!(
                "runs of {}/{}/{} have no {missing} results",
                matrix.context.dataset, matrix.context.model, matrix.context.task
            )));
        }
        let tests = pairwise_tests(matrix, measures, alpha, config)?;
        let table = NetWinTable::from_tests(measures, &tests)?;
        groups.push(RankGroup {
            context: matrix.context.clone(),
            runs: matrix.runs()?,
            tests,
            table,
        });
    }
    let tables: Vec<NetWinTable> = groups.iter().map(|g| g.table.clone()).collect();
    Ok(RankReport {
        scope: Scope::of(measures),
        alpha,
        measures: measures.to_vec(),
        groups,
        aggregate: aggregate_across_models(&tables)?,
    })
}

/// Plot-ready CSV tables written by `report`.
pub const ARC_POINTS_CSV: &str = "arc_points.csv";
pub const AUARC_CSV: &str = "auarc.csv";
pub const DETECTION_CSV: &str = "auroc.csv";
pub const SIGNIFICANCE_CSV: &str = "significance.csv";
pub const NET_WINS_CSV: &str = "net_wins.csv";

/// Flattens evaluation and ranking files into CSV tables inside `outdir`.
/// Returns the paths written; tables with no rows are skipped.
pub fn write_report(
    evals: &[(String, EvalResult)],
    ranks: &[(String, RankReport)],
    outdir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>> {
    let outdir = outdir.as_ref();
    fs::create_dir_all(outdir)?;
    let mut written = Vec::new();
    let mut emit = |name: &str, header: &[&str], rows: Vec<Vec<String>>| -> Result<()> {
        if rows.is_empty() {
            return Ok(());
        }
        let path = outdir.join(name);
        let mut out = csv::Writer::from_path(&path).map_err(csv_error)?;
        out.write_record(header).map_err(csv_error)?;
        for row in rows {
            out.write_record(&row).map_err(csv_error)?;
        }
        out.flush()?;
        written.push(path);
        Ok(())
    };

    let mut points = Vec::new();
    let mut areas = Vec::new();
    let mut aurocs = Vec::new();
    for (source, result) in evals {
        match result {
            EvalResult::Selective { curves } => {
                for c in curves {
                    for p in &c.points {
                        points.push(vec![
                            source.clone(),
                            c.measure.to_string(),
                            p.beta.to_string(),
                            p.accuracy.to_string(),
                            p.retained.to_string(),
                        ]);
                    }
                    areas.push(vec![
                        source.clone(),
                        c.measure.to_string(),
                        c.auarc.to_string(),
                        c.beta_min.to_string(),
                        c.beta_max.to_string(),
                        c.num_samples.to_string(),
                    ]);
                }
            }
            EvalResult::Ood { detections } => {
                for d in detections {
                    aurocs.push(vec![
                        source.clone(),
                        d.measure.to_string(),
                        d.result.auroc.to_string(),
                        d.result.n_id.to_string(),
                        d.result.n_ood.to_string(),
                    ]);
                }
            }
        }
    }
    emit(
        ARC_POINTS_CSV,
        &["source", "measure", "beta", "accuracy", "retained"],
        points,
    )?;
    emit(
        AUARC_CSV,
        &["source", "measure", "auarc", "beta_min", "beta_max", "num_samples"],
        areas,
    )?;
    emit(
        DETECTION_CSV,
        &["source", "measure", "auroc", "n_id", "n_ood"],
        aurocs,
    )?;

    let mut significance = Vec::new();
    let mut net = Vec::new();
    for (source, report) in ranks {
        let scope = report.scope.to_string();
        for g in &report.groups {
            let c = &g.context;
            let prefix = [
                source.clone(),
                scope.clone(),
                c.dataset.clone(),
                c.model.clone(),
                c.task.clone(),
            ];
            for t in &g.tests {
                let mut row = prefix.to_vec();
                row.extend([
                    t.better.to_string(),
                    t.worse.to_string(),
                    t.p_value.to_string(),
                    t.significant.to_string(),
                ]);
                significance.push(row);
            }
            net.extend(table_rows(&prefix, &g.table));
        }
        let prefix = [
            source.clone(),
            scope,
            "all".into(),
            "all".into(),
            "all".into(),
        ];
        net.extend(table_rows(&prefix, &report.aggregate));
    }
    emit(
        SIGNIFICANCE_CSV,
        &["source", "scope", "dataset", "model", "task", "better", "worse", "p_value", "significant"],
        significance,
    )?;
    emit(
        NET_WINS_CSV,
        &["source", "scope", "dataset", "model", "task", "measure", "wins", "losses", "net"],
        net,
    )?;
    Ok(written)
}

fn table_rows(prefix: &[String], table: &NetWinTable) -> Vec<Vec<String>> {
    table
        .measures()
        .map(|m| {
            let mut row = prefix.to_vec();
            row.extend([
                m.to_string(),
                table.wins[&m].to_string(),
                table.losses[&m].to_string(),
                table.net[&m].to_string(),
            ]);
            row
        })
        .collect()
}

fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::from)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::invalid(format!("malformed result file {}: {e}", path.display())))
}
