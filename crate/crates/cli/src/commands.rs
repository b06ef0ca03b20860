use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use log::{info, warn};
use rayon::prelude::*;

use eucompare_core::io::{
    collect_runs, rank_runs, synth_generate, write_report, write_scores, EvalResult,
    MeasureDetection, PredictionFile, RankReport, RunManifest, SynthSpec,
};
use eucompare_core::reference::oracle_check;
use eucompare_core::stats::WilcoxonConfig;
use eucompare_core::{
    ood_detection, parse_betas, quantify_many, selective_prediction, Error, EvaluationRecord,
    Measure, MeasureConfig, Result, Scope, UncertaintyScore,
};

use super::{MeasureOptions, OodArgs, QuantifyArgs, RankArgs, ReportArgs, RunLabels, SelectiveArgs, SynthArgs};

impl MeasureOptions {
    fn config(&self) -> MeasureConfig {
        MeasureConfig {
            vertex_cap: self.vertex_cap,
            subset_cap: self.subset_cap,
            wd_convention: self.wd_prefactor.into(),
        }
    }

    fn record(&self, manifest: &mut RunManifest) {
        let prefactor = match self.wd_prefactor {
            super::WdPrefactor::Eq8 => "eq8",
            super::WdPrefactor::Eq9 => "eq9",
        };
        manifest.setting("wd-prefactor", prefactor);
        manifest.setting("vertex-cap", self.vertex_cap);
        manifest.setting("subset-cap", self.subset_cap);
    }
}

impl RunLabels {
    fn record(&self, manifest: &mut RunManifest, task: &str) {
        manifest.dataset = Some(self.dataset.clone());
        manifest.model = Some(self.model.clone());
        manifest.task = Some(task.to_string());
        manifest.run = Some(self.run);
    }
}

/// Tags numerical failures with the sample that caused them.
fn in_sample(id: &str, e: Error) -> Error {
    match e {
        Error::Numerical(msg) => Error::Numerical(format!("sample `{id}`: {msg}")),
        other => other,
    }
}

/// Scores every row, in row order, on a pool of `workers` threads.
fn score_rows(
    file: &PredictionFile,
    measures: &[Measure],
    options: &MeasureOptions,
) -> Result<Vec<Vec<UncertaintyScore>>> {
    let config = options.config();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<Vec<UncertaintyScore>>> = pool.install(|| {
        file.rows
            .par_iter()
            .map(|row| quantify_many(&row.set, measures, &config).map_err(|e| in_sample(&row.id, e)))
            .collect()
    });
    results.into_iter().collect()
}

pub(crate) fn quantify(args: &QuantifyArgs) -> Result<()> {
    let measures = Measure::parse_list(&args.measures)?;
    let file = PredictionFile::load(&args.input)?;
    let scores = score_rows(&file, &measures, &args.options)?;
    if args.oracle {
        cross_check(&file, &measures, &args.options.config())?;
    }
    let rows: Vec<(String, Vec<UncertaintyScore>)> = file
        .rows
        .iter()
        .map(|r| r.id.clone())
        .zip(scores)
        .collect();
    write_scores(File::create(&args.output)?, &rows)?;

    let mut manifest = RunManifest::new("quantify");
    manifest.measures = measures;
    args.options.record(&mut manifest);
    manifest.setting("oracle", args.oracle);
    manifest.add_input(&args.input)?;
    manifest.seal(&args.output)?;
    info!("wrote {} scores to {}", rows.len(), args.output.display());
    Ok(())
}

fn cross_check(file: &PredictionFile, measures: &[Measure], config: &MeasureConfig) -> Result<()> {
    let mut checked = 0usize;
    let mut skipped = 0usize;
    for row in &file.rows {
        for &measure in measures {
            match oracle_check(&row.set, measure, config) {
                Ok(check) if check.agrees() => checked += 1,
                Ok(check) => {
                    return Err(Error::Numerical(format!(
                        "sample `{}`: {measure} = {} but the oracle gives {} (tolerance {})",
                        row.id, check.value, check.oracle, check.tolerance
                    )))
                }
                Err(Error::OracleLimit(msg)) => {
                    skipped += 1;
                    log::debug!("sample `{}`, {measure}: not checked ({msg})", row.id);
                }
                Err(e) => return Err(in_sample(&row.id, e)),
            }
        }
    }
    if skipped > 0 {
        warn!("oracle skipped {skipped} of {} scores it cannot resolve", checked + skipped);
    }
    info!("oracle confirmed {checked} scores");
    Ok(())
}

fn evaluation_records(file: &PredictionFile, measures: &[Measure], options: &MeasureOptions) -> Result<Vec<EvaluationRecord>> {
    let scores = score_rows(file, measures, options)?;
    Ok(file
        .rows
        .iter()
        .zip(scores)
        .map(|(row, sample)| EvaluationRecord {
            sample_id: row.id.clone(),
            true_label: row.label,
            predicted_label: row.set.mean_prediction().argmax_class,
            scores: sample.into_iter().map(|s| (s.measure, s.value)).collect(),
        })
        .collect())
}

pub(crate) fn eval_selective(args: &SelectiveArgs) -> Result<()> {
    let measures = Measure::parse_list(&args.measure)?;
    let betas = parse_betas(&args.betas)?;
    let file = PredictionFile::load(&args.input)?;
    let records = evaluation_records(&file, &measures, &args.options)?;
    let curves = measures
        .iter()
        .map(|&m| selective_prediction(&records, m, &betas))
        .collect::<Result<Vec<_>>>()?;
    EvalResult::Selective { curves }.save(&args.output)?;

    let mut manifest = RunManifest::new("eval-selective");
    args.labels.record(&mut manifest, "selective");
    manifest.measures = measures;
    manifest.betas = Some(betas);
    args.options.record(&mut manifest);
    manifest.add_input(&args.input)?;
    manifest.seal(&args.output)?;
    Ok(())
}

pub(crate) fn eval_ood(args: &OodArgs) -> Result<()> {
    let measures = Measure::parse_list(&args.measure)?;
    let id_file = PredictionFile::load(&args.id)?;
    let ood_file = PredictionFile::load(&args.ood)?;
    if id_file.num_classes != ood_file.num_classes {
        return Err(Error::DimensionMismatch {
            expected: id_file.num_classes,
            found: ood_file.num_classes,
        });
    }
    let by_measure = |file: &PredictionFile| -> Result<BTreeMap<Measure, Vec<f64>>> {
        let mut columns: BTreeMap<Measure, Vec<f64>> = BTreeMap::new();
        for sample in score_rows(file, &measures, &args.options)? {
            for s in sample {
                columns.entry(s.measure).or_default().push(s.value);
            }
        }
        Ok(columns)
    };
    let id_scores = by_measure(&id_file)?;
    let ood_scores = by_measure(&ood_file)?;
    let detections = measures
        .iter()
        .map(|m| {
            Ok(MeasureDetection {
                measure: *m,
                result: ood_detection(&id_scores[m], &ood_scores[m])?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    EvalResult::Ood { detections }.save(&args.output)?;

    let mut manifest = RunManifest::new("eval-ood");
    args.labels.record(&mut manifest, "ood");
    manifest.measures = measures;
    args.options.record(&mut manifest);
    manifest.add_input(&args.id)?;
    manifest.add_input(&args.ood)?;
    manifest.seal(&args.output)?;
    Ok(())
}

pub(crate) fn rank(args: &RankArgs) -> Result<()> {
    let scope: Scope = args.scope.parse()?;
    let collected = collect_runs(&args.runs)?;
    let report = rank_runs(
        &collected.matrices,
        scope.measures(),
        args.alpha,
        &WilcoxonConfig::default(),
    )?;
    report.save(&args.output)?;
    for (m, net) in &report.aggregate.net {
        info!("{m}: net {net:+}");
    }

    let mut manifest = RunManifest::new("rank");
    manifest.measures = report.measures.clone();
    manifest.alpha = Some(args.alpha);
    manifest.setting("scope", scope);
    for path in &collected.manifests {
        manifest.add_input(path)?;
    }
    manifest.seal(&args.output)?;
    Ok(())
}

pub(crate) fn synth(args: &SynthArgs) -> Result<()> {
    let spec = SynthSpec::new(args.k, args.m, args.n, args.error_rate, args.separation, args.seed)
        .with_outlier_rate(args.outlier_rate);
    synth_generate(&spec)?.save(&args.output)?;

    let mut manifest = RunManifest::new("synth");
    manifest.seed = Some(args.seed);
    manifest.setting("k", args.k);
    manifest.setting("m", args.m);
    manifest.setting("n", args.n);
    manifest.setting("error-rate", args.error_rate);
    manifest.setting("separation", args.separation);
    manifest.setting("outlier-rate", args.outlier_rate);
    manifest.seal(&args.output)?;
    Ok(())
}

fn source_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub(crate) fn report(args: &ReportArgs) -> Result<()> {
    if args.arc.is_empty() && args.sig.is_empty() {
        return Err(Error::InvalidInput(
            "report needs at least one --arc or --sig file".into(),
        ));
    }
    let evals = args
        .arc
        .iter()
        .map(|p| Ok((source_name(p), EvalResult::load(p)?)))
        .collect::<Result<Vec<_>>>()?;
    let ranks = args
        .sig
        .iter()
        .map(|p| Ok((source_name(p), RankReport::load(p)?)))
        .collect::<Result<Vec<_>>>()?;
    let written = write_report(&evals, &ranks, &args.outdir)?;
    for path in written {
        let mut manifest = RunManifest::new("report");
        for input in args.arc.iter().chain(&args.sig) {
            manifest.add_input(input)?;
        }
        manifest.seal(&path)?;
        info!("wrote {}", path.display());
    }
    Ok(())
}
