use std::fs;

use eucompare_core::io::{
    load_predictions, manifest_path, synth_generate, PredictionFile, RunManifest, SynthSpec,
};
use eucompare_core::{quantify_many, selective_prediction, EvaluationRecord, Measure, MeasureConfig};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn synthetic_files_round_trip_losslessly(
        k in 2usize..=6,
        m in 1usize..=6,
        n in 1usize..=40,
        error_rate in 0.0f64..=1.0,
        separation in 0.0f64..5.0,
        outliers in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let spec = SynthSpec::new(k, m, n, error_rate, separation, seed).with_outlier_rate(outliers);
        let file = synth_generate(&spec).unwrap();
        let mut bytes = Vec::new();
        file.write(&mut bytes).unwrap();
        let back = PredictionFile::parse(&bytes[..]).unwrap();
        prop_assert_eq!(&back, &file);
        for (a, b) in back.rows.iter().zip(&file.rows) {
            for (p, q) in a.set.members().iter().zip(b.set.members()) {
                for (x, y) in p.iter().zip(q.iter()) {
                    prop_assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
        let mut again = Vec::new();
        back.write(&mut again).unwrap();
        prop_assert_eq!(bytes, again);
    }
}

#[test]
fn loads_from_disk_and_reports_bad_rows() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.jsonl");
    fs::write(
        &good,
        "{\"id\":\"a\",\"label\":0,\"probs\":[[0.9,0.1],[0.6,0.4]]}\n\
         {\"id\":\"b\",\"label\":1,\"probs\":[[0.50005,0.5],[0.2,0.8]]}\n",
    )
    .unwrap();
    let file = load_predictions(&good).unwrap();
    assert_eq!(file.num_classes, 2);
    assert_eq!(file.rows[1].id, "b");

    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"id\":\"short\",\"label\":0,\"probs\":[[0.5,0.4]]}\n").unwrap();
    let err = load_predictions(&bad).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("short"), "{err}");

    assert_eq!(load_predictions(dir.path().join("missing.jsonl")).unwrap_err().exit_code(), 2);
}

#[test]
fn members_may_vary_across_rows() {
    let text = "{\"id\":\"a\",\"label\":0,\"probs\":[[0.9,0.1]]}\n\
                {\"id\":\"b\",\"label\":1,\"probs\":[[0.3,0.7],[0.2,0.8],[0.4,0.6]]}\n";
    let file = PredictionFile::parse(text.as_bytes()).unwrap();
    assert_eq!(file.rows[0].set.num_members(), 1);
    assert_eq!(file.rows[1].set.num_members(), 3);
}

fn evaluate(file: &PredictionFile, measure: Measure) -> Vec<EvaluationRecord> {
    let config = MeasureConfig::default();
    file.rows
        .iter()
        .map(|row| EvaluationRecord {
            sample_id: row.id.clone(),
            true_label: row.label,
            predicted_label: row.set.mean_prediction().argmax_class,
            scores: quantify_many(&row.set, &[measure], &config)
                .unwrap()
                .into_iter()
                .map(|s| (s.measure, s.value))
                .collect(),
        })
        .collect()
}

#[test]
fn separation_pushes_errors_to_the_top() {
    let accuracy = |separation: f64, measure: Measure| {
        let file = synth_generate(&SynthSpec::new(4, 6, 400, 0.3, separation, 5)).unwrap();
        let records = evaluate(&file, measure);
        let errors = records.iter().filter(|r| !r.is_correct()).count();
        let beta = errors as f64 / records.len() as f64;
        let arc = selective_prediction(&records, measure, &[0.0, beta]).unwrap();
        arc.points[1].accuracy
    };
    for m in [Measure::Wd, Measure::Lwv, Measure::Mi] {
        // Rejecting the error fraction removes nearly every error. With huge
        // noise members saturate to random corners, and a few may coincide.
        for separation in [0.0, 2.0, 20.0] {
            let retained = accuracy(separation, m);
            assert!(retained >= 0.98, "{m} at {separation}: {retained}");
        }
    }
}

#[test]
fn zero_error_rate_gives_a_perfect_curve() {
    let file = synth_generate(&SynthSpec::new(3, 4, 120, 0.0, 1.0, 9)).unwrap();
    let config = MeasureConfig::default();
    let records: Vec<EvaluationRecord> = file
        .rows
        .iter()
        .map(|row| EvaluationRecord {
            sample_id: row.id.clone(),
            true_label: row.label,
            predicted_label: row.set.mean_prediction().argmax_class,
            scores: quantify_many(&row.set, &[Measure::Mi], &config)
                .unwrap()
                .into_iter()
                .map(|s| (s.measure, s.value))
                .collect(),
        })
        .collect();
    let arc = selective_prediction(&records, Measure::Mi, &eucompare_core::default_betas()).unwrap();
    assert_eq!(arc.auarc, 1.0);
}

#[test]
fn manifests_sit_next_to_their_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("arc.json");
    fs::write(&out, "{}").unwrap();
    let mut manifest = RunManifest::new("eval-selective");
    manifest.run = Some(4);
    manifest.seal(&out).unwrap();
    let loaded = RunManifest::load(manifest_path(&out)).unwrap();
    assert_eq!(loaded.run, Some(4));
    assert_eq!(loaded.tool, "eucompare");
}
