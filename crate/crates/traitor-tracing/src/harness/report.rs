//! Result file writing: per-trial CSV, aggregate JSON (or CSV), and one
//! decision-time histogram CSV per condition, each carrying a provenance
//! header.

use std::fmt::Write as FmtWrite;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::harness::config::OutputFormat;
use crate::harness::experiments::{ExperimentResult, Provenance};

fn provenance_comment(p: &Provenance) -> String {
    format!(
        "# config_hash={} seed={} tool={} version={}\n",
        p.config_hash, p.seed, p.tool, p.version
    )
}

fn join_usize(xs: &[usize]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

fn join_f64(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

/// Per-trial records as CSV; list-valued columns join entries with `;`.
pub fn trials_csv(result: &ExperimentResult) -> String {
    let mut s = provenance_comment(&result.provenance);
    s.push_str("trial,condition,decision,t_star,accused,colluders,scores\n");
    for r in &result.records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.trial,
            r.condition,
            r.decision,
            r.t_star,
            join_usize(&r.accused),
            join_usize(&r.colluders),
            join_f64(&r.scores)
        );
    }
    s
}

/// Aggregates and extras as a pretty JSON document (provenance embedded).
pub fn aggregate_json(result: &ExperimentResult) -> Result<String> {
    let doc = serde_json::json!({
        "provenance": result.provenance,
        "aggregates": result.aggregates,
        "extras": result.extras,
    });
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

/// Aggregates as flat CSV rows (extras stay in their JSON sidecar).
pub fn aggregate_csv(result: &ExperimentResult) -> String {
    let mut s = provenance_comment(&result.provenance);
    s.push_str(
        "condition,trials,accused,exonerated,undecided,caught_one,caught_exactly,\
         false_positives,false_negatives,t_star_mean,t_star_median\n",
    );
    for (condition, c) in &result.aggregates.by_condition {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            condition,
            c.trials,
            c.accused_trials,
            c.exonerated_trials,
            c.undecided_trials,
            c.caught_one,
            c.caught_exactly,
            c.false_positive_trials,
            c.false_negative_trials,
            c.t_star_mean,
            c.t_star_median
        );
    }
    s
}

/// Make a condition label safe as a file-name fragment.
fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|ch| {
            if ch.is_ascii_alphanumeric() || ch == '-' || ch == '_' {
                ch
            } else {
                '_'
            }
        })
        .collect()
}

/// Write all artifacts into `dir`, returning the paths written.
pub fn write_report(
    result: &ExperimentResult,
    dir: impl AsRef<Path>,
    format: OutputFormat,
) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let trials_path = dir.join("trials.csv");
    std::fs::write(&trials_path, trials_csv(result))?;
    written.push(trials_path);

    match format {
        OutputFormat::Json => {
            let path = dir.join("aggregate.json");
            std::fs::write(&path, aggregate_json(result)?)?;
            written.push(path);
        }
        OutputFormat::Csv => {
            let path = dir.join("aggregate.csv");
            std::fs::write(&path, aggregate_csv(result))?;
            written.push(path);
            // Extras have no tabular shape; keep them as JSON alongside.
            let extras_path = dir.join("extras.json");
            let doc = serde_json::json!({
                "provenance": result.provenance,
                "extras": result.extras,
            });
            std::fs::write(&extras_path, serde_json::to_string_pretty(&doc)? + "\n")?;
            written.push(extras_path);
        }
    }

    for (idx, (condition, summary)) in result.aggregates.by_condition.iter().enumerate() {
        let mut s = provenance_comment(&result.provenance);
        let _ = writeln!(s, "# condition={condition}");
        s.push_str("t_star,count\n");
        for (&t, &count) in &summary.t_star_histogram {
            let _ = writeln!(s, "{t},{count}");
        }
        let path = dir.join(format!("hist_{idx:03}_{}.csv", sanitize(condition)));
        std::fs::write(&path, s)?;
        written.push(path);
    }

    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{ChannelSettings, CodeSettings, ExperimentConfig, ExperimentKind};
    use crate::harness::experiments::run_experiment;

    fn small_result() -> ExperimentResult {
        let cfg = ExperimentConfig {
            experiment: Some(ExperimentKind::Simulate),
            code: CodeSettings {
                m: 60,
                ..Default::default()
            },
            n_users: 8,
            trials: 6,
            estimation_trials: 30,
            channel: ChannelSettings {
                c: Some(2),
                ..ChannelSettings::default()
            },
            ..Default::default()
        };
        run_experiment(&cfg).unwrap()
    }

    #[test]
    fn report_files_have_provenance_and_rows() {
        let result = small_result();
        let dir = tempfile::tempdir().unwrap();
        let files = write_report(&result, dir.path(), OutputFormat::Json).unwrap();
        assert!(files.iter().any(|p| p.ends_with("trials.csv")));
        assert!(files.iter().any(|p| p.ends_with("aggregate.json")));
        assert!(files.len() >= 3, "expected a histogram file too");

        let trials = std::fs::read_to_string(dir.path().join("trials.csv")).unwrap();
        let mut lines = trials.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("# config_hash="));
        assert!(header.contains(&format!("seed={}", result.provenance.seed)));
        assert_eq!(
            lines.next().unwrap(),
            "trial,condition,decision,t_star,accused,colluders,scores"
        );
        assert_eq!(trials.lines().count(), 2 + result.records.len());

        let aggregate: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join("aggregate.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(
            aggregate["provenance"]["config_hash"],
            serde_json::Value::String(result.provenance.config_hash.clone())
        );
    }

    #[test]
    fn csv_format_writes_flat_aggregate_and_extras() {
        let result = small_result();
        let dir = tempfile::tempdir().unwrap();
        let files = write_report(&result, dir.path(), OutputFormat::Csv).unwrap();
        assert!(files.iter().any(|p| p.ends_with("aggregate.csv")));
        assert!(files.iter().any(|p| p.ends_with("extras.json")));
        let agg = std::fs::read_to_string(dir.path().join("aggregate.csv")).unwrap();
        // One provenance line, one header, one row per condition.
        assert_eq!(
            agg.lines().count(),
            2 + result.aggregates.by_condition.len()
        );
    }

    #[test]
    fn histogram_counts_match_trials() {
        let result = small_result();
        let dir = tempfile::tempdir().unwrap();
        let files = write_report(&result, dir.path(), OutputFormat::Json).unwrap();
        let hist_path = files
            .iter()
            .find(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("hist_"))
            })
            .unwrap();
        let text = std::fs::read_to_string(hist_path).unwrap();
        let total: u64 = text
            .lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with("t_star"))
            .map(|l| l.split(',').nth(1).unwrap().parse::<u64>().unwrap())
            .sum();
        assert_eq!(total as usize, result.records.len());
    }

    #[test]
    fn identical_results_serialize_identically() {
        let a = small_result();
        let b = small_result();
        assert_eq!(trials_csv(&a), trials_csv(&b));
        assert_eq!(aggregate_json(&a).unwrap(), aggregate_json(&b).unwrap());
        assert_eq!(aggregate_csv(&a), aggregate_csv(&b));
    }
}
