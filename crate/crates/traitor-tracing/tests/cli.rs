//! End-to-end tests of the `ttrace` binary: artifact pipeline, experiment
//! runs, output formats, and exit codes.

use std::path::Path;
use std::process::{Command, Output};

use traitor_tracing::accusation::{random_query_order, AttackTranscript};
use traitor_tracing::channel::{make_oracle, ChannelModel, CollusionStrategy};
use traitor_tracing::codebook::load_codebook;

fn ttrace(args: &[&str], workdir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ttrace"))
        .args(args)
        .current_dir(workdir)
        .output()
        .expect("run ttrace")
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn assert_status(output: &Output, expected: i32) {
    assert_eq!(
        output.status.code(),
        Some(expected),
        "stdout:\n{}\nstderr:\n{}",
        stdout_of(output),
        stderr_of(output)
    );
}

/// Sorted (file name, contents) pairs of a flat directory.
fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut entries: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .expect("read run dir")
        .map(|e| {
            let e = e.expect("dir entry");
            let name = e.file_name().to_string_lossy().into_owned();
            let bytes = std::fs::read(e.path()).expect("read artifact");
            (name, bytes)
        })
        .collect();
    entries.sort();
    entries
}

#[test]
fn pipeline_traces_leaker_from_recorded_transcript() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = dir.path().join("config.toml");
    std::fs::write(
        &config,
        "n_users = 12\n\
         estimation_trials = 150\n\
         seed = 20260823\n\n\
         [code]\n\
         q = 10\n\
         m = 200\n\
         kappa = 0.1\n\
         c0 = 6\n\n\
         [channel]\n\
         c = 1\n",
    )
    .expect("write config");

    let gen = ttrace(
        &[
            "gen-codebook",
            "--config",
            "config.toml",
            "--out",
            "cb.json",
        ],
        dir.path(),
    );
    assert_status(&gen, 0);
    assert!(stdout_of(&gen).contains("wrote codebook"));

    let est = ttrace(
        &[
            "estimate-dists",
            "--config",
            "config.toml",
            "--codebook",
            "cb.json",
            "--out",
            "dists.json",
        ],
        dir.path(),
    );
    assert_status(&est, 0);
    assert!(stdout_of(&est).contains("wrote score distributions"));

    // Record what a model leaked verbatim by user 3 answers on every
    // trigger, in a scrambled query order.
    let cb = load_codebook(dir.path().join("cb.json")).expect("load codebook");
    let model = ChannelModel::new(CollusionStrategy::Majority, 0.0).expect("channel");
    let spec = model.spec(vec![3], 7).expect("spec");
    let oracle = make_oracle(&spec, &cb).expect("oracle");
    let order = random_query_order(cb.params.m, 7);
    let transcript = AttackTranscript::from_oracle(&oracle, &order).expect("transcript");
    transcript
        .write_csv(dir.path().join("transcript.csv"))
        .expect("write transcript");

    let accuse = ttrace(
        &[
            "accuse",
            "--config",
            "config.toml",
            "--codebook",
            "cb.json",
            "--dists",
            "dists.json",
            "--transcript",
            "transcript.csv",
            "--out",
            "verdict.json",
        ],
        dir.path(),
    );
    assert_status(&accuse, 0);
    let verdict: serde_json::Value =
        serde_json::from_str(&stdout_of(&accuse)).expect("verdict JSON");
    assert_eq!(verdict["decision"], "accused");
    assert_eq!(verdict["accused"], serde_json::json!([3]));
    assert!(verdict["t_star"].as_u64().expect("t_star") < 200);
    let saved = std::fs::read_to_string(dir.path().join("verdict.json")).expect("saved verdict");
    assert_eq!(saved, stdout_of(&accuse));
}

#[test]
fn experiment_runs_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().expect("tempdir");
    std::fs::write(
        dir.path().join("config.toml"),
        "n_users = 16\n\
         trials = 30\n\
         estimation_trials = 150\n\
         seed = 42\n\n\
         [code]\n\
         q = 10\n\
         m = 200\n\
         kappa = 0.1\n\
         c0 = 6\n\n\
         [channel]\n\
         preset = \"c2/fine-tune\"\n",
    )
    .expect("write config");

    for (out, threads) in [("run-single", "1"), ("run-pooled", "4")] {
        let run = ttrace(
            &[
                "simulate",
                "--config",
                "config.toml",
                "--out",
                out,
                "--threads",
                threads,
            ],
            dir.path(),
        );
        assert_status(&run, 0);
    }

    let single = dir_contents(&dir.path().join("run-single"));
    let pooled = dir_contents(&dir.path().join("run-pooled"));
    assert!(!single.is_empty());
    assert_eq!(
        single.iter().map(|(n, _)| n).collect::<Vec<_>>(),
        pooled.iter().map(|(n, _)| n).collect::<Vec<_>>()
    );
    for ((name, bytes_single), (_, bytes_pooled)) in single.iter().zip(&pooled) {
        assert_eq!(
            bytes_single, bytes_pooled,
            "{name} differs across thread counts"
        );
    }
}

#[test]
fn csv_format_writes_flat_aggregates() {
    let dir = tempfile::tempdir().expect("tempdir");
    std::fs::write(
        dir.path().join("config.toml"),
        "n_users = 12\n\
         trials = 10\n\
         estimation_trials = 100\n\
         seed = 5\n\n\
         [code]\n\
         q = 10\n\
         m = 100\n\
         kappa = 0.1\n\
         c0 = 6\n",
    )
    .expect("write config");

    let run = ttrace(
        &[
            "simulate",
            "--config",
            "config.toml",
            "--out",
            "run",
            "--format",
            "csv",
        ],
        dir.path(),
    );
    assert_status(&run, 0);

    let names: Vec<String> = dir_contents(&dir.path().join("run"))
        .into_iter()
        .map(|(name, _)| name)
        .collect();
    assert!(names.contains(&"trials.csv".to_string()), "{names:?}");
    assert!(names.contains(&"aggregate.csv".to_string()), "{names:?}");
    assert!(names.contains(&"extras.json".to_string()), "{names:?}");
    assert!(!names.contains(&"aggregate.json".to_string()), "{names:?}");

    let trials = std::fs::read_to_string(dir.path().join("run/trials.csv")).expect("trials.csv");
    assert!(trials.starts_with("# config_hash="));
    assert!(trials.contains("trial,condition,decision,t_star,accused,colluders,scores"));
}

#[test]
fn missing_config_file_is_a_usage_error() {
    let dir = tempfile::tempdir().expect("tempdir");
    let run = ttrace(&["simulate", "--config", "no-such-file.toml"], dir.path());
    assert_status(&run, 1);
    assert!(stderr_of(&run).contains("cannot read config"));
}

#[test]
fn rejected_config_field_is_a_usage_error() {
    let dir = tempfile::tempdir().expect("tempdir");
    std::fs::write(dir.path().join("config.toml"), "no_such_setting = 1\n").expect("write config");
    let run = ttrace(&["simulate", "--config", "config.toml"], dir.path());
    assert_status(&run, 1);
    assert!(stderr_of(&run).contains("invalid TOML config"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let dir = tempfile::tempdir().expect("tempdir");
    let run = ttrace(&["frobnicate"], dir.path());
    assert_status(&run, 1);
}

#[test]
fn missing_artifact_is_a_runtime_error() {
    let dir = tempfile::tempdir().expect("tempdir");
    let run = ttrace(
        &[
            "accuse",
            "--codebook",
            "missing.json",
            "--dists",
            "missing.json",
            "--transcript",
            "missing.csv",
        ],
        dir.path(),
    );
    assert_status(&run, 2);
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().expect("tempdir");
    let run = ttrace(&["--help"], dir.path());
    assert_status(&run, 0);
    assert!(stdout_of(&run).contains("gen-codebook"));
}
