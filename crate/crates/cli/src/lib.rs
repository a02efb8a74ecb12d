//! Command implementations behind the `fairprobe` binary.

use std::io::Write;
use std::path::{Path, PathBuf};

use fairprobe::datasets::DatasetSource;
use fairprobe::metrics::{compute, Method};
use fairprobe::report::write_report;
use fairprobe::zoo::ingest_predictions;
use fairprobe::{run_experiment, Error, ErrorKind, ExperimentConfig};

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e.kind() {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::Internal => 1,
    }
}

/// Runs the experiment in `config` and writes every artifact to `out_dir`.
pub fn cmd_run(
    config: &Path,
    out_dir: &Path,
    seed: Option<u64>,
) -> fairprobe::Result<Vec<PathBuf>> {
    let mut cfg = ExperimentConfig::from_file(config)?;
    if let Some(seed) = seed {
        cfg = cfg.with_master_seed(seed);
    }
    let result = run_experiment(&cfg)?;
    write_report(&result, out_dir)
}

/// Scores an external prediction file against a dataset, one `METHOD\tvalue` line per method.
pub fn cmd_measure(
    predictions: &Path,
    dataset: &str,
    methods: &str,
    out: &mut impl Write,
) -> fairprobe::Result<()> {
    let methods = Method::parse_list(methods)?;
    let data = DatasetSource::parse_spec(dataset)?.load()?;
    let ps = ingest_predictions(predictions, &data)?;
    for m in methods {
        let score = compute(m, &ps)?;
        writeln!(out, "{m}\t{:.6}", score.value).map_err(|e| Error::io("<stdout>", e))?;
    }
    Ok(())
}

/// Text printed by `--version`.
pub fn version_text() -> String {
    let mut s = format!("fairprobe {}\n", env!("CARGO_PKG_VERSION"));
    for m in Method::ALL {
        s.push_str(m.instantiation());
        s.push('\n');
    }
    s.push_str("classifier: ");
    s.push_str(fairprobe::metrics::DENSITY_RATIO_CLASSIFIER);
    s.push('\n');
    s
}
