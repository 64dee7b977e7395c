//! Deterministic result files: stable-schema CSV tables, an optional JSON
//! dump, and a JSON run manifest.
//!
//! Rows are written in a fixed order and floats use Rust's shortest
//! round-trip formatting, so identical runs produce byte-identical tables.
//! The manifest carries a creation timestamp and is the only file expected to
//! differ between reruns.

use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::metrics::{Aggregate, Cdf, LinkOutcome, SummaryStat, TrialMetrics};
use crate::{Error, Real, Result};

/// Output encoding for result tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!("unknown output format '{other}'"))),
        }
    }
}

/// One matched link-frame: identification plus its outcome.
#[derive(Debug, Clone, Serialize)]
pub struct LinkRow {
    pub trial: u64,
    pub frame: u32,
    pub requester: usize,
    pub transmitter: usize,
    pub distance: Real,
    /// Chosen beamwidth, radians.
    pub beamwidth: Real,
    /// Requested segments the transmitter could serve.
    pub availability: u32,
    /// Outstanding request when the frame started, bits.
    pub requested_bits: u64,
    pub outcome: LinkOutcome,
}

/// Everything one experiment produced.
#[derive(Debug, Clone, Serialize)]
pub struct RunOutput {
    pub experiment: String,
    pub trials: Vec<TrialMetrics>,
    pub links: Vec<LinkRow>,
    pub aggregate: Aggregate,
}

/// Run-level provenance written alongside the tables.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    /// SHA-256 of the canonical configuration.
    pub config_hash: String,
    pub base_seed: u64,
    pub trials: u64,
    pub workers: usize,
    pub package_version: String,
    pub experiments: Vec<String>,
    /// Unix seconds at write time; excluded from reproducibility comparisons.
    pub created_unix: u64,
}

/// Shortest round-trip float text; infinities render as inf/-inf.
pub fn fmt_real(v: Real) -> String {
    format!("{v}")
}

fn fmt_opt(v: Option<Real>) -> String {
    v.map(fmt_real).unwrap_or_default()
}

/// One row per matched link-frame across all experiments.
pub fn links_csv(outputs: &[RunOutput]) -> String {
    let mut s = String::from(
        "experiment,trial,frame,requester,transmitter,distance_m,beamwidth_deg,\
         availability_segments,requested_bits,rate_bps,normalized_throughput,delivered_bits,\
         stability_s,alignment_s,penalty_active\n",
    );
    for out in outputs {
        for r in &out.links {
            let o = &r.outcome;
            writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                out.experiment,
                r.trial,
                r.frame,
                r.requester,
                r.transmitter,
                fmt_real(r.distance),
                // Round off radian-conversion noise so configured degree
                // values print exactly.
                fmt_real((r.beamwidth.to_degrees() * 1e9).round() / 1e9),
                r.availability,
                r.requested_bits,
                fmt_real(o.rate),
                fmt_opt(o.normalized_throughput),
                o.delivered_bits,
                fmt_real(o.stability_time),
                fmt_real(o.alignment_time),
                o.penalty_active,
            )
            .expect("string write");
        }
    }
    s
}

/// One row per trial across all experiments.
pub fn trials_csv(outputs: &[RunOutput]) -> String {
    let mut s = String::from(
        "experiment,trial,links,active_requests,matched_fraction,sum_throughput,\
         mean_throughput,delivered_segments,d2d_bits,cellular_bits,demanded_bits,\
         lll_iterations,lll_converged_fraction\n",
    );
    for out in outputs {
        for t in &out.trials {
            writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                out.experiment,
                t.trial,
                t.links,
                t.active_requests,
                fmt_real(t.matched_fraction),
                fmt_real(t.sum_throughput),
                fmt_real(t.mean_throughput),
                t.delivered_segments,
                t.d2d_bits,
                t.cellular_bits,
                t.demanded_bits,
                fmt_real(t.lll_iterations),
                fmt_real(t.lll_converged_fraction),
            )
            .expect("string write");
        }
    }
    s
}

/// Long-form per-metric summary rows.
pub fn aggregate_csv(outputs: &[RunOutput]) -> String {
    let mut s = String::from("experiment,metric,mean,se,trials\n");
    for out in outputs {
        let a = &out.aggregate;
        let rows: [(&str, SummaryStat); 8] = [
            ("mean_throughput", a.mean_throughput),
            ("sum_throughput", a.sum_throughput),
            ("delivered_segments", a.delivered_segments),
            ("d2d_bits", a.d2d_bits),
            ("cellular_bits", a.cellular_bits),
            ("demanded_bits", a.demanded_bits),
            ("matched_fraction", a.matched_fraction),
            ("lll_iterations", a.lll_iterations),
        ];
        for (name, stat) in rows {
            writeln!(
                s,
                "{},{},{},{},{}",
                out.experiment,
                name,
                fmt_real(stat.mean),
                fmt_real(stat.se),
                a.trials
            )
            .expect("string write");
        }
    }
    s
}

fn cdf_csv(outputs: &[RunOutput], pick: impl Fn(&Aggregate) -> &Cdf) -> String {
    let mut s = String::from("experiment,value,cum_prob\n");
    for out in outputs {
        for &(v, p) in &pick(&out.aggregate).points {
            writeln!(s, "{},{},{}", out.experiment, fmt_real(v), fmt_real(p))
                .expect("string write");
        }
    }
    s
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

/// Write all result files into `dir`, returning the paths written.
pub fn write_outputs(
    dir: &Path,
    outputs: &[RunOutput],
    manifest: &Manifest,
    format: OutputFormat,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut written = Vec::new();
    let mut emit = |name: &str, content: String| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, content).map_err(|e| io_err(&path, e))?;
        written.push(path);
        Ok(())
    };
    match format {
        OutputFormat::Csv => {
            emit("links.csv", links_csv(outputs))?;
            emit("trials.csv", trials_csv(outputs))?;
            emit("aggregate.csv", aggregate_csv(outputs))?;
            emit("cdf_throughput.csv", cdf_csv(outputs, |a| &a.throughput_cdf))?;
            emit("cdf_delivered.csv", cdf_csv(outputs, |a| &a.delivered_cdf))?;
        }
        OutputFormat::Json => {
            let body = serde_json::to_string_pretty(outputs)
                .map_err(|e| Error::Io(std::io::Error::other(e)))?;
            emit("results.json", body + "\n")?;
        }
    }
    let manifest_body = serde_json::to_string_pretty(manifest)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    emit("manifest.json", manifest_body + "\n")?;
    Ok(written)
}
