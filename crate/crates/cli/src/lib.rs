//! Experiment descriptions, sweep execution and CSV output for the `imstn`
//! binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use imstn::config::SimConfig;
use imstn::engine::{aggregate_sweep, format_float, slot_csv_fields, slot_csv_header, MetricsBundle, SweepAxis};
use serde::{Deserialize, Serialize};

/// Environment variable naming the default output root.
pub const OUT_DIR_ENV: &str = "IMSTN_OUT_DIR";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid experiment: {0}")]
    Invalid(String),
    #[error(transparent)]
    Sim(#[from] imstn::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("solver failed in {failures} slot(s); results written to {}", dir.display())]
    SolverFailure { failures: usize, dir: PathBuf },
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub base: SimConfig,
    /// Absent means a single run of `base`.
    pub sweep: Option<Sweep>,
    pub out_dir: Option<PathBuf>,
    pub formats: Vec<Format>,
    /// Also write one row per slot for every run.
    pub slot_records: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            name: "experiment".into(),
            base: SimConfig::default(),
            sweep: None,
            out_dir: None,
            formats: vec![Format::Csv],
            slot_records: true,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(CliError::Invalid(format!("name {:?} is not a plain file name", self.name)));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(CliError::Invalid("sweep.values is empty".into()));
            }
        }
        for config in self.configs()? {
            config.validate()?;
        }
        Ok(())
    }

    /// One configuration per sweep value, in order.
    pub fn configs(&self) -> Result<Vec<SimConfig>> {
        let Some(sweep) = &self.sweep else {
            return Ok(vec![self.base.clone()]);
        };
        sweep
            .values
            .iter()
            .map(|&v| {
                let mut c = self.base.clone();
                sweep.axis.apply(&mut c, v)?;
                Ok(c)
            })
            .collect()
    }

    pub fn axis(&self) -> SweepAxis {
        self.sweep.as_ref().map_or(SweepAxis::V, |s| s.axis)
    }
}

/// Parses a JSON experiment description. An empty document yields all
/// defaults; errors name the offending field.
pub fn parse_spec(text: &str, origin: &str) -> Result<ExperimentSpec> {
    let spec = if text.trim().is_empty() {
        ExperimentSpec::default()
    } else {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| CliError::Parse {
            path: origin.to_string(),
            message: format!("field `{}`: {}", e.path(), e.inner()),
        })?
    };
    spec.validate()?;
    Ok(spec)
}

pub fn load_config(path: &Path) -> Result<ExperimentSpec> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    parse_spec(&text, &path.display().to_string())
}

/// Writes a header and rows; every row must have the header's width.
pub fn emit_csv<H, R>(path: &Path, header: &[H], rows: R) -> Result<()>
where
    H: AsRef<str>,
    R: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::Io { path: path.into(), source },
        other => CliError::Invalid(format!("{other:?}")),
    })?;
    w.write_record(header.iter().map(AsRef::as_ref))?;
    for row in rows {
        if row.len() != header.len() {
            return Err(CliError::Invalid(format!(
                "row of {} fields under a {}-column header",
                row.len(),
                header.len()
            )));
        }
        if row.iter().any(|f| f.contains("NaN") || f.contains("inf")) {
            return Err(CliError::Invalid(format!("non-finite value in {}", path.display())));
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|source| CliError::Io { path: path.into(), source })?;
    Ok(())
}

pub fn summary_header(axis: SweepAxis) -> Vec<String> {
    let mut h = vec![axis.name().to_string(), "seed".to_string()];
    h.extend(MetricsBundle::CSV_HEADER.iter().map(|s| s.to_string()));
    h
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    /// Worker threads; `None` uses the rayon default.
    pub parallel: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct RunDigest {
    pub axis_value: f64,
    pub seed: u64,
    pub capacity_violations: usize,
    pub capacity_scaled_slots: usize,
    pub solver_failures: usize,
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub out_dir: PathBuf,
    pub summary_path: PathBuf,
    pub run_paths: Vec<PathBuf>,
    pub runs: Vec<RunDigest>,
    pub wall_seconds: f64,
}

impl ExperimentReport {
    pub fn digest(&self) -> String {
        let mut s = String::new();
        for r in &self.runs {
            s.push_str(&format!(
                "value={} seed={} c2_violations={} c2_scaled={} solver_failures={}\n",
                format_float(r.axis_value),
                r.seed,
                r.capacity_violations,
                r.capacity_scaled_slots,
                r.solver_failures
            ));
        }
        s.push_str(&format!(
            "runs={} wall_time={:.2}s out={}\n",
            self.runs.len(),
            self.wall_seconds,
            self.out_dir.display()
        ));
        s
    }
}

/// Output directory: explicit option, then the spec, then `$IMSTN_OUT_DIR/<name>`,
/// then `out/<name>`.
pub fn resolve_out_dir(spec: &ExperimentSpec, explicit: Option<&Path>) -> PathBuf {
    if let Some(dir) = explicit.or(spec.out_dir.as_deref()) {
        return dir.to_path_buf();
    }
    let root = std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("out"), PathBuf::from);
    root.join(&spec.name)
}

/// Runs every sweep point and writes `summary.csv` plus one slot file per
/// run. Wall time goes to the digest only, so files are reproducible.
pub fn run_experiment(spec: &ExperimentSpec, opts: &RunOptions) -> Result<ExperimentReport> {
    let mut spec = spec.clone();
    if let Some(seed) = opts.seed {
        spec.base.seed = seed;
    }
    spec.validate()?;
    let out_dir = resolve_out_dir(&spec, opts.out_dir.as_deref());
    fs::create_dir_all(&out_dir).map_err(|source| CliError::Io { path: out_dir.clone(), source })?;

    let configs = spec.configs()?;
    let axis = spec.axis();
    let started = Instant::now();
    let rows = match opts.parallel {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| CliError::Invalid(e.to_string()))?
            .install(|| aggregate_sweep(&configs, axis))?,
        None => aggregate_sweep(&configs, axis)?,
    };
    let wall_seconds = started.elapsed().as_secs_f64();

    let summary_path = out_dir.join("summary.csv");
    emit_csv(
        &summary_path,
        &summary_header(axis),
        rows.iter().zip(&configs).map(|(row, c)| {
            let mut fields = vec![format_float(row.axis_value), c.seed.to_string()];
            fields.extend(row.output.metrics.csv_fields());
            fields
        }),
    )?;

    let mut run_paths = Vec::new();
    if spec.slot_records {
        for (k, (row, c)) in rows.iter().zip(&configs).enumerate() {
            let path = out_dir.join(format!("run_{k:03}.csv"));
            emit_csv(&path, &slot_csv_header(c.stations.count), row.output.records.iter().map(slot_csv_fields))?;
            run_paths.push(path);
        }
    }

    let runs: Vec<RunDigest> = rows
        .iter()
        .zip(&configs)
        .map(|(row, c)| RunDigest {
            axis_value: row.axis_value,
            seed: c.seed,
            capacity_violations: row.output.metrics.capacity_violations,
            capacity_scaled_slots: row.output.metrics.capacity_scaled_slots,
            solver_failures: row.output.metrics.solver_failures,
        })
        .collect();
    let report = ExperimentReport { out_dir, summary_path, run_paths, runs, wall_seconds };
    let failures: usize = report.runs.iter().map(|r| r.solver_failures).sum();
    if failures > 0 {
        return Err(CliError::SolverFailure { failures, dir: report.out_dir });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let spec = parse_spec("  \n", "empty").unwrap();
        assert_eq!(spec, ExperimentSpec::default());
        assert_eq!(spec.base.link.max_power_w, 1000.0);
        assert_eq!(spec.base.control.tolerances.urllc, 1e-5);
        assert_eq!(parse_spec("{}", "braces").unwrap(), spec);
    }

    #[test]
    fn beta_out_of_range_rejected() {
        let err = parse_spec(r#"{"base": {"control": {"beta": 1.5}}}"#, "x").unwrap_err();
        assert!(err.to_string().contains("beta"), "{err}");
    }

    #[test]
    fn tolerance_ordering_rejected() {
        let text = r#"{"base": {"control": {"tolerances": {"urllc": 1e-2, "ter_mmtc": 1e-3, "sat_mmtc": 1e-2}}}}"#;
        assert!(parse_spec(text, "x").is_err());
    }

    #[test]
    fn unknown_field_names_its_path() {
        let err = parse_spec(r#"{"base": {"traffic": {"windw": 3}}}"#, "x").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("base.traffic") && msg.contains("windw"), "{msg}");
    }

    #[test]
    fn empty_sweep_rejected() {
        assert!(parse_spec(r#"{"sweep": {"axis": "beta", "values": []}}"#, "x").is_err());
        assert!(parse_spec(r#"{"sweep": {"axis": "window", "values": [1.5]}}"#, "x").is_err());
    }

    #[test]
    fn sweep_configs_follow_values() {
        let spec = parse_spec(r#"{"sweep": {"axis": "V", "values": [1, 100]}}"#, "x").unwrap();
        let configs = spec.configs().unwrap();
        assert_eq!(configs.iter().map(|c| c.control.v).collect::<Vec<_>>(), vec![1.0, 100.0]);
    }

    #[test]
    fn emit_csv_header_only_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let empty = dir.path().join("empty.csv");
        emit_csv(&empty, &["a", "b"], std::iter::empty()).unwrap();
        assert_eq!(fs::read_to_string(&empty).unwrap(), "a,b\n");

        let path = dir.path().join("values.csv");
        let values = [1.0 / 3.0, -2.5e-7];
        emit_csv(&path, &["x"], values.iter().map(|v| vec![format_float(*v)])).unwrap();
        let mut r = csv::Reader::from_path(&path).unwrap();
        let back: Vec<f64> = r.records().map(|rec| rec.unwrap()[0].parse().unwrap()).collect();
        for (a, b) in back.iter().zip(&values) {
            assert!((a - b).abs() <= 1e-8 * b.abs());
        }
    }

    #[test]
    fn emit_csv_rejects_nan_and_ragged_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        assert!(emit_csv(&path, &["x"], [vec![format_float(f64::NAN)]]).is_err());
        assert!(emit_csv(&path, &["x", "y"], [vec!["1".to_string()]]).is_err());
    }

    #[test]
    fn out_dir_precedence() {
        let mut spec = ExperimentSpec { name: "demo".into(), ..Default::default() };
        assert_eq!(resolve_out_dir(&spec, Some(Path::new("/tmp/a"))), PathBuf::from("/tmp/a"));
        spec.out_dir = Some("/tmp/b".into());
        assert_eq!(resolve_out_dir(&spec, None), PathBuf::from("/tmp/b"));
    }
}
