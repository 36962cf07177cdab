//! Command implementations behind the `actmon` binary.
//!
//! Each `cmd_*` function performs one subcommand's work and returns either a
//! printable summary or a [`CliError`] carrying the documented exit code:
//! 2 for argument errors, 1 for I/O and file-format errors, 3 when a monitor
//! is evaluated against a network file other than the one it was built from.
//! All summaries are key-value text on standard output; diagnostics go to
//! standard error.

pub mod report;

use actmon_core::{
    content_fingerprint, generate, load_dataset, load_monitor, save_csv, save_monitor, ClusterSpec,
    DataFormat, Dataset, MinMaxMonitor, Monitor, MonitorConfig, MonitorError, Network,
    PatternMonitor, SyntheticSpec, Threshold, ThresholdScheme,
};
use report::Report;
use serde::Deserialize;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub enum CliError {
    /// Bad flag values or incompatible inputs; exit 2.
    Usage(String),
    /// Unreadable or unwritable files; exit 1.
    Io(String),
    /// Readable but malformed file contents; exit 1.
    Format(String),
    /// Monitor/network pairing violation; exit 3.
    Fingerprint { expected: String, actual: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) | CliError::Format(_) => 1,
            CliError::Fingerprint { .. } => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "{m}"),
            CliError::Format(m) => write!(f, "{m}"),
            CliError::Fingerprint { expected, actual } => write!(
                f,
                "network fingerprint mismatch: monitor was built against {expected}, got {actual}"
            ),
        }
    }
}

impl std::error::Error for CliError {}

/// Build errors coming out of the core crate are argument problems from the
/// CLI's point of view, except for embedded I/O failures.
fn usage_from(e: MonitorError) -> CliError {
    match e {
        MonitorError::Io(io) => CliError::Io(io.to_string()),
        MonitorError::Json(j) => CliError::Format(j.to_string()),
        other => CliError::Usage(other.to_string()),
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Loads a network file together with the fingerprint of its raw bytes.
pub fn load_network(path: &Path) -> Result<(Network, String), CliError> {
    let bytes = read_bytes(path)?;
    let net = Network::from_slice(&bytes)
        .map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
    Ok((net, content_fingerprint(&bytes)))
}

/// Loads a dataset, sniffing the raw-f32 magic and falling back to CSV.
pub fn load_data(path: &Path) -> Result<Dataset, CliError> {
    let bytes = read_bytes(path)?;
    let format = if bytes.starts_with(b"RF32") {
        DataFormat::RawF32
    } else {
        DataFormat::Csv
    };
    load_dataset(bytes.as_slice(), format)
        .map_err(|e| CliError::Format(format!("{}: {e}", path.display())))
}

fn load_monitor_file(path: &Path) -> Result<(Monitor, String), CliError> {
    let bytes = read_bytes(path)?;
    let loaded = load_monitor(bytes.as_slice())
        .map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
    Ok((loaded.monitor, loaded.network_fingerprint))
}

fn check_fingerprint(expected: &str, actual: &str) -> Result<(), CliError> {
    if expected != actual {
        return Err(CliError::Fingerprint {
            expected: expected.to_string(),
            actual: actual.to_string(),
        });
    }
    Ok(())
}

/// Which monitor family to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MonitorKind {
    MinMax,
    Pattern,
}

/// Threshold selection as given on the command line.
#[derive(Clone, Debug)]
pub enum ThresholdArg {
    Zero,
    Quantile(Vec<f64>),
    ExplicitPath(PathBuf),
}

impl ThresholdArg {
    /// Parses `zero`, `quantile:p1,p2,...` or `explicit:PATH`.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        if text == "zero" {
            return Ok(ThresholdArg::Zero);
        }
        if let Some(list) = text.strip_prefix("quantile:") {
            let ps = list
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse::<f64>()
                        .map_err(|e| CliError::Usage(format!("bad quantile {p:?}: {e}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            return Ok(ThresholdArg::Quantile(ps));
        }
        if let Some(path) = text.strip_prefix("explicit:") {
            return Ok(ThresholdArg::ExplicitPath(PathBuf::from(path)));
        }
        Err(CliError::Usage(format!(
            "bad --thresholds value {text:?}; expected zero, quantile:p1,p2,... or explicit:PATH"
        )))
    }

    fn into_scheme(self) -> Result<ThresholdScheme, CliError> {
        Ok(match self {
            ThresholdArg::Zero => ThresholdScheme::Zero,
            ThresholdArg::Quantile(ps) => ThresholdScheme::Quantile(ps),
            ThresholdArg::ExplicitPath(path) => {
                let bytes = read_bytes(&path)?;
                let lists = parse_threshold_file(&bytes)
                    .map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
                ThresholdScheme::Explicit(lists)
            }
        })
    }
}

/// Explicit threshold files are a JSON array of per-neuron arrays; entries
/// are numbers or the strings "-inf"/"inf".
fn parse_threshold_file(bytes: &[u8]) -> Result<Vec<Vec<Threshold>>, String> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Entry {
        Num(f64),
        Named(String),
    }
    let raw: Vec<Vec<Entry>> = serde_json::from_slice(bytes).map_err(|e| e.to_string())?;
    raw.into_iter()
        .map(|list| {
            list.into_iter()
                .map(|e| match e {
                    Entry::Num(v) if v.is_finite() => Ok(Threshold::Value(v)),
                    Entry::Num(v) => Err(format!("non-finite threshold {v}")),
                    Entry::Named(s) => match s.as_str() {
                        "-inf" => Ok(Threshold::NegInf),
                        "inf" => Ok(Threshold::PosInf),
                        other => Err(format!("bad threshold entry {other:?}")),
                    },
                })
                .collect()
        })
        .collect()
}

/// Parses a comma-separated neuron index list.
pub fn parse_neurons(text: &str) -> Result<Vec<usize>, CliError> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|e| CliError::Usage(format!("bad neuron index {part:?}: {e}")))
        })
        .collect()
}

pub struct BuildOpts {
    pub network: PathBuf,
    pub data: PathBuf,
    pub layer_k: usize,
    pub layer_kp: usize,
    pub delta: f64,
    pub kind: MonitorKind,
    pub bits: u32,
    pub thresholds: ThresholdArg,
    pub neurons: Option<Vec<usize>>,
    pub out: PathBuf,
}

/// Builds a monitor and writes it to `opts.out`. Returns the printable
/// summary.
pub fn cmd_build(opts: BuildOpts) -> Result<String, CliError> {
    if !opts.delta.is_finite() || opts.delta < 0.0 {
        return Err(CliError::Usage(format!(
            "delta must be nonnegative, got {}",
            opts.delta
        )));
    }
    let (net, fingerprint) = load_network(&opts.network)?;
    let data = load_data(&opts.data)?;
    let scheme = opts.thresholds.into_scheme()?;
    let config = MonitorConfig {
        layer_k: opts.layer_k,
        layer_kp: opts.layer_kp,
        delta: opts.delta,
        neuron_indices: opts
            .neurons
            .unwrap_or_else(|| (0..net.dim(opts.layer_k.min(net.depth()))).collect()),
        bits_per_neuron: opts.bits,
        thresholds: scheme,
    };
    let monitor = match opts.kind {
        MonitorKind::MinMax => {
            Monitor::MinMax(MinMaxMonitor::build(&net, &data, config).map_err(usage_from)?)
        }
        MonitorKind::Pattern => {
            Monitor::Pattern(PatternMonitor::build(&net, &data, config).map_err(usage_from)?)
        }
    };
    let mut bytes = Vec::new();
    save_monitor(&mut bytes, &monitor, &fingerprint).map_err(usage_from)?;
    write_bytes(&opts.out, &bytes)?;
    let mut summary = String::new();
    let _ = writeln!(summary, "monitor_type: {}", monitor.type_name());
    let _ = writeln!(summary, "samples: {}", data.len());
    match &monitor {
        Monitor::MinMax(m) => {
            let widths: Vec<f64> = m.envelope().iter().map(|i| i.width()).collect();
            let total: f64 = widths.iter().sum();
            let _ = writeln!(
                summary,
                "envelope_width_min: {:.6}",
                widths.iter().cloned().fold(f64::INFINITY, f64::min)
            );
            let _ = writeln!(
                summary,
                "envelope_width_mean: {:.6}",
                total / widths.len() as f64
            );
            let _ = writeln!(
                summary,
                "envelope_width_max: {:.6}",
                widths.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            );
        }
        Monitor::Pattern(m) => {
            let _ = writeln!(summary, "cubes: {}", m.cubes().len());
            let _ = writeln!(summary, "words: {}", m.word_count());
        }
    }
    let _ = writeln!(summary, "out: {}", opts.out.display());
    Ok(summary)
}

pub struct EvalOpts {
    pub monitor: PathBuf,
    pub network: PathBuf,
    pub data: PathBuf,
    pub verdicts: Option<PathBuf>,
}

/// Evaluates a dataset against a stored monitor. Refuses to run when the
/// network file is not the one the monitor was built from.
pub fn cmd_eval(opts: EvalOpts) -> Result<Report, CliError> {
    let (monitor, recorded) = load_monitor_file(&opts.monitor)?;
    let (net, actual) = load_network(&opts.network)?;
    check_fingerprint(&recorded, &actual)?;
    let data = load_data(&opts.data)?;
    let mut warnings = 0usize;
    let mut lines = String::new();
    for (i, row) in data.rows().iter().enumerate() {
        let verdict = monitor.eval(&net, row).map_err(usage_from)?;
        if verdict.warning {
            warnings += 1;
        }
        if opts.verdicts.is_some() {
            let status = if verdict.warning { "warning" } else { "ok" };
            let detail = match (&verdict.observed_codes, verdict.warning) {
                (Some(codes), _) => format!(
                    " code={}",
                    codes
                        .iter()
                        .map(|c| format!(
                            "{c:0width$b}",
                            width = monitor.config().bits_per_neuron as usize
                        ))
                        .collect::<Vec<_>>()
                        .join(",")
                ),
                (None, true) => format!(
                    " violations={}",
                    verdict
                        .violating_neurons
                        .iter()
                        .map(usize::to_string)
                        .collect::<Vec<_>>()
                        .join(",")
                ),
                (None, false) => String::new(),
            };
            let _ = writeln!(lines, "{i} {status}{detail}");
        }
    }
    if let Some(path) = &opts.verdicts {
        write_bytes(path, lines.as_bytes())?;
    }
    Ok(Report::new(&monitor, data.len(), warnings))
}

pub struct GenOpts {
    pub seed: Option<u64>,
    pub dim: Option<usize>,
    pub spec: PathBuf,
    pub out_prefix: PathBuf,
}

/// Generates the train/held-out/OOD triple from a spec file; `--seed` and
/// `--dim` override the spec's values when given.
pub fn cmd_gen(opts: GenOpts) -> Result<String, CliError> {
    #[derive(Deserialize)]
    struct SpecFile {
        seed: Option<u64>,
        dim: Option<usize>,
        clusters: Vec<ClusterSpec>,
        shift: Vec<f64>,
    }
    let bytes = read_bytes(&opts.spec)?;
    let file: SpecFile = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Format(format!("{}: {e}", opts.spec.display())))?;
    let seed = opts
        .seed
        .or(file.seed)
        .ok_or_else(|| CliError::Usage("no seed given (flag or spec file)".into()))?;
    let dim = opts
        .dim
        .or(file.dim)
        .ok_or_else(|| CliError::Usage("no dim given (flag or spec file)".into()))?;
    let spec = SyntheticSpec {
        seed,
        dim,
        clusters: file.clusters,
        shift: file.shift,
    };
    spec.validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let (train, held_out, ood) = generate(&spec).map_err(|e| CliError::Usage(e.to_string()))?;
    let prefix = opts.out_prefix.display();
    let mut summary = String::new();
    for (name, split) in [("train", &train), ("held_out", &held_out), ("ood", &ood)] {
        let path = PathBuf::from(format!("{prefix}_{name}.csv"));
        let mut buf = Vec::new();
        save_csv(&mut buf, split).map_err(|e| CliError::Io(e.to_string()))?;
        write_bytes(&path, &buf)?;
        let _ = writeln!(
            summary,
            "{name}: {} rows -> {}",
            split.len(),
            path.display()
        );
    }
    Ok(summary)
}

pub struct ExtendOpts {
    pub monitor: PathBuf,
    pub network: PathBuf,
    pub data: PathBuf,
    pub out: PathBuf,
}

/// Continues a stored monitor's build loop over more data and writes the
/// result; equivalent to rebuilding on the concatenated dataset.
pub fn cmd_extend(opts: ExtendOpts) -> Result<String, CliError> {
    let (mut monitor, recorded) = load_monitor_file(&opts.monitor)?;
    let (net, actual) = load_network(&opts.network)?;
    check_fingerprint(&recorded, &actual)?;
    let data = load_data(&opts.data)?;
    monitor.extend(&net, &data).map_err(usage_from)?;
    let mut bytes = Vec::new();
    save_monitor(&mut bytes, &monitor, &recorded).map_err(usage_from)?;
    write_bytes(&opts.out, &bytes)?;
    let mut summary = String::new();
    let _ = writeln!(summary, "monitor_type: {}", monitor.type_name());
    let _ = writeln!(summary, "samples_added: {}", data.len());
    let _ = writeln!(summary, "out: {}", opts.out.display());
    Ok(summary)
}

pub struct InspectOpts {
    pub monitor: PathBuf,
}

/// Prints a stored monitor's configuration and contents.
pub fn cmd_inspect(opts: InspectOpts) -> Result<String, CliError> {
    let (monitor, fingerprint) = load_monitor_file(&opts.monitor)?;
    let config = monitor.config();
    let mut out = String::new();
    let _ = writeln!(out, "monitor_type: {}", monitor.type_name());
    let _ = writeln!(out, "network_fingerprint: {fingerprint}");
    let _ = writeln!(out, "layer_k: {}", config.layer_k);
    let _ = writeln!(out, "layer_kp: {}", config.layer_kp);
    let _ = writeln!(out, "delta: {}", config.delta);
    let _ = writeln!(out, "neurons: {}", config.neuron_indices.len());
    match &monitor {
        Monitor::MinMax(m) => {
            for (idx, itv) in config.neuron_indices.iter().zip(m.envelope()) {
                let _ = writeln!(out, "neuron {idx}: [{}, {}]", itv.lo(), itv.hi());
            }
        }
        Monitor::Pattern(m) => {
            let _ = writeln!(out, "bits_per_neuron: {}", config.bits_per_neuron);
            let _ = writeln!(out, "cubes: {}", m.cubes().len());
            let _ = writeln!(out, "words: {}", m.word_count());
        }
    }
    Ok(out)
}
