//! SWIM-style workload traces.
//!
//! A trace row carries a submission time and three byte counts (input read
//! from disk, data shuffled over the network, output written to disk). Rows
//! are turned into job sizes in seconds by solving for per-byte disk and
//! network costs `d` and `n` such that
//!
//! ```text
//!     sum_j S_j = sum_j d (i_j + o_j) + n s_j = l (t_e - t_0)
//!     d / n     = X
//! ```
//!
//! where `l` is the target load and `X` the disk/network bandwidth ratio.

use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Pareto};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: malformed row")]
    MalformedRow { line: usize },
    #[error("line {line}: negative value in field `{field}`")]
    NegativeValue { line: usize, field: &'static str },
    #[error("invalid column map: {0}")]
    InvalidColumnMap(String),
    #[error("degenerate trace: {0}")]
    DegenerateTrace(String),
    #[error("invalid calibration config: {0}")]
    InvalidConfig(String),
    #[error("job `{label}` has zero size")]
    ZeroSizeJob { label: String },
    #[error("invalid synthetic workload parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One raw trace row.
#[derive(Debug, Clone, PartialEq)]
pub struct JobSpec {
    pub label: String,
    pub submit_time: f64,
    pub input_bytes: f64,
    pub shuffle_bytes: f64,
    pub output_bytes: f64,
}

/// A job whose size, in seconds of whole-cluster service, is known.
#[derive(Debug, Clone, PartialEq)]
pub struct SizedJob {
    pub label: String,
    pub submit_time: f64,
    pub true_size: f64,
}

/// Zero-based column positions of the trace fields.
///
/// When `label` is `None`, jobs are labelled by their line number.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColumnMap {
    pub label: Option<usize>,
    pub submit: usize,
    pub input: usize,
    pub shuffle: usize,
    pub output: usize,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            label: Some(0),
            submit: 1,
            input: 2,
            shuffle: 3,
            output: 4,
        }
    }
}

impl ColumnMap {
    fn validate(&self) -> Result<(), TraceError> {
        let mut cols = vec![self.submit, self.input, self.shuffle, self.output];
        cols.extend(self.label);
        let total = cols.len();
        cols.sort_unstable();
        cols.dedup();
        if cols.len() != total {
            return Err(TraceError::InvalidColumnMap("column indices must be distinct".into()));
        }
        Ok(())
    }
}

/// Parses `label,submit,input,shuffle,output` indices; `-` as the label
/// index means "no label column".
impl FromStr for ColumnMap {
    type Err = TraceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 5 {
            return Err(TraceError::InvalidColumnMap(format!(
                "expected 5 comma-separated indices, got `{s}`"
            )));
        }
        let idx = |p: &str| {
            p.parse::<usize>()
                .map_err(|_| TraceError::InvalidColumnMap(format!("bad column index `{p}`")))
        };
        let map = ColumnMap {
            label: if parts[0] == "-" { None } else { Some(idx(parts[0])?) },
            submit: idx(parts[1])?,
            input: idx(parts[2])?,
            shuffle: idx(parts[3])?,
            output: idx(parts[4])?,
        };
        map.validate()?;
        Ok(map)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeUnit {
    #[default]
    Seconds,
    Milliseconds,
}

impl TimeUnit {
    fn to_seconds(self, t: f64) -> f64 {
        match self {
            TimeUnit::Seconds => t,
            TimeUnit::Milliseconds => t / 1000.0,
        }
    }
}

impl FromStr for TimeUnit {
    type Err = TraceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "s" | "seconds" => Ok(TimeUnit::Seconds),
            "ms" | "milliseconds" => Ok(TimeUnit::Milliseconds),
            other => Err(TraceError::InvalidColumnMap(format!("unknown time unit `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    pub columns: ColumnMap,
    pub time_unit: TimeUnit,
}

/// Reads a tab-separated trace. Blank lines and lines starting with `#` are
/// skipped; line numbers in errors are 1-based physical lines.
pub fn parse_swim<R: BufRead>(reader: R, opts: &ParseOptions) -> Result<Vec<JobSpec>, TraceError> {
    opts.columns.validate()?;
    let cols = opts.columns;
    let mut jobs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        let get = |idx: usize| {
            fields
                .get(idx)
                .map(|f| f.trim())
                .ok_or(TraceError::MalformedRow { line: lineno })
        };
        let num = |idx: usize, name: &'static str| -> Result<f64, TraceError> {
            let v: f64 = get(idx)?
                .parse()
                .map_err(|_| TraceError::MalformedRow { line: lineno })?;
            if !v.is_finite() {
                return Err(TraceError::MalformedRow { line: lineno });
            }
            if v < 0.0 {
                return Err(TraceError::NegativeValue {
                    line: lineno,
                    field: name,
                });
            }
            Ok(v)
        };
        let label = match cols.label {
            Some(idx) => get(idx)?.to_string(),
            None => lineno.to_string(),
        };
        jobs.push(JobSpec {
            label,
            submit_time: opts.time_unit.to_seconds(num(cols.submit, "submit_time")?),
            input_bytes: num(cols.input, "input_bytes")?,
            shuffle_bytes: num(cols.shuffle, "shuffle_bytes")?,
            output_bytes: num(cols.output, "output_bytes")?,
        });
    }
    Ok(jobs)
}

/// Writes jobs in the default column layout (seconds), readable back by
/// [`parse_swim`] with default options.
pub fn write_swim<W: Write>(jobs: &[JobSpec], mut w: W) -> io::Result<()> {
    for j in jobs {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}",
            j.label, j.submit_time, j.input_bytes, j.shuffle_bytes, j.output_bytes
        )?;
    }
    w.flush()
}

pub const SIZED_HEADER: &str = "label\tsubmit_time\ttrue_size";

/// Writes a sized workload with a `label\tsubmit_time\ttrue_size` header.
pub fn write_sized<W: Write>(jobs: &[SizedJob], mut w: W) -> io::Result<()> {
    writeln!(w, "{SIZED_HEADER}")?;
    for j in jobs {
        writeln!(w, "{}\t{}\t{}", j.label, j.submit_time, j.true_size)?;
    }
    w.flush()
}

/// Reads the format produced by [`write_sized`].
pub fn parse_sized<R: BufRead>(reader: R) -> Result<Vec<SizedJob>, TraceError> {
    let mut jobs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.starts_with('#') || trimmed == SIZED_HEADER {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').map(str::trim).collect();
        if fields.len() < 3 {
            return Err(TraceError::MalformedRow { line: lineno });
        }
        let num = |s: &str, name: &'static str| -> Result<f64, TraceError> {
            let v: f64 = s.parse().map_err(|_| TraceError::MalformedRow { line: lineno })?;
            if !v.is_finite() {
                return Err(TraceError::MalformedRow { line: lineno });
            }
            if v < 0.0 {
                return Err(TraceError::NegativeValue {
                    line: lineno,
                    field: name,
                });
            }
            Ok(v)
        };
        let job = SizedJob {
            label: fields[0].to_string(),
            submit_time: num(fields[1], "submit_time")?,
            true_size: num(fields[2], "true_size")?,
        };
        if job.true_size == 0.0 {
            return Err(TraceError::ZeroSizeJob { label: job.label });
        }
        jobs.push(job);
    }
    Ok(jobs)
}

/// Target load `l` and disk/network bandwidth ratio `d/n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationConfig {
    pub load: f64,
    pub dn_ratio: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            load: 0.9,
            dn_ratio: 4.0,
        }
    }
}

/// Per-byte disk (`d`) and network (`n`) costs, in seconds per byte.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub d: f64,
    pub n: f64,
    pub t0: f64,
    pub te: f64,
}

pub fn calibrate(jobs: &[JobSpec], config: &CalibrationConfig) -> Result<Calibration, TraceError> {
    let CalibrationConfig { load, dn_ratio } = *config;
    if !(load > 0.0 && load.is_finite()) {
        return Err(TraceError::InvalidConfig(format!("load must be > 0, got {load}")));
    }
    if !(dn_ratio > 0.0 && dn_ratio.is_finite()) {
        return Err(TraceError::InvalidConfig(format!(
            "d/n ratio must be > 0, got {dn_ratio}"
        )));
    }
    if jobs.len() < 2 {
        return Err(TraceError::DegenerateTrace(format!(
            "need at least 2 jobs, got {}",
            jobs.len()
        )));
    }
    let t0 = jobs.iter().map(|j| j.submit_time).fold(f64::INFINITY, f64::min);
    let te = jobs.iter().map(|j| j.submit_time).fold(f64::NEG_INFINITY, f64::max);
    if te <= t0 {
        return Err(TraceError::DegenerateTrace(
            "all jobs are submitted at the same instant".into(),
        ));
    }
    let disk_bytes: f64 = jobs.iter().map(|j| j.input_bytes + j.output_bytes).sum();
    let net_bytes: f64 = jobs.iter().map(|j| j.shuffle_bytes).sum();
    let weighted = dn_ratio * disk_bytes + net_bytes;
    if weighted <= 0.0 {
        return Err(TraceError::DegenerateTrace("all byte counts are zero".into()));
    }
    let n = load * (te - t0) / weighted;
    Ok(Calibration {
        d: dn_ratio * n,
        n,
        t0,
        te,
    })
}

pub fn job_size(job: &JobSpec, cal: &Calibration) -> f64 {
    cal.d * (job.input_bytes + job.output_bytes) + cal.n * job.shuffle_bytes
}

/// Applies `S_j = d (i_j + o_j) + n s_j` to every job. `cal` is expected to
/// come from [`calibrate`] on the same trace.
pub fn size_jobs(jobs: &[JobSpec], cal: &Calibration) -> Result<Vec<SizedJob>, TraceError> {
    jobs.iter()
        .map(|j| {
            let size = job_size(j, cal);
            if size <= 0.0 {
                return Err(TraceError::ZeroSizeJob { label: j.label.clone() });
            }
            Ok(SizedJob {
                label: j.label.clone(),
                submit_time: j.submit_time,
                true_size: size,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SizeDistribution {
    /// Pareto with minimum `scale` and tail index `shape`.
    HeavyTail {
        shape: f64,
        scale: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
}

impl Default for SizeDistribution {
    fn default() -> Self {
        SizeDistribution::HeavyTail { shape: 1.5, scale: 1.0 }
    }
}

enum Sampler {
    Pareto(Pareto<f64>),
    Uniform(f64, f64),
}

impl SizeDistribution {
    fn sampler(&self) -> Result<Sampler, TraceError> {
        match *self {
            SizeDistribution::HeavyTail { shape, scale } => {
                if !(shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite()) {
                    return Err(TraceError::InvalidParams(format!(
                        "pareto needs shape > 0 and scale > 0, got shape={shape} scale={scale}"
                    )));
                }
                Pareto::new(scale, shape)
                    .map(Sampler::Pareto)
                    .map_err(|e| TraceError::InvalidParams(e.to_string()))
            }
            SizeDistribution::Uniform { lo, hi } => {
                if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                    return Err(TraceError::InvalidParams(format!(
                        "uniform needs 0 < lo <= hi, got lo={lo} hi={hi}"
                    )));
                }
                Ok(Sampler::Uniform(lo, hi))
            }
        }
    }
}

impl Sampler {
    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            Sampler::Pareto(ref p) => p.sample(rng),
            Sampler::Uniform(lo, hi) if lo == hi => lo,
            Sampler::Uniform(lo, hi) => rng.random_range(lo..hi),
        }
    }
}

/// Poisson arrivals starting at t = 0 with i.i.d. sizes.
pub fn gen_synthetic(
    n_jobs: usize,
    arrival_rate: f64,
    size_distribution: SizeDistribution,
    seed: u64,
) -> Result<Vec<SizedJob>, TraceError> {
    if n_jobs == 0 {
        return Err(TraceError::InvalidParams("n_jobs must be >= 1".into()));
    }
    if !(arrival_rate > 0.0 && arrival_rate.is_finite()) {
        return Err(TraceError::InvalidParams(format!(
            "arrival rate must be > 0, got {arrival_rate}"
        )));
    }
    let sampler = size_distribution.sampler()?;
    let gaps = Exp::new(arrival_rate).map_err(|e| TraceError::InvalidParams(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0.0;
    let mut jobs = Vec::with_capacity(n_jobs);
    for i in 0..n_jobs {
        if i > 0 {
            t += gaps.sample(&mut rng);
        }
        jobs.push(SizedJob {
            label: format!("job{i}"),
            submit_time: t,
            true_size: sampler.sample(&mut rng),
        });
    }
    Ok(jobs)
}

const BYTES_PER_SECOND: f64 = 1e6;

/// Synthetic byte-level trace: sizes from [`gen_synthetic`], each split into
/// input/shuffle/output shares drawn uniformly at random, so that the result
/// can go through [`calibrate`] like a real trace.
pub fn synthetic_trace(spec: &SyntheticSpec) -> Result<Vec<JobSpec>, TraceError> {
    let sized = gen_synthetic(spec.n_jobs, spec.arrival_rate, spec.distribution, spec.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(1);
    Ok(sized
        .into_iter()
        .map(|j| {
            let shares: [f64; 3] = [
                rng.random_range(0.05..1.0),
                rng.random_range(0.05..1.0),
                rng.random_range(0.05..1.0),
            ];
            let total: f64 = shares.iter().sum();
            let bytes = |s: f64| (j.true_size * BYTES_PER_SECOND * s / total).round();
            JobSpec {
                label: j.label,
                submit_time: j.submit_time,
                input_bytes: bytes(shares[0]),
                shuffle_bytes: bytes(shares[1]),
                output_bytes: bytes(shares[2]),
            }
        })
        .collect())
}

/// Synthetic workload description, written as comma-separated `key=value`
/// pairs: `n`, `rate`, `dist` (`pareto` or `uniform`), `shape`, `scale`,
/// `lo`, `hi`, `seed`. Example: `n=5000,dist=pareto,shape=1.5,seed=1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub n_jobs: usize,
    pub arrival_rate: f64,
    pub distribution: SizeDistribution,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_jobs: 1000,
            arrival_rate: 1.0,
            distribution: SizeDistribution::default(),
            seed: 1,
        }
    }
}

impl FromStr for SyntheticSpec {
    type Err = TraceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |msg: String| TraceError::InvalidParams(msg);
        let mut spec = SyntheticSpec::default();
        let mut dist = "pareto".to_string();
        let (mut shape, mut scale, mut lo, mut hi) = (1.5, 1.0, 1.0, 1.0);
        for kv in s.split(',').map(str::trim).filter(|kv| !kv.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got `{kv}`")))?;
            let float = || v.parse::<f64>().map_err(|_| bad(format!("bad value for `{k}`: `{v}`")));
            match k {
                "n" => spec.n_jobs = v.parse().map_err(|_| bad(format!("bad value for `n`: `{v}`")))?,
                "rate" => spec.arrival_rate = float()?,
                "dist" => dist = v.to_string(),
                "shape" => shape = float()?,
                "scale" => scale = float()?,
                "lo" => lo = float()?,
                "hi" => hi = float()?,
                "seed" => spec.seed = v.parse().map_err(|_| bad(format!("bad value for `seed`: `{v}`")))?,
                other => return Err(bad(format!("unknown key `{other}`"))),
            }
        }
        spec.distribution = match dist.as_str() {
            "pareto" => SizeDistribution::HeavyTail { shape, scale },
            "uniform" => SizeDistribution::Uniform { lo, hi },
            other => return Err(bad(format!("unknown distribution `{other}`"))),
        };
        Ok(spec)
    }
}

impl fmt::Display for SyntheticSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={},rate={},", self.n_jobs, self.arrival_rate)?;
        match self.distribution {
            SizeDistribution::HeavyTail { shape, scale } => write!(f, "dist=pareto,shape={shape},scale={scale}")?,
            SizeDistribution::Uniform { lo, hi } => write!(f, "dist=uniform,lo={lo},hi={hi}")?,
        }
        write!(f, ",seed={}", self.seed)
    }
}
