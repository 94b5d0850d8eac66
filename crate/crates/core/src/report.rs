//! CSV output for sweep results and per-job dumps.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use tempfile::NamedTempFile;

use crate::engine::RunResult;
use crate::experiment::PointMean;
use crate::metrics::RunSummary;

pub const CSV_HEADER: &str = "scheduler,sigma,load,dn,run_id,mean_sojourn,mean_slowdown,job_count";
pub const MEANS_HEADER: &str = "scheduler,sigma,load,dn,runs,mean_sojourn,mean_slowdown";
pub const JOB_DUMP_HEADER: &str =
    "scheduler,label,submit_time,true_size,est_size,completed_at,sojourn,slowdown,became_late_at";

/// Formats like C's `%.9g`: 9 significant digits, trailing zeros dropped,
/// scientific notation outside `[1e-4, 1e9)`.
pub fn format_g9(x: f64) -> String {
    const PRECISION: i32 = 9;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", (PRECISION - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..PRECISION).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_fraction(mantissa), sign, exp.abs())
    } else {
        let decimals = (PRECISION - 1 - exp) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_records<W: Write>(records: &[RunSummary], mut w: W) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.scheduler_name,
            format_g9(r.sigma),
            format_g9(r.load),
            format_g9(r.dn_ratio),
            r.run_id,
            format_g9(r.mean_sojourn),
            format_g9(r.mean_slowdown),
            r.job_count
        )?;
    }
    w.flush()
}

pub fn write_point_means<W: Write>(means: &[PointMean], mut w: W) -> io::Result<()> {
    writeln!(w, "{MEANS_HEADER}")?;
    for m in means {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            m.scheduler,
            format_g9(m.sigma),
            format_g9(m.load),
            format_g9(m.dn_ratio),
            m.runs,
            format_g9(m.mean_sojourn),
            format_g9(m.mean_slowdown)
        )?;
    }
    w.flush()
}

/// Per-job rows for one or more runs under a single header.
pub fn write_job_dump<W: Write>(runs: &[(&str, &RunResult)], mut w: W) -> io::Result<()> {
    writeln!(w, "{JOB_DUMP_HEADER}")?;
    for (scheduler, j) in runs.iter().flat_map(|(s, r)| r.jobs.iter().map(move |j| (s, j))) {
        let opt = |v: Option<f64>| v.map(format_g9).unwrap_or_default();
        let sojourn = j.sojourn();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            scheduler,
            j.label,
            format_g9(j.submit_time),
            format_g9(j.true_size),
            format_g9(j.est_size),
            opt(j.completed_at),
            opt(sojourn),
            opt(sojourn.map(|s| s / j.true_size)),
            opt(j.became_late_at)
        )?;
    }
    w.flush()
}

/// Writes through a temporary file in the destination directory and renames
/// it into place, so a failed write leaves nothing behind.
pub fn write_atomically<F>(path: &Path, write: F) -> io::Result<()>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        write(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
