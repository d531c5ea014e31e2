//! CSV exchange formats.
//!
//! Every file is UTF-8 with LF line endings: optional `# key: value`
//! metadata lines, then a header row, then data rows. Floats are written with
//! nine significant digits.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use num_complex::Complex;
use thiserror::Error;

use crate::coherence::{CoherenceError, DecayTrace, TimeUnit};
use crate::ensemble::{EnsembleError, SpectralProfile};
use crate::photonics::CountHistogram;
use crate::propagation::{PropagationError, PulseTrain};
use crate::scalar::Real;

pub const PROFILE_HEADER: &str = "detuning_mhz,optical_depth";
pub const PULSE_HEADER: &str = "time_ns,re,im";
pub const HISTOGRAM_HEADER: &str = "bin_start_ns,counts";
pub const FRINGE_HEADER: &str = "delta_alpha_rad,counts";

#[derive(Debug, Error)]
pub enum CsvError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error("expected header `{want}`, found `{got}`")]
    Header { want: String, got: String },
    #[error("missing metadata `{0}`")]
    MissingMeta(String),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error(transparent)]
    Coherence(#[from] CoherenceError),
}

pub type Result<T> = std::result::Result<T, CsvError>;

/// `# key: value` lines preceding the header.
pub type Meta = BTreeMap<String, String>;

/// Nine significant digits in scientific notation.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.8e}")
}

fn write_meta<W: Write>(w: &mut W, meta: &Meta) -> std::io::Result<()> {
    for (k, v) in meta {
        writeln!(w, "# {k}: {v}")?;
    }
    Ok(())
}

struct Table {
    meta: Meta,
    header: Vec<String>,
    /// `(line number, fields)`.
    rows: Vec<(u64, Vec<String>)>,
}

fn read_table<R: Read>(mut r: R) -> Result<Table> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let mut meta = Meta::new();
    let mut skipped = 0u64;
    let mut rest = text.as_str();
    while let Some(line) = rest.strip_prefix('#') {
        let (head, tail) = line.split_once('\n').unwrap_or((line, ""));
        if let Some((k, v)) = head.split_once(':') {
            meta.insert(k.trim().to_string(), v.trim().to_string());
        }
        skipped += 1;
        rest = tail;
    }
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(rest.as_bytes());
    let header = rdr.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line()) + skipped;
        rows.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(Table { meta, header, rows })
}

fn expect_header(t: &Table, want: &[&str]) -> Result<()> {
    let ok = t.header.len() == want.len() && t.header.iter().zip(want).all(|(a, b)| a == b);
    if !ok {
        return Err(CsvError::Header {
            want: want.join(","),
            got: t.header.join(","),
        });
    }
    Ok(())
}

fn field<F: std::str::FromStr>(line: u64, row: &[String], i: usize) -> Result<F> {
    let s = row.get(i).ok_or_else(|| CsvError::Parse {
        line,
        msg: format!("missing column {}", i + 1),
    })?;
    s.parse().map_err(|_| CsvError::Parse {
        line,
        msg: format!("cannot parse `{s}`"),
    })
}

fn real<T: Real>(line: u64, row: &[String], i: usize) -> Result<T> {
    field::<f64>(line, row, i).map(T::lit)
}

pub fn write_profile<W: Write, T: Real>(
    mut w: W,
    p: &SpectralProfile<T>,
    meta: &Meta,
) -> std::io::Result<()> {
    write_meta(&mut w, meta)?;
    writeln!(w, "{PROFILE_HEADER}")?;
    for (f, d) in p.iter() {
        writeln!(w, "{},{}", fmt_float(f.as_f64()), fmt_float(d.as_f64()))?;
    }
    Ok(())
}

pub fn read_profile<R: Read, T: Real>(r: R) -> Result<(SpectralProfile<T>, Meta)> {
    let t = read_table(r)?;
    expect_header(&t, &["detuning_mhz", "optical_depth"])?;
    let mut f = Vec::with_capacity(t.rows.len());
    let mut d = Vec::with_capacity(t.rows.len());
    for (line, row) in &t.rows {
        f.push(real(*line, row, 0)?);
        d.push(real(*line, row, 1)?);
    }
    Ok((SpectralProfile::from_samples(&f, d)?, t.meta))
}

pub fn write_pulse<W: Write, T: Real>(
    mut w: W,
    p: &PulseTrain<T>,
    meta: &Meta,
) -> std::io::Result<()> {
    write_meta(&mut w, meta)?;
    writeln!(w, "{PULSE_HEADER}")?;
    for (i, s) in p.samples().iter().enumerate() {
        writeln!(
            w,
            "{},{},{}",
            fmt_float(p.time(i).as_f64()),
            fmt_float(s.re.as_f64()),
            fmt_float(s.im.as_f64())
        )?;
    }
    Ok(())
}

pub fn read_pulse<R: Read, T: Real>(r: R) -> Result<(PulseTrain<T>, Meta)> {
    let t = read_table(r)?;
    expect_header(&t, &["time_ns", "re", "im"])?;
    let mut times: Vec<f64> = Vec::with_capacity(t.rows.len());
    let mut samples = Vec::with_capacity(t.rows.len());
    for (line, row) in &t.rows {
        times.push(field(*line, row, 0)?);
        samples.push(Complex::new(real(*line, row, 1)?, real(*line, row, 2)?));
    }
    if times.len() < 2 {
        return Err(CsvError::Parse {
            line: 0,
            msg: "pulse needs at least two samples".into(),
        });
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    for (i, w) in times.windows(2).enumerate() {
        if ((w[1] - w[0]) - dt).abs() > dt.abs() * 1e-6 {
            return Err(CsvError::Parse {
                line: t.rows[i + 1].0,
                msg: "time axis is not uniform".into(),
            });
        }
    }
    Ok((
        PulseTrain::new(T::lit(times[0]), T::lit(dt), samples)?,
        t.meta,
    ))
}

pub fn write_histogram<W: Write>(mut w: W, h: &CountHistogram, meta: &Meta) -> std::io::Result<()> {
    let mut meta = meta.clone();
    meta.insert("n_trials".into(), h.n_trials.to_string());
    meta.insert("bin_width_ns".into(), fmt_float(h.bin_width_ns));
    write_meta(&mut w, &meta)?;
    writeln!(w, "{HISTOGRAM_HEADER}")?;
    for (i, c) in h.counts.iter().enumerate() {
        writeln!(w, "{},{c}", fmt_float(h.bin_start(i)))?;
    }
    Ok(())
}

pub fn read_histogram<R: Read>(r: R) -> Result<(CountHistogram, Meta)> {
    let t = read_table(r)?;
    expect_header(&t, &["bin_start_ns", "counts"])?;
    let meta_num = |key: &str| -> Result<&String> {
        t.meta
            .get(key)
            .ok_or_else(|| CsvError::MissingMeta(key.into()))
    };
    let width: f64 = meta_num("bin_width_ns")?
        .parse()
        .map_err(|_| CsvError::Parse {
            line: 0,
            msg: "bad bin_width_ns".into(),
        })?;
    let n_trials: u64 = meta_num("n_trials")?.parse().map_err(|_| CsvError::Parse {
        line: 0,
        msg: "bad n_trials".into(),
    })?;
    let mut origin = None;
    let mut counts = Vec::with_capacity(t.rows.len());
    for (line, row) in &t.rows {
        let start: f64 = field(*line, row, 0)?;
        origin.get_or_insert(start);
        counts.push(field(*line, row, 1)?);
    }
    Ok((
        CountHistogram {
            bin_width_ns: width,
            origin_ns: origin.unwrap_or(0.0),
            counts,
            n_trials,
        },
        t.meta,
    ))
}

pub fn write_fringe<W: Write>(mut w: W, fringe: &[(f64, f64)], meta: &Meta) -> std::io::Result<()> {
    write_meta(&mut w, meta)?;
    writeln!(w, "{FRINGE_HEADER}")?;
    for &(a, c) in fringe {
        writeln!(w, "{},{}", fmt_float(a), fmt_float(c))?;
    }
    Ok(())
}

pub fn read_fringe<R: Read>(r: R) -> Result<(Vec<(f64, f64)>, Meta)> {
    let t = read_table(r)?;
    expect_header(&t, &["delta_alpha_rad", "counts"])?;
    let rows = t
        .rows
        .iter()
        .map(|(line, row)| Ok((field(*line, row, 0)?, field(*line, row, 1)?)))
        .collect::<Result<_>>()?;
    Ok((rows, t.meta))
}

/// Writes `time,value[,sigma]` after a `# unit: <symbol>` line.
pub fn write_trace<W: Write, T: Real>(
    mut w: W,
    trace: &DecayTrace<T>,
    meta: &Meta,
) -> std::io::Result<()> {
    let mut meta = meta.clone();
    meta.insert("unit".into(), trace.unit().symbol().into());
    write_meta(&mut w, &meta)?;
    let sigma = trace.sigma();
    writeln!(
        w,
        "{}",
        if sigma.is_some() {
            "time,value,sigma"
        } else {
            "time,value"
        }
    )?;
    for i in 0..trace.len() {
        write!(
            w,
            "{},{}",
            fmt_float(trace.times()[i].as_f64()),
            fmt_float(trace.values()[i].as_f64())
        )?;
        if let Some(s) = sigma {
            write!(w, ",{}", fmt_float(s[i].as_f64()))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Reads a decay trace. The time unit comes from a `# unit:` line; its absence
/// is an error rather than a silent default.
pub fn read_trace<R: Read, T: Real>(r: R) -> Result<(DecayTrace<T>, Meta)> {
    let t = read_table(r)?;
    let with_sigma = match t.header.len() {
        2 => {
            expect_header(&t, &["time", "value"])?;
            false
        }
        _ => {
            expect_header(&t, &["time", "value", "sigma"])?;
            true
        }
    };
    let unit_str = t
        .meta
        .get("unit")
        .ok_or_else(|| CsvError::MissingMeta("unit".into()))?;
    let unit = TimeUnit::parse(unit_str).ok_or_else(|| CsvError::Parse {
        line: 1,
        msg: format!("unknown time unit `{unit_str}`"),
    })?;
    let (mut times, mut values, mut sigma) = (Vec::new(), Vec::new(), Vec::new());
    for (line, row) in &t.rows {
        times.push(real(*line, row, 0)?);
        values.push(real(*line, row, 1)?);
        if with_sigma {
            sigma.push(real(*line, row, 2)?);
        }
    }
    let trace = DecayTrace::new(unit, times, values, with_sigma.then_some(sigma))?;
    Ok((trace, t.meta))
}
