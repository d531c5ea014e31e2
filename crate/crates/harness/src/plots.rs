//! Gnuplot-ready data files derived from a run's CSV outputs.

use std::path::{Path, PathBuf};

use crate::error::{HarnessError, Result};
use crate::output::{write_atomic, ArtifactKind, OutputEntry, RunManifest, MANIFEST_FILE};

pub const PLOT_DIR: &str = "plots";
pub const SCRIPT_FILE: &str = "plots.gp";

struct Table {
    meta: Vec<(String, String)>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn parse_csv(path: &Path, text: &str) -> Result<Table> {
    let mut meta = Vec::new();
    let mut header = None;
    let mut rows = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once(':') {
                meta.push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        let cells: Vec<String> = line.split(',').map(|c| c.trim().to_string()).collect();
        if header.is_none() {
            header = Some(cells);
        } else {
            rows.push(cells);
        }
    }
    let header = header
        .ok_or_else(|| HarnessError::schema("", format!("{}: no header row", path.display())))?;
    Ok(Table { meta, header, rows })
}

/// Adds `intensity = re² + im²` to pulse tables.
fn with_intensity(t: &mut Table) {
    let (Some(re), Some(im)) = (
        t.header.iter().position(|h| h == "re"),
        t.header.iter().position(|h| h == "im"),
    ) else {
        return;
    };
    t.header.push("intensity".into());
    for r in &mut t.rows {
        let v = match (r[re].parse::<f64>(), r[im].parse::<f64>()) {
            (Ok(a), Ok(b)) => format!("{:.8e}", a * a + b * b),
            _ => "nan".into(),
        };
        r.push(v);
    }
}

fn render(t: &Table, source: &str, config_hash: &str) -> String {
    let mut out = format!("# source: {source}\n# config_hash: {config_hash}\n");
    for (k, v) in &t.meta {
        if k != "config_hash" {
            out.push_str(&format!("# {k}: {v}\n"));
        }
    }
    let cols: Vec<String> = t
        .header
        .iter()
        .enumerate()
        .map(|(i, h)| format!("{}:{h}", i + 1))
        .collect();
    out.push_str(&format!("# columns: {}\n", cols.join(" ")));
    for r in &t.rows {
        out.push_str(&r.join(" "));
        out.push('\n');
    }
    out
}

fn script_entry(dat: &str, t: &Table) -> String {
    let title = t
        .meta
        .iter()
        .find(|(k, _)| k == "title")
        .map(|(_, v)| v.as_str())
        .unwrap_or(dat);
    let x = &t.header[0];
    let mut s = format!("set title \"{title}\"\nset xlabel \"{x}\"\nplot ");
    let ycols: Vec<String> = (2..=t.header.len())
        .filter(|&c| t.header[c - 1] != "sigma")
        .map(|c| {
            format!(
                "\"{dat}\" using 1:{c} with lines title \"{}\"",
                t.header[c - 1]
            )
        })
        .collect();
    s.push_str(&ycols.join(", \\\n     "));
    s.push_str("\npause -1\n\n");
    s
}

fn is_plottable(kind: ArtifactKind) -> bool {
    matches!(
        kind,
        ArtifactKind::Profile
            | ArtifactKind::Pulse
            | ArtifactKind::Histogram
            | ArtifactKind::Fringe
            | ArtifactKind::Trace
    )
}

/// Writes `plots/<stem>.dat` for every tabular output listed in the manifest,
/// plus a gnuplot script, and records the new files in the manifest.
pub fn emit_plotdata(manifest_path: &Path) -> Result<Vec<PathBuf>> {
    let mut manifest = RunManifest::load(manifest_path)?;
    let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let mut written = Vec::new();
    let mut entries = Vec::new();
    let mut script = format!(
        "# gnuplot script over the .dat files in this directory\n# config_hash: {}\n\n",
        manifest.config_hash
    );
    for entry in manifest.outputs.iter().filter(|e| is_plottable(e.kind)) {
        let src = dir.join(&entry.path);
        if !src.is_file() {
            return Err(HarnessError::MissingArtifact(src));
        }
        let text = std::fs::read_to_string(&src).map_err(|e| HarnessError::io(&src, e))?;
        let mut table = parse_csv(&src, &text)?;
        if entry.kind == ArtifactKind::Pulse {
            with_intensity(&mut table);
        }
        let stem = Path::new(&entry.path)
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("data")
            .to_string();
        let dat = format!("{stem}.dat");
        let path = dir.join(PLOT_DIR).join(&dat);
        write_atomic(
            &path,
            render(&table, &entry.path, &manifest.config_hash).as_bytes(),
        )?;
        script.push_str(&script_entry(&dat, &table));
        entries.push(OutputEntry {
            path: format!("{PLOT_DIR}/{dat}"),
            kind: ArtifactKind::Plot,
        });
        written.push(path);
    }
    let script_path = dir.join(PLOT_DIR).join(SCRIPT_FILE);
    write_atomic(&script_path, script.as_bytes())?;
    entries.push(OutputEntry {
        path: format!("{PLOT_DIR}/{SCRIPT_FILE}"),
        kind: ArtifactKind::Plot,
    });
    written.push(script_path);

    manifest.outputs.retain(|e| e.kind != ArtifactKind::Plot);
    manifest.outputs.extend(entries);
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    write_atomic(&dir.join(MANIFEST_FILE), &bytes)?;
    Ok(written)
}
