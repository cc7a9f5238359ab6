//! `ingest`: convert datasets into the text files the attack verb reads.
//!
//! Two source formats: big-endian IDX pairs (images + labels) and plain CSV
//! rows of values already scaled to [0, 1]. Both produce `vectors.txt` (one
//! comma-separated input per line) and, when labels are present,
//! `labels.txt` (one 0-based class per line).
//!
//! IDX pixels are written as exact `p/255` fractions so a rational run
//! loses nothing; zero pixels are written as a bare `0` to keep the files
//! small, since typical digit images are mostly background.

use crate::{FormatOpt, IngestArgs};
use anyhow::{bail, Context, Result};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

pub fn run(args: &IngestArgs) -> Result<ExitCode> {
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating output directory {}", args.out.display()))?;
    match args.format {
        FormatOpt::Idx => from_idx(args),
        FormatOpt::Csv => from_csv(args),
    }
}

fn read(path: &PathBuf) -> Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn write_out(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn from_idx(args: &IngestArgs) -> Result<ExitCode> {
    let Some(images_path) = &args.images else {
        bail!("--format idx needs --images");
    };
    let images = crate::idx::parse_idx_images(&read(images_path)?)
        .with_context(|| format!("parsing {}", images_path.display()))?;

    let mut vectors = String::new();
    for i in 0..images.count {
        let mut first = true;
        for &p in images.image(i) {
            if !first {
                vectors.push(',');
            }
            first = false;
            if p == 0 {
                vectors.push('0');
            } else {
                write!(vectors, "{p}/255").unwrap();
            }
        }
        vectors.push('\n');
    }
    let vectors_path = write_out(&args.out, "vectors.txt", &vectors)?;
    println!(
        "wrote {} vectors of {} values ({}x{}) to {}",
        images.count,
        images.rows * images.cols,
        images.rows,
        images.cols,
        vectors_path.display()
    );

    if let Some(labels_path) = &args.labels {
        let labels = crate::idx::parse_idx_labels(&read(labels_path)?)
            .with_context(|| format!("parsing {}", labels_path.display()))?;
        if labels.len() != images.count {
            bail!("{} labels for {} images", labels.len(), images.count);
        }
        let text: String = labels.iter().map(|l| format!("{l}\n")).collect();
        let out = write_out(&args.out, "labels.txt", &text)?;
        println!("wrote {} labels to {}", labels.len(), out.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn from_csv(args: &IngestArgs) -> Result<ExitCode> {
    let Some(data_path) = &args.data else {
        bail!("--format csv needs --data");
    };
    let text = std::fs::read_to_string(data_path)
        .with_context(|| format!("reading {}", data_path.display()))?;

    let mut vectors = String::new();
    let mut count = 0usize;
    let mut width: Option<usize> = None;
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                bail!("row {} has {} values, earlier rows had {w}", line_no + 1, fields.len())
            }
            Some(_) => {}
        }
        for (i, f) in fields.iter().enumerate() {
            let v: f64 = f
                .parse()
                .with_context(|| format!("row {}, value {}: '{f}'", line_no + 1, i + 1))?;
            if !(0.0..=1.0).contains(&v) {
                bail!("row {}, value {}: {v} is outside [0, 1]", line_no + 1, i + 1);
            }
            if i > 0 {
                vectors.push(',');
            }
            vectors.push_str(f);
        }
        vectors.push('\n');
        count += 1;
    }
    if count == 0 {
        bail!("{} holds no data rows", data_path.display());
    }
    let vectors_path = write_out(&args.out, "vectors.txt", &vectors)?;
    println!(
        "wrote {count} vectors of {} values to {}",
        width.unwrap_or(0),
        vectors_path.display()
    );

    if let Some(labels_path) = &args.labels {
        let raw = std::fs::read_to_string(labels_path)
            .with_context(|| format!("reading {}", labels_path.display()))?;
        let mut labels = Vec::new();
        for (line_no, line) in raw.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let l: usize =
                line.parse().with_context(|| format!("label line {}: '{line}'", line_no + 1))?;
            labels.push(l);
        }
        if labels.len() != count {
            bail!("{} labels for {count} rows", labels.len());
        }
        let text: String = labels.iter().map(|l| format!("{l}\n")).collect();
        let out = write_out(&args.out, "labels.txt", &text)?;
        println!("wrote {} labels to {}", labels.len(), out.display());
    }
    Ok(ExitCode::SUCCESS)
}
