//! `report`: validate an attack report and optionally emit plot columns.
//!
//! Validation re-aggregates the record lines from scratch and insists the
//! file's own summary lines match the recomputation (compared through the
//! canonical rendering, so the check is exact at the report's six-decimal
//! precision). A report whose aggregates were edited out from under its
//! records fails here.

use crate::ReportArgs;
use anyhow::{bail, Context, Result};
use patchadv_core::metrics::Report;
use std::fmt::Write as _;
use std::process::ExitCode;

pub fn run(args: &ReportArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&args.report)
        .with_context(|| format!("reading report {}", args.report.display()))?;
    let parsed =
        Report::parse(&text).with_context(|| format!("parsing {}", args.report.display()))?;

    // Evenness only weighs classes that actually occur, so covering the
    // largest observed label is enough to reproduce the original aggregate.
    let classes = parsed
        .records
        .iter()
        .filter_map(|r| r.adv_label)
        .max()
        .map_or(1, |m| m + 1);
    let recomputed = Report::from_records(parsed.net.clone(), classes, parsed.records.clone())?;
    if recomputed.render() != parsed.render() {
        bail!(
            "aggregates in {} do not match their own records",
            args.report.display()
        );
    }

    println!(
        "report ok: net={} records={} successes={} defect_detection={:.6}",
        parsed.net,
        parsed.records.len(),
        parsed.successes,
        parsed.defect_detection
    );

    if let Some(path) = &args.plot_data {
        let mut out = String::from("index\torig_label\tstatus\tadv_label\tl2\tlinf\tpixels\ttime_ms\n");
        for r in &parsed.records {
            let adv = r.adv_label.map_or("none".to_string(), |l| l.to_string());
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{}\t{}",
                r.index, r.orig_label, r.status, adv, r.l2, r.linf, r.pixels, r.time_ms
            )
            .unwrap();
        }
        std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
        println!("plot data written to {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}
