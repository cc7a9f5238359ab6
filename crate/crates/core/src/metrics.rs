//! Attack-quality metrics and the plain-text batch report.
//!
//! Norms are accumulated in the working arithmetic (exact under rationals)
//! and only converted to floating point at the edge, so two runs over the
//! same inputs render identical digits. The report is a line-oriented text
//! format that parses back losslessly, which is what makes reproducibility
//! checks ("same flags, same report") mechanical.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Exact sum of squares of a perturbation vector.
pub fn l2_squared<S: Scalar>(delta: &[S]) -> S {
    let mut acc = S::zero();
    for d in delta {
        acc = acc + d.clone() * d.clone();
    }
    acc
}

/// Euclidean norm, as a float (the square root leaves exact arithmetic).
pub fn l2<S: Scalar>(delta: &[S]) -> f64 {
    l2_squared(delta).to_f64().sqrt()
}

/// Largest absolute component, exact.
pub fn linf<S: Scalar>(delta: &[S]) -> S {
    let mut best = S::zero();
    for d in delta {
        let a = d.abs();
        if a > best {
            best = a;
        }
    }
    best
}

/// How many positions moved (beyond arithmetic tolerance).
pub fn pixels_modified<S: Scalar>(delta: &[S]) -> usize {
    let tol = S::tol();
    delta.iter().filter(|d| d.abs() > tol).count()
}

/// Percentage of records successfully perturbed: `100 * successes / total`.
pub fn defect_detection(successes: usize, total: usize) -> Result<f64> {
    if total == 0 {
        return Err(Error::EmptyRecords("defect detection over zero records".into()));
    }
    if successes > total {
        return Err(Error::Shape(format!("{successes} successes out of {total} records")));
    }
    Ok(100.0 * successes as f64 / total as f64)
}

/// Pielou evenness of the class distribution `counts` (one entry per class,
/// zeros allowed): Shannon entropy of the observed proportions divided by
/// the entropy of a uniform spread over the observed classes.
///
/// A distribution concentrated on a single class scores 0, a perfectly even
/// one scores exactly 1 (computed analytically so no rounding blurs the
/// endpoints), and everything else falls strictly between.
pub fn pielou_evenness(counts: &[usize]) -> Result<f64> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptyRecords("evenness of an empty distribution".into()));
    }
    let observed: Vec<usize> = counts.iter().copied().filter(|&c| c > 0).collect();
    if observed.len() <= 1 {
        return Ok(0.0);
    }
    if observed.iter().all(|&c| c == observed[0]) {
        return Ok(1.0);
    }
    let n = total as f64;
    let mut entropy = 0.0;
    for &c in &observed {
        let p = c as f64 / n;
        entropy -= p * p.ln();
    }
    let j = entropy / (observed.len() as f64).ln();
    Ok(j.clamp(0.0, 1.0))
}

/// One attacked record's outcome, as it appears in the report.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordOutcome {
    pub index: usize,
    /// Original predicted class (0-based).
    pub orig_label: usize,
    /// Machine word naming how the attempt ended, e.g. "success".
    pub status: String,
    /// Class of the perturbed input, when the attempt succeeded.
    pub adv_label: Option<usize>,
    pub l2: f64,
    pub linf: f64,
    pub pixels: usize,
    pub time_ms: u64,
}

impl RecordOutcome {
    pub fn is_success(&self) -> bool {
        self.status == "success"
    }
}

/// Batch attack report: per-record lines plus aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub net: String,
    pub records: Vec<RecordOutcome>,
    pub successes: usize,
    pub defect_detection: f64,
    /// Evenness of the adversarial class distribution; absent with no
    /// successes.
    pub pielou: Option<f64>,
    pub mean_l2: Option<f64>,
    pub mean_linf: Option<f64>,
    pub mean_pixels: Option<f64>,
    pub total_time_ms: u64,
}

impl Report {
    /// Aggregate per-record outcomes. Means and evenness cover successful
    /// records only; the detection rate covers everything.
    pub fn from_records(
        net: impl Into<String>,
        classes: usize,
        records: Vec<RecordOutcome>,
    ) -> Result<Report> {
        if records.is_empty() {
            return Err(Error::EmptyRecords("report over zero records".into()));
        }
        let successes: Vec<&RecordOutcome> = records.iter().filter(|r| r.is_success()).collect();
        let mut counts = vec![0usize; classes];
        for s in &successes {
            let label = s.adv_label.ok_or_else(|| {
                Error::Shape(format!("successful record {} lacks an adversarial label", s.index))
            })?;
            if label >= classes {
                return Err(Error::Index(format!(
                    "adversarial label {label} out of range for {classes} classes"
                )));
            }
            counts[label] += 1;
        }
        let k = successes.len();
        let mean = |f: fn(&RecordOutcome) -> f64| -> Option<f64> {
            if k == 0 {
                None
            } else {
                Some(successes.iter().map(|r| f(r)).sum::<f64>() / k as f64)
            }
        };
        Ok(Report {
            net: net.into(),
            successes: k,
            defect_detection: defect_detection(k, records.len())?,
            pielou: if k == 0 { None } else { Some(pielou_evenness(&counts)?) },
            mean_l2: mean(|r| r.l2),
            mean_linf: mean(|r| r.linf),
            mean_pixels: mean(|r| r.pixels as f64),
            total_time_ms: records.iter().map(|r| r.time_ms).sum(),
            records,
        })
    }

    pub fn render(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        writeln!(out, "attack report").unwrap();
        writeln!(out, "net={} records={}", self.net, self.records.len()).unwrap();
        for r in &self.records {
            let adv = match r.adv_label {
                Some(l) => l.to_string(),
                None => "none".to_string(),
            };
            writeln!(
                out,
                "record idx={} orig_label={} status={} adv_label={} l2={:.6} linf={:.6} \
                 pixels={} time_ms={}",
                r.index, r.orig_label, r.status, adv, r.l2, r.linf, r.pixels, r.time_ms
            )
            .unwrap();
        }
        writeln!(out, "successes={}", self.successes).unwrap();
        writeln!(out, "defect_detection={:.6}", self.defect_detection).unwrap();
        let opt = |v: Option<f64>| match v {
            Some(x) => format!("{x:.6}"),
            None => "none".to_string(),
        };
        writeln!(out, "pielou_evenness={}", opt(self.pielou)).unwrap();
        writeln!(out, "mean_l2={}", opt(self.mean_l2)).unwrap();
        writeln!(out, "mean_linf={}", opt(self.mean_linf)).unwrap();
        writeln!(out, "mean_pixels={}", opt(self.mean_pixels)).unwrap();
        writeln!(out, "total_time_ms={}", self.total_time_ms).unwrap();
        writeln!(out, "fid=not_computed").unwrap();
        writeln!(out, "transferability=not_computed").unwrap();
        out
    }

    pub fn parse(text: &str) -> Result<Report> {
        let mut lines = text.lines().enumerate();
        let expect = |got: Option<(usize, &str)>, what: &str| -> Result<(usize, String)> {
            match got {
                Some((n, l)) => Ok((n + 1, l.to_string())),
                None => Err(Error::parse(0, format!("report ended before {what}"))),
            }
        };
        let (n, header) = expect(lines.next(), "the header")?;
        if header != "attack report" {
            return Err(Error::parse(n, "expected 'attack report' header"));
        }
        let (n, meta) = expect(lines.next(), "the net line")?;
        let meta_fields = fields_of(n, &meta)?;
        let net = field(n, &meta_fields, "net")?;
        let count: usize = parse_field(n, &meta_fields, "records")?;

        let mut records = Vec::with_capacity(count);
        for _ in 0..count {
            let (n, line) = expect(lines.next(), "a record line")?;
            let rest = line
                .strip_prefix("record ")
                .ok_or_else(|| Error::parse(n, "expected a record line"))?;
            let f = fields_of(n, rest)?;
            let adv_raw = field(n, &f, "adv_label")?;
            records.push(RecordOutcome {
                index: parse_field(n, &f, "idx")?,
                orig_label: parse_field(n, &f, "orig_label")?,
                status: field(n, &f, "status")?,
                adv_label: if adv_raw == "none" {
                    None
                } else {
                    Some(adv_raw.parse().map_err(|_| Error::parse(n, "bad adv_label"))?)
                },
                l2: parse_field(n, &f, "l2")?,
                linf: parse_field(n, &f, "linf")?,
                pixels: parse_field(n, &f, "pixels")?,
                time_ms: parse_field(n, &f, "time_ms")?,
            });
        }

        let mut tail = std::collections::BTreeMap::new();
        for (n, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(n + 1, "expected key=value"))?;
            tail.insert(k.to_string(), (n + 1, v.to_string()));
        }
        let tail_field = |key: &str| -> Result<(usize, String)> {
            tail.get(key)
                .cloned()
                .ok_or_else(|| Error::parse(0, format!("report is missing '{key}'")))
        };
        let opt_f64 = |key: &str| -> Result<Option<f64>> {
            let (n, v) = tail_field(key)?;
            if v == "none" {
                return Ok(None);
            }
            v.parse().map(Some).map_err(|_| Error::parse(n, format!("bad number for '{key}'")))
        };
        for required in ["fid", "transferability"] {
            let (n, v) = tail_field(required)?;
            if v != "not_computed" {
                return Err(Error::parse(n, format!("'{required}' must be not_computed")));
            }
        }
        let (n_s, s) = tail_field("successes")?;
        let (n_d, d) = tail_field("defect_detection")?;
        let (n_t, t) = tail_field("total_time_ms")?;
        Ok(Report {
            net,
            records,
            successes: s.parse().map_err(|_| Error::parse(n_s, "bad successes"))?,
            defect_detection: d.parse().map_err(|_| Error::parse(n_d, "bad defect_detection"))?,
            pielou: opt_f64("pielou_evenness")?,
            mean_l2: opt_f64("mean_l2")?,
            mean_linf: opt_f64("mean_linf")?,
            mean_pixels: opt_f64("mean_pixels")?,
            total_time_ms: t.parse().map_err(|_| Error::parse(n_t, "bad total_time_ms"))?,
        })
    }

    /// Equality of everything except wall-clock timing — the reproducibility
    /// relation between two runs of the same batch.
    pub fn matches_ignoring_time(&self, other: &Report) -> bool {
        let strip = |r: &Report| -> Report {
            let mut c = r.clone();
            c.total_time_ms = 0;
            for rec in &mut c.records {
                rec.time_ms = 0;
            }
            c
        };
        strip(self) == strip(other)
    }
}

fn fields_of(line_no: usize, s: &str) -> Result<Vec<(String, String)>> {
    s.split_whitespace()
        .map(|tok| {
            tok.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::parse(line_no, format!("expected key=value, got '{tok}'")))
        })
        .collect()
}

fn field(line_no: usize, fields: &[(String, String)], key: &str) -> Result<String> {
    fields
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.clone())
        .ok_or_else(|| Error::parse(line_no, format!("missing field '{key}'")))
}

fn parse_field<T: std::str::FromStr>(
    line_no: usize,
    fields: &[(String, String)],
    key: &str,
) -> Result<T> {
    field(line_no, fields, key)?
        .parse()
        .map_err(|_| Error::parse(line_no, format!("bad value for '{key}'")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn r(p: i64, q: i64) -> Rational {
        Rational::ratio(p, q)
    }

    #[test]
    fn norms_of_known_shift() {
        let delta = vec![r(-5, 12), r(-11, 24)];
        assert_eq!(l2_squared(&delta), r(221, 576));
        assert!((l2(&delta) - (221.0f64 / 576.0).sqrt()).abs() < 1e-12);
        assert_eq!(linf(&delta), r(11, 24));
        assert_eq!(pixels_modified(&delta), 2);
    }

    #[test]
    fn untouched_positions_are_not_counted() {
        let delta = vec![r(0, 1), r(1, 2), r(0, 1)];
        assert_eq!(pixels_modified(&delta), 1);
        assert_eq!(linf(&delta), r(1, 2));
        let nothing: Vec<Rational> = vec![r(0, 1); 4];
        assert_eq!(pixels_modified(&nothing), 0);
        assert_eq!(l2(&nothing), 0.0);
    }

    #[test]
    fn float_pixel_count_uses_tolerance() {
        let delta = vec![1e-12f64, 0.25, -1e-15];
        assert_eq!(pixels_modified(&delta), 1);
    }

    #[test]
    fn detection_rate_is_a_percentage() {
        assert_eq!(defect_detection(9140, 10000).unwrap(), 91.4);
        assert_eq!(defect_detection(0, 5).unwrap(), 0.0);
        assert_eq!(defect_detection(5, 5).unwrap(), 100.0);
        assert!(defect_detection(1, 0).is_err());
        assert!(defect_detection(6, 5).is_err());
    }

    #[test]
    fn evenness_endpoints_are_exact() {
        assert_eq!(pielou_evenness(&[50, 50]).unwrap(), 1.0);
        assert_eq!(pielou_evenness(&[7, 7, 7, 7]).unwrap(), 1.0);
        assert_eq!(pielou_evenness(&[10]).unwrap(), 0.0);
        assert_eq!(pielou_evenness(&[0, 12, 0]).unwrap(), 0.0);
        // Zero-count classes do not dilute the evenness of what appeared.
        assert_eq!(pielou_evenness(&[3, 0, 3, 0]).unwrap(), 1.0);
        assert!(pielou_evenness(&[0, 0]).is_err());
        assert!(pielou_evenness(&[]).is_err());
    }

    #[test]
    fn evenness_of_a_three_to_one_split() {
        // H = -(3/4 ln 3/4 + 1/4 ln 1/4), J = H / ln 2.
        let expected = -(0.75f64 * 0.75f64.ln() + 0.25 * 0.25f64.ln()) / 2.0f64.ln();
        let j = pielou_evenness(&[75, 25]).unwrap();
        assert!((j - expected).abs() < 1e-12);
        assert!((j - 0.8112781244591328).abs() < 1e-12);
        assert!(0.0 < j && j < 1.0);
    }

    #[test]
    fn evenness_stays_in_unit_interval() {
        for counts in [[1, 2, 3], [90, 9, 1], [1, 1, 98], [33, 33, 34]] {
            let j = pielou_evenness(&counts).unwrap();
            assert!((0.0..=1.0).contains(&j), "J={j} for {counts:?}");
        }
    }

    fn sample_records() -> Vec<RecordOutcome> {
        vec![
            RecordOutcome {
                index: 0,
                orig_label: 7,
                status: "success".into(),
                adv_label: Some(9),
                l2: 0.619507,
                linf: 0.458333,
                pixels: 2,
                time_ms: 3,
            },
            RecordOutcome {
                index: 1,
                orig_label: 2,
                status: "translation_infeasible".into(),
                adv_label: None,
                l2: 0.0,
                linf: 0.0,
                pixels: 0,
                time_ms: 5,
            },
            RecordOutcome {
                index: 2,
                orig_label: 4,
                status: "success".into(),
                adv_label: Some(1),
                l2: 0.25,
                linf: 0.25,
                pixels: 1,
                time_ms: 2,
            },
        ]
    }

    #[test]
    fn report_aggregates_cover_successes() {
        let report = Report::from_records("demo", 10, sample_records()).unwrap();
        assert_eq!(report.successes, 2);
        assert!((report.defect_detection - 200.0 / 3.0).abs() < 1e-9);
        assert_eq!(report.pielou, Some(1.0));
        assert!((report.mean_l2.unwrap() - (0.619507 + 0.25) / 2.0).abs() < 1e-12);
        assert_eq!(report.mean_pixels, Some(1.5));
        assert_eq!(report.total_time_ms, 10);
    }

    #[test]
    fn report_round_trips_through_text() {
        let report = Report::from_records("demo", 10, sample_records()).unwrap();
        let text = report.render();
        assert!(text.contains("fid=not_computed"));
        assert!(text.contains("transferability=not_computed"));
        let back = Report::parse(&text).unwrap();
        // Rendering rounds floats to six decimals; render again to compare.
        assert_eq!(back.render(), text);
        assert_eq!(back.records.len(), 3);
        assert_eq!(back.records[1].adv_label, None);
    }

    #[test]
    fn reproducibility_ignores_wall_clock_only() {
        let a = Report::from_records("demo", 10, sample_records()).unwrap();
        let mut b = a.clone();
        b.total_time_ms = 999;
        b.records[0].time_ms = 77;
        assert!(a.matches_ignoring_time(&b));
        let mut c = a.clone();
        c.records[2].pixels = 3;
        assert!(!a.matches_ignoring_time(&c));
        let mut d = a.clone();
        d.records[0].adv_label = Some(3);
        assert!(!a.matches_ignoring_time(&d));
    }

    #[test]
    fn empty_batch_is_rejected() {
        assert!(Report::from_records("demo", 10, vec![]).is_err());
    }

    #[test]
    fn malformed_reports_are_rejected() {
        assert!(Report::parse("not a report").is_err());
        let good = Report::from_records("demo", 10, sample_records()).unwrap().render();
        let missing_fid = good.replace("fid=not_computed\n", "");
        assert!(Report::parse(&missing_fid).is_err());
        let wrong_fid = good.replace("fid=not_computed", "fid=0.31");
        assert!(Report::parse(&wrong_fid).is_err());
        let truncated: String = good.lines().take(3).collect::<Vec<_>>().join("\n");
        assert!(Report::parse(&truncated).is_err());
    }
}
