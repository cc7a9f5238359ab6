//! `attack`: run the patch pipeline over one input or a whole dataset.
//!
//! Every selected row is attacked independently, so worker threads simply
//! split the rows; results are merged back in row order, which keeps the
//! report deterministic for a fixed configuration and seed (wall-clock
//! fields aside). Per-row engine failures are recorded with status `error`
//! and do not abort the batch — only configuration and I/O problems do.

use crate::{Arithmetic, AttackArgs, ModeOpt, ObjectiveOpt, SparsityOpt};
use anyhow::{anyhow, bail, Context, Result};
use patchadv_core::format::{load_network, parse_vector};
use patchadv_core::lp::Simplex;
use patchadv_core::metrics::{l2, linf, pixels_modified, RecordOutcome, Report};
use patchadv_core::patch::{
    attack, attack_untargeted, translate_to_hidden, ChainMode, Objective, PatchConfig, Sparsity,
    TranslationMode,
};
use patchadv_core::property::{parse_property, OutputProperty, PropertySpec};
use patchadv_core::{Network, Rational, Scalar};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::process::ExitCode;
use std::time::Instant;

pub fn run(args: &AttackArgs) -> Result<ExitCode> {
    match args.arithmetic {
        Arithmetic::Rational => drive::<Rational>(args),
        Arithmetic::Float => drive::<f64>(args),
    }
}

/// What the `--property` text asks for, with dataset placeholders kept
/// symbolic so each row can substitute its own class.
enum Goal<S> {
    /// `argmax != <fixed class>`.
    AvoidFixed(usize),
    /// `argmax != pred`: move the argmax off whatever the net predicts.
    AvoidPredicted,
    /// `argmax != label`: move the argmax off the dataset label.
    AvoidLabel,
    /// Explicit conjunction over output neurons.
    Conjunction(OutputProperty<S>),
}

fn parse_goal<S: Scalar>(text: &str) -> Result<Goal<S>> {
    let t = text.trim();
    if let Some(rest) = t.strip_prefix("argmax") {
        let rest = rest.trim_start();
        let Some(rhs) = rest.strip_prefix("!=") else {
            bail!("expected '!=' after argmax in '{t}'");
        };
        match rhs.trim() {
            "pred" => return Ok(Goal::AvoidPredicted),
            "label" => return Ok(Goal::AvoidLabel),
            _ => {}
        }
    }
    match parse_property::<S>(t)? {
        PropertySpec::Untargeted { class } => Ok(Goal::AvoidFixed(class)),
        PropertySpec::Conjunction(c) => Ok(Goal::Conjunction(c)),
    }
}

fn parse_scalar<S: Scalar>(text: &str, flag: &str) -> Result<S> {
    S::parse(text).ok_or_else(|| anyhow!("cannot parse {flag} value '{text}'"))
}

fn build_config<S: Scalar>(args: &AttackArgs) -> Result<PatchConfig<S>> {
    let mut cfg = PatchConfig::default();
    if let Some(a) = &args.alpha {
        cfg.alpha = parse_scalar(a, "--alpha")?;
    }
    if let Some(d) = &args.delta_max {
        cfg.delta_max = parse_scalar(d, "--delta-max")?;
    }
    if let Some(m) = &args.margin {
        cfg.margin = parse_scalar(m, "--margin")?;
    }
    cfg.objective = match args.objective {
        ObjectiveOpt::MaxNorm => Objective::MaxNorm,
        ObjectiveOpt::SumAbs => Objective::SumAbs,
    };
    cfg.sparsity = match args.sparsity {
        SparsityOpt::Dense => Sparsity::Dense,
        SparsityOpt::MinPixels => Sparsity::MinimizePixels,
    };
    cfg.chain = match args.chain {
        ModeOpt::Relaxed => ChainMode::Relaxed,
        ModeOpt::Equality => ChainMode::Equality,
    };
    cfg.translation = match args.translation {
        ModeOpt::Relaxed => TranslationMode::Relaxed,
        ModeOpt::Equality => TranslationMode::Equality,
    };
    if args.clamp01 {
        cfg.input_bounds = Some((S::from_int(0), S::from_int(1)));
    }
    cfg.validate()?;
    Ok(cfg)
}

/// One attacked row, ready for the report and the output directory.
struct RowOutcome<S> {
    record: RecordOutcome,
    deltas: Option<Vec<S>>,
    adversarial: Option<Vec<S>>,
}

/// Reports keep six decimals, so store values that survive the round trip;
/// re-aggregating a parsed report then reproduces its summary exactly.
fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn attack_row<S: Scalar>(
    net: &Network<S>,
    goal: &Goal<S>,
    cfg: &PatchConfig<S>,
    labels: Option<&[usize]>,
    index: usize,
    input: &[S],
) -> RowOutcome<S> {
    let solver = Simplex::default();
    let start = Instant::now();
    let attempt = net.forward(input).and_then(|trace| {
        let predicted = trace.argmax() - 1;
        let result = match goal {
            Goal::AvoidPredicted => attack_untargeted(&solver, net, input, predicted, cfg),
            Goal::AvoidLabel => {
                // Presence of labels is checked before the batch starts.
                attack_untargeted(&solver, net, input, labels.unwrap()[index], cfg)
            }
            Goal::AvoidFixed(class) => attack_untargeted(&solver, net, input, *class, cfg),
            Goal::Conjunction(prop) => attack(&solver, net, input, prop, cfg),
        };
        result.map(|r| (predicted, r))
    });
    let time_ms = start.elapsed().as_millis() as u64;

    let (predicted, outcome) = match attempt {
        Ok(pair) => pair,
        Err(err) => {
            eprintln!("row {index}: {err}");
            return RowOutcome {
                record: RecordOutcome {
                    index,
                    orig_label: labels.map_or(0, |ls| ls[index]),
                    status: "error".to_string(),
                    adv_label: None,
                    l2: 0.0,
                    linf: 0.0,
                    pixels: 0,
                    time_ms,
                },
                deltas: None,
                adversarial: None,
            };
        }
    };
    let orig_label = labels.map_or(predicted, |ls| ls[index]);

    if !outcome.is_success() {
        return RowOutcome {
            record: RecordOutcome {
                index,
                orig_label,
                status: outcome.status.word().to_string(),
                adv_label: None,
                l2: 0.0,
                linf: 0.0,
                pixels: 0,
                time_ms,
            },
            deltas: None,
            adversarial: None,
        };
    }

    // forward() already succeeded on the original input, and the engine
    // verified the adversarial one, so this cannot fail.
    let adv_trace = net.forward(&outcome.adversarial_input).expect("verified input");
    RowOutcome {
        record: RecordOutcome {
            index,
            orig_label,
            status: outcome.status.word().to_string(),
            adv_label: Some(adv_trace.argmax() - 1),
            l2: round6(l2(&outcome.deltas)),
            linf: round6(linf(&outcome.deltas).to_f64()),
            pixels: pixels_modified(&outcome.deltas),
            time_ms,
        },
        deltas: Some(outcome.deltas),
        adversarial: Some(outcome.adversarial_input),
    }
}

/// Translate straight to a pinned first-hidden-layer target, skipping the
/// patch search. Success still requires the stated property to hold on the
/// translated input; a translation that lands but misses the property is
/// recorded as `missed_property`.
fn pin_row<S: Scalar>(
    net: &Network<S>,
    goal: &Goal<S>,
    cfg: &PatchConfig<S>,
    labels: Option<&[usize]>,
    index: usize,
    input: &[S],
    pin_text: &str,
) -> Result<RowOutcome<S>> {
    let target: Vec<S> = parse_vector(pin_text).context("parsing --pin-hidden")?;
    let solver = Simplex::default();
    let start = Instant::now();
    let trace = net.forward(input)?;
    let predicted = trace.argmax() - 1;
    let translation = translate_to_hidden(&solver, net, input, &target, cfg)?;
    let time_ms = start.elapsed().as_millis() as u64;
    let orig_label = labels.map_or(predicted, |ls| ls[index]);

    let Some(tr) = translation else {
        return Ok(RowOutcome {
            record: RecordOutcome {
                index,
                orig_label,
                status: "translation_infeasible".to_string(),
                adv_label: None,
                l2: 0.0,
                linf: 0.0,
                pixels: 0,
                time_ms,
            },
            deltas: None,
            adversarial: None,
        });
    };

    let adv_trace = net.forward(&tr.adversarial_input)?;
    let adv_class = adv_trace.argmax() - 1;
    let satisfied = match goal {
        Goal::AvoidPredicted => adv_class != predicted,
        Goal::AvoidLabel => adv_class != orig_label,
        Goal::AvoidFixed(class) => adv_class != *class,
        Goal::Conjunction(prop) => prop.satisfied_by(adv_trace.output()),
    };
    let status = if satisfied { "success" } else { "missed_property" };
    Ok(RowOutcome {
        record: RecordOutcome {
            index,
            orig_label,
            status: status.to_string(),
            adv_label: satisfied.then_some(adv_class),
            l2: round6(l2(&tr.deltas)),
            linf: round6(linf(&tr.deltas).to_f64()),
            pixels: pixels_modified(&tr.deltas),
            time_ms,
        },
        deltas: Some(tr.deltas),
        adversarial: Some(tr.adversarial_input),
    })
}

fn drive<S: Scalar>(args: &AttackArgs) -> Result<ExitCode> {
    let net: Network<S> =
        load_network(&args.net).with_context(|| format!("loading network {}", args.net.display()))?;
    let cfg = build_config(args)?;
    let goal: Goal<S> = parse_goal(&args.property)?;

    let inputs: Vec<Vec<S>> = if let Some(inline) = &args.input {
        vec![parse_vector(inline).context("parsing --input")?]
    } else if let Some(path) = &args.inputs {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading input vectors {}", path.display()))?;
        let mut rows = Vec::new();
        for (line_no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            rows.push(
                parse_vector::<S>(line)
                    .with_context(|| format!("{} line {}", path.display(), line_no + 1))?,
            );
        }
        if rows.is_empty() {
            bail!("{} holds no input vectors", path.display());
        }
        rows
    } else {
        bail!("attack needs --input or --inputs");
    };
    for (i, row) in inputs.iter().enumerate() {
        if row.len() != net.input_width() {
            bail!(
                "input {} has {} values, net {} expects {}",
                i,
                row.len(),
                net.name(),
                net.input_width()
            );
        }
    }

    let labels: Option<Vec<usize>> = match &args.labels {
        Some(path) => {
            let raw = std::fs::read_to_string(path)
                .with_context(|| format!("reading labels {}", path.display()))?;
            let mut ls = Vec::new();
            for (line_no, line) in raw.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                ls.push(line.parse::<usize>().with_context(|| {
                    format!("{} line {}: '{line}'", path.display(), line_no + 1)
                })?);
            }
            if ls.len() != inputs.len() {
                bail!("{} labels for {} inputs", ls.len(), inputs.len());
            }
            Some(ls)
        }
        None => None,
    };
    if matches!(goal, Goal::AvoidLabel) && labels.is_none() {
        bail!("property uses 'label' but no --labels file was given");
    }

    let mut indices: Vec<usize> = (0..inputs.len()).collect();
    if let Some(k) = args.samples {
        if k == 0 {
            bail!("--samples must be positive");
        }
        if k < indices.len() {
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            let mut picked = rand::seq::index::sample(&mut rng, inputs.len(), k).into_vec();
            picked.sort_unstable();
            indices = picked;
        }
    }

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating output directory {}", args.out.display()))?;

    let outcomes: Vec<RowOutcome<S>> = if let Some(pin) = &args.pin_hidden {
        if indices.len() != 1 {
            bail!("--pin-hidden works on exactly one input, got {}", indices.len());
        }
        let i = indices[0];
        vec![pin_row(&net, &goal, &cfg, labels.as_deref(), i, &inputs[i], pin)?]
    } else if args.jobs == 1 {
        indices
            .iter()
            .map(|&i| attack_row(&net, &goal, &cfg, labels.as_deref(), i, &inputs[i]))
            .collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(args.jobs)
            .build()
            .context("building the worker pool")?;
        pool.install(|| {
            indices
                .par_iter()
                .map(|&i| attack_row(&net, &goal, &cfg, labels.as_deref(), i, &inputs[i]))
                .collect()
        })
    };

    let mut records = Vec::with_capacity(outcomes.len());
    for oc in &outcomes {
        records.push(oc.record.clone());
        if let Some(adv) = &oc.adversarial {
            let path = args.out.join(format!("adv_{}.vec", oc.record.index));
            std::fs::write(&path, format!("{}\n", join(adv)))
                .with_context(|| format!("writing {}", path.display()))?;
        }
    }
    let report = Report::from_records(net.name(), net.output_width(), records)?;
    let report_path = args.out.join("report.txt");
    std::fs::write(&report_path, report.render())
        .with_context(|| format!("writing {}", report_path.display()))?;

    // Single-input runs print the exact vectors too; batches stick to the
    // report.
    if let [oc] = outcomes.as_slice() {
        if let (Some(deltas), Some(adv)) = (&oc.deltas, &oc.adversarial) {
            let out = net.forward(adv).expect("verified input");
            println!("deltas <{}>", join(deltas));
            println!("adversarial <{}>", join(adv));
            println!("output <{}>", join(out.output()));
        }
    }
    print!("{}", report.render());
    println!("report written to {}", report_path.display());

    Ok(if report.successes == report.records.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn join<S: Scalar>(values: &[S]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
}
