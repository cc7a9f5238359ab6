//! `simulate`: print a network's full layer trace on one input.
//!
//! Output is one line per layer in the chosen arithmetic, so rational runs
//! show exact fractions. The final line gives the 1-based argmax neuron and
//! the matching 0-based class.

use crate::{Arithmetic, SimulateArgs};
use anyhow::{bail, Context, Result};
use patchadv_core::format::{load_network, parse_vector};
use patchadv_core::{Network, Rational, Scalar};
use std::process::ExitCode;

pub fn run(args: &SimulateArgs) -> Result<ExitCode> {
    match args.arithmetic {
        Arithmetic::Rational => trace::<Rational>(args),
        Arithmetic::Float => trace::<f64>(args),
    }
}

fn trace<S: Scalar>(args: &SimulateArgs) -> Result<ExitCode> {
    let net: Network<S> =
        load_network(&args.net).with_context(|| format!("loading network {}", args.net.display()))?;
    let text = match (&args.input, &args.input_file) {
        (Some(inline), _) => inline.clone(),
        (None, Some(path)) => std::fs::read_to_string(path)
            .with_context(|| format!("reading input vector {}", path.display()))?,
        (None, None) => bail!("simulate needs --input or --input-file"),
    };
    let input: Vec<S> = parse_vector(&text)?;
    let trace = net.forward(&input)?;
    println!("net {}", net.name());
    println!("layer 1 values {}", vector(trace.layer_values(1)));
    for p in 2..=net.layer_count() {
        println!(
            "layer {p} pre {} values {}",
            vector(trace.layer_pre(p)),
            vector(trace.layer_values(p))
        );
    }
    let argmax = trace.argmax();
    println!("argmax {argmax} class {}", argmax - 1);
    Ok(ExitCode::SUCCESS)
}

/// `<a, b, c>` in the scalar's own notation.
fn vector<S: Scalar>(values: &[S]) -> String {
    let parts: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    format!("<{}>", parts.join(", "))
}
