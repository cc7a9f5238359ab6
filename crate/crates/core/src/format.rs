//! Plain-text network file format.
//!
//! The format is self-describing and line-oriented. `#` starts a comment;
//! blank lines are ignored. Numbers may be decimals (`-0.25`, `1e-3`) or
//! exact fractions (`-7/4`). Layout, in order:
//!
//! ```text
//! name tiny4
//! widths 2 2 2 2
//! activations identity relu relu identity
//! weights 1        # widths[2] rows of widths[1] numbers (rows = targets)
//! 1 1
//! -1 2
//! biases 2         # one row of widths[2] numbers
//! 0 0
//! weights 2
//! ...
//! ```
//!
//! Every edge layer `s` gets a `weights s` block (rows = target neurons of
//! layer `s+1`, columns = source neurons of layer `s`) followed by a
//! `biases s+1` block for the target layer. The first activation must be
//! `identity` (input layer), hidden activations must be `relu`, and the final
//! activation must be `identity`.

use crate::error::{Error, Result};
use crate::network::{Activation, Layer, Mat, Network};
use crate::scalar::Scalar;
use std::path::Path;

/// Tokenized significant line (comments stripped), with its 1-based number.
struct Line<'a> {
    no: usize,
    tokens: Vec<&'a str>,
}

fn significant_lines(text: &str) -> Vec<Line<'_>> {
    text.lines()
        .enumerate()
        .filter_map(|(idx, raw)| {
            let body = raw.split('#').next().unwrap_or("");
            let tokens: Vec<&str> = body.split_whitespace().collect();
            if tokens.is_empty() {
                None
            } else {
                Some(Line { no: idx + 1, tokens })
            }
        })
        .collect()
}

fn parse_number<S: Scalar>(tok: &str, line: usize) -> Result<S> {
    S::parse(tok).ok_or_else(|| Error::parse(line, format!("bad number '{tok}'")))
}

/// Parse a network from file contents.
pub fn parse_network<S: Scalar>(text: &str) -> Result<Network<S>> {
    let lines = significant_lines(text);
    let mut cursor = 0usize;

    let mut expect = |keyword: &str| -> Result<&Line<'_>> {
        let line = lines
            .get(cursor)
            .ok_or_else(|| Error::parse(0, format!("unexpected end of file, expected '{keyword}'")))?;
        if line.tokens[0] != keyword {
            return Err(Error::parse(
                line.no,
                format!("expected '{keyword}', found '{}'", line.tokens[0]),
            ));
        }
        cursor += 1;
        Ok(line)
    };

    let name_line = expect("name")?;
    if name_line.tokens.len() != 2 {
        return Err(Error::parse(name_line.no, "expected 'name <identifier>'"));
    }
    let name = name_line.tokens[1].to_string();

    let widths_line = expect("widths")?;
    let widths: Vec<usize> = widths_line.tokens[1..]
        .iter()
        .map(|t| t.parse::<usize>().map_err(|_| Error::parse(widths_line.no, format!("bad width '{t}'"))))
        .collect::<Result<_>>()?;
    if widths.len() < 2 {
        return Err(Error::parse(widths_line.no, "need at least 2 layer widths"));
    }
    let k = widths.len();

    let act_line = expect("activations")?;
    if act_line.tokens.len() != k + 1 {
        return Err(Error::parse(
            act_line.no,
            format!("expected {} activations, found {}", k, act_line.tokens.len() - 1),
        ));
    }
    let mut activations = Vec::with_capacity(k);
    for (i, tok) in act_line.tokens[1..].iter().enumerate() {
        let act = match *tok {
            "relu" => Activation::Relu,
            "identity" => Activation::Identity,
            other => {
                return Err(Error::parse(act_line.no, format!("unknown activation '{other}'")))
            }
        };
        let expected = if i == 0 || i == k - 1 { Activation::Identity } else { Activation::Relu };
        if act != expected {
            return Err(Error::parse(
                act_line.no,
                format!(
                    "layer {} must be {}, found '{tok}'",
                    i + 1,
                    if expected == Activation::Relu { "relu" } else { "identity" }
                ),
            ));
        }
        activations.push(act);
    }

    // Matrix block reader: `rows` data lines each holding `cols` numbers.
    let read_rows = |cursor: &mut usize, rows: usize, cols: usize| -> Result<Vec<Vec<S>>> {
        let mut out = Vec::with_capacity(rows);
        for _ in 0..rows {
            let line = lines
                .get(*cursor)
                .ok_or_else(|| Error::parse(0, "unexpected end of file inside a block"))?;
            *cursor += 1;
            if line.tokens.len() != cols {
                return Err(Error::parse(
                    line.no,
                    format!("expected {} numbers, found {}", cols, line.tokens.len()),
                ));
            }
            let row = line
                .tokens
                .iter()
                .map(|t| parse_number::<S>(t, line.no))
                .collect::<Result<Vec<S>>>()?;
            out.push(row);
        }
        Ok(out)
    };

    let mut edge_layers = Vec::with_capacity(k - 1);
    let mut biases: Vec<Vec<S>> = vec![vec![S::zero(); widths[0]]];
    for s in 1..k {
        let header = lines
            .get(cursor)
            .ok_or_else(|| Error::parse(0, format!("missing 'weights {s}' block")))?;
        if header.tokens.len() != 2 || header.tokens[0] != "weights" || header.tokens[1] != s.to_string() {
            return Err(Error::parse(header.no, format!("expected 'weights {s}'")));
        }
        cursor += 1;
        let rows = read_rows(&mut cursor, widths[s], widths[s - 1])?;
        edge_layers.push(Mat::from_rows(rows)?);

        let header = lines
            .get(cursor)
            .ok_or_else(|| Error::parse(0, format!("missing 'biases {}' block", s + 1)))?;
        if header.tokens.len() != 2
            || header.tokens[0] != "biases"
            || header.tokens[1] != (s + 1).to_string()
        {
            return Err(Error::parse(header.no, format!("expected 'biases {}'", s + 1)));
        }
        cursor += 1;
        let row = read_rows(&mut cursor, 1, widths[s])?;
        biases.push(row.into_iter().next().expect("one row"));
    }

    if cursor != lines.len() {
        return Err(Error::parse(lines[cursor].no, "trailing content after last block"));
    }

    let layers = widths
        .iter()
        .zip(activations)
        .zip(biases)
        .map(|((w, a), b)| Layer { width: *w, activation: a, biases: b })
        .collect();
    Network::new(name, layers, edge_layers)
}

/// Load a network from a file path.
pub fn load_network<S: Scalar>(path: impl AsRef<Path>) -> Result<Network<S>> {
    let text = std::fs::read_to_string(path)?;
    parse_network(&text)
}

/// Render a network in the file format. Numbers use the scalar's display
/// form (`p/q` for rationals, shortest round-trip decimal for floats), so
/// `parse_network(&write_network(net))` reproduces `net` exactly.
pub fn write_network<S: Scalar>(net: &Network<S>) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    let k = net.layer_count();
    writeln!(out, "name {}", net.name()).unwrap();
    let widths: Vec<String> = (1..=k).map(|p| net.width(p).to_string()).collect();
    writeln!(out, "widths {}", widths.join(" ")).unwrap();
    let acts: Vec<&str> = (1..=k)
        .map(|p| match net.activation(p) {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        })
        .collect();
    writeln!(out, "activations {}", acts.join(" ")).unwrap();
    for s in 1..k {
        writeln!(out, "weights {s}").unwrap();
        let m = net.edge_layer(s);
        for q in 0..m.rows() {
            let row: Vec<String> = m.row(q).iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", row.join(" ")).unwrap();
        }
        writeln!(out, "biases {}", s + 1).unwrap();
        let row: Vec<String> =
            net.layers()[s].biases.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", row.join(" ")).unwrap();
    }
    out
}

/// Parse a vector file: the first significant line holds the values,
/// whitespace- or comma-separated.
pub fn parse_vector<S: Scalar>(text: &str) -> Result<Vec<S>> {
    for (idx, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("");
        let cleaned = body.replace(',', " ");
        let tokens: Vec<&str> = cleaned.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        return tokens.iter().map(|t| parse_number::<S>(t, idx + 1)).collect();
    }
    Err(Error::parse(0, "no vector found in input"))
}
