//! Output properties: conjunctions of linear constraints over the final
//! layer, plus the small text language the CLI exposes.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! property := "argmax" "!=" CLASS            untargeted misclassification
//!           | conjunct ("&&" conjunct)*
//! conjunct := expr REL expr
//! REL      := "<=" | ">=" | "==" | "=" | "<" | ">"
//! expr     := term (("+" | "-") term)*
//! term     := NUMBER | [NUMBER "*"] "o[" INDEX "]"
//! ```
//!
//! `o[i]` refers to output neuron `i`, **1-based** (`o[1]` is the first
//! output). `argmax != c` uses a **0-based class index**: class `c`
//! corresponds to output neuron `c + 1`. Numbers follow the scalar syntax
//! (fractions and decimals both work).

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Comparison in a property conjunct. Strict variants are legal here (the
/// verifier evaluates them exactly; the LP encoding turns them into
/// non-strict constraints with a margin).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Lt,
    Eq,
    Ge,
    Gt,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Lt => "<",
            Relation::Eq => "=",
            Relation::Ge => ">=",
            Relation::Gt => ">",
        }
    }
}

/// One linear constraint over the output layer: `coeffs . v REL rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conjunct<S> {
    pub coeffs: Vec<S>,
    pub relation: Relation,
    pub rhs: S,
}

impl<S: Scalar> Conjunct<S> {
    pub fn holds(&self, values: &[S]) -> bool {
        let lhs = self
            .coeffs
            .iter()
            .zip(values)
            .fold(S::zero(), |acc, (c, v)| acc + c.clone() * v.clone());
        match self.relation {
            Relation::Le => lhs <= self.rhs,
            Relation::Lt => lhs < self.rhs,
            Relation::Eq => lhs == self.rhs,
            Relation::Ge => lhs >= self.rhs,
            Relation::Gt => lhs > self.rhs,
        }
    }
}

/// A conjunction of linear constraints over one layer's values.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputProperty<S> {
    pub conjuncts: Vec<Conjunct<S>>,
}

impl<S: Scalar> OutputProperty<S> {
    pub fn new(conjuncts: Vec<Conjunct<S>>) -> Result<Self> {
        if conjuncts.is_empty() {
            return Err(Error::Property("property needs at least one conjunct".into()));
        }
        for c in &conjuncts {
            if c.coeffs.iter().any(|v| !v.is_finite_value()) || !c.rhs.is_finite_value() {
                return Err(Error::NonFinite("property coefficient".into()));
            }
        }
        Ok(OutputProperty { conjuncts })
    }

    /// `o[target] > o[avoid]` with both indices 1-based.
    pub fn dominates(target: usize, avoid: usize, width: usize) -> Result<Self> {
        if target == avoid || target < 1 || avoid < 1 || target > width || avoid > width {
            return Err(Error::Index(format!(
                "dominates({target}, {avoid}) invalid for width {width}"
            )));
        }
        let mut coeffs = vec![S::zero(); width];
        coeffs[target - 1] = S::from_int(1);
        coeffs[avoid - 1] = S::from_int(-1);
        OutputProperty::new(vec![Conjunct { coeffs, relation: Relation::Gt, rhs: S::zero() }])
    }

    /// Smallest layer width the property can be evaluated against.
    pub fn min_width(&self) -> usize {
        self.conjuncts.iter().map(|c| c.coeffs.len()).max().unwrap_or(0)
    }

    /// Exact evaluation (strict relations compared strictly).
    pub fn satisfied_by(&self, values: &[S]) -> bool {
        self.conjuncts.iter().all(|c| c.holds(values))
    }
}

/// Parsed property specification. The untargeted form expands to a loop of
/// targeted properties inside the attack driver.
#[derive(Debug, Clone, PartialEq)]
pub enum PropertySpec<S> {
    /// `argmax != class`: the output argmax must differ from `class`
    /// (0-based class index; output neuron `class + 1`).
    Untargeted { class: usize },
    Conjunction(OutputProperty<S>),
}

/// Parse the property mini-language. See the module docs for the grammar.
pub fn parse_property<S: Scalar>(text: &str) -> Result<PropertySpec<S>> {
    let trimmed = text.trim();
    if let Some(rest) = trimmed.strip_prefix("argmax") {
        let rest = rest.trim_start();
        let rest = rest
            .strip_prefix("!=")
            .ok_or_else(|| Error::Property("expected '!=' after 'argmax'".into()))?;
        let class: usize = rest
            .trim()
            .parse()
            .map_err(|_| Error::Property(format!("bad class index '{}'", rest.trim())))?;
        return Ok(PropertySpec::Untargeted { class });
    }

    let mut conjuncts = Vec::new();
    for part in trimmed.split("&&") {
        conjuncts.push(parse_conjunct::<S>(part)?);
    }
    Ok(PropertySpec::Conjunction(OutputProperty::new(conjuncts)?))
}

/// Affine accumulator for one side of a comparison: coefficients over
/// `o[...]` terms plus a constant.
struct Affine<S> {
    coeffs: Vec<(usize, S)>,
    constant: S,
}

fn parse_conjunct<S: Scalar>(text: &str) -> Result<Conjunct<S>> {
    // Find the relation operator at the top level. Longest symbols first so
    // "<=" is not read as "<".
    let ops = ["<=", ">=", "==", "=", "<", ">"];
    let mut found: Option<(usize, &str)> = None;
    for op in ops {
        if let Some(pos) = text.find(op) {
            found = Some((pos, op));
            break;
        }
    }
    let (pos, op) = found.ok_or_else(|| {
        Error::Property(format!("no comparison operator in '{}'", text.trim()))
    })?;
    let relation = match op {
        "<=" => Relation::Le,
        ">=" => Relation::Ge,
        "==" | "=" => Relation::Eq,
        "<" => Relation::Lt,
        ">" => Relation::Gt,
        _ => unreachable!(),
    };
    let lhs = parse_affine::<S>(&text[..pos])?;
    let rhs = parse_affine::<S>(&text[pos + op.len()..])?;

    // Normalise to (lhs - rhs) REL 0, then move the constant to the right.
    let mut width = 0usize;
    for (i, _) in lhs.coeffs.iter().chain(rhs.coeffs.iter()) {
        width = width.max(i + 1);
    }
    let mut coeffs = vec![S::zero(); width];
    for (i, c) in lhs.coeffs {
        coeffs[i] = coeffs[i].clone() + c;
    }
    for (i, c) in rhs.coeffs {
        coeffs[i] = coeffs[i].clone() - c;
    }
    if coeffs.iter().all(|c| c.is_zero()) {
        return Err(Error::Property(format!(
            "conjunct '{}' mentions no output neuron",
            text.trim()
        )));
    }
    let rhs_const = rhs.constant - lhs.constant;
    Ok(Conjunct { coeffs, relation, rhs: rhs_const })
}

fn parse_affine<S: Scalar>(text: &str) -> Result<Affine<S>> {
    let mut out = Affine { coeffs: Vec::new(), constant: S::zero() };
    let compact: String = text.split_whitespace().collect::<Vec<_>>().join("");
    if compact.is_empty() {
        return Err(Error::Property("empty expression side".into()));
    }
    // Split into signed terms.
    let bytes = compact.as_bytes();
    let mut start = 0usize;
    let mut boundaries = Vec::new();
    for (i, &b) in bytes.iter().enumerate().skip(1) {
        let prev = bytes[i - 1];
        // A +/- begins a new term unless it follows an exponent marker or
        // another operator (as in "1e-3" or a leading sign).
        if (b == b'+' || b == b'-')
            && prev != b'e'
            && prev != b'E'
            && prev != b'+'
            && prev != b'-'
            && prev != b'*'
            && prev != b'['
        {
            boundaries.push(i);
        }
    }
    boundaries.push(compact.len());
    for end in boundaries {
        let term = &compact[start..end];
        start = end;
        parse_term::<S>(term, &mut out)?;
    }
    Ok(out)
}

fn parse_term<S: Scalar>(term: &str, out: &mut Affine<S>) -> Result<()> {
    if term.is_empty() {
        return Err(Error::Property("empty term".into()));
    }
    if let Some(bracket) = term.find("o[") {
        let close = term
            .find(']')
            .ok_or_else(|| Error::Property(format!("missing ']' in '{term}'")))?;
        let idx_text = &term[bracket + 2..close];
        let idx: usize = idx_text
            .parse()
            .map_err(|_| Error::Property(format!("bad neuron index '{idx_text}'")))?;
        if idx < 1 {
            return Err(Error::Property("output neurons are numbered from 1".into()));
        }
        if !term[close + 1..].is_empty() {
            return Err(Error::Property(format!("trailing text after ']' in '{term}'")));
        }
        let coef_text = term[..bracket].trim_end_matches('*');
        let coef = match coef_text {
            "" | "+" => S::from_int(1),
            "-" => S::from_int(-1),
            other => S::parse(other)
                .ok_or_else(|| Error::Property(format!("bad coefficient '{other}'")))?,
        };
        out.coeffs.push((idx - 1, coef));
    } else {
        let value = S::parse(term)
            .ok_or_else(|| Error::Property(format!("bad number '{term}'")))?;
        out.constant = out.constant.clone() + value;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn i(v: i64) -> Rational {
        Rational::from_int(v)
    }

    #[test]
    fn parses_targeted_comparison() {
        let spec = parse_property::<Rational>("o[2] > o[1]").unwrap();
        let PropertySpec::Conjunction(prop) = spec else { panic!("expected conjunction") };
        assert_eq!(prop.conjuncts.len(), 1);
        let c = &prop.conjuncts[0];
        assert_eq!(c.coeffs, vec![i(-1), i(1)]);
        assert_eq!(c.relation, Relation::Gt);
        assert_eq!(c.rhs, i(0));
        assert!(prop.satisfied_by(&[i(0), i(1)]));
        assert!(!prop.satisfied_by(&[i(1), i(1)]));
    }

    #[test]
    fn parses_untargeted_form() {
        let spec = parse_property::<Rational>("argmax != 7").unwrap();
        assert_eq!(spec, PropertySpec::Untargeted { class: 7 });
        assert!(parse_property::<Rational>("argmax != x").is_err());
    }

    #[test]
    fn parses_general_conjunction() {
        let spec =
            parse_property::<Rational>("2*o[1] - o[3] >= 1/2 && o[2] <= -0.25").unwrap();
        let PropertySpec::Conjunction(prop) = spec else { panic!() };
        assert_eq!(prop.conjuncts.len(), 2);
        assert_eq!(prop.conjuncts[0].coeffs, vec![i(2), i(0), i(-1)]);
        assert_eq!(prop.conjuncts[0].relation, Relation::Ge);
        assert_eq!(prop.conjuncts[0].rhs, Rational::ratio(1, 2));
        assert_eq!(prop.conjuncts[1].coeffs, vec![i(0), i(1)]);
        assert_eq!(prop.conjuncts[1].rhs, Rational::ratio(-1, 4));
        assert_eq!(prop.min_width(), 3);
    }

    #[test]
    fn moves_terms_across_the_relation() {
        // o[1] + 1 < o[2] - 2  ==>  o[1] - o[2] < -3
        let spec = parse_property::<Rational>("o[1] + 1 < o[2] - 2").unwrap();
        let PropertySpec::Conjunction(prop) = spec else { panic!() };
        let c = &prop.conjuncts[0];
        assert_eq!(c.coeffs, vec![i(1), i(-1)]);
        assert_eq!(c.relation, Relation::Lt);
        assert_eq!(c.rhs, i(-3));
    }

    #[test]
    fn strict_versus_nonstrict_evaluation() {
        let ge = parse_property::<Rational>("o[1] >= 0").unwrap();
        let gt = parse_property::<Rational>("o[1] > 0").unwrap();
        let (PropertySpec::Conjunction(ge), PropertySpec::Conjunction(gt)) = (ge, gt) else {
            panic!()
        };
        assert!(ge.satisfied_by(&[i(0)]));
        assert!(!gt.satisfied_by(&[i(0)]));
    }

    #[test]
    fn rejects_malformed_properties() {
        assert!(parse_property::<Rational>("o[1] o[2]").is_err());
        assert!(parse_property::<Rational>("o[0] > 1").is_err());
        assert!(parse_property::<Rational>("3 > 1").is_err());
        assert!(parse_property::<Rational>("o[1] >").is_err());
        assert!(parse_property::<Rational>("").is_err());
    }

    #[test]
    fn dominates_builder() {
        let p = OutputProperty::<Rational>::dominates(2, 1, 2).unwrap();
        assert!(p.satisfied_by(&[i(-1), i(0)]));
        assert!(!p.satisfied_by(&[i(0), i(0)]));
        assert!(OutputProperty::<Rational>::dominates(1, 1, 2).is_err());
        assert!(OutputProperty::<Rational>::dominates(3, 1, 2).is_err());
    }
}
