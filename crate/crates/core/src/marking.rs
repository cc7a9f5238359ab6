//! Neuron marking: which direction each neuron's value may move without
//! hurting the goal, and what that implies for individual edge changes.
//!
//! Output neurons are tagged from the property (`mark_outputs`): a neuron
//! whose increase helps every conjunct is `Increment`, one whose decrease
//! helps is `Decrement`, and anything pulled both ways — or not mentioned —
//! is `Free`. Tags then flow backwards (`propagate_marking`): a source neuron
//! is `Increment` exactly when every outgoing nonzero edge pairs a positive
//! weight with an `Increment` target or a negative weight with a `Decrement`
//! target (mirrored for `Decrement`); mixed demands collapse to `Free`.
//!
//! `epsilon_sign` turns a (source value, target tag) pair into a one-sided
//! bound for the weight change on that edge: increasing the weight of an edge
//! whose source is positive raises the target's pre-activation, so an
//! `Increment` target admits only non-negative changes there, and so on. An
//! edge whose source value is zero cannot influence this input at all, so its
//! change is pinned to zero — that is the entire payoff of the analysis: the
//! optimiser sees fewer, one-sided variables.

use crate::error::{Error, Result};
use crate::network::Network;
use crate::property::{OutputProperty, Relation};
use crate::scalar::Scalar;

/// Allowed direction of travel for a neuron's value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeuronTag {
    Increment,
    Decrement,
    Free,
}

/// Tags for layers 1..=j of a network (index 0 = layer 1).
#[derive(Debug, Clone, PartialEq)]
pub struct Marking {
    pub layers: Vec<Vec<NeuronTag>>,
}

impl Marking {
    /// Tags of layer `p` (1-based).
    pub fn layer(&self, p: usize) -> &[NeuronTag] {
        &self.layers[p - 1]
    }
}

/// One-sided bound for a single edge-weight change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignConstraint {
    NonNegative,
    NonPositive,
    Zero,
    Free,
}

/// Tag the output layer from the property.
///
/// For a `>=`/`>` conjunct, neurons with positive coefficients want to grow
/// and neurons with negative coefficients want to shrink; `<=`/`<` mirrors
/// that; `=` pins every mentioned neuron. Demands are combined across
/// conjuncts: one-sided demands keep their direction, conflicts and untouched
/// neurons are `Free`.
pub fn mark_outputs<S: Scalar>(
    property: &OutputProperty<S>,
    width: usize,
) -> Result<Vec<NeuronTag>> {
    if property.min_width() > width {
        return Err(Error::Index(format!(
            "property mentions neuron {} but layer width is {}",
            property.min_width(),
            width
        )));
    }
    let mut wants_up = vec![false; width];
    let mut wants_down = vec![false; width];
    for c in &property.conjuncts {
        for (i, coef) in c.coeffs.iter().enumerate() {
            if coef.is_zero() {
                continue;
            }
            let positive = *coef > S::zero();
            match c.relation {
                Relation::Ge | Relation::Gt => {
                    if positive {
                        wants_up[i] = true;
                    } else {
                        wants_down[i] = true;
                    }
                }
                Relation::Le | Relation::Lt => {
                    if positive {
                        wants_down[i] = true;
                    } else {
                        wants_up[i] = true;
                    }
                }
                Relation::Eq => {
                    wants_up[i] = true;
                    wants_down[i] = true;
                }
            }
        }
    }
    Ok((0..width)
        .map(|i| match (wants_up[i], wants_down[i]) {
            (true, false) => NeuronTag::Increment,
            (false, true) => NeuronTag::Decrement,
            _ => NeuronTag::Free,
        })
        .collect())
}

/// Propagate output-layer tags backwards to every layer down to layer 1.
///
/// `tags` are the tags of layer `j` (1-based); the result holds layers
/// 1..=j. Zero-weight edges impose no demand; `Free` targets impose no
/// demand; a source with no demands at all is `Free`.
pub fn propagate_marking<S: Scalar>(
    net: &Network<S>,
    j: usize,
    tags: &[NeuronTag],
) -> Result<Marking> {
    if j < 1 || j > net.layer_count() {
        return Err(Error::Index(format!("layer {} outside 1..={}", j, net.layer_count())));
    }
    if tags.len() != net.width(j) {
        return Err(Error::Dimension(format!(
            "{} tags for layer {} of width {}",
            tags.len(),
            j,
            net.width(j)
        )));
    }
    let mut layers = vec![tags.to_vec()];
    for s in (1..j).rev() {
        // Edge layer s connects layer s (sources) to layer s+1 (targets),
        // whose tags were just pushed.
        let target_tags = layers.last().expect("nonempty").clone();
        let w = net.edge_layer(s);
        let mut source_tags = Vec::with_capacity(net.width(s));
        for p in 0..net.width(s) {
            let mut demands_up = false;
            let mut demands_down = false;
            for q in 0..net.width(s + 1) {
                let weight = w.at(q, p);
                if weight.is_zero() {
                    continue;
                }
                let positive = *weight > S::zero();
                match target_tags[q] {
                    NeuronTag::Increment => {
                        if positive {
                            demands_up = true;
                        } else {
                            demands_down = true;
                        }
                    }
                    NeuronTag::Decrement => {
                        if positive {
                            demands_down = true;
                        } else {
                            demands_up = true;
                        }
                    }
                    NeuronTag::Free => {}
                }
            }
            source_tags.push(match (demands_up, demands_down) {
                (true, false) => NeuronTag::Increment,
                (false, true) => NeuronTag::Decrement,
                _ => NeuronTag::Free,
            });
        }
        layers.push(source_tags);
    }
    layers.reverse();
    Ok(Marking { layers })
}

/// Sign bound for the change of one edge, from its source's simulated value
/// and its target's tag.
///
/// A zero-valued source always yields `Zero` (the edge cannot act on this
/// input); otherwise a `Free` target leaves the change unconstrained, and
/// the remaining cases follow the sign algebra: raising a weight moves the
/// target by `source_value`, so the allowed direction flips with the sign of
/// the source.
pub fn epsilon_sign<S: Scalar>(source_value: &S, target: NeuronTag) -> Result<SignConstraint> {
    if !source_value.is_finite_value() {
        return Err(Error::NonFinite("edge source value".into()));
    }
    if source_value.is_zero() {
        return Ok(SignConstraint::Zero);
    }
    Ok(match target {
        NeuronTag::Free => SignConstraint::Free,
        NeuronTag::Increment => {
            if *source_value > S::zero() {
                SignConstraint::NonNegative
            } else {
                SignConstraint::NonPositive
            }
        }
        NeuronTag::Decrement => {
            if *source_value > S::zero() {
                SignConstraint::NonPositive
            } else {
                SignConstraint::NonNegative
            }
        }
    })
}
