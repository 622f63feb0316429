//! Visible feature space and conjunctive error boundaries.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, FieldError, Result};

/// Attribute name to value, as shown to the player.
pub type VisibleFeatures = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub values: Vec<String>,
}

impl Attribute {
    pub fn new(name: &str, values: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            values: values.iter().map(|v| v.to_string()).collect(),
        }
    }
}

/// The categorical attributes every object shows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureSpace {
    pub attributes: Vec<Attribute>,
}

impl Default for FeatureSpace {
    /// color × shape × size: 18 objects.
    fn default() -> Self {
        Self {
            attributes: vec![
                Attribute::new("color", &["blue", "red", "green"]),
                Attribute::new("shape", &["square", "circle", "triangle"]),
                Attribute::new("size", &["small", "large"]),
            ],
        }
    }
}

impl FeatureSpace {
    pub fn attribute(&self, name: &str) -> Option<&Attribute> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    /// Number of distinct objects.
    pub fn size(&self) -> usize {
        self.attributes.iter().map(|a| a.values.len()).product()
    }

    /// Every object of the space, in lexicographic order of value indices.
    pub fn enumerate(&self) -> Vec<VisibleFeatures> {
        let mut objects = vec![VisibleFeatures::new()];
        for attribute in &self.attributes {
            objects = objects
                .into_iter()
                .flat_map(|partial| {
                    attribute.values.iter().map(move |v| {
                        let mut o = partial.clone();
                        o.insert(attribute.name.clone(), v.clone());
                        o
                    })
                })
                .collect();
        }
        objects
    }

    pub(crate) fn check(&self, field: &str, errors: &mut Vec<FieldError>) {
        if self.attributes.is_empty() {
            errors.push(FieldError::new(field, "needs at least one attribute"));
        }
        let mut names = BTreeSet::new();
        for a in &self.attributes {
            if !names.insert(a.name.as_str()) {
                errors.push(FieldError::new(field, format!("duplicate attribute `{}`", a.name)));
            }
            if a.values.is_empty() {
                errors.push(FieldError::new(field, format!("attribute `{}` has no values", a.name)));
            }
            let distinct: BTreeSet<_> = a.values.iter().collect();
            if distinct.len() != a.values.len() {
                errors.push(FieldError::new(field, format!("attribute `{}` repeats a value", a.name)));
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub attribute: String,
    pub value: String,
}

impl Literal {
    pub fn new(attribute: &str, value: &str) -> Self {
        Self {
            attribute: attribute.to_string(),
            value: value.to_string(),
        }
    }
}

fn default_error_probability() -> f64 {
    1.0
}

/// Region of the feature space where the AI errs: a conjunction of literals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBoundary {
    pub literals: Vec<Literal>,
    /// Chance that an object inside the region is actually misclassified.
    #[serde(default = "default_error_probability")]
    pub error_probability: f64,
}

impl ErrorBoundary {
    pub fn new(literals: Vec<Literal>) -> Self {
        Self {
            literals,
            error_probability: 1.0,
        }
    }

    pub fn contains(&self, object: &VisibleFeatures) -> bool {
        self.literals
            .iter()
            .all(|l| object.get(&l.attribute).is_some_and(|v| *v == l.value))
    }

    pub fn uses(&self, attribute: &str) -> bool {
        self.literals.iter().any(|l| l.attribute == attribute)
    }

    /// Objects of `space` inside the region.
    pub fn region(&self, space: &FeatureSpace) -> Vec<VisibleFeatures> {
        space.enumerate().into_iter().filter(|o| self.contains(o)).collect()
    }

    pub(crate) fn check(&self, field: &str, space: &FeatureSpace, errors: &mut Vec<FieldError>) {
        if self.literals.is_empty() {
            errors.push(FieldError::new(field, "needs at least one literal"));
        }
        let mut seen = BTreeSet::new();
        for l in &self.literals {
            if !seen.insert(l.attribute.as_str()) {
                errors.push(FieldError::new(field, format!("attribute `{}` used twice", l.attribute)));
            }
            match space.attribute(&l.attribute) {
                None => errors.push(FieldError::new(field, format!("unknown attribute `{}`", l.attribute))),
                Some(a) if !a.values.contains(&l.value) => errors.push(FieldError::new(
                    field,
                    format!("`{}` is not a value of `{}`", l.value, l.attribute),
                )),
                Some(_) => {}
            }
        }
        if !(self.error_probability > 0.0 && self.error_probability <= 1.0) {
            errors.push(FieldError::new(
                format!("{field}.error_probability"),
                "must lie in (0, 1]",
            ));
        }
    }
}

impl fmt::Display for ErrorBoundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = self.literals.iter().map(|l| l.value.as_str()).collect();
        write!(f, "({})", parts.join(" ∧ "))
    }
}

fn random_literal(attribute: &Attribute, rng: &mut ChaCha8Rng) -> Literal {
    Literal {
        attribute: attribute.name.clone(),
        value: attribute.values.choose(rng).expect("attribute has values").clone(),
    }
}

/// A random conjunction over `literal_count` distinct attributes.
pub fn generate_boundary(space: &FeatureSpace, literal_count: usize, seed: u64) -> Result<ErrorBoundary> {
    if literal_count > space.len() {
        return Err(Error::LiteralCountTooLarge {
            requested: literal_count,
            available: space.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let literals = space
        .attributes
        .choose_multiple(&mut rng, literal_count)
        .map(|a| random_literal(a, &mut rng))
        .collect();
    Ok(ErrorBoundary::new(literals))
}

/// Strengthen the conjunction with one literal on an unused attribute.
///
/// The new error region is a subset of the old one, so the update introduces
/// no new errors for any player.
pub fn make_compatible_update(boundary: &ErrorBoundary, space: &FeatureSpace, seed: u64) -> Result<ErrorBoundary> {
    let unused: Vec<&Attribute> = space.attributes.iter().filter(|a| !boundary.uses(&a.name)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let attribute = unused.choose(&mut rng).ok_or(Error::NoUnusedAttribute)?;
    let mut literals = vec![random_literal(attribute, &mut rng)];
    literals.extend(boundary.literals.iter().cloned());
    Ok(ErrorBoundary {
        literals,
        error_probability: boundary.error_probability,
    })
}

const INCOMPATIBLE_LITERALS: usize = 3;
const MAX_REJECTIONS: usize = 100_000;

/// A random 3-literal conjunction that errs on at least one object the old
/// boundary got right.
pub fn make_incompatible_update(boundary: &ErrorBoundary, space: &FeatureSpace, seed: u64) -> Result<ErrorBoundary> {
    if space.len() < INCOMPATIBLE_LITERALS {
        return Err(Error::LiteralCountTooLarge {
            requested: INCOMPATIBLE_LITERALS,
            available: space.len(),
        });
    }
    // A new conjunction can escape the old region only by leaving out, or
    // contradicting, an old literal whose attribute takes another value.
    let escapable = boundary
        .literals
        .iter()
        .any(|l| space.attribute(&l.attribute).is_some_and(|a| a.values.len() > 1));
    if !escapable {
        return Err(Error::NoIncompatibleBoundary);
    }
    let objects = space.enumerate();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<&Attribute> = space.attributes.iter().collect();
    for _ in 0..MAX_REJECTIONS {
        order.shuffle(&mut rng);
        let candidate = ErrorBoundary {
            literals: order[..INCOMPATIBLE_LITERALS]
                .iter()
                .map(|a| random_literal(a, &mut rng))
                .collect(),
            error_probability: boundary.error_probability,
        };
        if objects.iter().any(|o| candidate.contains(o) && !boundary.contains(o)) {
            return Ok(candidate);
        }
    }
    Err(Error::NoIncompatibleBoundary)
}
