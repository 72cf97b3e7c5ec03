//! Decomposable interactive object: elements, their variant counts and
//! weights, and per-impression level vectors with an aggregated intensity
//! measure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One changeable interface element and the variants available for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementSpec {
    /// 1-based index of the element within its object.
    #[serde(rename = "id")]
    pub element_id: u32,
    /// Short label, e.g. "featured-border".
    pub name: String,
    /// Number of intensity variants available (levels run 1..=variant_count).
    pub variant_count: u32,
    /// Dimensionless rank of the element relative to the others.
    #[serde(default = "default_weight")]
    pub weight: f64,
    /// Free-text description of what the variants look like.
    #[serde(default)]
    pub description: String,
}

fn default_weight() -> f64 {
    1.0
}

/// An interactive object decomposed into an ordered list of elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub object_id: String,
    pub elements: Vec<ElementSpec>,
}

/// Per-element intensity levels of one impression.
///
/// Position `j` holds the level of element `j + 1`; levels are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LevelVector(pub Vec<u32>);

impl LevelVector {
    pub fn uniform(level: u32, len: usize) -> Self {
        LevelVector(vec![level; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Componentwise minimum with `other` (used for level caps).
    pub fn min_with(&self, other: &LevelVector) -> Result<LevelVector> {
        if self.len() != other.len() {
            return Err(Error::ArityMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(LevelVector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| a.min(b))
                .collect(),
        ))
    }
}

impl std::fmt::Display for LevelVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, "}}")
    }
}

impl ObjectSpec {
    /// Validates structural invariants: at least one element, ids exactly
    /// 1..k in order, positive variant counts, positive finite weights.
    pub fn validate(&self) -> Result<()> {
        if self.elements.is_empty() {
            return Err(Error::InvalidObject("object has no elements".into()));
        }
        for (i, el) in self.elements.iter().enumerate() {
            let expected = (i + 1) as u32;
            if el.element_id != expected {
                return Err(Error::InvalidObject(format!(
                    "element id {} at position {} (ids must be 1..{} in order)",
                    el.element_id,
                    i + 1,
                    self.elements.len()
                )));
            }
            if el.variant_count == 0 {
                return Err(Error::InvalidObject(format!(
                    "element {} has no variants",
                    el.name
                )));
            }
            if !(el.weight > 0.0 && el.weight.is_finite()) {
                return Err(Error::InvalidObject(format!(
                    "element {} weight {} must be positive and finite",
                    el.name, el.weight
                )));
            }
        }
        Ok(())
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    /// Highest level every element supports (minimum variant count).
    pub fn max_common_level(&self) -> u32 {
        self.elements
            .iter()
            .map(|e| e.variant_count)
            .min()
            .unwrap_or(0)
    }

    /// The bundled six-element object with five variants per element.
    pub fn default_six_element() -> ObjectSpec {
        let names = [
            (
                "featured-border",
                "border emphasis around the featured thumbnail",
            ),
            ("button", "play button styling"),
            ("cta-text", "call-to-action text treatment"),
            ("rating", "star rating display"),
            ("header", "header bar styling"),
            ("recommend-bar", "overlay bar on the featured thumbnail"),
        ];
        ObjectSpec {
            object_id: "recommender".into(),
            elements: names
                .iter()
                .enumerate()
                .map(|(i, (name, desc))| ElementSpec {
                    element_id: (i + 1) as u32,
                    name: (*name).into(),
                    variant_count: 5,
                    weight: 1.0,
                    description: (*desc).into(),
                })
                .collect(),
        }
    }

    pub fn from_json(json: &str) -> Result<ObjectSpec> {
        let spec: ObjectSpec = serde_json::from_str(json)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Checks a level vector against an object spec.
///
/// Reports the first offending position (1-based) on rejection.
pub fn validate_levels(spec: &ObjectSpec, lv: &LevelVector) -> Result<()> {
    if lv.len() != spec.element_count() {
        return Err(Error::ArityMismatch {
            expected: spec.element_count(),
            got: lv.len(),
        });
    }
    for (i, (&level, el)) in lv.0.iter().zip(&spec.elements).enumerate() {
        if level < 1 || level > el.variant_count {
            return Err(Error::LevelOutOfRange {
                position: i + 1,
                level,
                max: el.variant_count,
            });
        }
    }
    Ok(())
}

/// Aggregated visual intensity: the weighted sum of all element levels.
pub fn aggregate_intensity(spec: &ObjectSpec, lv: &LevelVector) -> Result<f64> {
    validate_levels(spec, lv)?;
    Ok(lv
        .0
        .iter()
        .zip(&spec.elements)
        .map(|(&level, el)| f64::from(level) * el.weight)
        .sum())
}

/// True iff `a[j] >= b[j]` for every position.
pub fn dominates(a: &LevelVector, b: &LevelVector) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::ArityMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(a.0.iter().zip(&b.0).all(|(&x, &y)| x >= y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn six_by_five() -> ObjectSpec {
        ObjectSpec::default_six_element()
    }

    #[test]
    fn default_object_is_valid() {
        six_by_five().validate().unwrap();
        assert_eq!(six_by_five().max_common_level(), 5);
    }

    #[test]
    fn validates_all_ones() {
        let spec = six_by_five();
        validate_levels(&spec, &LevelVector(vec![1, 1, 1, 1, 1, 1])).unwrap();
    }

    #[test]
    fn rejects_level_above_variant_count_at_position_one() {
        let spec = six_by_five();
        let err = validate_levels(&spec, &LevelVector(vec![6, 1, 1, 1, 1, 1])).unwrap_err();
        match err {
            Error::LevelOutOfRange {
                position,
                level,
                max,
            } => {
                assert_eq!((position, level, max), (1, 6, 5));
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn rejects_wrong_arity() {
        let spec = six_by_five();
        let err = validate_levels(&spec, &LevelVector(vec![1, 1, 1, 1, 1])).unwrap_err();
        match err {
            Error::ArityMismatch { expected, got } => assert_eq!((expected, got), (6, 5)),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn rejects_zero_level() {
        let spec = six_by_five();
        let err = validate_levels(&spec, &LevelVector(vec![1, 0, 1, 1, 1, 1])).unwrap_err();
        match err {
            Error::LevelOutOfRange { position, .. } => assert_eq!(position, 2),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn intensity_uniform_weights_is_plain_sum() {
        let spec = six_by_five();
        let lo = aggregate_intensity(&spec, &LevelVector(vec![1; 6])).unwrap();
        let hi = aggregate_intensity(&spec, &LevelVector(vec![5; 6])).unwrap();
        assert_eq!(lo, 6.0);
        assert_eq!(hi, 30.0);
    }

    #[test]
    fn intensity_weighted_hand_sum() {
        // weights {2,1,1,1,1,1}, levels {3,2,2,2,2,2}: 2*3 + 5*2 = 16
        let mut spec = six_by_five();
        spec.elements[0].weight = 2.0;
        let ai = aggregate_intensity(&spec, &LevelVector(vec![3, 2, 2, 2, 2, 2])).unwrap();
        assert_eq!(ai, 16.0);
    }

    #[test]
    fn intensity_rejects_invalid_vector() {
        let spec = six_by_five();
        assert!(aggregate_intensity(&spec, &LevelVector(vec![9; 6])).is_err());
    }

    #[test]
    fn dominates_examples() {
        let a = LevelVector(vec![2, 1, 1, 1, 1, 1]);
        let b = LevelVector(vec![1, 1, 1, 1, 1, 1]);
        assert!(dominates(&a, &b).unwrap());
        assert!(!dominates(&b, &a).unwrap());
        assert!(dominates(&a, &a).unwrap());

        let p = LevelVector(vec![1, 2]);
        let q = LevelVector(vec![2, 1]);
        assert!(!dominates(&p, &q).unwrap());
        assert!(!dominates(&q, &p).unwrap());
        assert!(dominates(&p, &LevelVector(vec![1])).is_err());
    }

    #[test]
    fn object_config_json_round_trip() {
        let json = r#"{
            "object_id": "widget",
            "elements": [
                {"id": 1, "name": "border", "variant_count": 3, "weight": 2.0, "description": "frame"},
                {"id": 2, "name": "button", "variant_count": 4, "weight": 1.0, "description": ""}
            ]
        }"#;
        let spec = ObjectSpec::from_json(json).unwrap();
        assert_eq!(spec.element_count(), 2);
        assert_eq!(spec.max_common_level(), 3);
        let back = serde_json::to_string(&spec).unwrap();
        let again = ObjectSpec::from_json(&back).unwrap();
        assert_eq!(spec, again);
    }

    #[test]
    fn rejects_out_of_order_ids() {
        let json = r#"{"object_id": "x", "elements": [
            {"id": 2, "name": "a", "variant_count": 2, "weight": 1.0, "description": ""}
        ]}"#;
        assert!(ObjectSpec::from_json(json).is_err());
    }
}
