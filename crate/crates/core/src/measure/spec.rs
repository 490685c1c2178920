//! JSON measure documents.
//!
//! ```json
//! {"type": "mixture", "components": [
//!     {"weight": 0.5, "measure": {"type": "atomic", "positions": [0.0], "weights": [1.0]}},
//!     {"weight": 0.5, "measure": {"type": "grid_density", "origin": 0.0, "step": 1.0, "values": [1.0, 1.0]}}
//! ]}
//! ```
//!
//! The `type` discriminator is one of `atomic`, `grid_density`,
//! `bernoulli_convolution`, `mixture`, `lipschitz_pushforward`. Maps carry a
//! `kind` of `affine` or `linear_plus_sine` plus the declared constants `m`
//! and `M`. See `docs/measure-spec.md` for the full schema.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

use super::{
    BernoulliConvolution, MapKind, MapSpec, Measure, BERNOULLI_DEPTH_CAP,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    Atomic {
        positions: Vec<f64>,
        weights: Vec<f64>,
    },
    GridDensity {
        origin: f64,
        step: f64,
        values: Vec<f64>,
    },
    BernoulliConvolution {
        lambda: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        depth_cap: Option<usize>,
    },
    Mixture {
        components: Vec<ComponentSpec>,
    },
    LipschitzPushforward {
        base: Box<MeasureSpec>,
        map: MapDoc,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub weight: f64,
    pub measure: MeasureSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapDoc {
    Affine {
        scale: f64,
        shift: f64,
    },
    LinearPlusSine {
        slope: f64,
        amplitude: f64,
        shift: f64,
        m: f64,
        #[serde(rename = "M")]
        upper: f64,
    },
}

fn at(prefix: &str, err: Error) -> Error {
    match err {
        Error::InvalidMeasure { field, reason } => Error::InvalidMeasure {
            field: if prefix.is_empty() {
                field
            } else {
                format!("{prefix}.{field}")
            },
            reason,
        },
        Error::LipschitzCertification(reason) => Error::InvalidMeasure {
            field: format!("{prefix}{}map", if prefix.is_empty() { "" } else { "." }),
            reason,
        },
        other => other,
    }
}

impl MeasureSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Spec(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("measure spec serializes")
    }

    /// Builds the measure, reporting the dotted path of any offending field.
    pub fn build<S: Real>(&self) -> Result<Measure<S>> {
        self.build_at("")
    }

    fn build_at<S: Real>(&self, path: &str) -> Result<Measure<S>> {
        let lit = |v: &[f64]| v.iter().map(|&x| S::lit(x)).collect::<Vec<S>>();
        let built = match self {
            MeasureSpec::Atomic { positions, weights } => {
                Measure::atomic(lit(positions), lit(weights))
            }
            MeasureSpec::GridDensity {
                origin,
                step,
                values,
            } => Measure::grid_density(S::lit(*origin), S::lit(*step), lit(values)),
            MeasureSpec::BernoulliConvolution { lambda, depth_cap } => {
                BernoulliConvolution::new(S::lit(*lambda)).map(|b| {
                    Measure::BernoulliConvolution(
                        b.with_depth_cap(depth_cap.unwrap_or(BERNOULLI_DEPTH_CAP)),
                    )
                })
            }
            MeasureSpec::Mixture { components } => {
                let mut parts = Vec::with_capacity(components.len());
                for (i, c) in components.iter().enumerate() {
                    let sub = join(path, &format!("components[{i}].measure"));
                    parts.push((S::lit(c.weight), c.measure.build_at::<S>(&sub)?));
                }
                Measure::mixture(parts)
            }
            MeasureSpec::LipschitzPushforward { base, map } => {
                let base = base.build_at::<S>(&join(path, "base"))?;
                let probe = base.support_bounds();
                let map = map.build::<S>(probe).map_err(|e| at(path, e))?;
                Measure::pushforward(base, map)
            }
        };
        built.map_err(|e| at(path, e))
    }

    /// Document for a measure. Fails for custom maps, which have no JSON form.
    pub fn from_measure(m: &Measure<f64>) -> Result<Self> {
        Ok(match m {
            Measure::Atomic(a) => MeasureSpec::Atomic {
                positions: a.positions().to_vec(),
                weights: a.weights().to_vec(),
            },
            Measure::GridDensity(g) => MeasureSpec::GridDensity {
                origin: g.origin(),
                step: g.step(),
                values: g.values().to_vec(),
            },
            Measure::BernoulliConvolution(b) => MeasureSpec::BernoulliConvolution {
                lambda: b.lambda(),
                depth_cap: (b.depth_cap() != BERNOULLI_DEPTH_CAP).then_some(b.depth_cap()),
            },
            Measure::Mixture(mix) => MeasureSpec::Mixture {
                components: mix
                    .components()
                    .iter()
                    .map(|(w, c)| {
                        Ok(ComponentSpec {
                            weight: *w,
                            measure: MeasureSpec::from_measure(c)?,
                        })
                    })
                    .collect::<Result<_>>()?,
            },
            Measure::LipschitzPushforward(p) => MeasureSpec::LipschitzPushforward {
                base: Box::new(MeasureSpec::from_measure(p.base())?),
                map: match p.map().kind() {
                    MapKind::Affine { scale, shift } => MapDoc::Affine {
                        scale: *scale,
                        shift: *shift,
                    },
                    MapKind::LinearPlusSine {
                        slope,
                        amplitude,
                        shift,
                    } => MapDoc::LinearPlusSine {
                        slope: *slope,
                        amplitude: *amplitude,
                        shift: *shift,
                        m: p.map().lower_constant(),
                        upper: p.map().upper_constant(),
                    },
                    MapKind::Custom { label, .. } => {
                        return Err(Error::Spec(format!(
                            "custom map `{label}` has no JSON representation"
                        )))
                    }
                },
            },
        })
    }
}

impl MapDoc {
    pub fn build<S: Real>(&self, probe: (S, S)) -> Result<MapSpec<S>> {
        match self {
            MapDoc::Affine { scale, shift } => {
                let c = S::lit(scale.abs());
                MapSpec::new(
                    MapKind::Affine {
                        scale: S::lit(*scale),
                        shift: S::lit(*shift),
                    },
                    c,
                    c,
                    probe,
                )
            }
            MapDoc::LinearPlusSine {
                slope,
                amplitude,
                shift,
                m,
                upper,
            } => MapSpec::new(
                MapKind::LinearPlusSine {
                    slope: S::lit(*slope),
                    amplitude: S::lit(*amplitude),
                    shift: S::lit(*shift),
                },
                S::lit(*m),
                S::lit(*upper),
                probe,
            ),
        }
    }
}

fn join(prefix: &str, field: &str) -> String {
    if prefix.is_empty() {
        field.to_string()
    } else {
        format!("{prefix}.{field}")
    }
}

/// Parses and builds a measure document.
pub fn parse_measure(text: &str) -> Result<Measure<f64>> {
    MeasureSpec::from_json(text)?.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_every_variant() {
        let doc = r#"{"type": "mixture", "components": [
            {"weight": 0.25, "measure": {"type": "atomic", "positions": [0.0, 1.0], "weights": [0.5, 0.5]}},
            {"weight": 0.25, "measure": {"type": "grid_density", "origin": 0.0, "step": 1.0, "values": [1.0, 1.0]}},
            {"weight": 0.25, "measure": {"type": "bernoulli_convolution", "lambda": 0.25}},
            {"weight": 0.25, "measure": {"type": "lipschitz_pushforward",
                "base": {"type": "bernoulli_convolution", "lambda": 0.25},
                "map": {"kind": "linear_plus_sine", "slope": 2.0, "amplitude": 1.0, "shift": 0.0, "m": 1.0, "M": 3.0}}}
        ]}"#;
        let m = parse_measure(doc).unwrap();
        assert!(matches!(m, Measure::Mixture(_)));
        let back = MeasureSpec::from_measure(&m).unwrap();
        assert_eq!(back, MeasureSpec::from_json(doc).unwrap());
    }

    #[test]
    fn errors_name_the_field() {
        let doc = r#"{"type": "mixture", "components": [
            {"weight": 1.0, "measure": {"type": "bernoulli_convolution", "lambda": 0.7}}]}"#;
        let err = parse_measure(doc).unwrap_err();
        assert!(err.to_string().contains("components[0].measure.lambda"), "{err}");

        let err = parse_measure(r#"{"type": "atomic", "positions": [0.0]}"#).unwrap_err();
        assert!(err.to_string().contains("weights"), "{err}");

        let err = parse_measure(r#"{"type": "cantor"}"#).unwrap_err();
        assert!(err.to_string().contains("cantor"), "{err}");

        let doc = r#"{"type": "lipschitz_pushforward",
            "base": {"type": "grid_density", "origin": 0.0, "step": 1.0, "values": [1.0, 1.0]},
            "map": {"kind": "linear_plus_sine", "slope": 2.0, "amplitude": 1.0, "shift": 0.0, "m": 2.7, "M": 3.0}}"#;
        let err = parse_measure(doc).unwrap_err();
        assert!(err.to_string().contains("map"), "{err}");
    }

    fn arb_leaf() -> impl Strategy<Value = MeasureSpec> {
        prop_oneof![
            (prop::collection::vec(-5.0..5.0f64, 1..6)).prop_map(|positions| {
                let n = positions.len();
                let weights = vec![1.0 / n as f64; n];
                let total: f64 = weights.iter().sum();
                let mut weights = weights;
                weights[0] += 1.0 - total;
                MeasureSpec::Atomic { positions, weights }
            }),
            (0.01..0.49f64).prop_map(|lambda| MeasureSpec::BernoulliConvolution {
                lambda,
                depth_cap: None
            }),
            (-3.0..3.0f64, 0.01..1.0f64, prop::collection::vec(0.0..2.0f64, 2..8))
                .prop_filter("positive mass", |(_, _, v)| v.iter().sum::<f64>() > 0.1)
                .prop_map(|(origin, step, values)| MeasureSpec::GridDensity {
                    origin,
                    step,
                    values
                }),
        ]
    }

    proptest! {
        // measure → document → measure → document is a fixed point
        #[test]
        fn documents_round_trip(spec in arb_leaf(), scale in 0.5..3.0f64) {
            let pushed = MeasureSpec::LipschitzPushforward {
                base: Box::new(spec.clone()),
                map: MapDoc::Affine { scale, shift: 1.0 },
            };
            for s in [spec, pushed] {
                let m: Measure<f64> = s.build().unwrap();
                let doc = MeasureSpec::from_measure(&m).unwrap();
                let text = doc.to_json();
                let again = MeasureSpec::from_json(&text).unwrap();
                prop_assert_eq!(&again, &doc);
                let m2: Measure<f64> = again.build().unwrap();
                prop_assert_eq!(MeasureSpec::from_measure(&m2).unwrap(), doc);
            }
        }
    }
}
