//! Distributionally robust linear classification under Wasserstein
//! ambiguity.
//!
//! - [`dro`]: worst-case misclassification probability and CVaR of the
//!   distance to misclassification.
//! - [`geometry`]: distances, margins, generalized maximum margin.
//! - [`loss`], [`objective`], [`solve`]: smoothed ramp-loss training.
//! - [`analytic`]: the two-dimensional uniform model, integrated exactly.
//! - [`experiment`]: the synthetic benchmark protocols.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod data;
pub mod dro;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod loss;
pub mod objective;
pub mod solve;

pub use data::{CorruptionKind, CorruptionSpec, Dataset};
pub use dro::{CvarResult, WorstCaseResult};
pub use error::{Error, ErrorKind, Result};
pub use geometry::{Hyperplane, MarginProfile};
pub use loss::{LossKind, LossSpec};
pub use objective::{EmpiricalObjective, ObjectiveSpec, RegKind};
pub use solve::{Method, MultiStartReport, SolveOptions, SolveReport};

/// Serde adapter for reals that may be infinite: finite values are plain
/// JSON numbers, the rest the strings `"inf"`, `"-inf"` and `"nan"`.
pub mod serde_real {
    use serde::de::{self, Deserializer, Visitor};
    use serde::Serializer;
    use std::fmt;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    struct RealVisitor;

    impl Visitor<'_> for RealVisitor {
        type Value = f64;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            match v {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(RealVisitor)
    }
}
