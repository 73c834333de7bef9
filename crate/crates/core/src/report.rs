//! Report envelopes and serde helpers shared by the CLI and the library.
//!
//! Rationals are written as `"num/den"` strings; report rows that carry a
//! rational also carry its `f64` value.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::exact::{format_rational, parse_rational, to_f64, Rational};

pub const TOOL_NAME: &str = "perclab";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// A rational value as `{ "exact": "num/den", "value": f64 }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalValue {
    pub exact: String,
    pub value: f64,
}

impl From<&Rational> for RationalValue {
    fn from(r: &Rational) -> Self {
        RationalValue {
            exact: format_rational(r),
            value: to_f64(r),
        }
    }
}

/// Top-level report: tool identity, the run description and the payload.
pub fn envelope<R: Serialize>(run: &R, body: Value, wall_time_s: Option<f64>) -> Value {
    let mut obj = serde_json::Map::new();
    obj.insert("tool".into(), Value::from(TOOL_NAME));
    obj.insert("version".into(), Value::from(TOOL_VERSION));
    obj.insert(
        "run".into(),
        serde_json::to_value(run).unwrap_or(Value::Null),
    );
    if let Some(t) = wall_time_s {
        obj.insert("wall_time_s".into(), Value::from(t));
    }
    obj.insert("result".into(), body);
    Value::Object(obj)
}

pub mod rational_str {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text)
            .ok_or_else(|| serde::de::Error::custom(format!("bad rational {text:?}")))
    }
}

pub mod rational_vec {
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    use super::*;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for r in v {
            seq.serialize_element(&format_rational(r))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        Vec::<String>::deserialize(d)?
            .into_iter()
            .map(|t| {
                parse_rational(&t)
                    .ok_or_else(|| serde::de::Error::custom(format!("bad rational {t:?}")))
            })
            .collect()
    }
}
