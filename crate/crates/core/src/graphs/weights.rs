use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use super::family::{GraphFamily, VertexRef};
use crate::error::{Error, Result};
use crate::exact::{pow_i, sqrt_exact, QuadField, Rational, Surd};

/// Orbit weights `a` (summing to one) together with the relative stabilizer
/// measures `m` of the orbit representatives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitWeights {
    #[serde(with = "crate::report::rational_vec")]
    pub a: Vec<Rational>,
    #[serde(with = "crate::report::rational_vec")]
    pub m: Vec<Rational>,
}

impl OrbitWeights {
    pub fn new(g: &GraphFamily, a: Vec<Rational>) -> Result<Self> {
        if a.len() != g.orbit_count {
            return Err(Error::Parameter(format!(
                "expected {} orbit weights, got {}",
                g.orbit_count,
                a.len()
            )));
        }
        if a.iter().any(|x| !x.is_positive()) {
            return Err(Error::Parameter("orbit weights must be positive".into()));
        }
        let total: Rational = a.iter().sum();
        if !total.is_one() {
            return Err(Error::Parameter(format!(
                "orbit weights sum to {total}, not 1"
            )));
        }
        Ok(OrbitWeights {
            a,
            m: g.orbit_m.clone(),
        })
    }

    pub fn uniform(g: &GraphFamily) -> Self {
        let share = Rational::new(1.into(), (g.orbit_count as i64).into());
        OrbitWeights {
            a: vec![share; g.orbit_count],
            m: g.orbit_m.clone(),
        }
    }

    /// `a_v · m(v)` for a concrete vertex.
    pub fn tilt(&self, g: &GraphFamily, v: &VertexRef) -> Rational {
        &self.a[v.orbit] * &self.m[v.orbit] * pow_i(&g.modular_base, v.level)
    }
}

/// `Δ_{Γ,a}(u, v) = a_v m(v) / (a_u m(u))`, exactly.
pub fn modular_ratio(
    g: &GraphFamily,
    w: &OrbitWeights,
    u: &VertexRef,
    v: &VertexRef,
) -> Result<Rational> {
    g.validate(u)?;
    g.validate(v)?;
    Ok(modular_ratio_unchecked(g, w, u, v))
}

pub(crate) fn modular_ratio_unchecked(
    g: &GraphFamily,
    w: &OrbitWeights,
    u: &VertexRef,
    v: &VertexRef,
) -> Rational {
    let orbit_part = (&w.a[v.orbit] * &w.m[v.orbit]) / (&w.a[u.orbit] * &w.m[u.orbit]);
    orbit_part * pow_i(&g.modular_base, v.level - u.level)
}

/// Unweighted ratio `m(v)/m(u)`.
pub fn measure_ratio(g: &GraphFamily, u: &VertexRef, v: &VertexRef) -> Rational {
    let orbit_part = &g.orbit_m[v.orbit] / &g.orbit_m[u.orbit];
    orbit_part * pow_i(&g.modular_base, v.level - u.level)
}

/// `√(m(u) m(v))` relative to `m(o) = 1`, as an element of `Q(√q)`.
pub fn sqrt_measure_product(
    g: &GraphFamily,
    field: &QuadField,
    u: &VertexRef,
    v: &VertexRef,
) -> Result<Surd> {
    let orbit_part = &g.orbit_m[u.orbit] * &g.orbit_m[v.orbit];
    let root = sqrt_exact(&orbit_part)
        .ok_or_else(|| Error::Unsupported("orbit measures whose product is not a square".into()))?;
    Ok(field.half_power(u.level + v.level).scale(&root))
}

/// `√(m(v)/m(u))` as an element of `Q(√q)`.
pub fn sqrt_measure_ratio(
    g: &GraphFamily,
    field: &QuadField,
    u: &VertexRef,
    v: &VertexRef,
) -> Result<Surd> {
    let orbit_part = &g.orbit_m[v.orbit] / &g.orbit_m[u.orbit];
    let root = sqrt_exact(&orbit_part)
        .ok_or_else(|| Error::Unsupported("orbit measure ratio is not a square".into()))?;
    Ok(field.half_power(v.level - u.level).scale(&root))
}
