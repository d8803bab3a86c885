//! A diagram together with its orders and both weight functions.

use serde_json::{json, Value};

use crate::diagram::BiInfiniteDiagram;
use crate::error::{Error, Result};
use crate::orders::{EdgeOrders, OrdersJson};
use crate::scalar::{Scalar, Q};
use crate::source::Side;
use crate::weights::{biinfinite_normalize, WeightFunction};

/// `(𝓑, w⁺, w⁻, ≤_{r,s})` with weights known through finite depths.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedDiagram<S> {
    pub diagram: BiInfiniteDiagram,
    pub orders: EdgeOrders,
    pub plus: WeightFunction<S>,
    pub minus: WeightFunction<S>,
}

impl<S: Scalar> WeightedDiagram<S> {
    pub fn new(diagram: BiInfiniteDiagram, orders: EdgeOrders, plus: WeightFunction<S>, minus: WeightFunction<S>) -> Result<Self> {
        if plus.side != Side::Positive || minus.side != Side::Negative {
            return Err(Error::Invalid("weights must be tagged positive and negative".into()));
        }
        let b = WeightedDiagram { diagram, orders, plus, minus };
        b.check_shapes()?;
        Ok(b)
    }

    fn check_shapes(&self) -> Result<()> {
        for (w, side) in [(&self.plus, Side::Positive), (&self.minus, Side::Negative)] {
            let one = self.diagram.one_sided(side, w.depth())?;
            for (k, l) in w.levels.iter().enumerate() {
                if l.len() != one.sizes[k] {
                    return Err(Error::DimensionMismatch { level: side.sign() * k as i64, expected: one.sizes[k], found: l.len() });
                }
            }
        }
        self.orders.check(&self.diagram)
    }

    pub fn depth_plus(&self) -> usize {
        self.plus.depth()
    }

    pub fn depth_minus(&self) -> usize {
        self.minus.depth()
    }

    pub fn weld_size(&self) -> usize {
        self.diagram.weld_size
    }

    /// `Σ_{v ∈ V_0} w⁺(v) w⁻(v)`, the area of the surface.
    pub fn pairing(&self) -> S {
        S::dot(&self.plus.levels[0], &self.minus.levels[0])
    }

    pub fn normalized(&self) -> Result<Self> {
        let (plus, minus) = biinfinite_normalize(&self.plus, &self.minus)?;
        Ok(WeightedDiagram { plus, minus, ..self.clone() })
    }

    pub fn truncated(&self, plus: usize, minus: usize) -> Self {
        WeightedDiagram { plus: self.plus.truncated(plus), minus: self.minus.truncated(minus), ..self.clone() }
    }

    /// Largest recursion residual over both sides.
    pub fn residual(&self) -> Result<f64> {
        let mut r = 0.0f64;
        for w in [&self.plus, &self.minus] {
            let one = self.diagram.one_sided(w.side, w.depth())?;
            for k in 1..=w.depth() {
                let pulled = one.g(k).apply_transpose(&w.levels[k]);
                for (a, b) in pulled.iter().zip(&w.levels[k - 1]) {
                    r = r.max((a.clone() - b.clone()).abs().to_f64());
                }
            }
        }
        Ok(r)
    }

    pub fn to_f64(&self) -> WeightedDiagram<f64> {
        WeightedDiagram { diagram: self.diagram.clone(), orders: self.orders.clone(), plus: self.plus.to_f64(), minus: self.minus.to_f64() }
    }

    pub fn to_json(&self) -> Result<Value> {
        Ok(json!({
            "diagram": serde_json::to_value(&self.diagram)?,
            "orders": serde_json::to_value(self.orders.to_json(&self.diagram)?)?,
            "weights": {"numericMode": S::MODE, "plus": self.plus.to_json(), "minus": self.minus.to_json()},
        }))
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let diagram: BiInfiniteDiagram =
            serde_json::from_value(v.get("diagram").cloned().ok_or_else(|| Error::Json("bundle without \"diagram\"".into()))?)?;
        let orders = match v.get("orders") {
            None | Some(Value::Null) => EdgeOrders::policy_only(),
            Some(o) => EdgeOrders::from_json(&serde_json::from_value::<OrdersJson>(o.clone())?, &diagram)?,
        };
        let w = v.get("weights").ok_or_else(|| Error::Json("bundle without \"weights\"".into()))?;
        let plus = WeightFunction::from_json(w.get("plus").ok_or_else(|| Error::Json("weights without \"plus\"".into()))?, Side::Positive)?;
        let minus = WeightFunction::from_json(w.get("minus").ok_or_else(|| Error::Json("weights without \"minus\"".into()))?, Side::Negative)?;
        WeightedDiagram::new(diagram, orders, plus, minus)
    }
}

/// A bundle in either numeric mode.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyBundle {
    Float(WeightedDiagram<f64>),
    Exact(WeightedDiagram<Q>),
}

impl AnyBundle {
    pub fn diagram(&self) -> &BiInfiniteDiagram {
        match self {
            AnyBundle::Float(b) => &b.diagram,
            AnyBundle::Exact(b) => &b.diagram,
        }
    }

    pub fn orders(&self) -> &EdgeOrders {
        match self {
            AnyBundle::Float(b) => &b.orders,
            AnyBundle::Exact(b) => &b.orders,
        }
    }

    pub fn mode(&self) -> &'static str {
        match self {
            AnyBundle::Float(_) => f64::MODE,
            AnyBundle::Exact(_) => Q::MODE,
        }
    }

    pub fn to_float(&self) -> WeightedDiagram<f64> {
        match self {
            AnyBundle::Float(b) => b.clone(),
            AnyBundle::Exact(b) => b.to_f64(),
        }
    }

    pub fn to_json(&self) -> Result<Value> {
        match self {
            AnyBundle::Float(b) => b.to_json(),
            AnyBundle::Exact(b) => b.to_json(),
        }
    }

    /// Reads `weights.numericMode` ("exact" or "float", default float).
    pub fn from_json(v: &Value) -> Result<Self> {
        let mode = v.get("weights").and_then(|w| w.get("numericMode")).and_then(Value::as_str).unwrap_or("float");
        match mode {
            "exact" => Ok(AnyBundle::Exact(WeightedDiagram::from_json(v)?)),
            "float" => Ok(AnyBundle::Float(WeightedDiagram::from_json(v)?)),
            other => Err(Error::Json(format!("unknown numericMode {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::TransitionMatrix;
    use crate::weights::pf_weights_exact;

    #[test]
    fn json_round_trip_and_shapes() {
        let d = BiInfiniteDiagram::stationary(TransitionMatrix::lit(&[[2]]));
        let (p, _) = pf_weights_exact(&d, Side::Positive, 3).unwrap().unwrap();
        let (m, _) = pf_weights_exact(&d, Side::Negative, 2).unwrap().unwrap();
        let b = WeightedDiagram::new(d.clone(), EdgeOrders::policy_only(), p.clone(), m.clone()).unwrap();
        assert_eq!(b.residual().unwrap(), 0.0);
        let back = AnyBundle::from_json(&b.to_json().unwrap()).unwrap();
        assert_eq!(back, AnyBundle::Exact(b));
        let bad = WeightFunction::new(Side::Positive, vec![vec![Q::from_int(1), Q::from_int(1)]]);
        assert!(WeightedDiagram::new(d, EdgeOrders::policy_only(), bad, m).is_err());
    }
}
