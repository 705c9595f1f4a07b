//! Scalar expressions in `x` and `y` (meval syntax, with `pi` and `e`).

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use cdr_core::models::ScalarFn;
use serde::{Deserialize, Deserializer};

thread_local! {
    static BUILTINS: meval::Context<'static> = meval::Context::new();
}

#[derive(Clone)]
pub struct Expression {
    text: String,
    expr: meval::Expr,
}

impl Expression {
    pub fn parse(text: &str) -> Result<Self, String> {
        let expr = meval::Expr::from_str(text).map_err(|e| format!("cannot parse expression `{text}`: {e}"))?;
        let out = Self { text: text.to_string(), expr };
        // unknown variables and functions only surface on evaluation
        out.try_eval(0.5, 0.5).map_err(|e| format!("cannot evaluate expression `{text}`: {e}"))?;
        Ok(out)
    }

    pub fn constant(c: f64) -> Self {
        Self::parse(&format!("{c:?}")).expect("a float literal parses")
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    fn try_eval(&self, x: f64, y: f64) -> Result<f64, meval::Error> {
        BUILTINS.with(|ctx| self.expr.eval_with_context(([("x", x), ("y", y)], ctx)))
    }

    pub fn eval(&self, p: [f64; 2]) -> f64 {
        self.try_eval(p[0], p[1]).unwrap_or(f64::NAN)
    }

    pub fn to_fn(&self) -> ScalarFn {
        let e = self.clone();
        Arc::new(move |p| e.eval(p))
    }
}

impl fmt::Debug for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expression({:?})", self.text)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawScalar {
    Int(i64),
    Number(f64),
    Text(String),
}

impl RawScalar {
    fn parse(self) -> Result<Expression, String> {
        match self {
            Self::Int(v) => Ok(Expression::constant(v as f64)),
            Self::Number(v) => Ok(Expression::constant(v)),
            Self::Text(t) => Expression::parse(&t),
        }
    }
}

impl<'de> Deserialize<'de> for Expression {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        RawScalar::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Scalar or two-component proxy field.
#[derive(Clone, Debug)]
pub enum FieldValue {
    Scalar(Expression),
    Vector([Expression; 2]),
}

impl FieldValue {
    pub fn zero() -> Self {
        Self::Scalar(Expression::constant(0.0))
    }

    pub fn eval(&self, p: [f64; 2]) -> [f64; 2] {
        match self {
            Self::Scalar(e) => [e.eval(p), 0.0],
            Self::Vector([a, b]) => [a.eval(p), b.eval(p)],
        }
    }
}

impl<'de> Deserialize<'de> for FieldValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Vector([RawScalar; 2]),
            Scalar(RawScalar),
        }
        let err = serde::de::Error::custom;
        Ok(match Raw::deserialize(d)? {
            Raw::Vector([a, b]) => Self::Vector([a.parse().map_err(err)?, b.parse().map_err(err)?]),
            Raw::Scalar(s) => Self::Scalar(s.parse().map_err(err)?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_with_builtins() {
        let e = Expression::parse("cos(pi*x) + y^2").unwrap();
        assert!((e.eval([1.0, 2.0]) - 3.0).abs() < 1e-15);
        assert!(Expression::parse("z + 1").is_err());
        assert!(Expression::parse("1 +").is_err());
        assert_eq!(Expression::constant(0.25).eval([9.0, 9.0]), 0.25);
    }
}
