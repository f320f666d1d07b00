//! JSON codecs for measures, tensors, functionals, chaos expansions and
//! random fields.
//!
//! Exact scalars are written as `"p/q"` strings; float scalars as numbers.
//! Either form is accepted on input, and decimal literals parse exactly in
//! exact mode. Tensors are flat row-major arrays.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};

use crate::chaos::ChaosExpansion;
use crate::error::{Error, Result};
use crate::field::RandomField;
use crate::measure::FiniteMeasure;
use crate::poly::PolyFunctional;
use crate::scalar::{format_rational, parse_rational, Rational, Scalar};
use crate::tensor::{tensor_len, TensorFn};

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

/// Scalars with a JSON encoding.
pub trait JsonScalar: Scalar {
    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Result<Self>;
}

fn literal(v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        other => Err(parse_err(format!("expected a number or \"p/q\" string, found {other}"))),
    }
}

impl JsonScalar for Rational {
    fn to_json(&self) -> Value {
        Value::String(format_rational(self))
    }

    fn from_json(v: &Value) -> Result<Self> {
        parse_rational(&literal(v)?)
    }
}

impl JsonScalar for f64 {
    fn to_json(&self) -> Value {
        // non-finite values have no JSON number form
        serde_json::Number::from_f64(*self).map_or(Value::Null, Value::Number)
    }

    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::Number(n) => n.as_f64().ok_or_else(|| parse_err(format!("bad number {n}"))),
            Value::String(s) => Ok(Scalar::to_f64(&parse_rational(s)?)),
            other => Err(parse_err(format!("expected a number or \"p/q\" string, found {other}"))),
        }
    }
}

fn field<'a>(obj: &'a Value, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| parse_err(format!("missing field `{key}`")))
}

fn usize_field(obj: &Value, key: &str) -> Result<usize> {
    field(obj, key)?
        .as_u64()
        .map(|v| v as usize)
        .ok_or_else(|| parse_err(format!("field `{key}` must be a nonnegative integer")))
}

fn scalars<S: JsonScalar>(v: &Value) -> Result<Vec<S>> {
    v.as_array()
        .ok_or_else(|| parse_err("expected an array of scalars"))?
        .iter()
        .map(S::from_json)
        .collect()
}

fn values_json<S: JsonScalar>(t: &TensorFn<S>) -> Value {
    Value::Array(t.values().iter().map(S::to_json).collect())
}

fn flat_tensor<S: JsonScalar>(d: usize, order: usize, v: &Value) -> Result<TensorFn<S>> {
    let values = if order == 0 && !v.is_array() {
        vec![S::from_json(v)?]
    } else {
        scalars(v)?
    };
    let want = tensor_len(d, order).ok_or_else(|| parse_err("tensor too large"))?;
    if values.len() != want {
        return Err(parse_err(format!(
            "order-{order} tensor over {d} atoms needs {want} values, found {}",
            values.len()
        )));
    }
    TensorFn::new(d, order, values)
}

fn order_map(v: &Value, what: &str) -> Result<BTreeMap<usize, Value>> {
    let obj = v.as_object().ok_or_else(|| parse_err(format!("`{what}` must be an object")))?;
    obj.iter()
        .map(|(k, v)| {
            let n = k
                .parse::<usize>()
                .map_err(|_| parse_err(format!("`{what}` key `{k}` is not an order")))?;
            Ok((n, v.clone()))
        })
        .collect()
}

fn keyed(entries: impl IntoIterator<Item = (usize, Value)>) -> Value {
    let mut map = Map::new();
    for (k, v) in entries {
        map.insert(k.to_string(), v);
    }
    Value::Object(map)
}

pub fn measure_to_json<S: JsonScalar>(rho: &FiniteMeasure<S>) -> Value {
    json!({
        "d": rho.d(),
        "mode": S::MODE.as_str(),
        "weights": rho.weights().iter().map(S::to_json).collect::<Vec<_>>(),
    })
}

/// Reads a measure in the requested scalar mode. The file's `mode` field,
/// if present, must name a known mode but does not change how values parse.
pub fn measure_from_json<S: JsonScalar>(v: &Value) -> Result<FiniteMeasure<S>> {
    if let Some(mode) = v.get("mode") {
        let mode = mode.as_str().ok_or_else(|| parse_err("`mode` must be a string"))?;
        mode.parse::<crate::scalar::Mode>()?;
    }
    let weights: Vec<S> = scalars(field(v, "weights")?)?;
    if let Some(d) = v.get("d") {
        let d = d.as_u64().ok_or_else(|| parse_err("`d` must be an integer"))? as usize;
        if d != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: weights.len(),
            });
        }
    }
    FiniteMeasure::new(weights)
}

pub fn tensor_to_json<S: JsonScalar>(t: &TensorFn<S>) -> Value {
    json!({"order": t.order(), "d": t.d(), "values": values_json(t)})
}

pub fn tensor_from_json<S: JsonScalar>(v: &Value) -> Result<TensorFn<S>> {
    flat_tensor(usize_field(v, "d")?, usize_field(v, "order")?, field(v, "values")?)
}

/// `{"d": d, "terms": {"0": c, "1": [...], "2": [...]}}`; term `m` is a
/// flat tensor of order `m`.
pub fn poly_to_json<S: JsonScalar>(f: &PolyFunctional<S>) -> Value {
    let terms = f.terms().iter().map(|(m, t)| {
        let v = if *m == 0 { t.as_scalar().to_json() } else { values_json(t) };
        (*m, v)
    });
    json!({"d": f.d(), "terms": keyed(terms)})
}

pub fn poly_from_json<S: JsonScalar>(v: &Value) -> Result<PolyFunctional<S>> {
    let d = usize_field(v, "d")?;
    let terms = order_map(field(v, "terms")?, "terms")?
        .into_iter()
        .map(|(m, t)| flat_tensor(d, m, &t))
        .collect::<Result<Vec<_>>>()?;
    PolyFunctional::new(d, terms)
}

/// `{"d": d, "f0": c, "kernels": {"1": [...], ...}}`.
pub fn chaos_to_json<S: JsonScalar>(ce: &ChaosExpansion<S>) -> Value {
    let kernels = ce.kernels().iter().map(|(n, k)| (*n, values_json(k)));
    json!({"d": ce.d(), "f0": ce.f0().to_json(), "kernels": keyed(kernels)})
}

pub fn chaos_from_json<S: JsonScalar>(v: &Value) -> Result<ChaosExpansion<S>> {
    let d = usize_field(v, "d")?;
    let f0 = S::from_json(field(v, "f0")?)?;
    let kernels = match v.get("kernels") {
        Some(k) => order_map(k, "kernels")?
            .into_iter()
            .map(|(n, t)| flat_tensor(d, n, &t))
            .collect::<Result<Vec<_>>>()?,
        None => Vec::new(),
    };
    ChaosExpansion::new(d, f0, kernels)
}

/// Like a functional with an extra leading `x` axis: term `n` is a flat
/// tensor of order `n + 1`.
pub fn field_to_json<S: JsonScalar>(h: &RandomField<S>) -> Value {
    let terms = h.terms().iter().map(|(n, t)| (*n, values_json(t)));
    json!({"d": h.d(), "terms": keyed(terms)})
}

pub fn field_from_json<S: JsonScalar>(v: &Value) -> Result<RandomField<S>> {
    let d = usize_field(v, "d")?;
    let terms = order_map(field(v, "terms")?, "terms")?
        .into_iter()
        .map(|(n, t)| flat_tensor(d, n + 1, &t))
        .collect::<Result<Vec<_>>>()?;
    RandomField::new(d, terms)
}

pub fn parse(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))
}
