//! Three operations of the core crate exposed to JavaScript.
//!
//! Every export takes a JSON string and returns a JSON string, either the
//! result object or `{"error": {"code", "message"}}`, so the page never has
//! to catch exceptions and the same functions run in host tests.

use serde_json::{json, Value};
use smooth_renorm::error::Error;
use smooth_renorm::indexed::NormPair;
use smooth_renorm::pair_norm::{membership_u, near_peak_set, slack_xi, SmoothNorm};
use smooth_renorm::space_operators::{
    talagrand_ordinal, talagrand_pair, verify_talagrand, OrdinalFunction,
};
use wasm_bindgen::prelude::wasm_bindgen;

fn parse<T: serde::de::DeserializeOwned>(input: &str) -> Result<T, Error> {
    serde_json::from_str(input).map_err(|e| Error::Schema(e.to_string()))
}

fn respond(result: Result<Value, Error>) -> String {
    let v = result.unwrap_or_else(|e| json!({"error": {"code": e.code(), "message": e.to_string()}}));
    v.to_string()
}

pub fn eval_value(input: &str) -> Result<Value, Error> {
    let p: NormPair = parse(input)?;
    let e = SmoothNorm::default().evaluate(&p);
    let in_u = membership_u(&p);
    Ok(json!({
        "value": e.value,
        "route": e.route,
        "in_u": in_u,
        "xi": if in_u { Some(slack_xi(&p)) } else { None },
        "near_peak_set": if in_u { Some(near_peak_set(&p)) } else { None },
        "weights": e.solution.map(|s| s.weights),
    }))
}

pub fn gradient_value(input: &str) -> Result<Value, Error> {
    let p: NormPair = parse(input)?;
    let norm = SmoothNorm::default();
    let g = norm.smooth_norm_gradient(&p)?;
    Ok(json!({"value": norm.smooth_norm(&p), "df": g.df, "dx": g.dx}))
}

pub fn talagrand_value(input: &str) -> Result<Value, Error> {
    let f: OrdinalFunction = parse(input)?;
    let witness = verify_talagrand(&f)?;
    let tf = talagrand_ordinal(&f);
    let image = tf.get(&witness);
    Ok(json!({
        "tf": tf,
        "witness": witness.to_string(),
        "image_at_witness": image,
        "norm": SmoothNorm::default().smooth_norm(&talagrand_pair(&f)),
    }))
}

/// Smooth norm of `{"f": {...}, "x": {...}}`.
#[wasm_bindgen]
pub fn norm_eval(input: &str) -> String {
    respond(eval_value(input))
}

/// Gradient of the smooth norm at a pair in U(L).
#[wasm_bindgen]
pub fn norm_grad(input: &str) -> String {
    respond(gradient_value(input))
}

/// `Tf` and the norming index where it is nonzero, for `{"entries": [[cnf, v], ...]}`.
#[wasm_bindgen]
pub fn talagrand(input: &str) -> String {
    respond(talagrand_value(input))
}
