//! Browser bindings: confirmation divergence, exponent bounds at a rate pair and the
//! entropy decomposition of an output tree. Every function takes and returns JSON text.

use macfb::bounds::{d_lb, BoundsConfig, BoundsContext, RatePair};
use macfb::channel::{validate_channel, ChannelModel, RawChannel};
use macfb::infotheory::{vl_entropy, OutputTree};
use wasm_bindgen::prelude::*;

fn channel(spec: &str) -> Result<ChannelModel, String> {
    let spec = spec.trim();
    if spec.starts_with('{') {
        let raw: RawChannel = serde_json::from_str(spec).map_err(|e| format!("line {} col {}: {e}", e.line(), e.column()))?;
        validate_channel(&raw, false).map_err(|e| e.to_string())
    } else {
        macfb::corpus::from_shorthand(spec).map_err(|e| e.to_string())
    }
}

fn to_json(v: impl serde::Serialize) -> Result<String, String> {
    let mut v = serde_json::to_value(v).map_err(|e| e.to_string())?;
    macfb::num::round_json(&mut v);
    serde_json::to_string_pretty(&v).map_err(|e| e.to_string())
}

/// `d_lb` and the optimal confirmation distribution.
pub fn dlb_json(spec: &str) -> Result<String, String> {
    to_json(d_lb(&channel(spec)?))
}

pub fn bounds_json(spec: &str, r1: f64, r2: f64) -> Result<String, String> {
    let ch = channel(spec)?;
    let ctx = BoundsContext::new(&ch, BoundsConfig::for_channel(&ch));
    to_json(ctx.report(&RatePair::new(r1, r2)))
}

pub fn vl_entropy_json(tree: &str) -> Result<String, String> {
    let t: OutputTree = serde_json::from_str(tree).map_err(|e| e.to_string())?;
    to_json(vl_entropy(&t).map_err(|e| e.to_string())?)
}

#[wasm_bindgen]
pub fn dlb(channel: &str) -> Result<String, JsValue> {
    dlb_json(channel).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn bounds(channel: &str, r1: f64, r2: f64) -> Result<String, JsValue> {
    bounds_json(channel, r1, r2).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn vlentropy(tree: &str) -> Result<String, JsValue> {
    vl_entropy_json(tree).map_err(|e| JsValue::from_str(&e))
}
