//! Browser bindings: pick a built-in bundle, draw its surface, renormalize it,
//! and watch the cone contract.

use brattelikit::bundle::{AnyBundle, WeightedDiagram};
use brattelikit::cone::cone_diameters;
use brattelikit::examples;
use brattelikit::renorm::renorm_times;
use brattelikit::surface::{build_surface_with, export_svg, renorm_map};
use brattelikit::Scalar;
use wasm_bindgen::prelude::*;

fn bundle(name: &str) -> Result<AnyBundle, String> {
    examples::build(name).map_err(|e| e.to_string())
}

fn svg_of<S: Scalar>(b: &WeightedDiagram<S>, depth: usize, k: usize) -> Result<String, String> {
    let plus = depth.max(k + 1).min(b.depth_plus());
    let minus = 2.min(b.depth_minus());
    let mut s = build_surface_with(b, plus, minus).map_err(|e| e.to_string())?;
    if k > 0 {
        s = renorm_map(&s, b, k).map_err(|e| e.to_string())?;
    }
    Ok(export_svg(&s))
}

/// SVG of the rectangle model after `k` renormalization steps.
pub fn surface_svg_inner(name: &str, depth: usize, k: usize) -> Result<String, String> {
    match bundle(name)? {
        AnyBundle::Float(b) => svg_of(&b, depth, k),
        AnyBundle::Exact(b) => svg_of(&b, depth, k),
    }
}

/// `[{k, t, levelSum}]` as JSON.
pub fn renorm_times_inner(name: &str, depth: usize) -> Result<String, String> {
    let b = bundle(name)?.to_float();
    let s = renorm_times(&b.diagram, &b.plus, depth.min(b.depth_plus())).map_err(|e| e.to_string())?;
    Ok(s.to_json().to_string())
}

/// Hilbert diameters of the positive cone, depth `0..=depth`, as JSON.
pub fn cone_diameters_inner(name: &str, depth: usize) -> Result<String, String> {
    let b = bundle(name)?;
    let d = cone_diameters(b.diagram(), depth).map_err(|e| e.to_string())?;
    let d: Vec<Option<f64>> = d.into_iter().map(|x| x.is_finite().then_some(x)).collect();
    serde_json::to_string(&d).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn example_names() -> String {
    serde_json::to_string(&examples::NAMES).expect("strings")
}

#[wasm_bindgen]
pub fn surface_svg(name: &str, depth: usize, k: usize) -> Result<String, JsValue> {
    surface_svg_inner(name, depth, k).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn renormalization_times(name: &str, depth: usize) -> Result<String, JsValue> {
    renorm_times_inner(name, depth).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn hilbert_diameters(name: &str, depth: usize) -> Result<String, JsValue> {
    cone_diameters_inner(name, depth).map_err(|e| JsValue::from_str(&e))
}
