//! Browser front end: document profiles, ranking and perturbation curves.

pub mod api;

use wasm_bindgen::prelude::*;

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn profile(text: &str, beta: f64) -> Result<String, JsValue> {
    js(api::profile(text, beta))
}

#[wasm_bindgen]
pub fn rank(corpus: &str, query: &str, form: &str) -> Result<String, JsValue> {
    js(api::rank(corpus, query, form))
}

#[wasm_bindgen]
pub fn curves(corpus: &str, doc_id: &str, word: &str, form: &str, max_k: u32) -> Result<String, JsValue> {
    js(api::curves(corpus, doc_id, word, form, max_k))
}
