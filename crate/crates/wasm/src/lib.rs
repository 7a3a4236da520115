//! Browser bindings for the interactive dispatch demo. Each export takes and
//! returns JSON strings; the logic lives in [`demo`] and runs host-side in
//! tests.

mod demo;

use wasm_bindgen::prelude::wasm_bindgen;

/// Greedy repositioning route over a synthetic demand field.
#[wasm_bindgen]
pub fn route_demo(params_json: &str) -> String {
    demo::route_demo(params_json)
}

/// Three-layer allocation network solved on a seeded random snapshot.
#[wasm_bindgen]
pub fn allocation_demo(params_json: &str) -> String {
    demo::allocation_demo(params_json)
}

/// Full pipeline against both baselines on one seeded order stream.
#[wasm_bindgen]
pub fn simulate_demo(params_json: &str) -> String {
    demo::simulate_demo(params_json)
}
