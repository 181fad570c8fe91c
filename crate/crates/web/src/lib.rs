//! Browser bindings for the deformation engine.
//!
//! The page owns a single [`Demo`]; positions and face indices cross the
//! boundary as flat typed arrays.

mod session;

use wasm_bindgen::prelude::*;

pub use session::{make_shape, Session};

fn js_err(e: darap::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Demo {
    session: Session,
}

#[wasm_bindgen]
impl Demo {
    /// `shape` is `icosphere`, `organic` or `torus`; `detail` runs from 1 to 5.
    #[wasm_bindgen(constructor)]
    pub fn new(shape: &str, detail: u32) -> Result<Demo, JsError> {
        let mesh = make_shape(shape, detail).map_err(js_err)?;
        Ok(Demo {
            session: Session::new(mesh).map_err(js_err)?,
        })
    }

    #[wasm_bindgen(getter)]
    pub fn n_vertices(&self) -> usize {
        self.session.current().n_vertices()
    }

    #[wasm_bindgen(getter)]
    pub fn n_faces(&self) -> usize {
        self.session.current().n_faces()
    }

    #[wasm_bindgen(getter)]
    pub fn lambda(&self) -> f64 {
        self.session.lambda()
    }

    #[wasm_bindgen(getter)]
    pub fn steps(&self) -> i32 {
        self.session.steps()
    }

    #[wasm_bindgen(getter)]
    pub fn loss(&self) -> f64 {
        self.session.last_loss()
    }

    #[wasm_bindgen(getter)]
    pub fn axis_deviation(&self) -> f64 {
        self.session.axis_deviation()
    }

    pub fn faces(&self) -> Vec<u32> {
        self.session
            .current()
            .faces()
            .iter()
            .flat_map(|f| f.map(|v| v as u32))
            .collect()
    }

    pub fn positions(&self) -> Vec<f32> {
        self.session
            .current()
            .vertices()
            .iter()
            .flat_map(|p| [p.x as f32, p.y as f32, p.z as f32])
            .collect()
    }

    pub fn reset(&mut self) {
        self.session.reset();
    }

    /// One-shot deformation towards the nearest-axis normals.
    pub fn deform_cubify(&mut self, lambda: f64) -> Result<(), JsError> {
        self.session.deform_cubify(lambda).map_err(js_err)
    }

    /// Re-deforms with the optimized targets at a new strength.
    pub fn set_lambda(&mut self, lambda: f64) -> Result<(), JsError> {
        self.session.set_lambda(lambda).map_err(js_err)
    }

    /// Runs `steps` optimizer updates and returns the loss afterwards.
    pub fn optimize(&mut self, steps: u32) -> Result<f64, JsError> {
        self.session.optimize(steps).map_err(js_err)
    }

    /// Face counts per area-ratio bin over `[0, 3]`, plus a final overflow bin.
    pub fn area_histogram(&self, bins: usize) -> Result<Vec<u32>, JsError> {
        let stats = self.session.area_ratios(bins.max(1)).map_err(js_err)?;
        Ok(stats.histogram.iter().map(|b| b.count as u32).collect())
    }

    /// `[mean, std]` of the per-face area ratios.
    pub fn area_stats(&self) -> Result<Vec<f64>, JsError> {
        let stats = self.session.area_ratios(1).map_err(js_err)?;
        Ok(vec![stats.mean, stats.std_dev])
    }
}
