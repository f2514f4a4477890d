//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every exported function has a plain Rust counterpart in [`demo`] so the
//! numerics can be tested natively.

use wasm_bindgen::prelude::*;

pub mod demo {
    use qtomo::estimators::{parity_operator_kernel, EstimatorConfig};
    use qtomo::oscore::{make_state, DensityMatrix, StateSpec};
    use qtomo::recon::{reconstruct_matrix, Method};
    use qtomo::sampler::{sample_homodyne, sample_pauli, sample_spin, SamplerConfig};
    use qtomo::special::quadrature_wavefunctions;
    use qtomo::{Error, Result, C64};
    use std::f64::consts::PI;

    /// Parses either a state spec (`{"kind": ..., "dim": ...}`) or a state file
    /// (`{"dim": ..., "entries": ...}`).
    pub fn parse_state(json: &str) -> Result<DensityMatrix> {
        let v: serde_json::Value = serde_json::from_str(json)?;
        if v.get("kind").is_some() {
            let spec: StateSpec = serde_json::from_value(v)?;
            return make_state(&spec);
        }
        Ok(serde_json::from_value(v)?)
    }

    /// `W(x + i p)` on a `points x points` grid over `[-extent, extent]^2`,
    /// row-major with `p` along rows, in the convention `q = (a + a^dag)/2`
    /// where the vacuum is `(2/pi) exp(-2|alpha|^2)`.
    ///
    /// Uses `W(alpha) = (2/pi) Tr[rho D(alpha) P D(alpha)^dag]` with exact
    /// displaced-parity elements, so there is no truncation beyond the state's.
    pub fn wigner_map(rho: &DensityMatrix, extent: f64, points: usize) -> Result<Vec<f64>> {
        if points < 2 || !(extent > 0.0) {
            return Err(Error::InvalidSpec("a Wigner map needs extent > 0 and at least 2 points".into()));
        }
        let step = 2.0 * extent / (points - 1) as f64;
        let mut out = Vec::with_capacity(points * points);
        for i in 0..points {
            let p = -extent + step * i as f64;
            for j in 0..points {
                let x = -extent + step * j as f64;
                // the kernel at beta is 4 D(-beta) P D(-beta)^dag
                let k = parity_operator_kernel(rho.op(), C64::new(-x, -p));
                out.push(k.re / (2.0 * PI));
            }
        }
        Ok(out)
    }

    /// Homodyne density `<q|U rho U^dag|q>` of the quadrature at phase `phi`
    /// on `points` values of `q` in `[q_min, q_max]`.
    pub fn quadrature_density(rho: &DensityMatrix, phi: f64, q_min: f64, q_max: f64, points: usize) -> Result<Vec<f64>> {
        if points < 2 || !(q_max > q_min) {
            return Err(Error::InvalidSpec("a density grid needs q_max > q_min and at least 2 points".into()));
        }
        let d = rho.dim();
        let phases: Vec<C64> = (0..d).map(|n| C64::from_polar(1.0, -(n as f64) * phi)).collect();
        Ok((0..points)
            .map(|i| {
                let q = q_min + (q_max - q_min) * i as f64 / (points - 1) as f64;
                let psi = quadrature_wavefunctions(q, d);
                let mut acc = C64::new(0.0, 0.0);
                for m in 0..d {
                    for n in 0..d {
                        acc += rho.get(m, n) * phases[m] * phases[n].conj() * psi[m] * psi[n];
                    }
                }
                acc.re
            })
            .collect())
    }

    /// Samples `shots` records of `method` (homodyne, spin or pauli) from the
    /// state and returns the reconstructed-matrix JSON with a comparison
    /// against the true state.
    pub fn simulate_reconstruction(rho: &DensityMatrix, method: &str, shots: usize, seed: u64) -> Result<String> {
        let method: Method = method.parse()?;
        let cfg = SamplerConfig::with_seed(seed);
        let records = match method {
            Method::Homodyne => sample_homodyne(rho, shots, &cfg)?,
            Method::Spin => sample_spin(rho, shots, &cfg)?,
            Method::Pauli => sample_pauli(rho, shots.div_ceil(3), &cfg)?,
            other => {
                return Err(Error::InvalidSpec(format!("the demo reconstructs homodyne, spin or pauli, not {other}")))
            }
        };
        let mut m = reconstruct_matrix(&records, method, &EstimatorConfig::with_dim(rho.dim()))?;
        m.compare_to(rho)?;
        m.to_json()
    }
}

fn js(e: qtomo::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = wignerMap)]
pub fn wigner_map(state_json: &str, extent: f64, points: usize) -> Result<Vec<f64>, JsError> {
    let rho = demo::parse_state(state_json).map_err(js)?;
    demo::wigner_map(&rho, extent, points).map_err(js)
}

#[wasm_bindgen(js_name = quadratureDensity)]
pub fn quadrature_density(state_json: &str, phi: f64, q_min: f64, q_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    let rho = demo::parse_state(state_json).map_err(js)?;
    demo::quadrature_density(&rho, phi, q_min, q_max, points).map_err(js)
}

#[wasm_bindgen(js_name = reconstruct)]
pub fn reconstruct(state_json: &str, method: &str, shots: usize, seed: u64) -> Result<String, JsError> {
    let rho = demo::parse_state(state_json).map_err(js)?;
    demo::simulate_reconstruction(&rho, method, shots, seed).map_err(js)
}
