//! WebAssembly bindings for the static page in `www/`.
//!
//! Every export is a plain function over numbers and flat arrays so the
//! page can draw straight onto a canvas.

use rankone::datagen::{generate, GenSpec, OutlierClass};
use rankone::hull::{eval_rhs, phi_loss, LossParams, RankOneSet, Sidedness};
use wasm_bindgen::prelude::*;

/// Samples `φ(1 − m)` together with the hinge and 0–1 losses over margins
/// `m ∈ [lo, hi]`. Output is `[m, φ, hinge, zero_one]` per sample.
#[wasm_bindgen]
pub fn phi_curve(d: f64, lambda: f64, lo: f64, hi: f64, samples: usize) -> Result<Vec<f64>, String> {
    let params = LossParams::new(d, lambda).map_err(|e| e.to_string())?;
    let samples = samples.clamp(2, 10_000);
    let mut out = Vec::with_capacity(4 * samples);
    for i in 0..samples {
        let m = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
        out.push(m);
        out.push(phi_loss(1.0 - m, &params).map_err(|e| e.to_string())?);
        out.push(lambda * (1.0 - m).max(0.0));
        out.push(if m <= 0.0 { lambda } else { 0.0 });
    }
    Ok(out)
}

/// Hull right-hand side for a single point.
#[wasm_bindgen]
pub fn hull_rhs(d: Vec<f64>, x: Vec<f64>, z: Vec<f64>, one_sided: bool) -> Result<f64, String> {
    let side = if one_sided { Sidedness::OneSided } else { Sidedness::TwoSided };
    let set = RankOneSet::new(d, side).map_err(|e| e.to_string())?;
    eval_rhs(&set, &x, &z).map_err(|e| e.to_string())
}

/// Right-hand side over a `res × res` grid of `(z₁, z₂) ∈ [0,1]²` for a
/// fixed two-dimensional `x`, row-major with `z₂` along rows. Infinite
/// values come back as `+∞`.
#[wasm_bindgen]
pub fn hull_rhs_heatmap(d: Vec<f64>, x: Vec<f64>, res: usize, one_sided: bool) -> Result<Vec<f64>, String> {
    if d.len() != 2 || x.len() != 2 {
        return Err("heatmap needs two-dimensional d and x".into());
    }
    let res = res.clamp(2, 512);
    let side = if one_sided { Sidedness::OneSided } else { Sidedness::TwoSided };
    let set = RankOneSet::new(d, side).map_err(|e| e.to_string())?;
    let step = 1.0 / (res - 1) as f64;
    let mut out = Vec::with_capacity(res * res);
    for r in 0..res {
        for c in 0..res {
            let z = [c as f64 * step, r as f64 * step];
            out.push(eval_rhs(&set, &x, &z).map_err(|e| e.to_string())?);
        }
    }
    Ok(out)
}

/// Two-feature synthetic instance. Output is `[f₁, f₂, label]` per point,
/// followed by the Bayes direction `(d₁, d₂)`.
#[wasm_bindgen]
pub fn scatter(class: &str, n: usize, sigma: f64, seed: u32) -> Result<Vec<f64>, String> {
    let outlier_class: OutlierClass = class.parse().map_err(|e: rankone::datagen::DataError| e.to_string())?;
    let spec = GenSpec { outlier_class, n: n.clamp(1, 20_000), p: 2, sigma, seed: seed.into() };
    let inst = generate(&spec).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(3 * inst.dataset.n() + 2);
    for (f, &y) in inst.dataset.features.iter().zip(&inst.dataset.labels) {
        out.extend_from_slice(&[f[0], f[1], y]);
    }
    out.extend_from_slice(&inst.direction);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_curve_shape() {
        let v = phi_curve(1.0, 1.0, -2.0, 2.0, 5).unwrap();
        assert_eq!(v.len(), 20);
        // m = −2 → slack 3 ≥ √(λ/d): saturated.
        assert_eq!(v[1], 1.0);
        // m = 2 → slack −1: zero loss.
        assert_eq!(v[17], 0.0);
        assert!(phi_curve(0.0, 1.0, 0.0, 1.0, 3).is_err());
    }

    #[test]
    fn rhs_matches_core() {
        let v = hull_rhs(vec![1.0, 1.0], vec![0.5, -0.2], vec![0.3, 0.1], false).unwrap();
        assert!((v - 0.225).abs() < 1e-12);
        let grid = hull_rhs_heatmap(vec![1.0, 1.0], vec![0.3, 0.1], 4, false).unwrap();
        assert_eq!(grid.len(), 16);
        assert!(grid[0].is_infinite());
    }

    #[test]
    fn scatter_layout() {
        let v = scatter("clustered", 10, 0.5, 1).unwrap();
        assert_eq!(v.len(), 32);
        assert!(v.chunks(3).take(10).all(|c| c[2] == 1.0 || c[2] == -1.0));
        assert!(scatter("wild", 10, 0.5, 1).is_err());
    }
}
