//! First-order (Born) overlap matrix.

use super::potential::PotentialSpec;
use super::solver::CMat;
use crate::quadrature::{GaussRule, RectRule};
use crate::spectrum::RibbonGeometry;
use crate::waves::normalized_basis;
use crate::{Error, Result, C64};

/// Relative change allowed when the quadrature is doubled.
pub const BORN_QUAD_TOL: f64 = 1e-8;

/// Overlaps `M[(k,τ)][(j,θ)] = ∫ P 𝐰_k^τ · conj(𝐰_j^θ)` over the support of `P`,
/// with `(k,τ)` the incoming and `(j,θ)` the outgoing index.
///
/// The first-order scattering matrix is `S = I − iδM + O(δ²)`.
pub fn overlap(p: &PotentialSpec, geom: &RibbonGeometry, n: usize, eps: f64, panels_per_unit: usize) -> Result<CMat> {
    let waves = normalized_basis(geom, n, eps)?;
    let nw = waves.len();
    let mut m = CMat::zeros(nw, nw);
    let Some((xl, xr)) = p.x_support() else {
        return Ok(m);
    };
    let px = (((xr - xl) * panels_per_unit as f64).ceil() as usize).max(1);
    let py = ((geom.width * panels_per_unit as f64).ceil() as usize).max(1);
    let rule = RectRule::new(
        GaussRule::composite(px, 8, xl, xr),
        GaussRule::composite(py, 8, 0.0, geom.width),
    );
    let mut vals = vec![[C64::new(0.0, 0.0); 4]; nw];
    for (x, y, w) in rule.points() {
        let pv = p.eval(x, y);
        if pv == 0.0 {
            continue;
        }
        for (k, (_, _, f)) in waves.iter().enumerate() {
            vals[k] = f.eval(x, y);
        }
        let wp = w * pv;
        for a in 0..nw {
            for b in 0..nw {
                let dot: C64 = (0..4).map(|c| vals[a][c] * vals[b][c].conj()).sum();
                m[(a, b)] += dot * wp;
            }
        }
    }
    Ok(m)
}

/// Overlap matrix with a quadrature-doubling convergence check.
pub fn born_overlap(p: &PotentialSpec, geom: &RibbonGeometry, n: usize, eps: f64) -> Result<CMat> {
    let coarse = overlap(p, geom, n, eps, 4)?;
    let fine = overlap(p, geom, n, eps, 8)?;
    let scale = fine.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let change = (&fine - &coarse).iter().map(|z| z.norm()).fold(0.0, f64::max) / scale;
    if change > BORN_QUAD_TOL {
        return Err(Error::QuadratureNotConverged { change });
    }
    Ok(fine)
}

/// First-order scattering matrix `s¹` with `S = I + iδs¹ + O(δ²)`, i.e. `−M`.
/// Hermitian for real `P` and independent of δ.
pub fn born_smatrix(p: &PotentialSpec, geom: &RibbonGeometry, n: usize, eps: f64) -> Result<CMat> {
    Ok(-born_overlap(p, geom, n, eps)?)
}
