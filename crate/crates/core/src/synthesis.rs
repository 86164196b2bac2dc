//! Inverse design of a small potential with a trapped mode at `ω_N − ε`.
//!
//! The potential is `P = Φ + Σ_α η^α Ψ^α`, built from y-symmetric Gaussian bumps.
//! Writing `S = I + iδs`, the first-order part of `s` is linear in `P`:
//! `s_α(δP) = m_α(P) + O(δ)` with the moments
//!
//! ```text
//! m_α(P) = −∫ P υ_α,   υ_α = Ξ(𝐰_j^τ · conj 𝐰_N^+),   υ_(N,+,Re) = |𝐰_N^+|²,
//! ```
//!
//! so `Φ` is fixed by `m(Φ) = e_(N,+,Re)`, the `Ψ^β` by `m_α(Ψ^β) = δ_αβ`, and
//! `η` is then tuned by iterating on the full solver until `s_α = e_α` exactly.
//! With `δ = sin σ` and the off-target entries gone, `S_†† + dΥ` is singular.

use crate::quadrature::{GaussRule, RectRule};
use crate::scattering::criterion::trapped_criterion;
use crate::scattering::solver::{channel_index, solve_scattering, SolverConfig};
use crate::scattering::{GaussianTerm, PotentialSpec};
use crate::spectrum::{self, RibbonGeometry};
use crate::waves::{make_wave, oscillatory_norm, Family, ModeTerm, Regime, SpinorField, Tau, WaveLabel};
use crate::{Error, Result, C64};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Sign relating moments to overlaps: `s¹ = BORN_SIGN · ∫P 𝐰_in · conj 𝐰_out`.
pub const BORN_SIGN: f64 = -1.0;
/// Relative singular-value cutoff for least-norm solves.
pub const SVD_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Xi {
    Re,
    Im,
}

impl Xi {
    pub fn apply(self, z: C64) -> f64 {
        match self {
            Xi::Re => z.re,
            Xi::Im => z.im,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndexEntry {
    pub j: usize,
    pub tau: Tau,
    pub xi: Xi,
}

impl std::fmt::Display for IndexEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{:?})", self.j, self.tau, self.xi)
    }
}

/// The design conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisIndexSet {
    #[serde(rename = "N")]
    pub n: usize,
    pub ind_s: Vec<usize>,
    pub entries: Vec<IndexEntry>,
}

impl SynthesisIndexSet {
    pub fn new(n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidParameter("N must be at least 1".into()));
        }
        let ind_s: Vec<usize> = if n.is_multiple_of(2) {
            (1..n).step_by(2).collect()
        } else {
            (2..n.saturating_sub(1)).step_by(2).collect()
        };
        let mut entries = Vec::with_capacity(4 * ind_s.len() + 3);
        for &j in &ind_s {
            for tau in Tau::both() {
                for xi in [Xi::Re, Xi::Im] {
                    entries.push(IndexEntry { j, tau, xi });
                }
            }
        }
        entries.push(IndexEntry {
            j: n,
            tau: Tau::Minus,
            xi: Xi::Re,
        });
        entries.push(IndexEntry {
            j: n,
            tau: Tau::Minus,
            xi: Xi::Im,
        });
        entries.push(IndexEntry {
            j: n,
            tau: Tau::Plus,
            xi: Xi::Re,
        });
        Ok(SynthesisIndexSet { n, ind_s, entries })
    }

    /// Add the lower-mode conditions that symmetry does not settle but the index
    /// set leaves out, so that T1 and unitarity force every off-target entry to zero.
    pub fn completed(mut self, geom: &RibbonGeometry) -> Result<Self> {
        let tab = spectrum::thresholds(geom, self.n)?;
        let mn = tab.entries[self.n - 1].j;
        let missing: Vec<usize> = (1..self.n)
            .filter(|&j| (mn - tab.entries[j - 1].j).rem_euclid(2) == 0 && !self.ind_s.contains(&j))
            .collect();
        let tail = self.entries.split_off(self.entries.len() - 3);
        for j in missing {
            for tau in Tau::both() {
                for xi in [Xi::Re, Xi::Im] {
                    self.entries.push(IndexEntry { j, tau, xi });
                }
            }
        }
        self.entries.extend(tail);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn target(&self) -> usize {
        self.entries.len() - 1
    }

    /// Entries that can be nonzero for potentials even about `y = L/2`. The others
    /// couple transverse labels of opposite parity and vanish identically.
    pub fn active(&self, geom: &RibbonGeometry) -> Result<Vec<bool>> {
        let tab = spectrum::thresholds(geom, self.n)?;
        let mn = tab.entries[self.n - 1].j;
        Ok(self
            .entries
            .iter()
            .map(|e| (mn - tab.entries[e.j - 1].j).rem_euclid(2) == 0)
            .collect())
    }
}

/// Evaluable `υ_α`.
#[derive(Clone)]
pub struct Upsilon {
    pub alpha: IndexEntry,
    wj: SpinorField,
    wn: SpinorField,
}

impl Upsilon {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let a = self.wj.eval(x, y);
        let b = self.wn.eval(x, y);
        let dot: C64 = (0..4).map(|c| a[c] * b[c].conj()).sum();
        self.alpha.xi.apply(dot)
    }
}

/// `𝐰_N^±` at `ε`, or their `ε → 0` limits `(w_N^0 ± i w_N^1)/𝒩` when `ε = 0`.
fn exponential_pair(geom: &RibbonGeometry, n: usize, eps: f64) -> Result<[SpinorField; 2]> {
    if eps > 0.0 {
        let regime = Regime::Near { n, eps };
        let p = make_wave(
            WaveLabel::new(Family::NearExpNormalized, n, Some(Tau::Plus)),
            geom,
            regime,
        )?;
        let m = make_wave(
            WaveLabel::new(Family::NearExpNormalized, n, Some(Tau::Minus)),
            geom,
            regime,
        )?;
        return Ok([p, m]);
    }
    let regime = Regime::Near { n, eps: 0.0 };
    let w0 = make_wave(WaveLabel::new(Family::Threshold0, n, None), geom, regime)?;
    let w1 = make_wave(WaveLabel::new(Family::Threshold1, n, None), geom, regime)?;
    let t = spectrum::threshold(geom, n)?;
    let c = 1.0 / (2.0 * (geom.width / t.omega).sqrt());
    let i = C64::new(0.0, 1.0);
    Ok([
        SpinorField::combine(&[(C64::new(c, 0.0), &w0), (i * c, &w1)]),
        SpinorField::combine(&[(C64::new(c, 0.0), &w0), (-i * c, &w1)]),
    ])
}

/// `υ_α` built from the wave definitions; `eps = 0` selects the threshold limit.
pub fn upsilon(alpha: IndexEntry, geom: &RibbonGeometry, n: usize, eps: f64) -> Result<Upsilon> {
    let [wp, wm] = exponential_pair(geom, n, eps)?;
    let wj = if alpha.j == n {
        match alpha.tau {
            Tau::Plus => wp.clone(),
            Tau::Minus => wm,
        }
    } else if eps == 0.0 {
        // At the threshold itself mode N is not propagating, so the lower modes
        // are built directly.
        let tab = spectrum::thresholds(geom, n)?;
        let (w, kj) = (tab.entries[n - 1].omega, tab.entries[alpha.j - 1].kappa);
        let lam = ((w - kj) * (w + kj)).sqrt();
        let term = ModeTerm::free(kj, C64::new(alpha.tau.sign() * lam, 0.0), w)
            .scaled(C64::new(oscillatory_norm(geom.width, lam, w), 0.0));
        SpinorField::from_terms(vec![term], w, *geom)
    } else {
        let t = spectrum::threshold(geom, n)?;
        make_wave(
            WaveLabel::new(Family::OscillatoryNormalized, alpha.j, Some(alpha.tau)),
            geom,
            Regime::Omega(t.omega - eps),
        )?
    };
    Ok(Upsilon { alpha, wj, wn: wp })
}

/// Transverse factor `a_j(y)` of the threshold-limit products.
pub fn a_j(geom: &RibbonGeometry, n: usize, j: usize, y: f64) -> Result<f64> {
    let tab = spectrum::thresholds(geom, n)?;
    let (tn, tj) = (&tab.entries[n - 1], &tab.entries[j - 1]);
    let lambda = ((tn.omega - tj.omega) * (tn.omega + tj.omega)).sqrt();
    Ok(tn.omega / (4.0 * geom.width * lambda) * ((tn.kappa - tj.kappa) * y).cos())
}

/// The printed closed forms of the threshold-limit products (`ε = 0`).
pub fn closed_form(alpha: IndexEntry, geom: &RibbonGeometry, n: usize, x: f64, y: f64) -> Result<f64> {
    let tab = spectrum::thresholds(geom, n)?;
    let tn = &tab.entries[n - 1];
    let (w, l, s) = (tn.omega, geom.width, tn.kappa.signum());
    if alpha.j == n {
        return Ok(match (alpha.tau, alpha.xi) {
            (Tau::Plus, _) => w / l * (2.0 * x * x - 2.0 * s / w * x + 1.0 / (w * w) + 2.0),
            (Tau::Minus, Xi::Re) => w / l * (-4.0 * x * x + 4.0 * s / w * x - 2.0 / (w * w) + 4.0),
            // Printed for 𝐰_N^+ · conj 𝐰_N^−; υ carries the conjugate.
            (Tau::Minus, Xi::Im) => -w / l * (8.0 * x - 4.0 * s / w),
        });
    }
    let tj = &tab.entries[alpha.j - 1];
    let lam = ((w - tj.omega) * (w + tj.omega)).sqrt();
    let (kj, sj, t) = (tj.kappa, tj.kappa.signum(), alpha.tau.sign());
    let c1 = 1.0 + sj * kj / w + t * lam / (w * w);
    let c2 = sj * t * lam / w - kj / w;
    let c3 = -sj * t * lam / w;
    let c4 = 1.0 + sj * kj / w;
    let a = a_j(geom, n, alpha.j, y)?;
    let (cs, sn) = ((lam * x).cos(), (lam * x).sin());
    Ok(match alpha.xi {
        Xi::Re => a * ((c1 + x * c3) * cs + t * (c2 + x * c4) * sn),
        Xi::Im => a * ((c2 + x * c4) * cs - t * (c1 + x * c3) * sn),
    })
}

/// Quadrature rule over `[x0, x1] × [0, L]` with `per_unit` panels per unit length.
pub fn box_rule(geom: &RibbonGeometry, x0: f64, x1: f64, per_unit: usize) -> RectRule {
    let px = (((x1 - x0) * per_unit as f64).ceil() as usize).max(1);
    let py = ((geom.width * per_unit as f64).ceil() as usize).max(1);
    RectRule::new(
        GaussRule::composite(px, 10, x0, x1),
        GaussRule::composite(py, 10, 0.0, geom.width),
    )
}

/// Gram matrix `∫ υ_α υ_β` over `[−R0, R0] × [0, L]` and its eigenvalues (ascending).
pub fn gram_matrix(geom: &RibbonGeometry, n: usize, eps: f64) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let set = SynthesisIndexSet::new(n)?;
    let ups: Vec<Upsilon> = set
        .entries
        .iter()
        .map(|&a| upsilon(a, geom, n, eps))
        .collect::<Result<_>>()?;
    let rule = box_rule(geom, -geom.r0, geom.r0, 4);
    let k = ups.len();
    let mut g = DMatrix::<f64>::zeros(k, k);
    let mut v = vec![0.0; k];
    for (x, y, w) in rule.points() {
        for (i, u) in ups.iter().enumerate() {
            v[i] = u.eval(x, y);
        }
        for i in 0..k {
            for j in 0..k {
                g[(i, j)] += w * v[i] * v[j];
            }
        }
    }
    let mut ev: Vec<f64> = g.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok((g, ev))
}

/// Default bump family: `count` unit Gaussians of width 0.25 in x, centred on
/// `[−R0/2, R0/2]`, with y-profile `e^{−((y − L/2)/(L/4))²}`.
pub fn default_bumps(geom: &RibbonGeometry, count: usize) -> Vec<GaussianTerm> {
    let half = geom.r0 / 2.0;
    (0..count)
        .map(|i| {
            let x0 = if count == 1 {
                0.0
            } else {
                -half + 2.0 * half * i as f64 / (count - 1) as f64
            };
            GaussianTerm {
                amp: 1.0,
                x0,
                sx: 0.25,
                y0: geom.width / 2.0,
                sy: geom.width / 4.0,
            }
        })
        .collect()
}

/// Moment matrix `A[α][b] = m_α(bump_b)`.
pub fn moment_matrix(bumps: &[GaussianTerm], geom: &RibbonGeometry, n: usize, eps: f64) -> Result<DMatrix<f64>> {
    let set = SynthesisIndexSet::new(n)?.completed(geom)?;
    let ups: Vec<Upsilon> = set
        .entries
        .iter()
        .map(|&a| upsilon(a, geom, n, eps))
        .collect::<Result<_>>()?;
    let unit = PotentialSpec::new(geom, 1.0, Vec::new());
    let mut a = DMatrix::<f64>::zeros(ups.len(), bumps.len());
    for (b, t) in bumps.iter().enumerate() {
        let single = PotentialSpec {
            terms: vec![*t],
            ..unit.clone()
        };
        let Some((x0, x1)) = single.x_support() else { continue };
        let rule = box_rule(geom, x0, x1, 8);
        for (x, y, w) in rule.points() {
            let p = single.eval(x, y);
            if p == 0.0 {
                continue;
            }
            for (i, u) in ups.iter().enumerate() {
                a[(i, b)] += BORN_SIGN * w * p * u.eval(x, y);
            }
        }
    }
    Ok(a)
}

/// Moments `m_α(P)` of a potential (per unit δ).
pub fn moments(p: &PotentialSpec, geom: &RibbonGeometry, n: usize, eps: f64) -> Result<Vec<f64>> {
    let unit: Vec<GaussianTerm> = p.terms.iter().map(|t| GaussianTerm { amp: 1.0, ..*t }).collect();
    let a = moment_matrix(&unit, geom, n, eps)?;
    let amps = DVector::from_iterator(p.terms.len(), p.terms.iter().map(|t| t.amp));
    Ok((a * amps).iter().copied().collect())
}

/// Least-norm solution of a moment system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSolve {
    pub coeffs: Vec<f64>,
    pub residual: f64,
    pub cond: f64,
    pub singular_values: Vec<f64>,
}

fn least_norm(a: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<LinearSolve> {
    let svd = a.clone().svd(true, true);
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let cut = SVD_CUTOFF * smax;
    let rank = sv.iter().filter(|&&s| s > cut).count();
    if rank < a.nrows() {
        return Err(Error::RankDeficient {
            rank,
            needed: a.nrows(),
            spectrum: sv,
        });
    }
    let x = svd
        .solve(rhs, cut)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let residual = (a * &x - rhs).amax();
    let smin = sv.iter().copied().filter(|&s| s > cut).fold(f64::INFINITY, f64::min);
    Ok(LinearSolve {
        coeffs: x.iter().copied().collect(),
        residual,
        cond: smax / smin,
        singular_values: sv,
    })
}

fn active_rows(a: &DMatrix<f64>, active: &[bool]) -> (DMatrix<f64>, Vec<usize>) {
    let rows: Vec<usize> = (0..active.len()).filter(|&i| active[i]).collect();
    (DMatrix::from_fn(rows.len(), a.ncols(), |i, j| a[(rows[i], j)]), rows)
}

/// `Φ` with `m(Φ) = e_(N,+,Re)` over the active conditions. The remaining
/// conditions hold by symmetry of the bumps.
pub fn solve_phi(bumps: &[GaussianTerm], geom: &RibbonGeometry, n: usize, eps: f64) -> Result<LinearSolve> {
    let set = SynthesisIndexSet::new(n)?.completed(geom)?;
    check_bumps(bumps, &set, geom)?;
    let a = moment_matrix(bumps, geom, n, eps)?;
    let (aa, rows) = active_rows(&a, &set.active(geom)?);
    let rhs = DVector::from_iterator(
        rows.len(),
        rows.iter().map(|&r| if r == set.target() { 1.0 } else { 0.0 }),
    );
    least_norm(&aa, &rhs)
}

/// One `Ψ^β` per index entry with `m_α(Ψ^β) = δ_αβ`; entries fixed by symmetry get
/// `Ψ^β = 0`.
pub fn solve_psis(bumps: &[GaussianTerm], geom: &RibbonGeometry, n: usize, eps: f64) -> Result<Vec<LinearSolve>> {
    let set = SynthesisIndexSet::new(n)?.completed(geom)?;
    check_bumps(bumps, &set, geom)?;
    let a = moment_matrix(bumps, geom, n, eps)?;
    let (aa, rows) = active_rows(&a, &set.active(geom)?);
    let mut out = Vec::with_capacity(set.len());
    for beta in 0..set.len() {
        match rows.iter().position(|&r| r == beta) {
            Some(k) => {
                let rhs = DVector::from_fn(rows.len(), |i, _| if i == k { 1.0 } else { 0.0 });
                out.push(least_norm(&aa, &rhs)?);
            }
            None => out.push(LinearSolve {
                coeffs: vec![0.0; bumps.len()],
                residual: 0.0,
                cond: 1.0,
                singular_values: Vec::new(),
            }),
        }
    }
    Ok(out)
}

fn check_bumps(bumps: &[GaussianTerm], set: &SynthesisIndexSet, geom: &RibbonGeometry) -> Result<()> {
    if bumps.len() < set.len() {
        return Err(Error::InvalidParameter(format!(
            "{} bumps cannot span {} conditions",
            bumps.len(),
            set.len()
        )));
    }
    if let Some(t) = bumps.iter().find(|t| (t.y0 - geom.width / 2.0).abs() > 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "bumps must be centred at y = L/2 = {}, got {}",
            geom.width / 2.0,
            t.y0
        )));
    }
    Ok(())
}

/// `Φ + Σ η^β Ψ^β` as a potential with the given δ.
pub fn assemble(
    bumps: &[GaussianTerm],
    phi: &[f64],
    psis: &[LinearSolve],
    eta: &[f64],
    geom: &RibbonGeometry,
    delta: f64,
) -> PotentialSpec {
    let terms = bumps
        .iter()
        .enumerate()
        .map(|(b, t)| {
            let amp = phi[b] + psis.iter().zip(eta).map(|(p, e)| e * p.coeffs[b]).sum::<f64>();
            GaussianTerm { amp, ..*t }
        })
        .collect();
    PotentialSpec::new(geom, delta, terms)
}

/// Entries `s_α` of `s = (S − I)/(iδ)` from a full solve.
pub fn s_entries(s: &crate::scattering::AugmentedScatteringMatrix, set: &SynthesisIndexSet) -> Vec<f64> {
    let m = s.matrix();
    let col = channel_index(set.n, Tau::Plus);
    let i = C64::new(0.0, s.delta);
    set.entries
        .iter()
        .map(|e| {
            let row = channel_index(e.j, e.tau);
            let id = if row == col { 1.0 } else { 0.0 };
            e.xi.apply((m[(row, col)] - id) / i)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisConfig {
    pub bumps: Option<usize>,
    pub max_iter: usize,
    pub eta_tol: f64,
    pub refine: bool,
    pub solver: SolverConfig,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            bumps: None,
            max_iter: 20,
            eta_tol: 1e-8,
            refine: true,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub step: usize,
    pub eta_change: f64,
    pub residual: f64,
    pub sigma_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisResult {
    #[serde(rename = "N")]
    pub n: usize,
    pub index_set: SynthesisIndexSet,
    pub active: Vec<bool>,
    pub bumps: Vec<GaussianTerm>,
    pub phi_coeffs: Vec<f64>,
    pub psi_coeffs: Vec<Vec<f64>>,
    pub eta: Vec<f64>,
    pub eps: f64,
    pub delta: f64,
    pub sigma: f64,
    pub phi_moments: Vec<f64>,
    pub moment_singular_values: Vec<f64>,
    pub gram_eigenvalues: Vec<f64>,
    pub history: Vec<IterationRecord>,
    pub iterations: usize,
    pub final_sigma_min: f64,
    pub final_det: C64,
    pub potential: PotentialSpec,
}

/// Full design at `ω_N − ε`.
pub fn synthesize(geom: &RibbonGeometry, n: usize, eps: f64, cfg: &SynthesisConfig) -> Result<SynthesisResult> {
    let nt = spectrum::near_threshold(geom, n, eps)?;
    if nt.delta_sin > 0.5 {
        return Err(Error::EpsOutOfRange {
            eps,
            eps0: spectrum::eps0(geom, n)?,
            n,
        });
    }
    let set = SynthesisIndexSet::new(n)?.completed(geom)?;
    let active = set.active(geom)?;
    let bumps = default_bumps(geom, cfg.bumps.unwrap_or(2 * set.len()));
    let phi = solve_phi(&bumps, geom, n, eps)?;
    let psis = solve_psis(&bumps, geom, n, eps)?;
    let phi_moments: Vec<f64> = (moment_matrix(&bumps, geom, n, eps)? * DVector::from_vec(phi.coeffs.clone()))
        .iter()
        .copied()
        .collect();
    let (_, gram) = gram_matrix(geom, n, eps)?;
    let target: Vec<f64> = (0..set.len())
        .map(|i| if i == set.target() { 1.0 } else { 0.0 })
        .collect();

    let delta0 = nt.delta_sin;
    let evaluate = |eta: &[f64], delta: f64| -> Result<(Vec<f64>, f64, C64)> {
        let p = assemble(&bumps, &phi.coeffs, &psis, eta, geom, delta);
        let sol = solve_scattering(&p, geom, n, eps, &cfg.solver)?;
        let s = sol.matrix(delta);
        let (sm, det) = trapped_criterion(&s, &nt);
        Ok((s_entries(&s, &set), sm, det))
    };

    let mut eta = vec![0.0; set.len()];
    let mut history = Vec::new();
    let mut converged = false;
    for step in 1..=cfg.max_iter {
        let (s, sm, _) = evaluate(&eta, delta0)?;
        let mut change: f64 = 0.0;
        let mut residual: f64 = 0.0;
        for a in (0..set.len()).filter(|&a| active[a]) {
            let r = s[a] - target[a];
            eta[a] -= r;
            change = change.max(r.abs());
            residual = residual.max(r.abs());
        }
        history.push(IterationRecord {
            step,
            eta_change: change,
            residual,
            sigma_min: sm,
        });
        if change < cfg.eta_tol {
            converged = true;
            break;
        }
        let k = history.len();
        if k >= 4 && (1..4).all(|i| history[k - i].eta_change > history[k - i - 1].eta_change) {
            return Err(Error::NonContraction {
                steps: history.iter().map(|h| h.eta_change).collect(),
            });
        }
    }
    if !converged {
        return Err(Error::NonContraction {
            steps: history.iter().map(|h| h.eta_change).collect(),
        });
    }

    let mut delta = delta0;
    let (_, mut best, mut det) = evaluate(&eta, delta)?;
    if cfg.refine {
        let f = |d: f64| evaluate(&eta, d).map(|v| v.1).unwrap_or(f64::INFINITY);
        let (d, v) = golden(f, 0.98 * delta0, 1.02 * delta0, 40);
        if v < best {
            delta = d;
            let r = evaluate(&eta, delta)?;
            best = r.1;
            det = r.2;
        }
    }
    let potential = assemble(&bumps, &phi.coeffs, &psis, &eta, geom, delta).normalized();
    Ok(SynthesisResult {
        n,
        index_set: set,
        active,
        bumps,
        phi_coeffs: phi.coeffs,
        psi_coeffs: psis.into_iter().map(|p| p.coeffs).collect(),
        eta,
        eps,
        delta: potential.delta,
        sigma: nt.sigma,
        phi_moments,
        moment_singular_values: phi.singular_values,
        gram_eigenvalues: gram,
        iterations: history.len(),
        history,
        final_sigma_min: best,
        final_det: det,
        potential,
    })
}

fn golden<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut c, mut d) = (b - r * (b - a), a + r * (b - a));
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// The three-bump example `e^{−((y−0.67)/0.2)²}(0.54e^{−(x+0.14)²} − e^{−(x+0.32)²} + 0.54e^{−(x+0.49)²})`
/// on `L = 1.33`, with `R0 = 6` so that no bump is clipped. δ is left at 0.
pub fn paper_example_potential() -> PotentialSpec {
    let geom = RibbonGeometry { width: 1.33, r0: 6.0 };
    let t = |amp: f64, x0: f64| GaussianTerm {
        amp,
        x0,
        sx: 1.0,
        y0: 0.67,
        sy: 0.2,
    };
    PotentialSpec::new(&geom, 0.0, vec![t(0.54, -0.14), t(-1.0, -0.32), t(0.54, -0.49)])
}
