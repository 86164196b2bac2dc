//! Full scattering solve on the valley-folded cylinder.
//!
//! Folding `U(y) = i u'(−y)`, `V(y) = −i v'(−y)` on `[−L, 0]` turns the four
//! edge conditions into quasi-periodicity on a circle of length `2L`, where
//! `e^{iκ_m y}` is a complete basis. In that basis the system reads
//!
//! ```text
//! a_m' =  κ_m a_m − iω b_m + iδ Σ_n P_mn b_n
//! b_m' = −κ_m b_m − iω a_m + iδ Σ_n P_mn a_n
//! ```
//!
//! with `P_mn(x) = (1/L)∫₀ᴸ P cos(π(m−n)y/L) dy`. The x-interval carrying the
//! potential is cut into slices; each slice propagator comes from a fourth-order
//! Magnus step in the interaction picture of the free modes, and slices are
//! composed with the Redheffer star product, so growing evanescent modes never
//! appear as transfer-matrix entries.

use super::potential::{GaussianTerm, PotentialSpec};
use crate::spectrum::{self, NearThresholdData, RibbonGeometry};
use crate::waves::{near_exp_weights, oscillatory_norm, ModeTerm, SpinorField, Tau};
use crate::{Error, Result, C64};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub type CMat = DMatrix<C64>;

const I: C64 = C64::new(0.0, 1.0);
const ONE: C64 = C64::new(1.0, 0.0);
const ZERO_C: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Transverse truncation: the `2J + 1` folded modes with smallest `|κ|`.
    /// `None` means `N + 8`.
    pub j_modes: Option<usize>,
    /// Magnus slices per unit length.
    pub nx: usize,
    /// Extraction half-length `X`; `None` picks it from `margin_decay`.
    pub x_half: Option<f64>,
    /// Required suppression of the slowest discarded evanescent mode at `X`.
    pub margin_decay: f64,
    pub tol: f64,
    /// Largest admissible amplitude in the two outermost transverse modes.
    pub edge_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            j_modes: None,
            nx: 16,
            x_half: None,
            margin_decay: 1e-8,
            tol: 1e-8,
            edge_tol: 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn modes_for(&self, n: usize) -> usize {
        self.j_modes.unwrap_or(n + 8)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.modes_for(n) < n + 4 {
            return Err(Error::InvalidParameter(format!(
                "J_modes = {} must be at least N + 4 = {}",
                self.modes_for(n),
                n + 4
            )));
        }
        if self.nx < 2 {
            return Err(Error::InvalidParameter("nx must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Propagating,
    /// The near-threshold pair `w_N^±`.
    Exponential,
    Evanescent,
}

/// One folded transverse mode with its forward (`f`, `e^{μ_f x}`) and
/// backward (`g`) solutions in `(a, b)` coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    pub m: i64,
    pub kappa: f64,
    pub kind: ChannelKind,
    /// Position among open channels, `1..=N`.
    pub j: Option<usize>,
    pub lambda_f: C64,
    pub lambda_g: C64,
    pub f: [C64; 2],
    pub g: [C64; 2],
}

impl Channel {
    pub fn mu_f(&self) -> C64 {
        I * self.lambda_f
    }

    pub fn mu_g(&self) -> C64 {
        I * self.lambda_g
    }

    fn inverse(&self) -> [[C64; 2]; 2] {
        let det = self.f[0] * self.g[1] - self.g[0] * self.f[1];
        [[self.g[1] / det, -self.g[0] / det], [-self.f[1] / det, self.f[0] / det]]
    }

    /// Free wave of this channel with absolute amplitude `amp`.
    pub fn term(&self, forward: bool, amp: C64) -> ModeTerm {
        let (lambda, v) = if forward {
            (self.lambda_f, self.f)
        } else {
            (self.lambda_g, self.g)
        };
        ModeTerm::transverse(self.kappa, lambda, amp * v[0], amp * v[1])
    }
}

fn free_vec(kappa: f64, lambda: C64, omega: f64, norm: f64) -> [C64; 2] {
    [C64::new(norm, 0.0), -(lambda + I * kappa) / omega * norm]
}

/// Folded mode set at one energy.
#[derive(Debug, Clone)]
pub struct ModeBasis {
    pub geom: RibbonGeometry,
    pub omega: f64,
    pub channels: Vec<Channel>,
    /// Indices into `channels` of the open channels, ordered by `j`.
    pub open: Vec<usize>,
    pub near: Option<NearThresholdData>,
}

impl ModeBasis {
    fn build(geom: &RibbonGeometry, omega: f64, j_modes: usize, near: Option<NearThresholdData>) -> Result<Self> {
        let labels = geom.labels_by_abs_kappa(2 * j_modes + 1);
        let mut channels = Vec::with_capacity(labels.len());
        for m in labels {
            let kappa = geom.kappa(m);
            let exp_n = near.map(|nt| nt.m_n == m).unwrap_or(false);
            let ch = if exp_n {
                let nt = near.unwrap();
                Channel {
                    m,
                    kappa,
                    kind: ChannelKind::Exponential,
                    j: Some(nt.n),
                    lambda_f: nt.lambda_eps,
                    lambda_g: -nt.lambda_eps,
                    f: free_vec(kappa, nt.lambda_eps, omega, 1.0),
                    g: free_vec(kappa, -nt.lambda_eps, omega, 1.0),
                }
            } else if kappa.abs() < omega {
                let lam = ((omega - kappa) * (omega + kappa)).sqrt();
                let nrm = oscillatory_norm(geom.width, lam, omega);
                let l = C64::new(lam, 0.0);
                Channel {
                    m,
                    kappa,
                    kind: ChannelKind::Propagating,
                    j: None,
                    lambda_f: l,
                    lambda_g: -l,
                    f: free_vec(kappa, l, omega, nrm),
                    g: free_vec(kappa, -l, omega, nrm),
                }
            } else {
                let gam = ((kappa - omega) * (kappa + omega)).sqrt();
                let l = C64::new(0.0, gam);
                Channel {
                    m,
                    kappa,
                    kind: ChannelKind::Evanescent,
                    j: None,
                    lambda_f: l,
                    lambda_g: -l,
                    f: free_vec(kappa, l, omega, 1.0),
                    g: free_vec(kappa, -l, omega, 1.0),
                }
            };
            channels.push(ch);
        }
        let mut prop: Vec<usize> = (0..channels.len())
            .filter(|&c| channels[c].kind == ChannelKind::Propagating)
            .collect();
        prop.sort_by(|a, b| channels[*a].kappa.partial_cmp(&channels[*b].kappa).unwrap());
        for (i, &c) in prop.iter().enumerate() {
            channels[c].j = Some(i + 1);
        }
        let mut open = prop;
        if let Some(c) = channels.iter().position(|c| c.kind == ChannelKind::Exponential) {
            open.push(c);
        }
        let expected = spectrum::count_below(geom, omega) + near.is_some() as usize;
        if open.len() != expected {
            return Err(Error::TruncationTooSmall {
                edge: open.len() as f64,
                tol: expected as f64,
            });
        }
        Ok(ModeBasis {
            geom: *geom,
            omega,
            channels,
            open,
            near,
        })
    }

    /// Basis at `ω_N − ε` with the exponential pair in channel `N`.
    pub fn near_threshold(geom: &RibbonGeometry, n: usize, eps: f64, j_modes: usize) -> Result<Self> {
        let nt = spectrum::near_threshold(geom, n, eps)?;
        Self::build(geom, nt.omega_eps, j_modes, Some(nt))
    }

    /// Basis at an energy away from thresholds: only propagating open channels.
    pub fn at_energy(geom: &RibbonGeometry, omega: f64, j_modes: usize) -> Result<Self> {
        spectrum::propagating_modes(geom, omega)?;
        Self::build(geom, omega, j_modes, None)
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    /// Slowest decay rate among evanescent channels.
    pub fn slowest_decay(&self) -> f64 {
        self.channels
            .iter()
            .filter(|c| c.kind == ChannelKind::Evanescent)
            .map(|c| c.lambda_f.im)
            .fold(f64::INFINITY, f64::min)
    }

    fn exp_weights(&self) -> (C64, C64) {
        self.near.map(|nt| near_exp_weights(&nt)).unwrap_or((ONE, ZERO_C))
    }
}

/// Split of the `2n` local amplitudes `(f_0‥f_{n−1}, g_0‥g_{n−1})` into the
/// amplitudes carried left to right (`fwd`) and right to left (`bwd`).
///
/// The standard split sends every `f` forward and every `g` backward. The mixed
/// split also sends `g` of the exponential pair forward: that channel is only
/// weakly growing, so keeping it in transfer form costs nothing, and it removes
/// the bound-state pole that a pure scattering form develops at a trapped mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub fwd: Vec<usize>,
    pub bwd: Vec<usize>,
    pub mus: Vec<C64>,
}

impl Partition {
    pub fn standard(basis: &ModeBasis) -> Self {
        Self::build(basis, false)
    }

    pub fn mixed(basis: &ModeBasis) -> Self {
        Self::build(basis, true)
    }

    fn build(basis: &ModeBasis, mixed: bool) -> Self {
        let n = basis.len();
        let exp = basis.channels.iter().position(|c| c.kind == ChannelKind::Exponential);
        let mut fwd: Vec<usize> = (0..n).collect();
        let mut bwd = Vec::with_capacity(n);
        for c in 0..n {
            if mixed && Some(c) == exp {
                fwd.push(n + c);
            } else {
                bwd.push(n + c);
            }
        }
        let mus = basis
            .channels
            .iter()
            .map(|c| c.mu_f())
            .chain(basis.channels.iter().map(|c| c.mu_g()))
            .collect();
        Partition { fwd, bwd, mus }
    }

    pub fn nf(&self) -> usize {
        self.fwd.len()
    }

    pub fn nb(&self) -> usize {
        self.bwd.len()
    }
}

/// Scattering-form block of a slab: `[F_right; B_left] = S [F_left; B_right]`
/// in local amplitudes at the slab faces.
#[derive(Debug, Clone)]
pub struct SBlock {
    pub s11: CMat,
    pub s12: CMat,
    pub s21: CMat,
    pub s22: CMat,
}

fn solve(a: &CMat, b: &CMat) -> CMat {
    a.clone().lu().solve(b).expect("Redheffer denominator is singular")
}

impl SBlock {
    pub fn identity(nf: usize, nb: usize) -> Self {
        SBlock {
            s11: CMat::identity(nf, nf),
            s12: CMat::zeros(nf, nb),
            s21: CMat::zeros(nb, nf),
            s22: CMat::identity(nb, nb),
        }
    }

    pub fn free(part: &Partition, h: f64) -> Self {
        let mut s = Self::identity(part.nf(), part.nb());
        for (i, &k) in part.fwd.iter().enumerate() {
            s.s11[(i, i)] = (part.mus[k] * h).exp();
        }
        for (i, &k) in part.bwd.iter().enumerate() {
            s.s22[(i, i)] = (-part.mus[k] * h).exp();
        }
        s
    }

    /// From a transfer matrix acting on local amplitudes.
    pub fn from_transfer(t: &CMat, part: &Partition) -> Self {
        let tff = restrict(t, &part.fwd, &part.fwd);
        let tfg = restrict(t, &part.fwd, &part.bwd);
        let tgf = restrict(t, &part.bwd, &part.fwd);
        let tgg = restrict(t, &part.bwd, &part.bwd);
        let s22 = tgg.lu().try_inverse().expect("backward transfer block singular");
        let s12 = &tfg * &s22;
        let s21 = -(&s22 * &tgf);
        let s11 = &tff - &s12 * &tgf;
        SBlock { s11, s12, s21, s22 }
    }

    /// `self` followed by `b` (left to right).
    pub fn star(&self, b: &SBlock) -> SBlock {
        let nf = self.s11.nrows();
        let nb = self.s22.nrows();
        let d1 = CMat::identity(nf, nf) - &self.s12 * &b.s21;
        let d2 = CMat::identity(nb, nb) - &b.s21 * &self.s12;
        let x1 = solve(&d1, &self.s11);
        let x2 = solve(&d1, &(&self.s12 * &b.s22));
        let y1 = solve(&d2, &(&b.s21 * &self.s11));
        let y2 = solve(&d2, &b.s22);
        SBlock {
            s11: &b.s11 * x1,
            s12: &b.s12 + &b.s11 * x2,
            s21: &self.s21 + &self.s22 * y1,
            s22: &self.s22 * y2,
        }
    }
}

/// Coupling matrices in the modal basis, grouped by transverse profile.
struct Coupling {
    groups: Vec<(Vec<GaussianTerm>, CMat)>,
}

impl Coupling {
    fn new(p: &PotentialSpec, basis: &ModeBasis) -> Self {
        let n = basis.len();
        let inv: Vec<[[C64; 2]; 2]> = basis.channels.iter().map(Channel::inverse).collect();
        let mut groups: Vec<(Vec<GaussianTerm>, CMat)> = Vec::new();
        let mut keys: Vec<(f64, f64)> = Vec::new();
        for t in p.terms.iter().filter(|t| t.amp != 0.0 && p.y_range(t).is_some()) {
            if let Some(k) = keys.iter().position(|&(y0, sy)| y0 == t.y0 && sy == t.sy) {
                groups[k].0.push(*t);
                continue;
            }
            let span = 2 * basis.len() as i64;
            let h: Vec<f64> = (0..=span).map(|d| p.transverse_coefficient(t, d)).collect();
            let mut c = CMat::zeros(2 * n, 2 * n);
            for (r, cr) in basis.channels.iter().enumerate() {
                for (s, cs) in basis.channels.iter().enumerate() {
                    let hv = h[(cr.m - cs.m).unsigned_abs() as usize];
                    if hv == 0.0 {
                        continue;
                    }
                    let cols = [cs.f, cs.g];
                    // K = M_r^{-1} [[0,1],[1,0]] M_s
                    for (a, row) in inv[r].iter().enumerate() {
                        for (b, col) in cols.iter().enumerate() {
                            let k = row[0] * col[1] + row[1] * col[0];
                            c[(a * n + r, b * n + s)] = I * hv * k;
                        }
                    }
                }
            }
            keys.push((t.y0, t.sy));
            groups.push((vec![*t], c));
        }
        Coupling { groups }
    }

    /// `δ^{-1} B̃(x)`.
    fn at(&self, p: &PotentialSpec, x: f64, n2: usize) -> Option<CMat> {
        let mut out: Option<CMat> = None;
        for (terms, c) in &self.groups {
            let w: f64 = terms.iter().map(|t| t.amp * p.x_factor(t, x)).sum();
            if w != 0.0 {
                match &mut out {
                    Some(m) => *m += c * C64::new(w, 0.0),
                    None => out = Some(c * C64::new(w, 0.0)),
                }
            }
        }
        debug_assert!(out.as_ref().map(|m| m.nrows() == n2).unwrap_or(true));
        out
    }
}

/// Slab propagators over the support of the potential.
#[derive(Debug, Clone)]
pub struct Propagation {
    pub part: Partition,
    pub x_left: f64,
    pub x_mid: f64,
    pub x_right: f64,
    pub steps: usize,
    pub left: SBlock,
    pub right: SBlock,
    pub total: SBlock,
}

fn magnus_step(part: &Partition, cpl: &Coupling, p: &PotentialSpec, xa: f64, h: f64) -> SBlock {
    let mus = &part.mus;
    let n2 = mus.len();
    let xm = xa + 0.5 * h;
    let r = 3f64.sqrt() / 6.0 * h;
    let g_at = |s: f64| -> Option<CMat> {
        let mut b = cpl.at(p, xm + s, n2)?;
        b *= C64::new(p.delta, 0.0);
        for i in 0..n2 {
            for j in 0..n2 {
                if b[(i, j)] != ZERO_C {
                    b[(i, j)] *= ((mus[j] - mus[i]) * s).exp();
                }
            }
        }
        Some(b)
    };
    let (g1, g2) = (g_at(-r), g_at(r));
    if g1.is_none() && g2.is_none() {
        return SBlock::free(part, h);
    }
    let g1 = g1.unwrap_or_else(|| CMat::zeros(n2, n2));
    let g2 = g2.unwrap_or_else(|| CMat::zeros(n2, n2));
    let comm = &g2 * &g1 - &g1 * &g2;
    let omega = (&g1 + &g2) * C64::new(0.5 * h, 0.0) + comm * C64::new(3f64.sqrt() / 12.0 * h * h, 0.0);
    let mut t = omega.exp();
    let half: Vec<C64> = mus.iter().map(|m| (m * (0.5 * h)).exp()).collect();
    for i in 0..n2 {
        for j in 0..n2 {
            t[(i, j)] *= half[i] * half[j];
        }
    }
    SBlock::from_transfer(&t, part)
}

fn chain(part: &Partition, cpl: &Coupling, p: &PotentialSpec, x0: f64, h: f64, steps: usize) -> SBlock {
    let mut acc = SBlock::identity(part.nf(), part.nb());
    for k in 0..steps {
        acc = acc.star(&magnus_step(part, cpl, p, x0 + k as f64 * h, h));
    }
    acc
}

/// Propagators for `δP` over its x-support, split at the middle slice.
pub fn propagate(p: &PotentialSpec, basis: &ModeBasis, part: Partition, cfg: &SolverConfig) -> Propagation {
    let support = if p.delta == 0.0 { None } else { p.x_support() };
    let Some((xl, xr)) = support else {
        let id = SBlock::identity(part.nf(), part.nb());
        return Propagation {
            part,
            x_left: 0.0,
            x_mid: 0.0,
            x_right: 0.0,
            steps: 0,
            left: id.clone(),
            right: id.clone(),
            total: id,
        };
    };
    let steps = (((xr - xl) * cfg.nx as f64).ceil() as usize).max(4);
    let h = (xr - xl) / steps as f64;
    let mid = steps / 2;
    let cpl = Coupling::new(p, basis);
    let run = |a: usize, b: usize| chain(&part, &cpl, p, xl + a as f64 * h, h, b - a);
    #[cfg(feature = "parallel")]
    let (left, right) = rayon::join(|| run(0, mid), || run(mid, steps));
    #[cfg(not(feature = "parallel"))]
    let (left, right) = (run(0, mid), run(mid, steps));
    let total = left.star(&right);
    Propagation {
        part,
        x_left: xl,
        x_mid: xl + mid as f64 * h,
        x_right: xr,
        steps,
        left,
        right,
        total,
    }
}

/// S-matrix index of `(j, τ)`: `(1,+), (1,−), (2,+), …`.
pub fn channel_index(j: usize, tau: Tau) -> usize {
    2 * (j - 1) + usize::from(tau == Tau::Minus)
}

pub fn channel_label(idx: usize) -> (usize, Tau) {
    (idx / 2 + 1, if idx.is_multiple_of(2) { Tau::Plus } else { Tau::Minus })
}

/// Local `f` and `g` amplitudes of every channel on both faces.
#[derive(Debug, Clone)]
struct Faces {
    f_left: Vec<C64>,
    g_left: Vec<C64>,
    f_right: Vec<C64>,
    g_right: Vec<C64>,
}

/// Solved scattering problem: open-channel S plus everything needed for
/// reconstruction and diagnostics.
#[derive(Debug, Clone)]
pub struct ScatteringSolution {
    pub basis: ModeBasis,
    pub prop: Propagation,
    /// Rows: incoming `(k, τ)`, columns: outgoing `(j, θ)`.
    pub s: CMat,
    pub cond: f64,
    faces: Vec<Faces>,
    pub edge_amplitude: f64,
}

impl ScatteringSolution {
    pub fn n_open(&self) -> usize {
        self.basis.open.len()
    }

    pub fn unitarity_defect(&self) -> f64 {
        let n = self.s.nrows();
        let d = &self.s * self.s.adjoint() - CMat::identity(n, n);
        d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Field outside the support on one side (`Plus` = right) for incoming wave `inc`,
    /// keeping evanescent terms still above `1e-18` at distance `reach`.
    pub fn exterior_field(&self, side: Tau, inc: usize, reach: f64) -> SpinorField {
        let b = &self.basis;
        let fc = &self.faces[inc];
        let mut terms = Vec::new();
        let (x_ref, fa, ga) = match side {
            Tau::Plus => (self.prop.x_right, &fc.f_right, &fc.g_right),
            Tau::Minus => (self.prop.x_left, &fc.f_left, &fc.g_left),
        };
        for (c, ch) in b.channels.iter().enumerate() {
            for (fwd, amp) in [(true, fa[c]), (false, ga[c])] {
                if amp == ZERO_C {
                    continue;
                }
                let mu = if fwd { ch.mu_f() } else { ch.mu_g() };
                if ch.kind == ChannelKind::Evanescent && amp.norm() * (-mu.re.abs() * reach).exp() < 1e-18 {
                    continue;
                }
                terms.push(ch.term(fwd, amp * (-mu * x_ref).exp()));
            }
        }
        SpinorField::from_terms(terms, b.omega, b.geom)
    }

    /// Largest evanescent amplitude at distance `d` beyond the faces.
    pub fn evanescent_remainder(&self, d: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for fc in &self.faces {
            for (c, ch) in self.basis.channels.iter().enumerate() {
                if ch.kind != ChannelKind::Evanescent {
                    continue;
                }
                let decay = (-ch.lambda_f.im * d).exp();
                worst = worst.max(fc.f_right[c].norm() * decay).max(fc.g_left[c].norm() * decay);
            }
        }
        worst
    }
}

fn restrict(m: &CMat, rows: &[usize], cols: &[usize]) -> CMat {
    CMat::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Exterior local amplitude of state slot `k` (`f_c` for `k < n`, `g_c` otherwise)
/// on one face, as coefficients on the `2N_open` incoming and outgoing waves.
fn slot_coefficients(
    basis: &ModeBasis,
    k: usize,
    right: bool,
    x: f64,
) -> Option<(Vec<(usize, C64)>, Vec<(usize, C64)>)> {
    let n = basis.len();
    let (c, is_g) = (k % n, k >= n);
    let ch = &basis.channels[c];
    let j = ch.j?;
    let (ip, im) = (channel_index(j, Tau::Plus), channel_index(j, Tau::Minus));
    let mu = if is_g { ch.mu_g() } else { ch.mu_f() };
    let e = (mu * x).exp();
    let (pw, mw) = basis.exp_weights();
    Some(match ch.kind {
        ChannelKind::Exponential => {
            // Left: p·in₊ + m·out₋ (f), m·in₊ + p·out₋ (g); right: mirror.
            let (a, b) = if is_g { (mw, pw) } else { (pw, mw) };
            if right {
                // f = p·out₊ + m·in₋, g = m·out₊ + p·in₋
                (vec![(im, b * e)], vec![(ip, a * e)])
            } else {
                (vec![(ip, a * e)], vec![(im, b * e)])
            }
        }
        ChannelKind::Propagating => match (is_g, right) {
            (false, false) => (vec![(ip, e)], vec![]),
            (false, true) => (vec![], vec![(ip, e)]),
            (true, true) => (vec![(im, e)], vec![]),
            (true, false) => (vec![], vec![(im, e)]),
        },
        ChannelKind::Evanescent => return None,
    })
}

/// Solve for the open-channel scattering matrix.
pub fn solve_basis(p: &PotentialSpec, basis: ModeBasis, cfg: &SolverConfig) -> Result<ScatteringSolution> {
    let prop = propagate(p, &basis, Partition::mixed(&basis), cfg);
    let n = basis.len();
    let no = basis.open.len();
    let n2o = 2 * no;
    let (xl, xr) = (prop.x_left, prop.x_right);
    let part = &prop.part;
    // Inputs [F_left; B_right] and outputs [F_right; B_left] on open slots.
    let in_slots: Vec<(usize, bool, usize)> = part
        .fwd
        .iter()
        .enumerate()
        .map(|(i, &k)| (k, false, i))
        .chain(part.bwd.iter().enumerate().map(|(i, &k)| (k, true, part.nf() + i)))
        .filter(|&(k, _, _)| basis.channels[k % n].kind != ChannelKind::Evanescent)
        .collect();
    let out_slots: Vec<(usize, bool, usize)> = part
        .fwd
        .iter()
        .enumerate()
        .map(|(i, &k)| (k, true, i))
        .chain(part.bwd.iter().enumerate().map(|(i, &k)| (k, false, part.nf() + i)))
        .filter(|&(k, _, _)| basis.channels[k % n].kind != ChannelKind::Evanescent)
        .collect();
    debug_assert_eq!(in_slots.len(), n2o);
    let fill = |slots: &[(usize, bool, usize)], m_in: &mut CMat, m_out: &mut CMat| {
        for (r, &(k, right, _)) in slots.iter().enumerate() {
            let x = if right { xr } else { xl };
            let (ci, co) = slot_coefficients(&basis, k, right, x).unwrap();
            for (i, v) in ci {
                m_in[(r, i)] += v;
            }
            for (i, v) in co {
                m_out[(r, i)] += v;
            }
        }
    };
    let mut x_in = CMat::zeros(n2o, n2o);
    let mut x_out = CMat::zeros(n2o, n2o);
    let mut y_in = CMat::zeros(n2o, n2o);
    let mut y_out = CMat::zeros(n2o, n2o);
    fill(&in_slots, &mut x_in, &mut x_out);
    fill(&out_slots, &mut y_in, &mut y_out);

    let t = &prop.total;
    let full = {
        let (nf, nb) = (part.nf(), part.nb());
        let mut m = CMat::zeros(nf + nb, nf + nb);
        m.view_mut((0, 0), (nf, nf)).copy_from(&t.s11);
        m.view_mut((0, nf), (nf, nb)).copy_from(&t.s12);
        m.view_mut((nf, 0), (nb, nf)).copy_from(&t.s21);
        m.view_mut((nf, nf), (nb, nb)).copy_from(&t.s22);
        m
    };
    let rows: Vec<usize> = out_slots.iter().map(|s| s.2).collect();
    let cols: Vec<usize> = in_slots.iter().map(|s| s.2).collect();
    let s_oo = restrict(&full, &rows, &cols);
    let a = &y_out - &s_oo * &x_out;
    let rhs = &s_oo * &x_in - &y_in;
    let sv = a.clone().svd(false, false).singular_values;
    let cond = sv.max() / sv.min();
    if !cond.is_finite() || cond > 1e13 {
        return Err(Error::IllConditioned { cond });
    }
    let out = a.lu().solve(&rhs).ok_or(Error::IllConditioned { cond })?;
    let s = out.transpose();

    // Face amplitudes for every incoming wave.
    let xv = &x_in + &x_out * &out;
    let ncols = cols.len();
    let mut faces = Vec::with_capacity(n2o);
    let mut edge: f64 = 0.0;
    for k in 0..n2o {
        let mut input = nalgebra::DVector::<C64>::zeros(part.nf() + part.nb());
        for r in 0..ncols {
            input[cols[r]] = xv[(r, k)];
        }
        let output = &full * &input;
        let mut fc = Faces {
            f_left: vec![ZERO_C; n],
            g_left: vec![ZERO_C; n],
            f_right: vec![ZERO_C; n],
            g_right: vec![ZERO_C; n],
        };
        for (i, &slot) in part.fwd.iter().enumerate() {
            let (c, is_g) = (slot % n, slot >= n);
            let (l, r) = (input[i], output[i]);
            if is_g {
                fc.g_left[c] = l;
                fc.g_right[c] = r;
            } else {
                fc.f_left[c] = l;
                fc.f_right[c] = r;
            }
        }
        for (i, &slot) in part.bwd.iter().enumerate() {
            let c = slot % n;
            fc.g_right[c] = input[part.nf() + i];
            fc.g_left[c] = output[part.nf() + i];
        }
        for c in n.saturating_sub(2)..n {
            edge = edge.max(fc.f_right[c].norm()).max(fc.g_left[c].norm());
        }
        faces.push(fc);
    }
    if edge > cfg.edge_tol {
        return Err(Error::TruncationTooSmall {
            edge,
            tol: cfg.edge_tol,
        });
    }
    Ok(ScatteringSolution {
        basis,
        prop,
        s,
        cond,
        faces,
        edge_amplitude: edge,
    })
}

/// Smallest singular value of the homogeneous matching system: zero exactly when
/// `(𝒟 + δP − ω)w = 0` has a solution decaying at both ends through channels
/// that are closed at this energy.
pub fn bound_state_sigma(p: &PotentialSpec, basis: &ModeBasis, cfg: &SolverConfig) -> f64 {
    let prop = propagate(p, basis, Partition::standard(basis), cfg);
    let (a, b) = (&prop.left, &prop.right);
    let n = basis.len();
    let all: Vec<usize> = (0..n).collect();
    let open: Vec<usize> = (0..n)
        .filter(|&c| basis.channels[c].kind == ChannelKind::Propagating)
        .collect();
    let np = open.len();
    let k1 = CMat::identity(n, n) - &b.s21 * &a.s12;
    let k2 = restrict(&a.s22, &open, &all);
    let k3 = restrict(&(&b.s11 * &a.s12), &open, &all);
    let mut k = CMat::zeros(n + 2 * np, n);
    k.view_mut((0, 0), (n, n)).copy_from(&k1);
    k.view_mut((n, 0), (np, n)).copy_from(&k2);
    k.view_mut((n + np, 0), (np, n)).copy_from(&k3);
    k.svd(false, false).singular_values.min()
}

/// Augmented scattering matrix with its energy context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedScatteringMatrix {
    #[serde(rename = "N")]
    pub n: usize,
    pub eps: f64,
    pub delta: f64,
    pub omega: f64,
    /// Row-major; rows are incoming `(k, τ)`, columns outgoing `(j, θ)`.
    pub entries: Vec<Vec<C64>>,
}

impl AugmentedScatteringMatrix {
    pub fn from_matrix(m: &CMat, n: usize, eps: f64, delta: f64, omega: f64) -> Self {
        let entries = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
            .collect();
        AugmentedScatteringMatrix {
            n,
            eps,
            delta,
            omega,
            entries,
        }
    }

    pub fn matrix(&self) -> CMat {
        let k = self.entries.len();
        CMat::from_fn(k, k, |i, j| self.entries[i][j])
    }

    pub fn get(&self, k: usize, tau: Tau, j: usize, theta: Tau) -> C64 {
        self.entries[channel_index(k, tau)][channel_index(j, theta)]
    }

    /// The `2 × 2` block of the exponential pair.
    pub fn dagger_block(&self) -> CMat {
        let b = 2 * self.n - 2;
        CMat::from_fn(2, 2, |i, j| self.entries[b + i][b + j])
    }

    pub fn unitarity_defect(&self) -> f64 {
        let s = self.matrix();
        let k = s.nrows();
        (&s * s.adjoint() - CMat::identity(k, k))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Largest violation of `S_{kτ}^{kτ} = S_{k(−τ)}^{k(−τ)}` and
    /// `S_{kτ}^{jθ} = S_{j(−θ)}^{k(−τ)}`.
    pub fn t1_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 1..=self.n {
            for j in 1..=self.n {
                for tau in Tau::both() {
                    for theta in Tau::both() {
                        let d = if k == j {
                            if tau != theta {
                                continue;
                            }
                            self.get(k, tau, k, tau) - self.get(k, tau.flip(), k, tau.flip())
                        } else {
                            self.get(k, tau, j, theta) - self.get(j, theta.flip(), k, tau.flip())
                        };
                        worst = worst.max(d.norm());
                    }
                }
            }
        }
        worst
    }

    /// Largest `|S_{Nτ}^{jθ}|`, `|S_{jθ}^{Nτ}|` with `N − j` odd; zero for potentials
    /// even about `y = L/2`.
    pub fn t3_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in (1..self.n).filter(|j| (self.n - j) % 2 == 1) {
            for tau in Tau::both() {
                for theta in Tau::both() {
                    worst = worst
                        .max(self.get(self.n, tau, j, theta).norm())
                        .max(self.get(j, theta, self.n, tau).norm());
                }
            }
        }
        worst
    }
}

/// Automatic extraction half-length.
pub fn extraction_x(sol: &ScatteringSolution, cfg: &SolverConfig) -> f64 {
    if let Some(x) = cfg.x_half {
        return x;
    }
    let reach = sol.prop.x_left.abs().max(sol.prop.x_right.abs());
    let gamma = sol.basis.slowest_decay();
    let margin = if gamma.is_finite() {
        (1.0 / cfg.margin_decay).ln() / gamma
    } else {
        0.0
    };
    (reach + margin).max(sol.basis.geom.r0 + 1.0)
}

/// Scattering problem `(𝒟 + δP − ω)z = 0` at `ω = ω_N − ε`.
pub fn solve_scattering(
    p: &PotentialSpec,
    geom: &RibbonGeometry,
    n: usize,
    eps: f64,
    cfg: &SolverConfig,
) -> Result<ScatteringSolution> {
    p.validate()?;
    cfg.validate(n)?;
    let basis = ModeBasis::near_threshold(geom, n, eps, cfg.modes_for(n))?;
    let sol = solve_basis(p, basis, cfg)?;
    let x = extraction_x(&sol, cfg);
    if x <= geom.r0 {
        return Err(Error::InvalidParameter(format!("X = {x} must exceed R0 = {}", geom.r0)));
    }
    let reach = sol.prop.x_left.abs().max(sol.prop.x_right.abs());
    let remainder = sol.evanescent_remainder((x - reach).max(0.0));
    if remainder > cfg.tol {
        return Err(Error::InsufficientDomain {
            remainder,
            tol: cfg.tol,
        });
    }
    Ok(sol)
}

impl ScatteringSolution {
    pub fn matrix(&self, delta: f64) -> AugmentedScatteringMatrix {
        let nt = self.basis.near;
        AugmentedScatteringMatrix::from_matrix(
            &self.s,
            self.n_open(),
            nt.map(|t| t.eps).unwrap_or(0.0),
            delta,
            self.basis.omega,
        )
    }
}

/// Coefficients of a solution on one side, obtained by pairing with the
/// normalised waves through `q` at a cross-section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticDecomposition {
    pub side: Tau,
    pub section: f64,
    pub coefficients: Vec<(usize, Tau, C64)>,
    pub remainder_norm: f64,
}

/// Decompose `field` at `x = section` against `waves` (all of `q`-norm `τi`).
pub fn decompose(
    field: &SpinorField,
    waves: &[(usize, Tau, SpinorField)],
    side: Tau,
    section: f64,
) -> AsymptoticDecomposition {
    let coefficients: Vec<(usize, Tau, C64)> = waves
        .iter()
        .map(|(j, tau, w)| (*j, *tau, crate::symplectic::q(field, w, section) / (I * tau.sign())))
        .collect();
    let mut rem: f64 = 0.0;
    for k in 0..=32 {
        let y = field.geom.width * k as f64 / 32.0;
        let mut r = field.eval(section, y);
        for ((_, _, c), (_, _, w)) in coefficients.iter().zip(waves) {
            r = crate::waves::sub(r, crate::waves::scale(*c, w.eval(section, y)));
        }
        rem = rem.max(crate::waves::norm_max(&r));
    }
    AsymptoticDecomposition {
        side,
        section,
        coefficients,
        remainder_norm: rem,
    }
}

/// Re-extract S from the reconstructed exterior fields at `±x` and `±(x − 0.5)`;
/// returns the largest deviation from the matched matrix.
pub fn extraction_check(sol: &ScatteringSolution, x: f64) -> Result<f64> {
    let nt = sol
        .basis
        .near
        .ok_or_else(|| Error::RegimeMismatch("extraction check needs a near-threshold solve".into()))?;
    let waves = crate::waves::normalized_basis(&sol.basis.geom, nt.n, nt.eps)?;
    let mut worst: f64 = 0.0;
    for inc in 0..sol.s.nrows() {
        let (k, tau) = channel_label(inc);
        for side in Tau::both() {
            let field = sol.exterior_field(side, inc, x - 0.5);
            for sec in [x, x - 0.5] {
                let d = decompose(&field, &waves, side, side.sign() * sec);
                for (j, theta, c) in d.coefficients {
                    // V_k^τ is incoming from the side opposite to τ.
                    let expected = if theta == side {
                        sol.s[(inc, channel_index(j, theta))]
                    } else if j == k && theta == tau {
                        ONE
                    } else {
                        ZERO_C
                    };
                    worst = worst.max((c - expected).norm());
                }
            }
        }
    }
    Ok(worst)
}
