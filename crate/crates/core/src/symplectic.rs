//! Cross-section form `q`, the two-sided form `Q_R`, biorthogonality tables
//! and the energy-flux classification of waves.

use crate::quadrature::GaussRule;
use crate::spectrum::{self, RibbonGeometry};
use crate::waves::{make_wave, normalized_basis, Family, Regime, SpinorField, Tau, WaveLabel};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};

pub const DEFAULT_NQUAD: usize = 128;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QFormResult {
    pub value: C64,
    pub section_x: f64,
    pub quadrature_points: usize,
}

/// `q_a(w, w̃) = −i∫₀ᴸ (ū~ v + v̄~ u − ū~' v' − v̄~' u') dy` at `x = a`.
pub fn qform(w: &SpinorField, wt: &SpinorField, a: f64, n_quad: usize) -> QFormResult {
    let rule = GaussRule::new(n_quad, 0.0, w.geom.width);
    let mut acc = C64::new(0.0, 0.0);
    for (y, wy) in rule.iter() {
        let p = w.eval(a, y);
        let t = wt.eval(a, y);
        acc += wy * (t[0].conj() * p[1] + t[1].conj() * p[0] - t[2].conj() * p[3] - t[3].conj() * p[2]);
    }
    QFormResult {
        value: -I * acc,
        section_x: a,
        quadrature_points: n_quad,
    }
}

pub fn q(w: &SpinorField, wt: &SpinorField, a: f64) -> C64 {
    qform(w, wt, a, DEFAULT_NQUAD).value
}

/// Largest spread of `q_a` over the given sections.
pub fn q_section_independence(w: &SpinorField, wt: &SpinorField, sections: &[f64], n_quad: usize) -> f64 {
    let vals: Vec<C64> = sections.iter().map(|&a| qform(w, wt, a, n_quad).value).collect();
    let mut worst: f64 = 0.0;
    for (i, a) in vals.iter().enumerate() {
        for b in &vals[i + 1..] {
            worst = worst.max((a - b).norm());
        }
    }
    worst
}

/// `Q_R(w, w̃) = q_R(w, w̃) − q_{−R}(w, w̃)`.
pub fn q_two_sided(w: &SpinorField, wt: &SpinorField, r: f64, n_quad: usize) -> C64 {
    qform(w, wt, r, n_quad).value - qform(w, wt, -r, n_quad).value
}

/// `Q_R` with the requirement that both sections lie outside the cutoff ramps.
#[allow(non_snake_case)]
pub fn QR(w: &SpinorField, wt: &SpinorField, r: f64) -> Result<C64> {
    let need = w.geom.r0 + CUTOFF_WIDTH;
    if r < need {
        return Err(Error::InvalidParameter(format!(
            "Q_R needs R ≥ R0 + {CUTOFF_WIDTH} = {need}, got {r}"
        )));
    }
    Ok(q_two_sided(w, wt, r, DEFAULT_NQUAD))
}

/// Energy flux `Re(−i|ω|² q(w, w))` through a cross-section.
pub fn energy_flux(w: &SpinorField, a: f64) -> f64 {
    (-I * w.omega * w.omega * q(w, w, a)).re
}

/// Width of the cutoff transition beyond `R0`.
pub const CUTOFF_WIDTH: f64 = 1.0;

fn bump(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

fn bump_d(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp() / (t * t)
    } else {
        0.0
    }
}

/// C∞ step rising from 0 at `t ≤ 0` to 1 at `t ≥ 1`, with its derivative.
pub fn smoothstep(t: f64) -> (f64, f64) {
    let (a, b) = (bump(t), bump(1.0 - t));
    let s = a + b;
    let (da, db) = (bump_d(t), -bump_d(1.0 - t));
    (a / s, (da * s - a * (da + db)) / (s * s))
}

/// `χ_+` (equal to 1 for `x ≥ R0 + 1`, 0 for `x ≤ R0`) or `χ_−(x) = χ_+(−x)`.
pub fn chi(side: Tau, r0: f64, x: f64) -> (f64, f64) {
    match side {
        Tau::Plus => smoothstep((x - r0) / CUTOFF_WIDTH),
        Tau::Minus => {
            let (v, d) = smoothstep((-x - r0) / CUTOFF_WIDTH);
            (v, -d)
        }
    }
}

/// Outgoing `W_k^τ = χ_τ 𝐰_k^τ` and incoming `V_k^τ = χ_{−τ} 𝐰_k^τ` at `ω_N − ε`,
/// each in the order `(1,+), (1,−), …, (N,−)`.
pub fn localized_waves(geom: &RibbonGeometry, n: usize, eps: f64) -> Result<(Vec<SpinorField>, Vec<SpinorField>)> {
    let r0 = geom.r0;
    let basis = normalized_basis(geom, n, eps)?;
    let mut ws = Vec::with_capacity(2 * n);
    let mut vs = Vec::with_capacity(2 * n);
    for (_, tau, w) in &basis {
        let t = *tau;
        ws.push(w.with_envelope(move |x| chi(t, r0, x)));
        vs.push(w.with_envelope(move |x| chi(t.flip(), r0, x)));
    }
    Ok((ws, vs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub name: String,
    pub value: C64,
    pub expected: C64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiorthogonalityReport {
    pub regime: Regime,
    pub n_quad: usize,
    pub entries: Vec<TableEntry>,
    pub max_deviation: f64,
}

struct Table {
    entries: Vec<TableEntry>,
}

impl Table {
    fn push(&mut self, name: String, value: C64, expected: C64) {
        let deviation = (value - expected).norm();
        self.entries.push(TableEntry {
            name,
            value,
            expected,
            deviation,
        });
    }
}

fn delta(a: bool) -> f64 {
    if a {
        1.0
    } else {
        0.0
    }
}

fn propagating_block(t: &mut Table, geom: &RibbonGeometry, regime: Regime, count: usize, n_quad: usize) -> Result<()> {
    let mk = |f, j, tau| make_wave(WaveLabel::new(f, j, Some(tau)), geom, regime);
    for j in 1..=count {
        for tau in Tau::both() {
            let raw = mk(Family::Oscillatory, j, tau)?;
            let lam = raw.terms().unwrap()[0].lambda.re.abs();
            let want = I * (4.0 * tau.sign() * geom.width * lam / raw.omega);
            t.push(
                format!("q(w_{j}^{tau}, w_{j}^{tau})"),
                qform(&raw, &raw, 0.0, n_quad).value,
                want,
            );
            let a = mk(Family::OscillatoryNormalized, j, tau)?;
            for k in 1..=count {
                for th in Tau::both() {
                    let b = mk(Family::OscillatoryNormalized, k, th)?;
                    let want = I * tau.sign() * delta(j == k && tau == th);
                    t.push(
                        format!("q(W_{j}^{tau}, W_{k}^{th})"),
                        qform(&a, &b, 0.37, n_quad).value,
                        want,
                    );
                }
            }
        }
    }
    Ok(())
}

/// Every biorthogonality relation that applies in the regime, with deviations.
///
/// For `Regime::Omega` the propagating block is checked; for
/// `Regime::Near { n, eps }` the full table including the exponential pair,
/// the threshold pair at `ε = 0` and the `Q_R` tables of the localized waves.
pub fn biorthogonality_table(geom: &RibbonGeometry, regime: Regime, n_quad: usize) -> Result<BiorthogonalityReport> {
    let mut t = Table { entries: Vec::new() };
    match regime {
        Regime::Omega(w) => {
            let m = spectrum::propagating_modes(geom, w)?.len();
            propagating_block(&mut t, geom, regime, m, n_quad)?;
        }
        Regime::Near { n, eps } => {
            let nt = spectrum::near_threshold(geom, n, eps)?;
            let l = geom.width;
            propagating_block(&mut t, geom, regime, n - 1, n_quad)?;
            let mk = |f, tau| make_wave(WaveLabel::new(f, n, tau), geom, regime);
            let wp = mk(Family::NearExpRaw, Some(Tau::Plus))?;
            let wm = mk(Family::NearExpRaw, Some(Tau::Minus))?;
            let qa = |a: &SpinorField, b: &SpinorField| qform(a, b, 0.37, n_quad).value;
            let zero = C64::new(0.0, 0.0);
            let four = 4.0 * l / nt.omega_eps;
            t.push("q(w_N^+, w_N^+)".into(), qa(&wp, &wp), zero);
            t.push("q(w_N^-, w_N^-)".into(), qa(&wm, &wm), zero);
            // Consistent with q(w^e+, w^e-) = 2iL/ω_ε below; the relation
            // q(w^-, w^+) = 4iLλ₊/ω_ε holds with λ₊ = −λ_ε.
            t.push("q(w_N^-, w_N^+)".into(), qa(&wm, &wp), -I * four * nt.lambda_eps);
            t.push("q(w_N^+, w_N^-)".into(), qa(&wp, &wm), I * four * nt.lambda_eps);
            let ap = mk(Family::NearExpAnalyticPlus, None)?;
            let am = mk(Family::NearExpAnalyticMinus, None)?;
            t.push("q(w^e+, w^e+)".into(), qa(&ap, &ap), zero);
            t.push("q(w^e+, w^e-)".into(), qa(&ap, &am), I * (2.0 * l / nt.omega_eps));
            t.push("q(w^e-, w^e-)".into(), qa(&am, &am), zero);
            let basis = normalized_basis(geom, n, eps)?;
            for (j, tau, a) in &basis {
                for (k, th, b) in &basis {
                    if *j < n && *k < n {
                        continue;
                    }
                    let want = I * tau.sign() * delta(j == k && tau == th);
                    t.push(format!("q(W_{j}^{tau}, W_{k}^{th})"), qa(a, b), want);
                }
            }
            let th = Regime::Near { n, eps: 0.0 };
            let w0 = make_wave(WaveLabel::new(Family::Threshold0, n, None), geom, th)?;
            let w1 = make_wave(WaveLabel::new(Family::Threshold1, n, None), geom, th)?;
            t.push("q(w_N^0, w_N^0)".into(), qa(&w0, &w0), zero);
            t.push(
                "q(w_N^0, w_N^1)".into(),
                qa(&w0, &w1),
                C64::new(-2.0 * l / nt.omega_n, 0.0),
            );
            t.push("q(w_N^1, w_N^1)".into(), qa(&w1, &w1), zero);
            let (ws, vs) = localized_waves(geom, n, eps)?;
            let labels: Vec<(usize, Tau)> = basis.iter().map(|(j, t, _)| (*j, *t)).collect();
            // Smallest admissible section: the exponential pair grows like
            // e^{|λ_ε| R}, and Q_R cancels that growth in floating point.
            let r = geom.r0 + CUTOFF_WIDTH;
            for (a, (j, tau)) in labels.iter().enumerate() {
                for (b, (k, th)) in labels.iter().enumerate() {
                    let d = delta(a == b);
                    t.push(
                        format!("Q(W_{j}^{tau}, W_{k}^{th})"),
                        q_two_sided(&ws[a], &ws[b], r, n_quad),
                        I * d,
                    );
                    t.push(
                        format!("Q(V_{j}^{tau}, V_{k}^{th})"),
                        q_two_sided(&vs[a], &vs[b], r, n_quad),
                        -I * d,
                    );
                    t.push(
                        format!("Q(W_{j}^{tau}, V_{k}^{th})"),
                        q_two_sided(&ws[a], &vs[b], r, n_quad),
                        zero,
                    );
                }
            }
        }
    }
    let max_deviation = t.entries.iter().map(|e| e.deviation).fold(0.0, f64::max);
    Ok(BiorthogonalityReport {
        regime,
        n_quad,
        entries: t.entries,
        max_deviation,
    })
}
