//! Certified evaluation of the series and constants behind the moment bounds.
//!
//! Every infinite sum is returned as a [`SeriesValue`]: a partial sum plus an
//! upper bound on everything that was left out. The bounds use elementary
//! ratio majorants: for terms `t_k = k^m ρ^k` the ratio `t_{k+1}/t_k`
//! is decreasing in `k`, so past index `K` the tail is dominated by a
//! geometric series with ratio `ρ((K+1)/K)^m`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{BenchmarkModelSpec, KappaForm, KappaSpec};

pub const DEFAULT_EPSILON: f64 = 1e-10;

/// A partial sum whose true limit lies in `[value, value + tail_bound]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    pub value: f64,
    pub truncation_k: u64,
    pub tail_bound: f64,
}

impl SeriesValue {
    pub fn exact(value: f64) -> Self {
        SeriesValue {
            value,
            truncation_k: 0,
            tail_bound: 0.0,
        }
    }

    pub fn upper(&self) -> f64 {
        self.value + self.tail_bound
    }

    pub fn scaled(self, factor: f64) -> Self {
        SeriesValue {
            value: self.value * factor,
            truncation_k: self.truncation_k,
            tail_bound: self.tail_bound * factor,
        }
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "epsilon",
            value: epsilon,
            expected: "a positive tolerance",
        })
    }
}

fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidQ(q))
    }
}

/// Tail majorant for `Σ_{k>K} k^m ρ^k` given the term at `K`, if the
/// ratio bound is already below one.
fn ratio_tail(term: f64, k: u64, m: u32, ratio: f64) -> Option<f64> {
    let rho = ratio * ((k + 1) as f64 / k as f64).powi(m as i32);
    (rho < 1.0).then(|| term * rho / (1.0 - rho))
}

/// `Σ_{k≥1} k^m q^k` with a certified tail below `epsilon`.
pub fn power_series(m: u32, q: f64, epsilon: f64) -> Result<SeriesValue> {
    check_q(q)?;
    check_epsilon(epsilon)?;
    let mut sum = 0.0;
    let mut k = 1u64;
    loop {
        let term = (k as f64).powi(m as i32) * q.powi(k as i32);
        sum += term;
        if let Some(tail) = ratio_tail(term, k, m, q) {
            if tail < epsilon {
                return Ok(SeriesValue {
                    value: sum,
                    truncation_k: k,
                    tail_bound: tail,
                });
            }
        }
        k += 1;
    }
}

/// `Σ_{i≥1} i^m (1 − κ_i)`, the fall-length constant.
pub fn lemma2_sum(m: u32, kappa: &KappaSpec, epsilon: f64) -> Result<SeriesValue> {
    kappa.validate()?;
    check_epsilon(epsilon)?;
    match kappa.form {
        KappaForm::GeometricGap => {
            Ok(power_series(m, kappa.r, epsilon / kappa.a)?.scaled(kappa.a))
        }
    }
}

/// `E G^m` for `G` geometric on `{0, 1, …}` with `P(G = j) = s(1 − s)^j`.
pub fn jump_moment(s: f64, m: u32, epsilon: f64) -> Result<SeriesValue> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidParameter {
            name: "s",
            value: s,
            expected: "a value in (0, 1)",
        });
    }
    let mut series = power_series(m, 1.0 - s, epsilon / s)?.scaled(s);
    if m == 0 {
        // The j = 0 atom contributes 0^0 = 1.
        series.value += s;
    }
    Ok(series)
}

/// Both readings of the overshoot constant and the larger of the two.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma3Bound {
    /// `M_m Σ_{i≥1} i^m q^{i−1}`, as assembled in the proof.
    pub proof_assembled: SeriesValue,
    /// `M_m q Σ_{i≥1} i^m q^i`, as written in the statement.
    pub statement_literal: SeriesValue,
    pub certified: SeriesValue,
}

pub fn lemma3_bound(m: u32, q: f64, jump_moment: f64, epsilon: f64) -> Result<Lemma3Bound> {
    check_q(q)?;
    check_epsilon(epsilon)?;
    if !(jump_moment >= 0.0 && jump_moment.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "jump_moment",
            value: jump_moment,
            expected: "a finite non-negative moment",
        });
    }
    let scale = (jump_moment / q).max(1.0);
    let base = power_series(m, q, epsilon / scale)?;
    let proof_assembled = base.scaled(jump_moment / q);
    let statement_literal = base.scaled(jump_moment * q);
    let certified = if proof_assembled.upper() >= statement_literal.upper() {
        proof_assembled
    } else {
        statement_literal
    };
    Ok(Lemma3Bound {
        proof_assembled,
        statement_literal,
        certified,
    })
}

/// `q̄ = 1 − Π_{i≥0} κ_i`, the bound on the probability that a fall stalls
/// before reaching the floor.
pub fn q_bar(kappa: &KappaSpec, epsilon: f64) -> Result<SeriesValue> {
    kappa.validate()?;
    check_epsilon(epsilon)?;
    let KappaSpec { a, r, .. } = *kappa;
    let mut product = 1.0;
    let mut k = 0u64;
    loop {
        let kappa_k = 1.0 - kappa.gap_at(k);
        product *= kappa_k;
        // −Σ_{i>K} ln κ_i ≤ Σ_{i>K} (1 − κ_i)/κ_K = a r^{K+1} / ((1 − r) κ_K).
        let log_tail = a * r.powf((k + 1) as f64) / ((1.0 - r) * kappa_k);
        let tail = -(-log_tail).exp_m1() * product;
        if tail < epsilon {
            return Ok(SeriesValue {
                value: 1.0 - product,
                truncation_k: k,
                tail_bound: tail,
            });
        }
        k += 1;
    }
}

/// All constants needed for one moment order `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSet {
    pub m: u32,
    pub epsilon: f64,
    pub q: f64,
    pub q_bar: SeriesValue,
    /// Rise-length constant `Σ k^m q^k`.
    pub m2: SeriesValue,
    /// Fall-length constant `Σ i^m (1 − κ_i)`.
    pub m3: SeriesValue,
    /// Up-jump moment `E (Δ_+)^m`.
    pub jump_moment: SeriesValue,
    /// Overshoot constant.
    pub m4: Lemma3Bound,
}

pub fn bound_set(m: u32, spec: &BenchmarkModelSpec, epsilon: f64) -> Result<BoundSet> {
    spec.validate()?;
    if m == 0 {
        return Err(Error::InvalidParameter {
            name: "m",
            value: 0.0,
            expected: "a positive moment order",
        });
    }
    let q = spec.kappa.q();
    let jump = jump_moment(spec.up_jump, m, epsilon)?;
    Ok(BoundSet {
        m,
        epsilon,
        q,
        q_bar: q_bar(&spec.kappa, epsilon)?,
        m2: power_series(m, q, epsilon)?,
        m3: lemma2_sum(m, &spec.kappa, epsilon)?,
        jump_moment: jump,
        m4: lemma3_bound(m, q, jump.upper(), epsilon)?,
    })
}

/// Upper bound on `E_x τ^m`, evaluated along two routes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremBound {
    pub m: u32,
    pub x: u64,
    /// `2^{2m−2}`.
    pub c1: f64,
    /// `(M2 + M3 + M4 q̄) Σ i^m q̄^{i−1}`.
    pub c2: f64,
    /// `c1 (x^m + c2)`.
    pub closed_form: f64,
    /// The proof's final sum evaluated term by term.
    pub term_by_term: f64,
    /// The larger of the two.
    pub value: f64,
}

pub fn theorem_bound(m: u32, x: u64, bounds: &BoundSet) -> Result<TheoremBound> {
    if m == 0 {
        return Err(Error::InvalidParameter {
            name: "m",
            value: 0.0,
            expected: "a positive moment order",
        });
    }
    let eps = bounds.epsilon;
    let qb = bounds.q_bar.upper();
    check_q(qb)?;
    let m2 = bounds.m2.upper();
    let m3 = bounds.m3.upper();
    let m4 = bounds.m4.certified.upper();
    let half_c1 = 2f64.powi(m as i32 - 1);
    let c1 = half_c1 * half_c1;
    let x_m = (x as f64).powi(m as i32);

    let s = power_series(m, qb, eps)?.upper() / qb;
    let c2 = (m2 + m3 + m4 * qb) * s;
    let closed_form = c1 * (x_m + c2);

    // 2^{m−1} Σ_i [2^{m−1} i^m M2 q̄^{i−1} + 2^{m−1} (i−1)^m M3 q̄^{i−2}]
    //   + 2^{2m−2} x^m + 2^{m−1} Σ_i 2^{m−1} i^m M4 q̄^{i−1},
    // with the (i−1)^m q̄^{i−2} term read as 0 at i = 1.
    let mut sum = 0.0;
    let mut i = 1u64;
    let tail = loop {
        let rise = (i as f64).powi(m as i32) * qb.powi(i as i32 - 1);
        let fall = if i >= 2 {
            ((i - 1) as f64).powi(m as i32) * qb.powi(i as i32 - 2)
        } else {
            0.0
        };
        sum += c1 * (m2 * rise + m3 * fall + m4 * rise);
        let rise_tail = ratio_tail(rise, i, m, qb);
        let fall_tail = if i >= 2 {
            ratio_tail(fall, i - 1, m, qb)
        } else {
            None
        };
        if let (Some(rt), Some(ft)) = (rise_tail, fall_tail) {
            let tail = c1 * ((m2 + m4) * rt + m3 * ft);
            if tail < eps {
                break tail;
            }
        }
        i += 1;
    };
    let term_by_term = c1 * x_m + sum + tail;

    Ok(TheoremBound {
        m,
        x,
        c1,
        c2,
        closed_form,
        term_by_term,
        value: closed_form.max(term_by_term),
    })
}
