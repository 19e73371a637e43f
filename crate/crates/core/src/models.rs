//! Parametric Markov-up families and their assumption certificates.

use serde::{Deserialize, Serialize};

use crate::bounds::{jump_moment, q_bar, SeriesValue};
use crate::error::{Error, Result};
use crate::process::{FallWindow, GeometricTail, Kernel, StepDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaForm {
    /// `κ_i = 1 − a·r^i`.
    GeometricGap,
}

/// Non-decreasing lower bounds `κ_i` on the probability of continuing a fall
/// after `i` consecutive down-steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaSpec {
    pub form: KappaForm,
    pub a: f64,
    pub r: f64,
}

fn open_unit(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            expected: "a value in (0, 1)",
        })
    }
}

impl KappaSpec {
    pub fn geometric_gap(a: f64, r: f64) -> Result<Self> {
        let spec = KappaSpec {
            form: KappaForm::GeometricGap,
            a,
            r,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        open_unit("a", self.a)?;
        open_unit("r", self.r)
    }

    /// `1 − κ_i`, computed directly so it keeps full relative precision.
    pub fn gap_at(&self, i: u64) -> f64 {
        match self.form {
            KappaForm::GeometricGap => self.a * self.r.powf(i as f64),
        }
    }

    /// Probability `q = 1 − κ_0` of a non-decrease from a fresh window.
    pub fn q(&self) -> f64 {
        self.gap_at(0)
    }
}

pub fn kappa_at(spec: &KappaSpec, i: u64) -> f64 {
    1.0 - spec.gap_at(i)
}

/// Geometric up-jumps, unit down-steps, fall continuation governed by `κ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkModelSpec {
    pub kappa: KappaSpec,
    /// Parameter `s` of the up-jump law `P(Δ = j) = s(1 − s)^j`, `j ≥ 0`.
    pub up_jump: f64,
    pub floor: u64,
}

impl BenchmarkModelSpec {
    pub fn new(a: f64, r: f64, s: f64, floor: u64) -> Result<Self> {
        let spec = BenchmarkModelSpec {
            kappa: KappaSpec {
                form: KappaForm::GeometricGap,
                a,
                r,
            },
            up_jump: s,
            floor,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.kappa.validate()?;
        open_unit("s", self.up_jump)
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkKernel {
    spec: BenchmarkModelSpec,
}

impl BenchmarkKernel {
    pub fn spec(&self) -> &BenchmarkModelSpec {
        &self.spec
    }
}

pub fn build_benchmark(spec: &BenchmarkModelSpec) -> Result<BenchmarkKernel> {
    spec.validate()?;
    Ok(BenchmarkKernel { spec: *spec })
}

impl Kernel for BenchmarkKernel {
    fn floor(&self) -> u64 {
        self.spec.floor
    }

    fn next(&self, window: &FallWindow) -> StepDistribution {
        let x = window.current();
        let s = self.spec.up_jump;
        if x == 0 {
            return StepDistribution::new(
                Vec::new(),
                Some(GeometricTail {
                    start: 0,
                    mass: 1.0,
                    p: s,
                }),
            );
        }
        let up = self.spec.kappa.gap_at(window.fall_length() as u64);
        StepDistribution::new(
            vec![(x - 1, 1.0 - up)],
            Some(GeometricTail {
                start: x,
                mass: up,
                p: s,
            }),
        )
    }
}

/// Steps down by one every time (`κ ≡ 1`); stays put at 0.
#[derive(Debug, Clone, Copy)]
pub struct DescentKernel {
    pub floor: u64,
}

impl Kernel for DescentKernel {
    fn floor(&self) -> u64 {
        self.floor
    }

    fn next(&self, window: &FallWindow) -> StepDistribution {
        StepDistribution::point(window.current().saturating_sub(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Assumption {
    A1,
    A2,
    A3,
    A4,
    A5,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum AssumptionStatus {
    HoldsAnalytically,
    HoldsNumerically { tolerance: f64 },
    Fails { witness: String },
}

impl AssumptionStatus {
    pub fn holds(&self) -> bool {
        !matches!(self, AssumptionStatus::Fails { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionEntry {
    pub assumption: Assumption,
    #[serde(flatten)]
    pub status: AssumptionStatus,
    /// Whether the polynomial-moment theorem depends on this assumption.
    pub required: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpMoment {
    pub m: u32,
    pub value: SeriesValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCertificate {
    pub entries: Vec<AssumptionEntry>,
    pub q: f64,
    pub q_bar: SeriesValue,
    pub kappa_bar_inf: SeriesValue,
    pub jump_moments: Vec<JumpMoment>,
    /// Smallest fall length at which the stay probability drops below the
    /// tolerance, if it does.
    pub a2_witness_fall_length: Option<u64>,
}

impl AssumptionCertificate {
    pub fn entry(&self, which: Assumption) -> &AssumptionEntry {
        self.entries
            .iter()
            .find(|e| e.assumption == which)
            .expect("certificate lists every assumption")
    }

    /// True when every assumption the theorem needs holds.
    pub fn theorem_ready(&self) -> bool {
        self.entries
            .iter()
            .filter(|e| e.required)
            .all(|e| e.status.holds())
    }

    pub fn failing_required(&self) -> Vec<Assumption> {
        self.entries
            .iter()
            .filter(|e| e.required && !e.status.holds())
            .map(|e| e.assumption)
            .collect()
    }
}

pub fn certify(
    spec: &BenchmarkModelSpec,
    m_max: u32,
    tol: f64,
    epsilon: f64,
) -> Result<AssumptionCertificate> {
    spec.validate()?;
    if m_max == 0 {
        return Err(Error::InvalidParameter {
            name: "m_max",
            value: 0.0,
            expected: "a positive moment order",
        });
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "tol",
            value: tol,
            expected: "a positive tolerance",
        });
    }
    let kappa = &spec.kappa;
    let s = spec.up_jump;
    let q = kappa.q();
    let qb = q_bar(kappa, epsilon)?;
    let kappa_bar_inf = SeriesValue {
        value: 1.0 - qb.value - qb.tail_bound,
        truncation_k: qb.truncation_k,
        tail_bound: qb.tail_bound,
    };
    let jump_moments = (1..=m_max)
        .map(|m| jump_moment(s, m, epsilon).map(|value| JumpMoment { m, value }))
        .collect::<Result<Vec<_>>>()?;

    // P(stay) = (1 − κ_ℓ)·s vanishes as the fall length grows.
    let mut witness = 0u64;
    while kappa.gap_at(witness) * s >= tol {
        witness += 1;
    }

    let entries = vec![
        AssumptionEntry {
            assumption: Assumption::A1,
            status: AssumptionStatus::HoldsAnalytically,
            required: true,
            detail: "the kernel reads only the current falling segment".into(),
        },
        AssumptionEntry {
            assumption: Assumption::A2,
            status: AssumptionStatus::Fails {
                witness: format!(
                    "fall length {witness}: stay probability {:.3e} < {tol:e}",
                    kappa.gap_at(witness) * s
                ),
            },
            required: false,
            detail: "no uniform lower bound on the stay probability; not needed for the moment bound"
                .into(),
        },
        AssumptionEntry {
            assumption: Assumption::A3,
            status: AssumptionStatus::HoldsAnalytically,
            required: true,
            detail: format!("kappa strictly increasing, q = 1 - kappa_0 = {q}"),
        },
        AssumptionEntry {
            assumption: Assumption::A4,
            status: AssumptionStatus::HoldsAnalytically,
            required: true,
            detail: format!(
                "geometric gaps make every polynomial series converge; q_bar = {:.12}",
                qb.value
            ),
        },
        AssumptionEntry {
            assumption: Assumption::A5,
            status: AssumptionStatus::HoldsAnalytically,
            required: true,
            detail: format!("geometric up-jumps with s = {s} have all moments finite"),
        },
    ];

    Ok(AssumptionCertificate {
        entries,
        q,
        q_bar: qb,
        kappa_bar_inf,
        jump_moments,
        a2_witness_fall_length: Some(witness),
    })
}
