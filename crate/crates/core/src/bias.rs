//! Present-bias distributions supported on `[1, ∞)`.
//!
//! `survival(x)` is `Pr[B >= x]` (left-continuous), `cdf(x)` is `Pr[B <= x]`
//! (right-continuous). The revenue parameter `z` is `sup_{b>1} b·Pr[B >= b]`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::numeric;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("finite distribution needs at least one atom")]
    NoAtoms,
    #[error("atom {0} lies below 1")]
    AtomBelowOne(f64),
    #[error("atom probabilities must be nonnegative and sum to 1 (got {0})")]
    BadMass(f64),
    #[error("invalid parameters for {kind}: {reason}")]
    BadParameter { kind: &'static str, reason: String },
}

/// Wire format of a distribution spec file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistSpec {
    Finite { atoms: Vec<(f64, f64)> },
    Uniform { lo: f64, hi: f64 },
    EqualRevenue { z: f64, cap: f64 },
    HalfNormal { mean: f64, sd: f64 },
    HeavyTailSqrt { cap: f64 },
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    /// Sorted by value, strictly increasing, masses summing to 1.
    Finite(Vec<(f64, f64)>),
    Uniform {
        lo: f64,
        hi: f64,
    },
    EqualRevenue {
        z: f64,
        cap: f64,
    },
    HalfNormal {
        mean: f64,
        sd: f64,
    },
    HeavyTailSqrt {
        cap: f64,
    },
}

/// A validated bias distribution. Immutable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistSpec", into = "DistSpec")]
pub struct BiasDistribution {
    kind: Kind,
}

/// The revenue parameter of a distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZValue {
    /// `+∞` when `b·Pr[B >= b]` is unbounded.
    pub z: f64,
    /// Smallest point where the supremum is attained (or approached, for
    /// suprema reached only in the limit `b -> 1+`).
    pub argmax_b: f64,
    /// Closed form rather than numeric search.
    pub exact: bool,
}

impl ZValue {
    pub fn is_unbounded(&self) -> bool {
        self.z.is_infinite()
    }
}

impl TryFrom<DistSpec> for BiasDistribution {
    type Error = DistError;

    fn try_from(spec: DistSpec) -> Result<Self, DistError> {
        match spec {
            DistSpec::Finite { atoms } => Self::finite(&atoms),
            DistSpec::Uniform { lo, hi } => Self::uniform(lo, hi),
            DistSpec::EqualRevenue { z, cap } => Self::equal_revenue(z, cap),
            DistSpec::HalfNormal { mean, sd } => Self::half_normal(mean, sd),
            DistSpec::HeavyTailSqrt { cap } => Self::heavy_tail_sqrt(cap),
        }
    }
}

impl From<BiasDistribution> for DistSpec {
    fn from(d: BiasDistribution) -> Self {
        match d.kind {
            Kind::Finite(atoms) => DistSpec::Finite { atoms },
            Kind::Uniform { lo, hi } => DistSpec::Uniform { lo, hi },
            Kind::EqualRevenue { z, cap } => DistSpec::EqualRevenue { z, cap },
            Kind::HalfNormal { mean, sd } => DistSpec::HalfNormal { mean, sd },
            Kind::HeavyTailSqrt { cap } => DistSpec::HeavyTailSqrt { cap },
        }
    }
}

fn bad(kind: &'static str, reason: impl Into<String>) -> DistError {
    DistError::BadParameter {
        kind,
        reason: reason.into(),
    }
}

impl BiasDistribution {
    /// Atoms `(value, probability)`. Masses within `1e-6` of summing to one
    /// are renormalized; equal values merge; zero masses are dropped.
    pub fn finite(atoms: &[(f64, f64)]) -> Result<Self, DistError> {
        let mut atoms: Vec<(f64, f64)> = atoms.iter().copied().filter(|a| a.1 != 0.0).collect();
        if atoms.is_empty() {
            return Err(DistError::NoAtoms);
        }
        for &(b, p) in &atoms {
            if !b.is_finite() || b < 1.0 {
                return Err(DistError::AtomBelowOne(b));
            }
            if !(p.is_finite() && p > 0.0) {
                return Err(DistError::BadMass(p));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(DistError::BadMass(total));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (b, p) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == b => last.1 += p,
                _ => merged.push((b, p)),
            }
        }
        let total: f64 = merged.iter().map(|a| a.1).sum();
        for a in &mut merged {
            a.1 /= total;
        }
        Ok(BiasDistribution {
            kind: Kind::Finite(merged),
        })
    }

    pub fn point_mass(b: f64) -> Result<Self, DistError> {
        Self::finite(&[(b, 1.0)])
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self, DistError> {
        if !(lo.is_finite() && hi.is_finite()) || lo < 1.0 || hi <= lo {
            return Err(bad("uniform", format!("need 1 <= lo < hi, got [{lo}, {hi}]")));
        }
        Ok(BiasDistribution {
            kind: Kind::Uniform { lo, hi },
        })
    }

    /// `Pr[B <= x] = 1 - z/x` on `[max(1,z), cap)` with the remaining
    /// `z/cap` mass at `cap` (plus `1 - z` at 1 when `z < 1`).
    pub fn equal_revenue(z: f64, cap: f64) -> Result<Self, DistError> {
        if !(z.is_finite() && z > 0.0) {
            return Err(bad("equal_revenue", format!("z must be positive, got {z}")));
        }
        if !cap.is_finite() || cap <= z.max(1.0) {
            return Err(bad("equal_revenue", format!("cap must exceed max(1, z), got {cap}")));
        }
        Ok(BiasDistribution {
            kind: Kind::EqualRevenue { z, cap },
        })
    }

    /// `B = max(X, 1)` with `X ~ Normal(mean, sd)`.
    pub fn half_normal(mean: f64, sd: f64) -> Result<Self, DistError> {
        if !(mean.is_finite() && sd.is_finite() && sd > 0.0) {
            return Err(bad(
                "half_normal",
                format!("need finite mean and sd > 0, got ({mean}, {sd})"),
            ));
        }
        Ok(BiasDistribution {
            kind: Kind::HalfNormal { mean, sd },
        })
    }

    /// `Pr[B <= x] = 1 - 1/(2·sqrt(x))` on `[1, cap)`, remaining mass at `cap`.
    pub fn heavy_tail_sqrt(cap: f64) -> Result<Self, DistError> {
        if !cap.is_finite() || cap <= 1.0 {
            return Err(bad("heavy_tail_sqrt", format!("cap must exceed 1, got {cap}")));
        }
        Ok(BiasDistribution {
            kind: Kind::HeavyTailSqrt { cap },
        })
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_spec(&self) -> DistSpec {
        self.clone().into()
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            Kind::Finite(_) => "finite",
            Kind::Uniform { .. } => "uniform",
            Kind::EqualRevenue { .. } => "equal_revenue",
            Kind::HalfNormal { .. } => "half_normal",
            Kind::HeavyTailSqrt { .. } => "heavy_tail_sqrt",
        }
    }

    pub fn is_finite_support(&self) -> bool {
        matches!(self.kind, Kind::Finite(_))
    }

    fn normal(mean: f64, sd: f64) -> Normal {
        Normal::new(mean, sd).expect("validated normal parameters")
    }

    /// `Pr[B <= x]`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < 1.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Finite(atoms) => atoms.iter().take_while(|a| a.0 <= x).map(|a| a.1).sum::<f64>().min(1.0),
            &Kind::Uniform { lo, hi } => {
                if x < lo {
                    0.0
                } else if x >= hi {
                    1.0
                } else {
                    (x - lo) / (hi - lo)
                }
            }
            &Kind::EqualRevenue { z, cap } => {
                if x >= cap {
                    1.0
                } else if x < z.max(1.0) {
                    0.0
                } else {
                    1.0 - z / x
                }
            }
            &Kind::HalfNormal { mean, sd } => Self::normal(mean, sd).cdf(x),
            &Kind::HeavyTailSqrt { cap } => {
                if x >= cap {
                    1.0
                } else {
                    1.0 - 0.5 / x.sqrt()
                }
            }
        }
    }

    /// `Pr[B >= x]`.
    pub fn survival(&self, x: f64) -> f64 {
        if x <= 1.0 {
            return 1.0;
        }
        match &self.kind {
            Kind::Finite(atoms) => atoms.iter().filter(|a| a.0 >= x).map(|a| a.1).sum::<f64>().min(1.0),
            &Kind::Uniform { lo, hi } => {
                if x <= lo {
                    1.0
                } else if x > hi {
                    0.0
                } else {
                    (hi - x) / (hi - lo)
                }
            }
            &Kind::EqualRevenue { z, cap } => {
                if x > cap {
                    0.0
                } else if x <= z.max(1.0) {
                    1.0
                } else {
                    z / x
                }
            }
            &Kind::HalfNormal { mean, sd } => Self::normal(mean, sd).sf(x),
            &Kind::HeavyTailSqrt { cap } => {
                if x > cap {
                    0.0
                } else {
                    0.5 / x.sqrt()
                }
            }
        }
    }

    /// `Pr[B > x]`.
    pub fn survival_strict(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }

    /// Point masses `(value, probability)` in increasing order.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        match &self.kind {
            Kind::Finite(atoms) => atoms.clone(),
            Kind::Uniform { .. } => Vec::new(),
            &Kind::EqualRevenue { z, cap } => {
                let mut out = Vec::new();
                if z < 1.0 {
                    out.push((1.0, 1.0 - z));
                }
                out.push((cap, z / cap));
                out
            }
            &Kind::HalfNormal { mean, sd } => {
                let p = Self::normal(mean, sd).cdf(1.0);
                if p > 0.0 {
                    vec![(1.0, p)]
                } else {
                    Vec::new()
                }
            }
            &Kind::HeavyTailSqrt { cap } => vec![(1.0, 0.5), (cap, 0.5 / cap.sqrt())],
        }
    }

    pub fn support_lower(&self) -> f64 {
        match &self.kind {
            Kind::Finite(atoms) => atoms[0].0,
            &Kind::Uniform { lo, .. } => lo,
            &Kind::EqualRevenue { z, .. } => z.max(1.0),
            Kind::HalfNormal { .. } | Kind::HeavyTailSqrt { .. } => 1.0,
        }
    }

    /// Upper end of the support; for unbounded kinds, a point beyond which
    /// the remaining mass is below `1e-30`.
    pub fn support_upper(&self) -> f64 {
        match &self.kind {
            Kind::Finite(atoms) => atoms[atoms.len() - 1].0,
            &Kind::Uniform { hi, .. } => hi,
            &Kind::EqualRevenue { cap, .. } => cap,
            &Kind::HalfNormal { mean, sd } => (mean + 12.0 * sd).max(1.0 + sd),
            &Kind::HeavyTailSqrt { cap } => cap,
        }
    }

    /// Generalized inverse cdf: the smallest `x` with `cdf(x) > u`, for `u` in `[0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::Finite(atoms) => {
                let mut acc = 0.0;
                for &(b, p) in atoms {
                    acc += p;
                    if u < acc {
                        return b;
                    }
                }
                atoms[atoms.len() - 1].0
            }
            &Kind::Uniform { lo, hi } => lo + u * (hi - lo),
            &Kind::EqualRevenue { z, cap } => {
                if z < 1.0 && u < 1.0 - z {
                    return 1.0;
                }
                (z / (1.0 - u)).clamp(z.max(1.0), cap)
            }
            &Kind::HalfNormal { mean, sd } => {
                let normal = Self::normal(mean, sd);
                if u <= normal.cdf(1.0) {
                    1.0
                } else {
                    normal.inverse_cdf(u).max(1.0)
                }
            }
            &Kind::HeavyTailSqrt { cap } => {
                if u < 0.5 {
                    1.0
                } else {
                    (0.25 / ((1.0 - u) * (1.0 - u))).min(cap)
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }

    /// `sup_{b>1} b·Pr[B >= b]`, with the smallest maximizer.
    pub fn z_value(&self) -> ZValue {
        match &self.kind {
            Kind::Finite(atoms) => {
                // limit at 1+ is Pr[B > 1]; between atoms b·S(b) rises to the next atom
                let mut best = ZValue {
                    z: self.survival_strict(1.0),
                    argmax_b: 1.0,
                    exact: true,
                };
                for &(b, _) in atoms.iter().filter(|a| a.0 > 1.0) {
                    let v = b * self.survival(b);
                    if v > best.z {
                        best = ZValue {
                            z: v,
                            argmax_b: b,
                            exact: true,
                        };
                    }
                }
                best
            }
            &Kind::Uniform { lo, hi } => {
                let b = (0.5 * hi).max(lo);
                ZValue {
                    z: b * self.survival(b.max(1.0)),
                    argmax_b: b,
                    exact: true,
                }
            }
            &Kind::EqualRevenue { z, .. } => ZValue {
                z,
                argmax_b: z.max(1.0),
                exact: true,
            },
            &Kind::HeavyTailSqrt { cap } => ZValue {
                z: 0.5 * cap.sqrt(),
                argmax_b: cap,
                exact: true,
            },
            Kind::HalfNormal { .. } => {
                let at_one = self.survival_strict(1.0);
                let revenue = |b: f64| if b <= 1.0 { at_one } else { b * self.survival(b) };
                let (b, v) = numeric::maximize(revenue, 1.0, self.support_upper());
                if v > at_one {
                    ZValue {
                        z: v,
                        argmax_b: b,
                        exact: false,
                    }
                } else {
                    ZValue {
                        z: at_one,
                        argmax_b: 1.0,
                        exact: false,
                    }
                }
            }
        }
    }

    /// Probe points covering both supports: atoms, points just beside
    /// them, and a uniform grid.
    pub fn probe_grid(&self, other: &BiasDistribution) -> Vec<f64> {
        let hi = self.support_upper().max(other.support_upper());
        let mut grid: Vec<f64> = (0..=1000).map(|k| 1.0 + (hi - 1.0) * k as f64 / 1000.0).collect();
        for (b, _) in self.atoms().into_iter().chain(other.atoms()) {
            grid.extend([b, b * (1.0 - 1e-9), b * (1.0 + 1e-9)]);
        }
        grid.push(hi * 1.5 + 1.0);
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        grid
    }
}

/// True iff `a` stochastically dominates `b` on the probe points:
/// `Pr_a[B >= x] >= Pr_b[B >= x]` everywhere.
pub fn dominates(a: &BiasDistribution, b: &BiasDistribution, grid: &[f64]) -> bool {
    grid.iter().all(|&x| a.survival(x) >= b.survival(x) - 1e-12)
}
