//! Enumeration of bifurcation points at fixed `(n, mu)` and the amplitude regimes
//! of the cubic and saturable potentials.

use std::f64::consts::PI;

use serde::Serialize;

use crate::blocks::{
    coefficients, critical_frequencies, degenerate_amplitudes, eta, linear_stability, stiffness_level_roots,
    BlockCoefficients, DegenerateAmplitudes,
};
use crate::error::{Error, Result};
use crate::model::{Potential, PotentialKind};
use crate::symmetry::IsotropyLabel;

/// Distance in `mu` to a degenerate amplitude below which enumeration refuses.
pub const DEGENERATE_MU_TOL: f64 = 1e-10;
/// Frequencies at or below this are not counted as positive.
pub const ZERO_FREQUENCY_TOL: f64 = 1e-12;

pub const CASE_A_NOTE: &str = "non-admissible or connects to another equilibrium";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Regime {
    #[serde(rename = "generic-a")]
    GenericA,
    #[serde(rename = "generic-b")]
    GenericB,
    #[serde(rename = "n3-a")]
    N3A,
    #[serde(rename = "n3-b")]
    N3B,
}

impl Regime {
    pub fn tag(self) -> &'static str {
        match self {
            Regime::GenericA => "generic-a",
            Regime::GenericB => "generic-b",
            Regime::N3A => "n3-a",
            Regime::N3B => "n3-b",
        }
    }

    pub fn condition(self) -> Condition {
        match self {
            Regime::GenericA | Regime::N3A => Condition::A,
            Regime::GenericB | Regime::N3B => Condition::B,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Minus,
    Plus,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BifurcationPoint {
    pub n: usize,
    pub k: usize,
    pub mu: f64,
    pub nu: f64,
    /// `2 pi / nu`.
    pub period: f64,
    pub eta: i32,
    pub branch: Branch,
    pub isotropy: IsotropyLabel,
    pub regime: Regime,
    pub note: Option<String>,
    /// Set for `k > n/2`: the same branch arises from mode `n - k` up to reflection.
    pub mirror_of: Option<usize>,
}

fn check_inputs(n: usize, mu: f64) -> Result<()> {
    if n < 3 {
        return Err(Error::TooFewOscillators(n));
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidAmplitude(mu));
    }
    Ok(())
}

/// Regime at stiffness `c` for mode coefficients `co`, with the expected number of
/// positive critical frequencies. `None` when `d_k` has no real roots (or double).
fn condition_at(n: usize, co: &BlockCoefficients, c: f64) -> Option<(Regime, usize)> {
    let delta = co.delta?;
    let half = co.alpha / 2.0;
    let pair = if co.gamma > 0.0 { 2 } else { 0 };
    if n == 3 {
        if c <= half {
            None
        } else if c > delta {
            Some((Regime::N3A, 1))
        } else {
            Some((Regime::N3B, pair))
        }
    } else if c >= half {
        None
    } else if c < delta {
        Some((Regime::GenericA, 1))
    } else {
        Some((Regime::GenericB, pair))
    }
}

/// Errors with `DegenerateAmplitude` if `mu` sits on an amplitude where some `B_k`
/// is singular.
pub fn check_degenerate(n: usize, mu: f64, potential: &Potential) -> Result<()> {
    check_inputs(n, mu)?;
    for k in 1..n {
        let Ok(amps) = degenerate_amplitudes(n, k, potential) else {
            continue;
        };
        if let Some(&mu_k) = amps.roots().iter().find(|&&r| (r - mu).abs() <= DEGENERATE_MU_TOL) {
            return Err(Error::DegenerateAmplitude { mu, k, mu_k });
        }
    }
    Ok(())
}

/// All positive critical frequencies with nonzero crossing number, for `k = 1..n-1`.
/// Mirror modes `k > n/2` are kept and flagged.
pub fn enumerate_bifurcations(n: usize, mu: f64, potential: &Potential) -> Result<Vec<BifurcationPoint>> {
    check_degenerate(n, mu, potential)?;
    let c = potential.nonlinear_stiffness(mu);
    let mut out = Vec::new();
    for k in 1..n {
        let co = coefficients(n, k)?;
        let crit = critical_frequencies(n, k, mu, potential)?;
        if crit.degenerate || crit.roots.is_empty() {
            continue;
        }
        let Some((regime, _)) = condition_at(n, &co, c) else {
            continue;
        };
        for (i, &nu) in crit.roots.iter().enumerate() {
            if nu <= ZERO_FREQUENCY_TOL {
                continue;
            }
            let e = eta(n, k, mu, potential, nu)?;
            if e == 0 {
                continue;
            }
            out.push(BifurcationPoint {
                n,
                k,
                mu,
                nu,
                period: 2.0 * PI / nu,
                eta: e,
                branch: if i == 0 { Branch::Minus } else { Branch::Plus },
                isotropy: IsotropyLabel::new(n, k)?,
                regime,
                note: (regime.condition() == Condition::A).then(|| CASE_A_NOTE.to_string()),
                mirror_of: (2 * k > n).then_some(n - k),
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegimeInterval {
    pub lower: f64,
    /// `None` for an unbounded interval.
    pub upper: Option<f64>,
    pub condition: Condition,
    pub regime: Regime,
    pub positive_frequencies: usize,
}

impl RegimeInterval {
    pub fn contains(&self, mu: f64) -> bool {
        mu > self.lower && self.upper.is_none_or(|u| mu < u)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeRegimes {
    pub k: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub delta: Option<f64>,
    pub mirror_of: Option<usize>,
    pub intervals: Vec<RegimeInterval>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExcludedAmplitude {
    pub k: usize,
    pub mu: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MuInterval {
    pub lower: f64,
    pub upper: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegimeReport {
    pub n: usize,
    pub potential: PotentialKind,
    pub modes: Vec<ModeRegimes>,
    pub excluded: Vec<ExcludedAmplitude>,
    pub stability: Vec<MuInterval>,
    /// False when thresholds were bracketed on a finite range only.
    pub exhaustive: bool,
}

impl RegimeReport {
    /// Predicted number of positive-frequency bifurcation points of mode `k` at `mu`.
    pub fn expected_count(&self, k: usize, mu: f64) -> usize {
        self.modes
            .iter()
            .find(|m| m.k == k)
            .and_then(|m| m.intervals.iter().find(|i| i.contains(mu)))
            .map_or(0, |i| i.positive_frequencies)
    }
}

/// Splits `(0, inf)` at the given breakpoints and labels each piece by a
/// representative amplitude.
fn segments(mut breaks: Vec<f64>) -> Vec<(f64, Option<f64>, f64)> {
    breaks.retain(|b| *b > 0.0 && b.is_finite());
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1.0));
    if breaks.is_empty() {
        return vec![(0.0, None, 1.0)];
    }
    let mut out = Vec::with_capacity(breaks.len() + 1);
    let mut lo = 0.0;
    for &b in &breaks {
        out.push((lo, Some(b), 0.5 * (lo + b)));
        lo = b;
    }
    out.push((lo, None, 2.0 * lo + 1.0));
    out
}

fn level_breaks(potential: &Potential, level: f64, exhaustive: &mut bool) -> Vec<f64> {
    let roots = stiffness_level_roots(potential, level);
    if matches!(roots, DegenerateAmplitudes::Bracketed { .. }) {
        *exhaustive = false;
    }
    roots.roots().to_vec()
}

/// Regime intervals in `mu` for any potential. Threshold amplitudes are solved in
/// closed form for the cubic and saturable potentials and bracketed otherwise.
pub fn regimes(n: usize, potential: &Potential) -> Result<RegimeReport> {
    if n < 3 {
        return Err(Error::TooFewOscillators(n));
    }
    let mut exhaustive = true;
    let mut modes = Vec::new();
    let mut excluded = Vec::new();
    for k in 1..n {
        let co = coefficients(n, k)?;
        let mut intervals: Vec<RegimeInterval> = Vec::new();
        if let Some(delta) = co.delta {
            let mut breaks = level_breaks(potential, delta, &mut exhaustive);
            excluded.extend(breaks.iter().map(|&mu| ExcludedAmplitude { k, mu }));
            breaks.extend(level_breaks(potential, co.alpha / 2.0, &mut exhaustive));
            for (lower, upper, rep) in segments(breaks) {
                let Some((regime, count)) = condition_at(n, &co, potential.nonlinear_stiffness(rep)) else {
                    continue;
                };
                if let Some(last) = intervals.last_mut() {
                    if last.regime == regime && last.positive_frequencies == count && last.upper == Some(lower) {
                        last.upper = upper;
                        continue;
                    }
                }
                intervals.push(RegimeInterval {
                    lower,
                    upper,
                    condition: regime.condition(),
                    regime,
                    positive_frequencies: count,
                });
            }
        }
        modes.push(ModeRegimes {
            k,
            alpha: co.alpha,
            gamma: co.gamma,
            delta: co.delta,
            mirror_of: (2 * k > n).then_some(n - k),
            intervals,
        });
    }
    excluded.sort_by(|a, b| a.mu.total_cmp(&b.mu).then(a.k.cmp(&b.k)));
    let stability = stability_interval(n, potential, &mut exhaustive)?;
    Ok(RegimeReport {
        n,
        potential: potential.kind(),
        modes,
        excluded,
        stability,
        exhaustive,
    })
}

fn stability_interval(n: usize, potential: &Potential, exhaustive: &mut bool) -> Result<Vec<MuInterval>> {
    let breaks = if n == 4 {
        vec![]
    } else {
        level_breaks(potential, coefficients(n, 1)?.alpha / 2.0, exhaustive)
    };
    let mut out: Vec<MuInterval> = Vec::new();
    for (lower, upper, rep) in segments(breaks) {
        if !linear_stability(n, rep, potential)?.stable {
            continue;
        }
        match out.last_mut() {
            Some(last) if last.upper == Some(lower) => last.upper = upper,
            _ => out.push(MuInterval { lower, upper }),
        }
    }
    Ok(out)
}

pub fn schrodinger_regimes(n: usize) -> Result<RegimeReport> {
    regimes(n, &Potential::Cubic)
}

pub fn saturable_regimes(n: usize) -> Result<RegimeReport> {
    regimes(n, &Potential::Saturable)
}
