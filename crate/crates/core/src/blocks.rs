//! Closed-form spectral theory of the 2x2 Hermitian blocks
//! `m_k(nu) = -nu (iJ) + B_k`, `B_k = -alpha_k I + gamma_k (iJ) + 2 mu^2 h'(mu^2) diag(1, 0)`.

use std::f64::consts::PI;

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Potential, RingSystem};

/// `|det m_k(nu)|` at or below this is treated as singular.
pub const SINGULAR_TOL: f64 = 1e-12;
/// A radicand of `d_k(nu) = 0` within this of zero is a double root.
pub const DEGENERACY_TOL: f64 = 1e-12;
/// Real parts above this make the equilibrium spectrally unstable.
pub const SPECTRAL_TOL: f64 = 1e-8;

const SNAP: f64 = 1e-14;

fn snap(x: f64) -> f64 {
    if x.abs() < SNAP {
        0.0
    } else {
        x
    }
}

/// `iJ = [[0, -i], [i, 0]]`.
pub fn i_j() -> Matrix2<Complex64> {
    let z = Complex64::new(0.0, 0.0);
    Matrix2::new(z, Complex64::new(0.0, -1.0), Complex64::new(0.0, 1.0), z)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlockCoefficients {
    pub k: usize,
    pub alpha: f64,
    pub gamma: f64,
    /// `(alpha^2 - gamma^2) / (2 alpha)`; absent when `alpha = 0`.
    pub delta: Option<f64>,
}

pub fn coefficients(n: usize, k: usize) -> Result<BlockCoefficients> {
    if k == 0 || k > n {
        return Err(Error::ModeOutOfRange { n, k });
    }
    let zeta = 2.0 * PI / n as f64;
    let kr = (k % n) as f64;
    let alpha = snap(4.0 * snap(zeta.cos()) * (kr * zeta / 2.0).sin().powi(2));
    let gamma = snap(2.0 * snap((kr * zeta).sin()) * zeta.sin());
    let delta = if alpha == 0.0 {
        None
    } else {
        Some(snap((alpha * alpha - gamma * gamma) / (2.0 * alpha)))
    };
    Ok(BlockCoefficients {
        k,
        alpha,
        gamma,
        delta,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralSummary {
    pub det: f64,
    pub trace: f64,
    /// Ascending.
    pub eigenvalues: [f64; 2],
    pub morse_index: u8,
}

/// 2x2 Hermitian block with the `(k, nu, mu)` it was built for.
#[derive(Clone, Copy, Debug)]
pub struct HermitianBlock {
    pub k: usize,
    pub nu: f64,
    pub mu: f64,
    pub matrix: Matrix2<Complex64>,
}

impl HermitianBlock {
    pub fn hermitian_defect(&self) -> f64 {
        (self.matrix - self.matrix.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn spectrum(&self) -> SpectralSummary {
        let a = self.matrix[(0, 0)].re;
        let d = self.matrix[(1, 1)].re;
        let b = self.matrix[(0, 1)];
        let trace = a + d;
        let det = a * d - b.norm_sqr();
        let half = 0.5 * trace;
        let disc = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        let eigenvalues = [half - disc, half + disc];
        let morse_index = eigenvalues.iter().filter(|&&e| e < 0.0).count() as u8;
        SpectralSummary {
            det,
            trace,
            eigenvalues,
            morse_index,
        }
    }

    /// Unit vector spanning the kernel direction (eigenvector of the eigenvalue
    /// closest to zero).
    pub fn null_vector(&self) -> [Complex64; 2] {
        let s = self.spectrum();
        let lam = if s.eigenvalues[0].abs() <= s.eigenvalues[1].abs() {
            s.eigenvalues[0]
        } else {
            s.eigenvalues[1]
        };
        let m = self.matrix - Matrix2::identity() * Complex64::new(lam, 0.0);
        // Rows of m annihilate the eigenvector; take the better-conditioned one.
        let (r0, r1) = (m.row(0), m.row(1));
        let row = if r0.norm() >= r1.norm() { r0 } else { r1 };
        let v = if row.norm() < 1e-300 {
            [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
        } else {
            [row[1], -row[0]]
        };
        let nrm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        [v[0] / nrm, v[1] / nrm]
    }
}

pub fn block_b(n: usize, k: usize, mu: f64, potential: &Potential) -> Result<HermitianBlock> {
    block_m(n, k, mu, potential, 0.0)
}

pub fn block_m(n: usize, k: usize, mu: f64, potential: &Potential, nu: f64) -> Result<HermitianBlock> {
    let co = coefficients(n, k)?;
    let c = potential.nonlinear_stiffness(mu);
    let re = |x: f64| Complex64::new(x, 0.0);
    let b = Matrix2::identity() * re(-co.alpha)
        + i_j() * re(co.gamma - nu)
        + Matrix2::new(re(2.0 * c), re(0.0), re(0.0), re(0.0));
    Ok(HermitianBlock { k, nu, mu, matrix: b })
}

/// `d_k(nu) = -2 alpha_k c + alpha_k^2 - (gamma_k - nu)^2` and
/// `T_k = 2 c - 2 alpha_k` with `c = mu^2 h'(mu^2)`.
pub fn det_trace(n: usize, k: usize, mu: f64, potential: &Potential, nu: f64) -> Result<(f64, f64)> {
    let co = coefficients(n, k)?;
    let c = potential.nonlinear_stiffness(mu);
    let g = co.gamma - nu;
    Ok((-2.0 * co.alpha * c + co.alpha * co.alpha - g * g, 2.0 * c - 2.0 * co.alpha))
}

pub fn morse_index(n: usize, k: usize, mu: f64, potential: &Potential, nu: f64) -> Result<u8> {
    let (det, trace) = det_trace(n, k, mu, potential, nu)?;
    if det.abs() <= SINGULAR_TOL {
        return Err(Error::SingularBlock { k, nu, det });
    }
    Ok(if det < 0.0 {
        1
    } else if trace < 0.0 {
        2
    } else {
        0
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalFrequencies {
    pub k: usize,
    /// Real roots of `d_k(nu) = 0`, ascending.
    pub roots: Vec<f64>,
    /// The two roots coincide (radicand zero within tolerance).
    pub degenerate: bool,
}

impl CriticalFrequencies {
    pub fn nu_minus(&self) -> Option<f64> {
        self.roots.first().copied()
    }

    pub fn nu_plus(&self) -> Option<f64> {
        self.roots.last().copied()
    }
}

/// `nu_pm = gamma_k +- sqrt(alpha_k (alpha_k - 2 c))` for `k in 1..n-1`.
pub fn critical_frequencies(n: usize, k: usize, mu: f64, potential: &Potential) -> Result<CriticalFrequencies> {
    if k == 0 || k >= n {
        return Err(Error::ModeOutOfRange { n, k });
    }
    let co = coefficients(n, k)?;
    let c = potential.nonlinear_stiffness(mu);
    let radicand = co.alpha * (co.alpha - 2.0 * c);
    if radicand.abs() <= DEGENERACY_TOL {
        return Ok(CriticalFrequencies {
            k,
            roots: vec![co.gamma],
            degenerate: true,
        });
    }
    if radicand < 0.0 {
        return Ok(CriticalFrequencies {
            k,
            roots: vec![],
            degenerate: false,
        });
    }
    let r = radicand.sqrt();
    Ok(CriticalFrequencies {
        k,
        roots: vec![co.gamma - r, co.gamma + r],
        degenerate: false,
    })
}

/// All roots of `d_k(nu) = 0` over the complex plane, `k = 1..n`, with multiplicity.
pub fn complex_block_roots(n: usize, mu: f64, potential: &Potential) -> Vec<(usize, Complex64)> {
    let c = potential.nonlinear_stiffness(mu);
    let mut out = Vec::with_capacity(2 * n);
    for k in 1..=n {
        let co = coefficients(n, k).expect("k in range");
        let r = Complex64::new(co.alpha * (co.alpha - 2.0 * c), 0.0).sqrt();
        out.push((k, Complex64::new(co.gamma, 0.0) - r));
        out.push((k, Complex64::new(co.gamma, 0.0) + r));
    }
    out
}

/// Probe half-width `rho = min(1e-4 max(1, |nu0|), |nu_+ - nu_-| / 10)`.
pub fn eta_probe(nu0: f64, crit: &CriticalFrequencies) -> f64 {
    let base = 1e-4 * nu0.abs().max(1.0);
    match (crit.nu_minus(), crit.nu_plus()) {
        (Some(a), Some(b)) if b > a => base.min((b - a) / 10.0),
        _ => base,
    }
}

/// Jump `eta_k(nu0) = sigma (n_k(nu0 - rho) - n_k(nu0 + rho))` of the orthogonal index.
pub fn eta(n: usize, k: usize, mu: f64, potential: &Potential, nu0: f64) -> Result<i32> {
    let crit = critical_frequencies(n, k, mu, potential)?;
    if crit.degenerate {
        return Ok(0);
    }
    let rho = eta_probe(nu0, &crit);
    if rho <= 1e-14 * nu0.abs().max(1.0) {
        return Err(Error::SingularBlock {
            k,
            nu: nu0,
            det: 0.0,
        });
    }
    let below = morse_index(n, k, mu, potential, nu0 - rho)? as i32;
    let above = morse_index(n, k, mu, potential, nu0 + rho)? as i32;
    Ok(potential.sigma(mu) * (below - above))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum DegenerateAmplitudes {
    /// Closed-form solution set (possibly empty: provably no root).
    Exact(Vec<f64>),
    /// Roots bracketed on a finite `s = mu^2` range; empty means the range was
    /// exhausted without a sign change, not that no root exists.
    Bracketed { roots: Vec<f64>, s_range: (f64, f64) },
}

impl DegenerateAmplitudes {
    pub fn roots(&self) -> &[f64] {
        match self {
            DegenerateAmplitudes::Exact(r) => r,
            DegenerateAmplitudes::Bracketed { roots, .. } => roots,
        }
    }
}

/// Positive solutions `mu` of `mu^2 h'(mu^2) = delta_k`, where `B_k` is singular.
pub fn degenerate_amplitudes(n: usize, k: usize, potential: &Potential) -> Result<DegenerateAmplitudes> {
    if k == 0 || k >= n {
        return Err(Error::ModeOutOfRange { n, k });
    }
    let delta = coefficients(n, k)?.delta.ok_or(Error::UndefinedDelta { n, k })?;
    Ok(stiffness_level_roots(potential, delta))
}

/// Positive `mu` with `mu^2 h'(mu^2) = level`.
pub fn stiffness_level_roots(potential: &Potential, level: f64) -> DegenerateAmplitudes {
    match potential {
        Potential::Cubic => DegenerateAmplitudes::Exact(if level > SNAP { vec![level.sqrt()] } else { vec![] }),
        Potential::Saturable => {
            // s / (1 + s)^2 = c  <=>  c s^2 + (2c - 1) s + c = 0, roots multiply to 1.
            let c = -level;
            if c <= SNAP || c > 0.25 + DEGENERACY_TOL {
                return DegenerateAmplitudes::Exact(vec![]);
            }
            let disc = (1.0 - 4.0 * c).max(0.0);
            if disc <= DEGENERACY_TOL {
                return DegenerateAmplitudes::Exact(vec![1.0]);
            }
            let sq = disc.sqrt();
            // Stable pair: larger root directly, smaller via the unit product.
            let s_hi = (1.0 - 2.0 * c + sq) / (2.0 * c);
            let s_lo = 1.0 / s_hi;
            DegenerateAmplitudes::Exact(vec![s_lo.sqrt(), s_hi.sqrt()])
        }
        Potential::Custom(cp) => {
            let (lo, hi) = cp.search_range;
            let f = |s: f64| s * potential.h_prime(s) - level;
            let roots = bracket_roots(f, lo.max(0.0), hi, 4000)
                .into_iter()
                .filter(|&s| s > 0.0)
                .map(f64::sqrt)
                .collect();
            DegenerateAmplitudes::Bracketed {
                roots,
                s_range: (lo, hi),
            }
        }
    }
}

/// Sign-change scan on a uniform grid followed by bisection to `1e-12`.
pub(crate) fn bracket_roots(f: impl Fn(f64) -> f64, lo: f64, hi: f64, cells: usize) -> Vec<f64> {
    let mut roots = Vec::new();
    let step = (hi - lo) / cells as f64;
    let mut a = lo;
    let mut fa = f(a);
    for i in 1..=cells {
        let b = lo + step * i as f64;
        let fb = f(b);
        if fa == 0.0 {
            roots.push(a);
        } else if fa * fb < 0.0 {
            let (mut x0, mut x1, mut f0) = (a, b, fa);
            while x1 - x0 > 1e-12 * x1.abs().max(1.0) {
                let mid = 0.5 * (x0 + x1);
                let fm = f(mid);
                if fm == 0.0 {
                    x0 = mid;
                    x1 = mid;
                    break;
                }
                if f0 * fm < 0.0 {
                    x1 = mid;
                } else {
                    x0 = mid;
                    f0 = fm;
                }
            }
            roots.push(0.5 * (x0 + x1));
        }
        a = b;
        fa = fb;
    }
    if fa == 0.0 {
        roots.push(a);
    }
    roots
}

/// Eigenvalues (with multiplicity) of the linearisation `-J D^2V(a)` computed
/// directly from the assembled `2n x 2n` matrix.
pub fn full_spectrum_oracle(sys: &RingSystem) -> Vec<Complex64> {
    sys.linearization_at_equilibrium()
        .complex_eigenvalues()
        .iter()
        .copied()
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StabilityMethod {
    /// `n >= 5`: `mu^2 h'(mu^2) < alpha_1 / 2`.
    GenericThreshold,
    /// `n = 3`: `alpha_1 / 2 < mu^2 h'(mu^2)`.
    ReversedThreshold,
    /// `n = 4`: every `d_k` has a real double root.
    DoubleRoots,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearStability {
    pub stable: bool,
    /// Signed distance of `mu^2 h'(mu^2)` to the threshold, positive when stable.
    /// Absent for `n = 4`, where there is no threshold.
    pub margin: Option<f64>,
    pub method: StabilityMethod,
}

pub fn linear_stability(n: usize, mu: f64, potential: &Potential) -> Result<LinearStability> {
    if n < 3 {
        return Err(Error::TooFewOscillators(n));
    }
    let c = potential.nonlinear_stiffness(mu);
    let half_alpha = coefficients(n, 1)?.alpha / 2.0;
    Ok(match n {
        4 => LinearStability {
            stable: true,
            margin: None,
            method: StabilityMethod::DoubleRoots,
        },
        3 => LinearStability {
            stable: c > half_alpha,
            margin: Some(c - half_alpha),
            method: StabilityMethod::ReversedThreshold,
        },
        _ => LinearStability {
            stable: c < half_alpha,
            margin: Some(half_alpha - c),
            method: StabilityMethod::GenericThreshold,
        },
    })
}

/// Largest real part of the oracle spectrum, with eigenvalue clusters collapsed to
/// their means so that defective (Jordan) pairs do not leak `sqrt(eps)` noise.
pub fn oracle_max_real_part(sys: &RingSystem) -> f64 {
    cluster_means(&full_spectrum_oracle(sys), 1e-5)
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Replaces each group of eigenvalues lying within `radius` of each other by the
/// group mean (keeping multiplicity).
pub fn cluster_means(values: &[Complex64], radius: f64) -> Vec<Complex64> {
    let m = values.len();
    let mut group: Vec<usize> = (0..m).collect();
    fn find(g: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while g[r] != r {
            r = g[r];
        }
        g[i] = r;
        r
    }
    for i in 0..m {
        for j in (i + 1)..m {
            if (values[i] - values[j]).norm() <= radius {
                let (a, b) = (find(&mut group, i), find(&mut group, j));
                group[a] = b;
            }
        }
    }
    let roots: Vec<usize> = (0..m).map(|i| find(&mut group, i)).collect();
    (0..m)
        .map(|i| {
            let members: Vec<usize> = (0..m).filter(|&j| roots[j] == roots[i]).collect();
            members.iter().map(|&j| values[j]).sum::<Complex64>() / members.len() as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CustomPotential;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const SQRT3: f64 = 1.732_050_807_568_877_2;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn coefficient_examples() {
        let c = coefficients(3, 1).unwrap();
        assert!(close(c.alpha, -1.5, 1e-12) && close(c.gamma, 1.5, 1e-12));
        assert!(close(c.delta.unwrap(), 0.0, 1e-12));
        for k in 1..=4 {
            let c = coefficients(4, k).unwrap();
            assert_eq!(c.alpha, 0.0);
            assert!(c.delta.is_none());
        }
        let c = coefficients(6, 3).unwrap();
        assert!(close(c.alpha, 2.0, 1e-12) && close(c.gamma, 0.0, 1e-12));
        assert!(close(c.delta.unwrap(), 1.0, 1e-12));
        for n in 3..20 {
            let c = coefficients(n, n).unwrap();
            assert_eq!((c.alpha, c.gamma, c.delta), (0.0, 0.0, None));
        }
        assert!(coefficients(5, 0).is_err());
        assert!(coefficients(5, 6).is_err());
    }

    #[test]
    fn coefficient_mirror_laws() {
        for n in 3..30 {
            for k in 1..n {
                let a = coefficients(n, k).unwrap();
                let b = coefficients(n, n - k).unwrap();
                assert!(close(a.alpha, b.alpha, 1e-12));
                assert!(close(a.gamma, -b.gamma, 1e-12));
            }
        }
    }

    #[test]
    fn block_examples() {
        let z = Complex64::new(0.0, 0.0);
        let b = block_b(6, 3, 0.5, &Potential::Cubic).unwrap();
        let expect = Matrix2::new(Complex64::new(-1.5, 0.0), z, z, Complex64::new(-2.0, 0.0));
        assert!((b.matrix - expect).iter().all(|e| e.norm() < 1e-12));

        let b = block_b(6, 1, 0.5, &Potential::Cubic).unwrap();
        let expect = Matrix2::new(z, Complex64::new(0.0, -1.5), Complex64::new(0.0, 1.5), Complex64::new(-0.5, 0.0));
        assert!((b.matrix - expect).iter().all(|e| e.norm() < 1e-12));
        assert!(close(b.spectrum().det, -2.25, 1e-12));

        let b = block_b(7, 7, 0.8, &Potential::Saturable).unwrap();
        let c = Potential::Saturable.nonlinear_stiffness(0.8);
        let expect = Matrix2::new(Complex64::new(2.0 * c, 0.0), z, z, z);
        assert!((b.matrix - expect).iter().all(|e| e.norm() < 1e-14));
        let e2 = b.matrix * nalgebra::Vector2::new(z, Complex64::new(1.0, 0.0));
        assert!(e2.norm() < 1e-15);
    }

    #[test]
    fn block_m_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let n = rng.gen_range(3..15);
            let k = rng.gen_range(1..n);
            let mu = rng.gen_range(0.05..2.0);
            let nu = rng.gen_range(-3.0..3.0);
            let pot = if rng.gen_bool(0.5) { Potential::Cubic } else { Potential::Saturable };
            let m = block_m(n, k, mu, &pot, nu).unwrap();
            assert!(m.hermitian_defect() < 1e-12);
            let mirror = block_m(n, n - k, mu, &pot, nu).unwrap();
            let conj = block_m(n, k, mu, &pot, -nu).unwrap().matrix.map(|z| z.conj());
            assert!((mirror.matrix - conj).iter().all(|z| z.norm() < 1e-12));

            let s = m.spectrum();
            let (d, t) = det_trace(n, k, mu, &pot, nu).unwrap();
            assert!(close(s.det, d, 1e-12) && close(s.trace, t, 1e-12));
            assert!(close(s.eigenvalues[0] * s.eigenvalues[1], d, 1e-12));

            if d.abs() > 1e-9 {
                let a = morse_index(n, n - k, mu, &pot, nu).unwrap();
                let b = morse_index(n, k, mu, &pot, -nu).unwrap();
                assert_eq!(a, b);
                assert_eq!(morse_index(n, k, mu, &pot, nu).unwrap(), s.morse_index);
            }
        }
        let m = block_m(6, 3, 0.5, &Potential::Cubic, 0.0).unwrap();
        let b = block_b(6, 3, 0.5, &Potential::Cubic).unwrap();
        assert_eq!(m.matrix, b.matrix);
    }

    #[test]
    fn det_trace_examples() {
        for nu in [0.0, 0.5, 1.0, 2.5] {
            let (d, _) = det_trace(6, 3, 0.5, &Potential::Cubic, nu).unwrap();
            assert!(close(d, 3.0 - nu * nu, 1e-12));
            let (d, _) = det_trace(9, 9, 0.7, &Potential::Saturable, nu).unwrap();
            assert!(close(d, -nu * nu, 1e-12));
            for k in 1..=4 {
                let g = coefficients(4, k).unwrap().gamma;
                let (d, _) = det_trace(4, k, 1.3, &Potential::Cubic, nu).unwrap();
                assert!(close(d, -(g - nu) * (g - nu), 1e-12));
            }
        }
        let (d, _) = det_trace(6, 3, 0.5, &Potential::Cubic, SQRT3).unwrap();
        assert!(d.abs() < 1e-12);
    }

    #[test]
    fn morse_examples() {
        assert_eq!(morse_index(6, 3, 0.5, &Potential::Cubic, 0.0).unwrap(), 2);
        assert_eq!(morse_index(6, 3, 0.5, &Potential::Cubic, 2.0).unwrap(), 1);
        let cf = critical_frequencies(3, 1, 1.0, &Potential::Saturable).unwrap();
        let mid = 0.5 * (cf.roots[0] + cf.roots[1]);
        assert_eq!(morse_index(3, 1, 1.0, &Potential::Saturable, mid).unwrap(), 0);
        assert!(matches!(
            morse_index(6, 3, 0.5, &Potential::Cubic, SQRT3),
            Err(Error::SingularBlock { .. })
        ));
    }

    #[test]
    fn critical_frequency_examples() {
        let cf = critical_frequencies(6, 3, 0.5, &Potential::Cubic).unwrap();
        assert!(close(cf.roots[0], -SQRT3, 1e-12) && close(cf.roots[1], SQRT3, 1e-12));
        let cf = critical_frequencies(6, 1, 0.4, &Potential::Cubic).unwrap();
        assert!(close(cf.roots[0], 1.2, 1e-12) && close(cf.roots[1], 1.8, 1e-12));
        for k in 1..4 {
            let cf = critical_frequencies(4, k, 0.9, &Potential::Saturable).unwrap();
            assert!(cf.degenerate);
            assert_eq!(cf.roots.len(), 1);
            assert!(close(cf.roots[0], coefficients(4, k).unwrap().gamma, 1e-15));
            assert_eq!(eta(4, k, 0.9, &Potential::Saturable, cf.roots[0]).unwrap(), 0);
        }
        // Above alpha_1 / 2 the k = 1 roots are complex.
        assert!(critical_frequencies(6, 1, 0.8, &Potential::Cubic).unwrap().roots.is_empty());
        assert!(critical_frequencies(6, 6, 0.5, &Potential::Cubic).is_err());
    }

    #[test]
    fn eta_examples() {
        assert_eq!(eta(6, 3, 0.5, &Potential::Cubic, SQRT3).unwrap(), 1);
        assert_eq!(eta(6, 3, 0.5, &Potential::Cubic, -SQRT3).unwrap(), -1);
        let cf = critical_frequencies(3, 1, 1.0, &Potential::Saturable).unwrap();
        assert_eq!(eta(3, 1, 1.0, &Potential::Saturable, cf.roots[1]).unwrap(), 1);
        assert_eq!(eta(3, 1, 1.0, &Potential::Saturable, cf.roots[0]).unwrap(), -1);
    }

    #[test]
    fn eta_sign_law_for_large_rings() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..300 {
            let n = rng.gen_range(5..20);
            let k = rng.gen_range(1..n);
            let mu = rng.gen_range(0.05..2.5);
            let pot = if rng.gen_bool(0.5) { Potential::Cubic } else { Potential::Saturable };
            let co = coefficients(n, k).unwrap();
            let c = pot.nonlinear_stiffness(mu);
            if c < co.alpha / 2.0 - 1e-6 {
                let cf = critical_frequencies(n, k, mu, &pot).unwrap();
                assert_eq!(cf.roots.len(), 2);
                let sigma = pot.sigma(mu);
                assert_eq!(eta(n, k, mu, &pot, cf.roots[0]).unwrap(), -sigma);
                assert_eq!(eta(n, k, mu, &pot, cf.roots[1]).unwrap(), sigma);
                let delta = co.delta.unwrap();
                let both_positive = cf.roots[0] > 0.0;
                if c < delta {
                    assert!(cf.roots[1] > 0.0 && cf.roots[0] < 0.0, "case (a)");
                } else if c > delta {
                    assert_eq!(both_positive, co.gamma > 0.0, "case (b)");
                    assert_eq!(co.gamma > 0.0, k <= n / 2 && 2 * k != n);
                }
            }
        }
    }

    #[test]
    fn degenerate_amplitude_examples() {
        let r = degenerate_amplitudes(6, 3, &Potential::Cubic).unwrap();
        assert_eq!(r.roots().len(), 1);
        assert!(close(r.roots()[0], 1.0, 1e-12));

        let r = degenerate_amplitudes(16, 1, &Potential::Saturable).unwrap();
        let roots = r.roots();
        assert_eq!(roots.len(), 2);
        assert!(close(roots[0], 0.776_311, 1e-5) && close(roots[1], 1.288_144, 1e-5));
        assert!(close(roots[0] * roots[1], 1.0, 1e-12));

        assert!(degenerate_amplitudes(15, 1, &Potential::Saturable).unwrap().roots().is_empty());
        // delta_2 = 0 exactly: no spurious tiny/huge roots.
        assert!(degenerate_amplitudes(7, 2, &Potential::Saturable).unwrap().roots().is_empty());
        assert!(matches!(
            degenerate_amplitudes(4, 1, &Potential::Cubic),
            Err(Error::UndefinedDelta { .. })
        ));
    }

    #[test]
    fn custom_search_matches_closed_form() {
        let sat = Potential::Custom(
            CustomPotential::new("sat", |s: f64| 1.0 / (1.0 + s), |s: f64| -1.0 / (1.0 + s).powi(2))
                .with_search_range(0.0, 10.0),
        );
        let bracketed = degenerate_amplitudes(20, 1, &sat).unwrap();
        let exact = degenerate_amplitudes(20, 1, &Potential::Saturable).unwrap();
        assert!(matches!(bracketed, DegenerateAmplitudes::Bracketed { .. }));
        for (a, b) in bracketed.roots().iter().zip(exact.roots()) {
            assert!(close(*a, *b, 1e-9));
        }
        // Range too short to contain the larger root.
        let short = Potential::Custom(
            CustomPotential::new("sat", |s: f64| 1.0 / (1.0 + s), |s: f64| -1.0 / (1.0 + s).powi(2))
                .with_search_range(0.0, 0.1),
        );
        let r = degenerate_amplitudes(20, 1, &short).unwrap();
        assert!(matches!(r, DegenerateAmplitudes::Bracketed { ref roots, .. } if roots.is_empty()));
    }

    #[test]
    fn oracle_contains_protected_zero_pair() {
        let sys = RingSystem::new(6, 0.5, Potential::Cubic).unwrap();
        let spec = full_spectrum_oracle(&sys);
        assert_eq!(spec.len(), 12);
        assert!(spec.iter().filter(|z| z.norm() < 1e-6).count() >= 2);
    }

    #[test]
    fn stability_examples() {
        for (mu, stable) in [(0.4, true), (0.49, true), (0.51, false), (0.6, false)] {
            let s = linear_stability(6, mu, &Potential::Cubic).unwrap();
            assert_eq!(s.stable, stable, "mu = {mu}");
        }
        let s = linear_stability(6, 0.4, &Potential::Cubic).unwrap();
        assert!(close(s.margin.unwrap(), 0.09, 1e-12));
        for mu in [0.1, 1.0, 5.0] {
            assert!(linear_stability(3, mu, &Potential::Cubic).unwrap().stable);
            assert!(linear_stability(9, mu, &Potential::Saturable).unwrap().stable);
        }
    }

    #[test]
    fn cluster_means_collapse_jordan_noise() {
        let v = [
            Complex64::new(1e-8, 0.0),
            Complex64::new(-1e-8, 0.0),
            Complex64::new(0.0, 1.0),
        ];
        let m = cluster_means(&v, 1e-5);
        assert!(m[0].norm() < 1e-20 && m[1].norm() < 1e-20);
        assert_eq!(m[2], v[2]);
    }
}
