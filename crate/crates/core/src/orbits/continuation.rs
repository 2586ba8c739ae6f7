//! Pseudo-arclength continuation of a branch of periodic orbits out of a
//! bifurcation point, solved in the fixed-point subspace of its isotropy group.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::collocation::{modes_norm, residual, solve_checked, Bordered, BorderedState, Collocation, Reduction};
use super::fourier::FourierOrbit;
use crate::blocks::block_m;
use crate::classify::BifurcationPoint;
use crate::error::{Error, Result};
use crate::model::RingSystem;
use crate::symmetry::{symmetry_residual, SymmetryResidual};

#[derive(Clone, Debug)]
pub struct ContinuationSettings {
    /// Number of accepted points to produce.
    pub steps: usize,
    pub ds: f64,
    pub max_halvings: usize,
    pub p_initial: usize,
    pub p_max: usize,
    /// Cutoff is doubled while the top-quarter mode norm exceeds this.
    pub tail_tol: f64,
    pub max_amplitude: f64,
}

impl Default for ContinuationSettings {
    fn default() -> Self {
        Self {
            steps: 25,
            ds: 0.02,
            max_halvings: 5,
            p_initial: 8,
            p_max: 256,
            tail_tol: 1e-12,
            max_amplitude: f64::INFINITY,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BranchPoint {
    pub orbit: FourierOrbit,
    pub amplitude: f64,
    pub nu: f64,
    /// Full-lattice residual norm over retained modes.
    pub residual: f64,
    pub symmetry: SymmetryResidual,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Termination {
    StepLimit,
    AmplitudeBound,
    StepFailure(String),
}

#[derive(Clone, Debug)]
pub struct ContinuationBranch {
    pub k: usize,
    pub nu0: f64,
    pub points: Vec<BranchPoint>,
    pub termination: Termination,
}

impl ContinuationBranch {
    /// Least-squares fit of `nu` against `a^2` (and `a^4` given enough points) over
    /// the smallest-amplitude nontrivial points, evaluated at `a = 0`.
    pub fn extrapolate_nu(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .points
            .iter()
            .filter(|p| p.amplitude > 1e-8)
            .take(10)
            .map(|p| (p.amplitude * p.amplitude, p.nu))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let cols = if pts.len() >= 4 { 3 } else { 2 };
        let a = DMatrix::from_fn(pts.len(), cols, |r, c| pts[r].0.powi(c as i32));
        let b = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.1));
        let coef = a.svd(true, true).solve(&b, 1e-14).ok()?;
        Some(coef[0])
    }

    pub fn failed(&self) -> bool {
        matches!(self.termination, Termination::StepFailure(_))
    }
}

fn pad(old: &Collocation, new: &Collocation, z: &DVector<f64>) -> DVector<f64> {
    let mut modes = old.unpack(z.as_slice());
    modes.resize(new.p() + 1, DVector::zeros(old.dim()));
    new.pack(&modes)
}

fn time_derivative_norm(col: &Collocation, z: &DVector<f64>) -> f64 {
    let modes = col.unpack(z.as_slice());
    let d: Vec<DVector<Complex64>> = modes
        .iter()
        .enumerate()
        .map(|(l, m)| m * Complex64::new(0.0, l as f64))
        .collect();
    modes_norm(&d)
}

fn weighted_norm(w: &DVector<f64>, z: &DVector<f64>, nu: f64) -> f64 {
    (z.component_mul(z).dot(w) + nu * nu).sqrt()
}

/// Traces the branch born at `bif` for `settings.steps` accepted points, or until
/// a step fails after all halvings or the amplitude bound is exceeded.
pub fn continue_branch(
    sys: &RingSystem,
    bif: &BifurcationPoint,
    settings: &ContinuationSettings,
) -> Result<ContinuationBranch> {
    let (n, k) = (sys.n(), bif.k);
    if bif.n != n {
        return Err(Error::DimensionMismatch { expected: n, got: bif.n });
    }
    if k == 0 || k >= n {
        return Err(Error::ModeOutOfRange { n, k });
    }
    let block = block_m(n, k, sys.mu(), sys.potential(), bif.nu)?;
    let w = block.null_vector();
    let wn = (w[0].norm_sqr() + w[1].norm_sqr()).sqrt();

    let mut p = settings.p_initial.max(2);
    let mut col = Collocation::new(sys, Reduction::Isotropy(k), p)?;
    let mut seed = vec![DVector::zeros(2); p + 1];
    seed[0][0] = Complex64::new(1.0, 0.0);
    let mut z_prev = col.pack(&seed);
    let mut nu_prev = bif.nu;
    let mut dir = vec![DVector::zeros(2); p + 1];
    dir[1] = DVector::from_vec(vec![w[0], w[1]]) / Complex64::new(wn * 2f64.sqrt(), 0.0);
    let mut t_z = col.pack(&dir);
    let mut t_nu = 0.0;

    let mut ds = settings.ds;
    let mut points = Vec::new();
    let mut termination = Termination::StepLimit;

    'outer: while points.len() < settings.steps {
        let mut halvings = 0;
        let (state, iterations, tangent) = loop {
            let pred_z = &z_prev + &t_z * ds;
            let pred_nu = nu_prev + t_nu * ds;
            let ref_z = if time_derivative_norm(&col, &z_prev) > 1e-12 { &z_prev } else { &pred_z };
            let y_ref = col.unpack(ref_z.as_slice());
            let time_active = time_derivative_norm(&col, ref_z) > 1e-12;
            let attempt = {
                let mut bordered = Bordered {
                    col: &mut col,
                    y_ref,
                    time_active,
                    rot_active: true,
                    arclength: Some((z_prev.clone(), nu_prev, t_z.clone(), t_nu, ds)),
                    fixed_nu: nu_prev,
                };
                let start = BorderedState {
                    z: pred_z.clone(),
                    nu: pred_nu,
                    lambda: [0.0; 2],
                };
                bordered.solve(start).and_then(|(s, it, _)| {
                    let jac = bordered.jacobian(&s);
                    let mut rhs = DVector::zeros(jac.nrows());
                    let last = rhs.len() - 1;
                    rhs[last] = 1.0;
                    let tau = solve_checked(jac, &rhs)?;
                    Ok((s, it, tau))
                })
            };
            match attempt {
                Ok((s, it, tau)) => {
                    let orbit_modes = col.expand(&col.unpack(s.z.as_slice()));
                    let tail = FourierOrbit::from_modes(n, s.nu, orbit_modes).tail();
                    if tail > settings.tail_tol && p < settings.p_max {
                        let new_p = (2 * p).min(settings.p_max);
                        let new_col = Collocation::new(sys, Reduction::Isotropy(k), new_p)?;
                        z_prev = pad(&col, &new_col, &z_prev);
                        t_z = pad(&col, &new_col, &t_z);
                        col = new_col;
                        p = new_p;
                        continue;
                    }
                    break (s, it, tau);
                }
                Err(e) => {
                    halvings += 1;
                    if halvings > settings.max_halvings {
                        termination = Termination::StepFailure(e.to_string());
                        break 'outer;
                    }
                    ds *= 0.5;
                }
            }
        };

        let nc = col.coeff_len();
        let w = col.weights();
        let tz = tangent.rows(0, nc).into_owned();
        let tn = tangent[nc];
        let scale = weighted_norm(&w, &tz, tn);
        t_z = tz / scale;
        t_nu = tn / scale;
        z_prev = state.z.clone();
        nu_prev = state.nu;

        let mut orbit = FourierOrbit::from_modes(n, state.nu, col.expand(&col.unpack(state.z.as_slice())));
        let res = modes_norm(&residual(sys, &orbit));
        orbit.residual_norm = res;
        let amplitude = orbit.amplitude();
        points.push(BranchPoint {
            symmetry: symmetry_residual(&orbit, k)?,
            orbit,
            amplitude,
            nu: state.nu,
            residual: res,
            iterations,
        });
        if amplitude > settings.max_amplitude {
            termination = Termination::AmplitudeBound;
            break;
        }
        if iterations <= 3 && ds < settings.ds {
            ds = (2.0 * ds).min(settings.ds);
        }
    }

    Ok(ContinuationBranch {
        k,
        nu0: bif.nu,
        points,
        termination,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::enumerate_bifurcations;
    use crate::model::Potential;

    fn branch(n: usize, mu: f64, pot: Potential, k: usize, plus: bool, steps: usize) -> ContinuationBranch {
        let pts = enumerate_bifurcations(n, mu, &pot).unwrap();
        let bif = pts
            .iter()
            .filter(|b| b.k == k)
            .max_by(|a, b| if plus { a.nu.total_cmp(&b.nu) } else { b.nu.total_cmp(&a.nu) })
            .unwrap()
            .clone();
        let sys = RingSystem::new(n, mu, pot).unwrap();
        let settings = ContinuationSettings {
            steps,
            ..Default::default()
        };
        continue_branch(&sys, &bif, &settings).unwrap()
    }

    #[test]
    fn cubic_branch_is_accurate_and_symmetric() {
        let b = branch(6, 0.5, Potential::Cubic, 3, true, 12);
        assert_eq!(b.termination, Termination::StepLimit);
        assert_eq!(b.points.len(), 12);
        for p in &b.points {
            assert!(p.residual < 1e-9, "residual {}", p.residual);
            assert!(p.symmetry.pattern < 1e-9);
        }
        assert!(b.points.windows(2).all(|w| w[1].amplitude > w[0].amplitude));
        let nu = b.extrapolate_nu().unwrap();
        assert!((nu - b.nu0).abs() < 1e-5, "{nu} vs {}", b.nu0);
    }

    #[test]
    fn saturable_three_ring_branch() {
        for plus in [false, true] {
            let b = branch(3, 1.0, Potential::Saturable, 1, plus, 10);
            assert_eq!(b.points.len(), 10);
            assert!(b.points.iter().all(|p| p.residual < 1e-9 && p.symmetry.pattern < 1e-9));
            assert!((b.extrapolate_nu().unwrap() - b.nu0).abs() < 1e-5);
        }
    }
}
