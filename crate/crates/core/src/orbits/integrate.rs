//! Implicit-midpoint integration of `u' = -J grad V(u)`. The scheme is symplectic,
//! so `V` is conserved up to a bounded oscillation for moderate step sizes.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{symplectic_matrix, LatticeState, RingSystem};

const NEWTON_STEP_TOL: f64 = 1e-12;
const MAX_INNER: usize = 25;

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<LatticeState>,
}

pub fn integrate(sys: &RingSystem, x0: &LatticeState, t_end: f64, dt: f64) -> Result<Trajectory> {
    if dt.is_nan() || t_end.is_nan() || dt <= 0.0 || t_end < 0.0 {
        return Err(Error::InvalidArgument(format!("need dt > 0 and T >= 0, got dt = {dt}, T = {t_end}")));
    }
    if x0.n() != sys.n() {
        return Err(Error::DimensionMismatch { expected: sys.n(), got: x0.n() });
    }
    let steps = (t_end / dt).round() as usize;
    let jm = symplectic_matrix(sys.n());
    let eye = DMatrix::<f64>::identity(sys.dim(), sys.dim());
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut x = x0.as_vector().clone();
    times.push(0.0);
    states.push(x0.clone());
    for step in 0..steps {
        let f = |y: &DVector<f64>| sys.vector_field(&LatticeState::from_vector(y.clone())).into_vector();
        let mut y = &x + f(&x) * (0.5 * dt);
        let mut converged = false;
        for _ in 0..MAX_INNER {
            let g = &y - &x - f(&y) * (0.5 * dt);
            let df = -(&jm * sys.hessian_v(&LatticeState::from_vector(y.clone())));
            let dg = &eye - df * (0.5 * dt);
            let delta = dg.lu().solve(&g).ok_or(Error::StepFailed { step, t: step as f64 * dt })?;
            y -= &delta;
            if delta.amax() <= NEWTON_STEP_TOL * y.amax().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::StepFailed { step, t: step as f64 * dt });
        }
        x = &y * 2.0 - &x;
        times.push((step + 1) as f64 * dt);
        states.push(LatticeState::from_vector(x.clone()));
    }
    Ok(Trajectory { times, states })
}

/// Distance from `x` to the rotation orbit `{e^{i theta} a}` of the standing wave.
pub fn deviation_from_rotating_wave(sys: &RingSystem, x: &LatticeState) -> f64 {
    let (a, _) = sys.standing_wave();
    let (ac, xc) = (a.to_complex(), x.to_complex());
    let overlap: Complex64 = ac.iter().zip(&xc).map(|(p, q)| p.conj() * q).sum();
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { Complex64::new(1.0, 0.0) };
    ac.iter()
        .zip(&xc)
        .map(|(p, q)| (q - phase * p).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Potential;

    #[test]
    fn rotating_wave_stays_on_its_orbit() {
        let sys = RingSystem::new(5, 0.4, Potential::Cubic).unwrap();
        let (a, _) = sys.standing_wave();
        let traj = integrate(&sys, &a, 2.0, 0.01).unwrap();
        for x in &traj.states {
            assert!(deviation_from_rotating_wave(&sys, x) < 1e-10);
        }
    }

    #[test]
    fn energy_and_power_are_conserved() {
        let sys = RingSystem::new(4, 0.6, Potential::Saturable).unwrap();
        let (a, _) = sys.standing_wave();
        let mut v = a.into_vector();
        v[0] += 0.05;
        v[3] -= 0.03;
        let x0 = LatticeState::from_vector(v);
        let traj = integrate(&sys, &x0, 5.0, 0.01).unwrap();
        let (e0, p0) = (sys.potential_v(&x0), x0.power());
        for x in &traj.states {
            assert!((sys.potential_v(x) - e0).abs() < 1e-6);
            assert!((x.power() - p0).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_step() {
        let sys = RingSystem::new(3, 1.0, Potential::Cubic).unwrap();
        assert!(integrate(&sys, &LatticeState::zeros(3), 1.0, 0.0).is_err());
        assert!(integrate(&sys, &LatticeState::zeros(4), 1.0, 0.1).is_err());
    }
}
