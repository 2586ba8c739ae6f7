use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::model::LatticeState;

/// Truncated Fourier series `x(t) = sum_{|l| <= p} x_l e^{i l t}` of a real
/// `2 pi`-periodic lattice trajectory with frequency `nu`.
///
/// Only `l = 0..=p` are stored; `x_{-l} = conj(x_l)` holds exactly and `x_0` is real.
#[derive(Clone, Debug)]
pub struct FourierOrbit {
    n: usize,
    nu: f64,
    modes: Vec<DVector<Complex64>>,
    /// l2 norm over all retained modes of the residual, when known.
    pub residual_norm: f64,
}

impl FourierOrbit {
    pub fn from_modes(n: usize, nu: f64, mut modes: Vec<DVector<Complex64>>) -> Self {
        assert!(!modes.is_empty(), "orbit needs at least the mean mode");
        for m in &modes {
            assert_eq!(m.len(), 2 * n, "mode dimension must be 2n");
        }
        for z in modes[0].iter_mut() {
            z.im = 0.0;
        }
        Self {
            n,
            nu,
            modes,
            residual_norm: f64::NAN,
        }
    }

    pub fn constant(x: &LatticeState, nu: f64) -> Self {
        let m0 = x.as_vector().map(|v| Complex64::new(v, 0.0));
        Self::from_modes(x.n(), nu, vec![m0])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.nu
    }

    pub fn p(&self) -> usize {
        self.modes.len() - 1
    }

    pub fn modes(&self) -> &[DVector<Complex64>] {
        &self.modes
    }

    /// Mode `x_l` for any `l`, zero beyond the cutoff.
    pub fn coefficient(&self, l: i64) -> DVector<Complex64> {
        let a = l.unsigned_abs() as usize;
        match self.modes.get(a) {
            Some(m) if l >= 0 => m.clone(),
            Some(m) => m.map(|z| z.conj()),
            None => DVector::zeros(2 * self.n),
        }
    }

    /// Zero-pads (or truncates) to cutoff `p`.
    pub fn with_cutoff(&self, p: usize) -> Self {
        let mut modes = self.modes.clone();
        modes.resize(p + 1, DVector::zeros(2 * self.n));
        let mut out = Self::from_modes(self.n, self.nu, modes);
        out.residual_norm = self.residual_norm;
        out
    }

    pub fn evaluate(&self, t: f64) -> LatticeState {
        let mut v = self.modes[0].map(|z| z.re);
        for (l, m) in self.modes.iter().enumerate().skip(1) {
            let e = Complex64::from_polar(2.0, l as f64 * t);
            for (vi, mi) in v.iter_mut().zip(m.iter()) {
                *vi += (e * mi).re;
            }
        }
        LatticeState::from_vector(v)
    }

    /// Time derivative `dx/dt` (in the rescaled time where the period is `2 pi`).
    pub fn evaluate_derivative(&self, t: f64) -> LatticeState {
        let mut v = DVector::zeros(2 * self.n);
        for (l, m) in self.modes.iter().enumerate().skip(1) {
            let e = Complex64::new(0.0, 2.0 * l as f64) * Complex64::from_polar(1.0, l as f64 * t);
            for (vi, mi) in v.iter_mut().zip(m.iter()) {
                *vi += (e * mi).re;
            }
        }
        LatticeState::from_vector(v)
    }

    /// Samples on the uniform grid `t_m = 2 pi m / samples`.
    pub fn sample(&self, samples: usize) -> Vec<LatticeState> {
        let mut tf = Transform::new(samples);
        let cols = tf.synthesize(&self.modes, 2 * self.n);
        (0..samples)
            .map(|m| LatticeState::from_vector(DVector::from_iterator(2 * self.n, cols.iter().map(|c| c[m]))))
            .collect()
    }

    /// Re-transforms uniform samples into a cutoff-`p` orbit.
    pub fn from_samples(samples: &[LatticeState], nu: f64, p: usize) -> Self {
        let n = samples[0].n();
        let mut tf = Transform::new(samples.len());
        let cols: Vec<Vec<f64>> = (0..2 * n)
            .map(|c| samples.iter().map(|s| s.as_vector()[c]).collect())
            .collect();
        let modes = tf.analyze(&cols, p);
        Self::from_modes(n, nu, modes)
    }

    /// l2 norm of all non-constant modes, `sqrt(sum_{l != 0} |x_l|^2)`.
    pub fn amplitude(&self) -> f64 {
        (2.0 * self.modes.iter().skip(1).map(|m| m.norm_squared()).sum::<f64>()).sqrt()
    }

    /// Largest mode norm among the top quarter of retained modes.
    pub fn tail(&self) -> f64 {
        let p = self.p();
        if p == 0 {
            return 0.0;
        }
        let start = (3 * p / 4).max(1);
        self.modes[start..].iter().map(|m| m.norm()).fold(0.0, f64::max)
    }
}

/// Real-signal DFT helper on a fixed grid size.
pub(crate) struct Transform {
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
}

impl Transform {
    pub fn new(size: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            size,
            forward: planner.plan_fft_forward(size),
            inverse: planner.plan_fft_inverse(size),
            buf: vec![Complex64::new(0.0, 0.0); size],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Samples of each component `c < dim` from modes `0..=p` (length-`dim` vectors).
    pub fn synthesize(&mut self, modes: &[DVector<Complex64>], dim: usize) -> Vec<Vec<f64>> {
        (0..dim)
            .map(|c| {
                let coeffs: Vec<Complex64> = modes.iter().map(|m| m[c]).collect();
                self.synthesize_scalar(&coeffs)
            })
            .collect()
    }

    pub fn synthesize_scalar(&mut self, coeffs: &[Complex64]) -> Vec<f64> {
        let size = self.size;
        assert!(2 * (coeffs.len() - 1) < size, "grid too coarse for cutoff");
        self.buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        self.buf[0] = Complex64::new(coeffs[0].re, 0.0);
        for (l, &z) in coeffs.iter().enumerate().skip(1) {
            self.buf[l] = z;
            self.buf[size - l] = z.conj();
        }
        self.inverse.process(&mut self.buf);
        self.buf.iter().map(|z| z.re).collect()
    }

    /// Fourier coefficients `0..=p` of real periodic samples.
    pub fn analyze_scalar(&mut self, samples: &[f64], p: usize) -> Vec<Complex64> {
        let scale = 1.0 / self.size as f64;
        for (b, &s) in self.buf.iter_mut().zip(samples) {
            *b = Complex64::new(s, 0.0);
        }
        self.forward.process(&mut self.buf);
        let mut out: Vec<Complex64> = self.buf[..=p].iter().map(|z| z * scale).collect();
        out[0].im = 0.0;
        out
    }

    pub fn analyze(&mut self, cols: &[Vec<f64>], p: usize) -> Vec<DVector<Complex64>> {
        let per: Vec<Vec<Complex64>> = cols.iter().map(|c| self.analyze_scalar(c, p)).collect();
        (0..=p)
            .map(|l| DVector::from_iterator(cols.len(), per.iter().map(|c| c[l])))
            .collect()
    }
}

/// Weighted inner product `<a, b> = sum_{|l| <= p} Re(a_l^* b_l)` over stored modes,
/// which equals the mean of `<a(t), b(t)>` over one period.
pub fn mode_inner(a: &[DVector<Complex64>], b: &[DVector<Complex64>]) -> f64 {
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(l, (x, y))| {
            let w = if l == 0 { 1.0 } else { 2.0 };
            w * x.iter().zip(y.iter()).map(|(p, q)| (p.conj() * q).re).sum::<f64>()
        })
        .sum()
}
