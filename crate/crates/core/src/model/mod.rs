//! The dNLS ring in the rotating frame.
//!
//! Oscillator `j = 1..n` is stored at slots `2(j-1), 2(j-1)+1` of a real
//! vector of length `2n`; the planar complex view is `c_j = u_j^1 + i u_j^2`.
//! The symplectic matrix `J = [[0, -1], [1, 0]]` acts as multiplication by `i`,
//! so the equations of motion read `J u' = grad V(u)`, i.e. `u' = -J grad V(u)`.

pub mod potential;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub use potential::{CustomPotential, Potential, PotentialKind};

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct RingSystem {
    n: usize,
    mu: f64,
    potential: Potential,
    zeta: f64,
    omega: f64,
}

impl RingSystem {
    pub fn new(n: usize, mu: f64, potential: Potential) -> Result<Self> {
        if n < 3 {
            return Err(Error::TooFewOscillators(n));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidAmplitude(mu));
        }
        let zeta = 2.0 * PI / n as f64;
        let omega = 4.0 * (zeta / 2.0).sin().powi(2) - potential.h(mu * mu);
        Ok(Self {
            n,
            mu,
            potential,
            zeta,
            omega,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    /// Rotating-frame frequency `4 sin^2(zeta/2) - h(mu^2)`.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    /// Relative equilibrium `a_j = e^{i j zeta}` together with `omega`.
    pub fn standing_wave(&self) -> (LatticeState, f64) {
        let mut v = DVector::zeros(self.dim());
        for j in 0..self.n {
            let (s, c) = (((j + 1) as f64) * self.zeta).sin_cos();
            v[2 * j] = c;
            v[2 * j + 1] = s;
        }
        (LatticeState::from_vector(v), self.omega)
    }

    /// `V(x) = sum_j [ omega/2 |x_j|^2 + G(mu^2 |x_j|^2) / (2 mu^2) - |x_{j+1} - x_j|^2 / 2 ]`.
    pub fn potential_v(&self, x: &LatticeState) -> f64 {
        let mu2 = self.mu * self.mu;
        let v = x.as_vector();
        let mut total = 0.0;
        for j in 0..self.n {
            let (a, b) = (v[2 * j], v[2 * j + 1]);
            let r2 = a * a + b * b;
            total += 0.5 * self.omega * r2 + self.potential.antiderivative(mu2 * r2) / (2.0 * mu2);
            let jn = (j + 1) % self.n;
            let (da, db) = (v[2 * jn] - a, v[2 * jn + 1] - b);
            total -= 0.5 * (da * da + db * db);
        }
        total
    }

    pub fn gradient_v(&self, x: &LatticeState) -> LatticeState {
        let n = self.n;
        let mu2 = self.mu * self.mu;
        let v = x.as_vector();
        let mut g = DVector::zeros(2 * n);
        for j in 0..n {
            let (jp, jm) = ((j + 1) % n, (j + n - 1) % n);
            let (a, b) = (v[2 * j], v[2 * j + 1]);
            let local = self.omega + self.potential.h(mu2 * (a * a + b * b));
            for c in 0..2 {
                g[2 * j + c] = local * v[2 * j + c] + v[2 * jp + c] - 2.0 * v[2 * j + c] + v[2 * jm + c];
            }
        }
        LatticeState::from_vector(g)
    }

    pub fn hessian_v(&self, x: &LatticeState) -> DMatrix<f64> {
        let n = self.n;
        let mut hess = DMatrix::zeros(2 * n, 2 * n);
        for j in 0..n {
            let block = self.onsite_hessian(x.oscillator(j));
            for r in 0..2 {
                for c in 0..2 {
                    hess[(2 * j + r, 2 * j + c)] = block[r][c] - if r == c { 2.0 } else { 0.0 };
                }
            }
            for nb in [(j + 1) % n, (j + n - 1) % n] {
                for c in 0..2 {
                    hess[(2 * j + c, 2 * nb + c)] += 1.0;
                }
            }
        }
        hess
    }

    /// Hessian of the on-site part `omega/2 |u|^2 + G(mu^2|u|^2)/(2mu^2)` at one oscillator.
    pub(crate) fn onsite_hessian(&self, u: [f64; 2]) -> [[f64; 2]; 2] {
        let mu2 = self.mu * self.mu;
        let s = mu2 * (u[0] * u[0] + u[1] * u[1]);
        let diag = self.omega + self.potential.h(s);
        let rank1 = 2.0 * mu2 * self.potential.h_prime(s);
        [
            [diag + rank1 * u[0] * u[0], rank1 * u[0] * u[1]],
            [rank1 * u[0] * u[1], diag + rank1 * u[1] * u[1]],
        ]
    }

    /// Right-hand side `-J grad V(x)` of the rotating-frame equations.
    pub fn vector_field(&self, x: &LatticeState) -> LatticeState {
        self.gradient_v(x).apply_j().scaled(-1.0)
    }

    /// Linearisation `-J D^2V(a)` of the vector field at the relative equilibrium.
    pub fn linearization_at_equilibrium(&self) -> DMatrix<f64> {
        let (a, _) = self.standing_wave();
        -symplectic_matrix(self.n) * self.hessian_v(&a)
    }
}

/// The block-diagonal matrix `diag(J, ..., J)`.
pub fn symplectic_matrix(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for b in 0..n {
        j[(2 * b, 2 * b + 1)] = -1.0;
        j[(2 * b + 1, 2 * b)] = 1.0;
    }
    j
}

/// `n` planar oscillators stored as a real `2n` vector.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeState {
    values: DVector<f64>,
}

impl LatticeState {
    pub fn from_vector(values: DVector<f64>) -> Self {
        assert!(values.len().is_multiple_of(2), "lattice state needs an even length");
        Self { values }
    }

    pub fn new(values: Vec<f64>, n: usize) -> Result<Self> {
        if values.len() != 2 * n {
            return Err(Error::DimensionMismatch {
                expected: 2 * n,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("lattice state has non-finite entries".into()));
        }
        Ok(Self {
            values: DVector::from_vec(values),
        })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            values: DVector::zeros(2 * n),
        }
    }

    pub fn from_complex(c: &[Complex64]) -> Self {
        let mut v = DVector::zeros(2 * c.len());
        for (j, z) in c.iter().enumerate() {
            v[2 * j] = z.re;
            v[2 * j + 1] = z.im;
        }
        Self { values: v }
    }

    pub fn n(&self) -> usize {
        self.values.len() / 2
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.values
    }

    /// Oscillator at zero-based slot `j` (one-based index `j + 1`).
    pub fn oscillator(&self, j: usize) -> [f64; 2] {
        [self.values[2 * j], self.values[2 * j + 1]]
    }

    pub fn complex(&self, j: usize) -> Complex64 {
        Complex64::new(self.values[2 * j], self.values[2 * j + 1])
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        (0..self.n()).map(|j| self.complex(j)).collect()
    }

    /// Applies `diag(J, ..., J)`.
    pub fn apply_j(&self) -> LatticeState {
        let mut out = DVector::zeros(self.values.len());
        for j in 0..self.n() {
            out[2 * j] = -self.values[2 * j + 1];
            out[2 * j + 1] = self.values[2 * j];
        }
        LatticeState { values: out }
    }

    pub fn scaled(&self, s: f64) -> LatticeState {
        LatticeState {
            values: &self.values * s,
        }
    }

    pub fn dot(&self, other: &LatticeState) -> f64 {
        self.values.dot(&other.values)
    }

    pub fn norm_sup(&self) -> f64 {
        self.values.amax()
    }

    /// Total power `sum_j |u_j|^2`.
    pub fn power(&self) -> f64 {
        self.values.norm_squared()
    }
}
