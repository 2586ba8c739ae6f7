//! Isotypic decomposition of `C^{2n}` under the action of `Z_n x SO(2)` fixing the
//! rotating wave, plus group actions and symmetry residuals for orbits.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::LatticeState;
use crate::orbits::FourierOrbit;

/// Off-block Frobenius mass above which a matrix is reported as non-equivariant.
pub const BLOCK_RESIDUAL_TOL: f64 = 1e-10;

/// Planar rotation `e^{J theta}` as a real 2x2 matrix.
pub fn rotation(theta: f64) -> [[f64; 2]; 2] {
    let (s, c) = theta.sin_cos();
    [[c, -s], [s, c]]
}

fn check_mode(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::ModeOutOfRange { n, k });
    }
    Ok(())
}

/// `T_k(w)`: component `j` is `n^{-1/2} e^{i k j zeta} R(j zeta) w`.
pub fn t_k_apply(n: usize, k: usize, w: [Complex64; 2]) -> Result<DVector<Complex64>> {
    check_mode(n, k)?;
    Ok(mode_vector(n, k, w, 1.0 / (n as f64).sqrt()))
}

/// Unnormalised pattern `e^{i k j zeta} R(j zeta) w`, `j = 1..n`. Any integer `k`.
pub(crate) fn mode_vector(n: usize, k: usize, w: [Complex64; 2], scale: f64) -> DVector<Complex64> {
    let zeta = 2.0 * PI / n as f64;
    let mut out = DVector::zeros(2 * n);
    for j in 1..=n {
        let phase = Complex64::from_polar(scale, ((k * j) % n) as f64 * zeta);
        let r = rotation(j as f64 * zeta);
        out[2 * (j - 1)] = phase * (w[0] * r[0][0] + w[1] * r[0][1]);
        out[2 * (j - 1) + 1] = phase * (w[0] * r[1][0] + w[1] * r[1][1]);
    }
    out
}

/// The unitary change of variables `P w = sum_k T_k(w_k)`, columns ordered
/// `T_1(e_1), T_1(e_2), T_2(e_1), ...`.
#[derive(Clone, Debug)]
pub struct ChangeOfVariables {
    n: usize,
    p: DMatrix<Complex64>,
}

impl ChangeOfVariables {
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `|| P^* P - I ||_max`.
    pub fn unitarity_defect(&self) -> f64 {
        let id = DMatrix::<Complex64>::identity(2 * self.n, 2 * self.n);
        (self.p.adjoint() * &self.p - id)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

pub fn assemble_p(n: usize) -> ChangeOfVariables {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut p = DMatrix::zeros(2 * n, 2 * n);
    for k in 1..=n {
        for (c, w) in [[one, zero], [zero, one]].into_iter().enumerate() {
            let col = mode_vector(n, k, w, 1.0 / (n as f64).sqrt());
            p.set_column(2 * (k - 1) + c, &col);
        }
    }
    ChangeOfVariables { n, p }
}

#[derive(Clone, Debug)]
pub struct BlockExtraction {
    /// Diagonal blocks in order `k = 1..n`.
    pub blocks: Vec<Matrix2<Complex64>>,
    /// Frobenius norm of everything outside the diagonal 2x2 blocks.
    pub off_block_residual: f64,
}

impl BlockExtraction {
    pub fn is_block_diagonal(&self) -> bool {
        self.off_block_residual <= BLOCK_RESIDUAL_TOL
    }
}

/// Computes `P^{-1} M P` and splits it into diagonal blocks plus the discarded mass.
pub fn block_extract(p: &ChangeOfVariables, m: &DMatrix<Complex64>) -> Result<BlockExtraction> {
    let dim = 2 * p.n;
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: m.nrows(),
        });
    }
    let c = p.p.adjoint() * m * &p.p;
    let mut blocks = Vec::with_capacity(p.n);
    let mut off = 0.0;
    for r in 0..dim {
        for col in 0..dim {
            if r / 2 != col / 2 {
                off += c[(r, col)].norm_sqr();
            }
        }
    }
    for k in 0..p.n {
        blocks.push(Matrix2::new(
            c[(2 * k, 2 * k)],
            c[(2 * k, 2 * k + 1)],
            c[(2 * k + 1, 2 * k)],
            c[(2 * k + 1, 2 * k + 1)],
        ));
    }
    Ok(BlockExtraction {
        blocks,
        off_block_residual: off.sqrt(),
    })
}

pub fn real_to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Element `(gamma, theta, phi)` of `Z_n x SO(2) x S^1`: index shift `j -> j + shift`,
/// rotation `e^{-J theta}` of each oscillator and time translation `t -> t + phi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupElement {
    pub shift: i64,
    pub theta: f64,
    pub phi: f64,
}

impl GroupElement {
    pub fn new(shift: i64, theta: f64, phi: f64) -> Self {
        Self { shift, theta, phi }
    }

    fn spatial<T>(&self, n: usize, get: impl Fn(usize) -> [T; 2]) -> Vec<[T; 2]>
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    {
        let (s, c) = self.theta.sin_cos();
        (0..n)
            .map(|j| {
                let src = (j as i64 + self.shift).rem_euclid(n as i64) as usize;
                let [a, b] = get(src);
                [a * c + b * s, a * (-s) + b * c]
            })
            .collect()
    }

    pub fn act_state(&self, x: &LatticeState) -> LatticeState {
        let out = self.spatial(x.n(), |j| x.oscillator(j));
        LatticeState::from_vector(DVector::from_iterator(2 * out.len(), out.into_iter().flatten()))
    }

    pub fn act_vector(&self, x: &DVector<Complex64>) -> DVector<Complex64> {
        let n = x.len() / 2;
        let out = self.spatial(n, |j| [x[2 * j], x[2 * j + 1]]);
        DVector::from_iterator(2 * n, out.into_iter().flatten())
    }

    pub fn act_orbit(&self, orbit: &FourierOrbit) -> FourierOrbit {
        let modes = orbit
            .modes()
            .iter()
            .enumerate()
            .map(|(l, x)| self.act_vector(x) * Complex64::from_polar(1.0, l as f64 * self.phi))
            .collect();
        FourierOrbit::from_modes(orbit.n(), orbit.nu(), modes)
    }
}

/// Isotropy group `Z~_n(k) = <(zeta, zeta, -k zeta)>`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IsotropyLabel {
    pub n: usize,
    pub k: usize,
    /// Generator angles reduced to `[0, 2 pi)`.
    pub generator: [f64; 3],
}

impl IsotropyLabel {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        check_mode(n, k)?;
        let zeta = 2.0 * PI / n as f64;
        let time = ((n - k % n) % n) as f64 * zeta;
        Ok(Self {
            n,
            k,
            generator: [zeta, zeta, time],
        })
    }

    pub fn generator_element(&self) -> GroupElement {
        GroupElement::new(1, self.generator[0], self.generator[2])
    }

    pub fn label(&self) -> String {
        format!("Z~_{}({})", self.n, self.k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SymmetryResidual {
    /// `max |u_{j+1}(t) - e^{i j zeta} u_1(t + j k zeta)|`.
    pub pattern: f64,
    /// `max | |u_{j+1}(t)| - |u_1(t + j k zeta)| |`.
    pub norm: f64,
}

fn time_grid(orbit: &FourierOrbit) -> Vec<f64> {
    let m = (4 * orbit.p() + 1).max(64);
    (0..m).map(|i| 2.0 * PI * i as f64 / m as f64).collect()
}

pub fn symmetry_residual(orbit: &FourierOrbit, k: usize) -> Result<SymmetryResidual> {
    let n = orbit.n();
    check_mode(n, k)?;
    let zeta = 2.0 * PI / n as f64;
    let mut pattern: f64 = 0.0;
    let mut norm: f64 = 0.0;
    for t in time_grid(orbit) {
        let here = orbit.evaluate(t);
        for j in 0..n {
            let shifted = orbit.evaluate(t + (j * k) as f64 * zeta).complex(0);
            let target = Complex64::from_polar(1.0, j as f64 * zeta) * shifted;
            let u = here.complex(j);
            pattern = pattern.max((u - target).norm());
            norm = norm.max((u.norm() - shifted.norm()).abs());
        }
    }
    Ok(SymmetryResidual { pattern, norm })
}

/// For `k | n`: `max |u_{j + n/k}(t) - e^{i 2 pi / k} u_j(t)|`, i.e. the ring splits
/// into `k` identical travelling waves of `n/k` oscillators each.
pub fn traveling_wave_residual(orbit: &FourierOrbit, k: usize) -> Result<f64> {
    let n = orbit.n();
    check_mode(n, k)?;
    if !n.is_multiple_of(k) {
        return Err(Error::InvalidArgument(format!("k = {k} does not divide n = {n}")));
    }
    let m = n / k;
    let phase = Complex64::from_polar(1.0, 2.0 * PI * m as f64 / n as f64);
    let mut worst: f64 = 0.0;
    for t in time_grid(orbit) {
        let x = orbit.evaluate(t);
        for j in 0..n {
            worst = worst.max((x.complex((j + m) % n) - phase * x.complex(j)).norm());
        }
    }
    Ok(worst)
}
