//! Truncated Fourier system `F_l = -l nu iJ x_l + g_l`, `|l| <= p`, its Jacobian
//! and a bordered Newton solver.
//!
//! The solver works either on the full `2n`-dimensional lattice or on the
//! fixed-point subspace of `Z~_n(k)`, where the whole ring is generated by
//! oscillator `n`: `u_j(t) = R(j zeta) v(t + j k zeta)`. In the reduced form the
//! mode-`l` coefficient of the ring lies in `W_{lk}` and the coupling to the
//! neighbours becomes the 2x2 matrix `R(zeta) e^{ilk zeta} + R(-zeta) e^{-ilk zeta}`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::fourier::{mode_inner, FourierOrbit, Transform};
use crate::error::{Error, Result};
use crate::model::RingSystem;
use crate::symmetry::{rotation, traveling_wave_residual};

/// Newton stops once the l2 residual over retained modes falls below this.
pub const NEWTON_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 50;
/// `sigma_min / sigma_max` below this is reported as a singular Jacobian.
pub const SINGULAR_RATIO: f64 = 1e-12;

const C0: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const CI: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reduction {
    Full,
    /// Restrict to orbits with isotropy `Z~_n(k)`.
    Isotropy(usize),
}

/// `(iJ) y` per oscillator: `(y1, y2) -> (-i y2, i y1)`.
fn i_j_apply(y: &DVector<Complex64>) -> DVector<Complex64> {
    let mut out = DVector::zeros(y.len());
    for b in 0..y.len() / 2 {
        out[2 * b] = -CI * y[2 * b + 1];
        out[2 * b + 1] = CI * y[2 * b];
    }
    out
}

/// `(-J) y` per oscillator: `(y1, y2) -> (y2, -y1)`, the rotation generator.
fn minus_j_apply(y: &DVector<Complex64>) -> DVector<Complex64> {
    let mut out = DVector::zeros(y.len());
    for b in 0..y.len() / 2 {
        out[2 * b] = y[2 * b + 1];
        out[2 * b + 1] = -y[2 * b];
    }
    out
}

fn time_derivative(modes: &[DVector<Complex64>]) -> Vec<DVector<Complex64>> {
    modes
        .iter()
        .enumerate()
        .map(|(l, m)| m * Complex64::new(0.0, l as f64))
        .collect()
}

/// The collocation operator for one `(system, reduction, p)` triple.
pub(crate) struct Collocation<'a> {
    sys: &'a RingSystem,
    reduction: Reduction,
    p: usize,
    dim: usize,
    coupling: Vec<DMatrix<Complex64>>,
    transform: Transform,
}

impl<'a> Collocation<'a> {
    pub fn new(sys: &'a RingSystem, reduction: Reduction, p: usize) -> Result<Self> {
        let n = sys.n();
        let samples = 4 * (p + 1);
        let coupling = match reduction {
            Reduction::Full => {
                let mut lap = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
                for j in 0..n {
                    for c in 0..2 {
                        lap[(2 * j + c, 2 * j + c)] = Complex64::new(sys.omega() - 2.0, 0.0);
                        lap[(2 * j + c, 2 * ((j + 1) % n) + c)] += Complex64::new(1.0, 0.0);
                        lap[(2 * j + c, 2 * ((j + n - 1) % n) + c)] += Complex64::new(1.0, 0.0);
                    }
                }
                vec![lap; p + 1]
            }
            Reduction::Isotropy(k) => {
                if k == 0 || k > n {
                    return Err(Error::ModeOutOfRange { n, k });
                }
                let zeta = sys.zeta();
                let (rp, rm) = (rotation(zeta), rotation(-zeta));
                (0..=p)
                    .map(|l| {
                        let ph = Complex64::from_polar(1.0, ((l * k) % n) as f64 * zeta);
                        DMatrix::from_fn(2, 2, |r, c| {
                            let diag = if r == c { sys.omega() - 2.0 } else { 0.0 };
                            Complex64::new(diag, 0.0) + ph * rp[r][c] + ph.conj() * rm[r][c]
                        })
                    })
                    .collect()
            }
        };
        Ok(Self {
            sys,
            reduction,
            p,
            dim: match reduction {
                Reduction::Full => 2 * n,
                Reduction::Isotropy(_) => 2,
            },
            coupling,
            transform: Transform::new(samples),
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of real coefficient unknowns `dim (2p + 1)`.
    pub fn coeff_len(&self) -> usize {
        self.dim * (2 * self.p + 1)
    }

    /// Norm factor converting reduced residual norms to full-lattice norms.
    pub fn norm_scale(&self) -> f64 {
        match self.reduction {
            Reduction::Full => 1.0,
            Reduction::Isotropy(_) => (self.sys.n() as f64).sqrt(),
        }
    }

    fn nonlinear_samples(&mut self, y: &[DVector<Complex64>]) -> Vec<Vec<f64>> {
        let mu2 = self.sys.mu() * self.sys.mu();
        let pot = self.sys.potential();
        let mut cols = self.transform.synthesize(y, self.dim);
        let samples = self.transform.size();
        for b in 0..self.dim / 2 {
            for m in 0..samples {
                let (a, c) = (cols[2 * b][m], cols[2 * b + 1][m]);
                let h = pot.h(mu2 * (a * a + c * c));
                cols[2 * b][m] = h * a;
                cols[2 * b + 1][m] = h * c;
            }
        }
        cols
    }

    /// `r_l = (-l nu iJ + L_l) y_l + N_l(y)` for `l = 0..=p`.
    pub fn residual(&mut self, y: &[DVector<Complex64>], nu: f64) -> Vec<DVector<Complex64>> {
        let cols = self.nonlinear_samples(y);
        let nl = self.transform.analyze(&cols, self.p);
        (0..=self.p)
            .map(|l| {
                &self.coupling[l] * &y[l] - i_j_apply(&y[l]) * Complex64::new(l as f64 * nu, 0.0) + &nl[l]
            })
            .collect()
    }

    /// Fourier modes `Q_q`, `q = 0..=2p`, of the per-oscillator Hessian of the local
    /// nonlinearity along `y(t)`; entry `[b][q]` is the 2x2 block of oscillator `b`.
    fn hessian_modes(&mut self, y: &[DVector<Complex64>]) -> Vec<Vec<[[Complex64; 2]; 2]>> {
        let mu2 = self.sys.mu() * self.sys.mu();
        let pot = self.sys.potential();
        let cols = self.transform.synthesize(y, self.dim);
        let samples = self.transform.size();
        let q_max = 2 * self.p;
        (0..self.dim / 2)
            .map(|b| {
                let mut e = [vec![0.0; samples], vec![0.0; samples], vec![0.0; samples]];
                for m in 0..samples {
                    let (a, c) = (cols[2 * b][m], cols[2 * b + 1][m]);
                    let s = mu2 * (a * a + c * c);
                    let h = pot.h(s);
                    let r1 = 2.0 * mu2 * pot.h_prime(s);
                    e[0][m] = h + r1 * a * a;
                    e[1][m] = r1 * a * c;
                    e[2][m] = h + r1 * c * c;
                }
                let f: Vec<Vec<Complex64>> = e.iter().map(|s| self.transform.analyze_scalar(s, q_max)).collect();
                (0..=q_max).map(|q| [[f[0][q], f[1][q]], [f[1][q], f[2][q]]]).collect()
            })
            .collect()
    }

    /// Jacobian of the coefficient residual with respect to the real coefficient
    /// unknowns, laid out as `[Re y_0 | Re y_1, Im y_1 | ... ]` for both rows and columns.
    pub fn jacobian(&mut self, y: &[DVector<Complex64>], nu: f64) -> DMatrix<f64> {
        let (d, p) = (self.dim, self.p);
        let q = self.hessian_modes(y);
        let qm = |q: &Vec<Vec<[[Complex64; 2]; 2]>>, b: usize, idx: i64, r: usize, c: usize| -> Complex64 {
            if idx >= 0 {
                q[b][idx as usize][r][c]
            } else {
                q[b][(-idx) as usize][r][c].conj()
            }
        };
        let size = self.coeff_len();
        let mut jac = DMatrix::zeros(size, size);
        let row_of = |l: usize| if l == 0 { 0 } else { d * (2 * l - 1) };
        // Linear part: block-diagonal in l.
        for l in 0..=p {
            let s = l as f64 * nu;
            let lin = DMatrix::from_fn(d, d, |r, c| {
                let ij = match (r / 2 == c / 2, r % 2, c % 2) {
                    (true, 0, 1) => -CI,
                    (true, 1, 0) => CI,
                    _ => C0,
                };
                self.coupling[l][(r, c)] - ij * s
            });
            self.scatter(&mut jac, &lin, l, l, row_of);
        }
        // Nonlinear convolution: dN_l = sum_m Q_{l-m} dy_m over m in -p..p.
        for l in 0..=p {
            for m in 0..=p {
                let (r0, c0) = (row_of(l), row_of(m));
                for b in 0..d / 2 {
                    for rr in 0..2 {
                        for cc in 0..2 {
                            let (ri, ci) = (2 * b + rr, 2 * b + cc);
                            let a = qm(&q, b, l as i64 - m as i64, rr, cc);
                            if m == 0 {
                                // dy_0 real.
                                jac[(r0 + ri, c0 + ci)] += a.re;
                                if l > 0 {
                                    jac[(r0 + d + ri, c0 + ci)] += a.im;
                                }
                                continue;
                            }
                            let bq = qm(&q, b, (l + m) as i64, rr, cc);
                            let re_col = a + bq;
                            let im_col = CI * (a - bq);
                            jac[(r0 + ri, c0 + ci)] += re_col.re;
                            jac[(r0 + ri, c0 + d + ci)] += im_col.re;
                            if l > 0 {
                                jac[(r0 + d + ri, c0 + ci)] += re_col.im;
                                jac[(r0 + d + ri, c0 + d + ci)] += im_col.im;
                            }
                        }
                    }
                }
            }
        }
        jac
    }

    /// Adds a complex-linear operator acting from mode `m` to mode `l` (no conjugate part).
    fn scatter(
        &self,
        jac: &mut DMatrix<f64>,
        op: &DMatrix<Complex64>,
        l: usize,
        m: usize,
        row_of: impl Fn(usize) -> usize,
    ) {
        let d = self.dim;
        let (r0, c0) = (row_of(l), row_of(m));
        for r in 0..d {
            for c in 0..d {
                let a = op[(r, c)];
                jac[(r0 + r, c0 + c)] += a.re;
                if m > 0 {
                    jac[(r0 + r, c0 + d + c)] -= a.im;
                }
                if l > 0 {
                    jac[(r0 + d + r, c0 + c)] += a.im;
                    if m > 0 {
                        jac[(r0 + d + r, c0 + d + c)] += a.re;
                    }
                }
            }
        }
    }

    pub fn pack(&self, modes: &[DVector<Complex64>]) -> DVector<f64> {
        let d = self.dim;
        let mut z = DVector::zeros(self.coeff_len());
        for (l, m) in modes.iter().enumerate().take(self.p + 1) {
            if l == 0 {
                for i in 0..d {
                    z[i] = m[i].re;
                }
            } else {
                let o = d * (2 * l - 1);
                for i in 0..d {
                    z[o + i] = m[i].re;
                    z[o + d + i] = m[i].im;
                }
            }
        }
        z
    }

    pub fn unpack(&self, z: &[f64]) -> Vec<DVector<Complex64>> {
        let d = self.dim;
        (0..=self.p)
            .map(|l| {
                if l == 0 {
                    DVector::from_fn(d, |i, _| Complex64::new(z[i], 0.0))
                } else {
                    let o = d * (2 * l - 1);
                    DVector::from_fn(d, |i, _| Complex64::new(z[o + i], z[o + d + i]))
                }
            })
            .collect()
    }

    /// Weights `w` with `mode_inner(a, b) = sum_i w_i a_i b_i` in real coordinates.
    pub fn weights(&self) -> DVector<f64> {
        DVector::from_fn(self.coeff_len(), |i, _| if i < self.dim { 1.0 } else { 2.0 })
    }

    /// Reduced coordinates of a full-lattice orbit (orthogonal projection onto the
    /// fixed-point subspace).
    pub fn reduce(&self, orbit: &FourierOrbit) -> Vec<DVector<Complex64>> {
        let n = self.sys.n();
        let padded = orbit.with_cutoff(self.p);
        match self.reduction {
            Reduction::Full => padded.modes().to_vec(),
            Reduction::Isotropy(k) => {
                let zeta = self.sys.zeta();
                padded
                    .modes()
                    .iter()
                    .enumerate()
                    .map(|(l, x)| {
                        let mut v = DVector::zeros(2);
                        for j in 1..=n {
                            let ph = Complex64::from_polar(1.0 / n as f64, -(((l * j * k) % n) as f64) * zeta);
                            let r = rotation(-(j as f64) * zeta);
                            let (a, b) = (x[2 * (j - 1)], x[2 * (j - 1) + 1]);
                            v[0] += ph * (a * r[0][0] + b * r[0][1]);
                            v[1] += ph * (a * r[1][0] + b * r[1][1]);
                        }
                        v
                    })
                    .collect()
            }
        }
    }

    /// Full-lattice modes from solver coordinates.
    pub fn expand(&self, y: &[DVector<Complex64>]) -> Vec<DVector<Complex64>> {
        match self.reduction {
            Reduction::Full => y.to_vec(),
            Reduction::Isotropy(k) => y
                .iter()
                .enumerate()
                .map(|(l, v)| crate::symmetry::mode_vector(self.sys.n(), (l * k) % self.sys.n(), [v[0], v[1]], 1.0))
                .collect(),
        }
    }
}

/// Ring residual `F_l` for `|l| <= p` (returned for `l = 0..=p`; negative modes are
/// conjugates). The nonlinear term is sampled on `4(p + 1)` points.
pub fn residual(sys: &RingSystem, orbit: &FourierOrbit) -> Vec<DVector<Complex64>> {
    let mut col = Collocation::new(sys, Reduction::Full, orbit.p()).expect("full reduction");
    col.residual(orbit.modes(), orbit.nu())
}

/// `l2` norm over all retained modes `|l| <= p` of a mode list.
pub fn modes_norm(modes: &[DVector<Complex64>]) -> f64 {
    mode_inner(modes, modes).sqrt()
}

/// Time integrals `c1 = int <F(x), x'> dt` and `c2 = int <F(x), -J x> dt` over one period.
pub fn orthogonality_check(sys: &RingSystem, orbit: &FourierOrbit) -> (f64, f64) {
    let m = (8 * (orbit.p() + 1)).max(512);
    let dt = 2.0 * PI / m as f64;
    let (mut c1, mut c2) = (0.0, 0.0);
    for i in 0..m {
        let t = i as f64 * dt;
        let x = orbit.evaluate(t);
        let xdot = orbit.evaluate_derivative(t);
        let f = sys.gradient_v(&x).into_vector() - xdot.apply_j().into_vector() * orbit.nu();
        c1 += f.dot(xdot.as_vector()) * dt;
        c2 -= f.dot(x.apply_j().as_vector()) * dt;
    }
    (c1, c2)
}

/// Linear constraint `<x - anchor, tangent> + (nu - nu_anchor) dnu = ds` that frees `nu`.
#[derive(Clone, Debug)]
pub struct ArclengthConstraint {
    pub anchor: FourierOrbit,
    /// Full-lattice direction in coefficient space.
    pub tangent: Vec<DVector<Complex64>>,
    pub dnu: f64,
    pub ds: f64,
}

#[derive(Clone, Debug)]
pub enum FrequencyMode {
    Fixed,
    Free(ArclengthConstraint),
}

/// Phase conditions removing the time-translation and rotation degeneracies,
/// plus the frequency treatment and the subspace to solve in.
#[derive(Clone, Debug)]
pub struct Gauges {
    pub time_phase: bool,
    pub rotation_phase: bool,
    pub frequency: FrequencyMode,
    pub reduction: Reduction,
    /// Orbit the phase conditions are taken against; defaults to the initial guess.
    pub reference: Option<FourierOrbit>,
}

impl Gauges {
    pub fn fixed_frequency(reduction: Reduction) -> Self {
        Self {
            time_phase: true,
            rotation_phase: true,
            frequency: FrequencyMode::Fixed,
            reduction,
            reference: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NewtonSolution {
    pub orbit: FourierOrbit,
    pub iterations: usize,
    /// Unfolding multipliers of the time and rotation directions (zero at exact solutions).
    pub unfolding: [f64; 2],
    pub time_phase_active: bool,
}

/// Internal bordered system in solver coordinates.
pub(crate) struct Bordered<'c, 'a> {
    pub col: &'c mut Collocation<'a>,
    pub y_ref: Vec<DVector<Complex64>>,
    pub time_active: bool,
    pub rot_active: bool,
    /// `(anchor z, anchor nu, tangent z, tangent nu, ds)` when nu is free.
    pub arclength: Option<(DVector<f64>, f64, DVector<f64>, f64, f64)>,
    pub fixed_nu: f64,
}

pub(crate) struct BorderedState {
    pub z: DVector<f64>,
    pub nu: f64,
    pub lambda: [f64; 2],
}

impl<'c, 'a> Bordered<'c, 'a> {
    fn directions(&self) -> (DVector<f64>, DVector<f64>) {
        let dt = self.col.pack(&time_derivative(&self.y_ref));
        let rot = self.col.pack(&self.y_ref.iter().map(minus_j_apply).collect::<Vec<_>>());
        let w = self.col.weights();
        let nt = dt.component_mul(&dt).dot(&w).sqrt();
        let nr = rot.component_mul(&rot).dot(&w).sqrt();
        (
            if nt > 0.0 { dt / nt } else { dt },
            if nr > 0.0 { rot / nr } else { rot },
        )
    }

    pub fn extras(&self) -> usize {
        self.time_active as usize + self.rot_active as usize + self.arclength.is_some() as usize
    }

    pub fn size(&self) -> usize {
        self.col.coeff_len() + self.extras()
    }

    fn unpack(&self, x: &DVector<f64>) -> BorderedState {
        let nc = self.col.coeff_len();
        let z = x.rows(0, nc).into_owned();
        let mut i = nc;
        let nu = if self.arclength.is_some() {
            i += 1;
            x[i - 1]
        } else {
            self.fixed_nu
        };
        let mut lambda = [0.0; 2];
        if self.time_active {
            lambda[0] = x[i];
            i += 1;
        }
        if self.rot_active {
            lambda[1] = x[i];
        }
        BorderedState { z, nu, lambda }
    }

    fn pack(&self, s: &BorderedState) -> DVector<f64> {
        let nc = self.col.coeff_len();
        let mut x = DVector::zeros(self.size());
        x.rows_mut(0, nc).copy_from(&s.z);
        let mut i = nc;
        if self.arclength.is_some() {
            x[i] = s.nu;
            i += 1;
        }
        if self.time_active {
            x[i] = s.lambda[0];
            i += 1;
        }
        if self.rot_active {
            x[i] = s.lambda[1];
        }
        x
    }

    /// Returns the augmented residual and the plain coefficient residual norm
    /// (full-lattice scale).
    fn evaluate(&mut self, s: &BorderedState) -> (DVector<f64>, f64) {
        let y = self.col.unpack(s.z.as_slice());
        let r = self.col.residual(&y, s.nu);
        let plain = modes_norm(&r) * self.col.norm_scale();
        let mut rz = self.col.pack(&r);
        let (dt, rot) = self.directions();
        let w = self.col.weights();
        if self.time_active {
            rz += &dt * s.lambda[0];
        }
        if self.rot_active {
            rz += &rot * s.lambda[1];
        }
        let mut out = DVector::zeros(self.size());
        let nc = self.col.coeff_len();
        out.rows_mut(0, nc).copy_from(&rz);
        let mut i = nc;
        if self.time_active {
            out[i] = dt.component_mul(&w).dot(&s.z);
            i += 1;
        }
        if self.rot_active {
            out[i] = rot.component_mul(&w).dot(&s.z);
            i += 1;
        }
        if let Some((az, anu, tz, tnu, ds)) = &self.arclength {
            out[i] = (&s.z - az).component_mul(&w).dot(tz) + (s.nu - anu) * tnu - ds;
        }
        (out, plain)
    }

    pub fn jacobian(&mut self, s: &BorderedState) -> DMatrix<f64> {
        let nc = self.col.coeff_len();
        let y = self.col.unpack(s.z.as_slice());
        let inner = self.col.jacobian(&y, s.nu);
        let mut jac = DMatrix::zeros(self.size(), self.size());
        jac.view_mut((0, 0), (nc, nc)).copy_from(&inner);
        let (dt, rot) = self.directions();
        let w = self.col.weights();
        let mut c = nc;
        if self.arclength.is_some() {
            let dnu: Vec<DVector<Complex64>> = y
                .iter()
                .enumerate()
                .map(|(l, m)| i_j_apply(m) * Complex64::new(-(l as f64), 0.0))
                .collect();
            jac.view_mut((0, c), (nc, 1)).copy_from(&self.col.pack(&dnu));
            c += 1;
        }
        let mut r = nc;
        if self.time_active {
            jac.view_mut((0, c), (nc, 1)).copy_from(&dt);
            jac.view_mut((r, 0), (1, nc)).copy_from(&dt.component_mul(&w).transpose());
            c += 1;
            r += 1;
        }
        if self.rot_active {
            jac.view_mut((0, c), (nc, 1)).copy_from(&rot);
            jac.view_mut((r, 0), (1, nc)).copy_from(&rot.component_mul(&w).transpose());
            r += 1;
        }
        if let Some((_, _, tz, tnu, _)) = &self.arclength {
            jac.view_mut((r, 0), (1, nc)).copy_from(&tz.component_mul(&w).transpose());
            jac[(r, nc)] = *tnu;
        }
        jac
    }

    pub fn solve(&mut self, start: BorderedState) -> Result<(BorderedState, usize, f64)> {
        let mut x = self.pack(&start);
        let mut last = f64::INFINITY;
        for it in 0..=NEWTON_MAX_ITER {
            let s = self.unpack(&x);
            let (g, plain) = self.evaluate(&s);
            let scalars = g.rows(self.col.coeff_len(), self.extras()).amax();
            if !plain.is_finite() {
                break;
            }
            last = plain;
            if plain <= NEWTON_TOL && (self.extras() == 0 || scalars <= NEWTON_TOL) {
                return Ok((s, it, plain));
            }
            if it == NEWTON_MAX_ITER {
                break;
            }
            let jac = self.jacobian(&s);
            let step = solve_checked(jac, &g)?;
            x -= step;
        }
        Err(Error::NoConvergence {
            iterations: NEWTON_MAX_ITER,
            residual: last,
        })
    }
}

/// LU solve with a singular-value check whenever the pivots look suspicious.
pub(crate) fn solve_checked(jac: DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let lu = jac.clone().lu();
    let u = lu.u();
    let diag: Vec<f64> = u.diagonal().iter().map(|v| v.abs()).collect();
    let (lo, hi) = diag
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    let solved = lu.solve(rhs);
    let suspicious = hi == 0.0
        || lo / hi < 1e-9
        || solved
            .as_ref()
            .map(|s| !s.iter().all(|v| v.is_finite()) || s.amax() > 1e8 * rhs.amax().max(1.0))
            .unwrap_or(true);
    if suspicious {
        let svd = jac.svd(false, true);
        let sv = &svd.singular_values;
        let (imin, smin) = sv.argmin();
        let smax = sv.max();
        let ratio = if smax > 0.0 { smin / smax } else { 0.0 };
        if ratio < SINGULAR_RATIO {
            let vt = svd.v_t.expect("requested V^T");
            return Err(Error::SingularJacobian {
                ratio,
                null_direction: vt.row(imin).iter().copied().collect(),
            });
        }
    }
    solved.ok_or(Error::SingularJacobian {
        ratio: 0.0,
        null_direction: vec![],
    })
}

/// Newton solve of the truncated system from `initial` with the given gauges.
pub fn newton_orbit(sys: &RingSystem, initial: &FourierOrbit, gauges: &Gauges) -> Result<NewtonSolution> {
    let mut col = Collocation::new(sys, gauges.reduction, initial.p())?;
    let y0 = col.reduce(initial);
    let reference = gauges.reference.as_ref().map(|r| col.reduce(r)).unwrap_or_else(|| y0.clone());
    let dt_norm = modes_norm(&time_derivative(&reference));
    let time_active = gauges.time_phase && dt_norm > 1e-12;
    let arclength = match &gauges.frequency {
        FrequencyMode::Fixed => None,
        FrequencyMode::Free(a) => {
            let az = col.pack(&col.reduce(&a.anchor));
            let tangent = FourierOrbit::from_modes(sys.n(), a.anchor.nu(), a.tangent.clone());
            let tz = col.pack(&col.reduce(&tangent));
            Some((az, a.anchor.nu(), tz, a.dnu, a.ds))
        }
    };
    let z0 = col.pack(&y0);
    let mut bordered = Bordered {
        col: &mut col,
        y_ref: reference,
        time_active,
        rot_active: gauges.rotation_phase,
        arclength,
        fixed_nu: initial.nu(),
    };
    let start = BorderedState {
        z: z0,
        nu: initial.nu(),
        lambda: [0.0; 2],
    };
    let (sol, iterations, _) = bordered.solve(start)?;
    let y = bordered.col.unpack(sol.z.as_slice());
    let mut orbit = FourierOrbit::from_modes(sys.n(), sol.nu, bordered.col.expand(&y));
    orbit.residual_norm = modes_norm(&residual(sys, &orbit));
    Ok(NewtonSolution {
        orbit,
        iterations,
        unfolding: sol.lambda,
        time_phase_active: time_active,
    })
}

/// Residual of the `k | n` travelling-wave refinement; re-exported for branch checks.
pub fn wave_pattern_residual(orbit: &FourierOrbit, k: usize) -> Result<f64> {
    traveling_wave_residual(orbit, k)
}
