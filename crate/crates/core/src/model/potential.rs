//! Nonlinear on-site potentials, evaluated on the squared modulus `s = |q|^2`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Tolerance of the adaptive quadrature used when a custom potential has no
/// closed-form antiderivative.
pub const QUADRATURE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialKind {
    Cubic,
    Saturable,
    Custom,
}

impl fmt::Display for PotentialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PotentialKind::Cubic => "cubic",
            PotentialKind::Saturable => "saturable",
            PotentialKind::Custom => "custom",
        })
    }
}

/// User-supplied nonlinearity `h`, its derivative and (optionally) its
/// antiderivative `G` with `G(0) = 0`.
#[derive(Clone)]
pub struct CustomPotential {
    pub name: String,
    h: ScalarFn,
    h_prime: ScalarFn,
    antiderivative: Option<ScalarFn>,
    /// Range of `s` scanned when looking for degenerate amplitudes.
    pub search_range: (f64, f64),
}

impl CustomPotential {
    pub fn new<H, D>(name: impl Into<String>, h: H, h_prime: D) -> Self
    where
        H: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            h: Arc::new(h),
            h_prime: Arc::new(h_prime),
            antiderivative: None,
            search_range: (0.0, 100.0),
        }
    }

    pub fn with_antiderivative<G>(mut self, g: G) -> Self
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.antiderivative = Some(Arc::new(g));
        self
    }

    pub fn with_search_range(mut self, lo: f64, hi: f64) -> Self {
        self.search_range = (lo, hi);
        self
    }

    pub fn has_antiderivative(&self) -> bool {
        self.antiderivative.is_some()
    }
}

impl fmt::Debug for CustomPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomPotential")
            .field("name", &self.name)
            .field("has_antiderivative", &self.antiderivative.is_some())
            .field("search_range", &self.search_range)
            .finish()
    }
}

#[derive(Clone, Debug)]
pub enum Potential {
    /// `h(s) = s`
    Cubic,
    /// `h(s) = 1 / (1 + s)`
    Saturable,
    Custom(CustomPotential),
}

impl Potential {
    /// Polynomial nonlinearity `h(s) = sum_i c_i s^i` with exact derivative and antiderivative.
    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        let name = format!("polynomial{:?}", coeffs);
        let c = Arc::new(coeffs);
        let (c1, c2, c3) = (c.clone(), c.clone(), c);
        let custom = CustomPotential::new(
            name,
            move |s| c1.iter().rev().fold(0.0, |acc, &ci| acc * s + ci),
            move |s| {
                c2.iter()
                    .enumerate()
                    .skip(1)
                    .rev()
                    .fold(0.0, |acc, (i, &ci)| acc * s + i as f64 * ci)
            },
        )
        .with_antiderivative(move |s| {
            c3.iter()
                .enumerate()
                .rev()
                .fold(0.0, |acc, (i, &ci)| acc * s + ci / (i + 1) as f64)
                * s
        });
        Potential::Custom(custom)
    }

    pub fn kind(&self) -> PotentialKind {
        match self {
            Potential::Cubic => PotentialKind::Cubic,
            Potential::Saturable => PotentialKind::Saturable,
            Potential::Custom(_) => PotentialKind::Custom,
        }
    }

    pub fn h(&self, s: f64) -> f64 {
        match self {
            Potential::Cubic => s,
            Potential::Saturable => 1.0 / (1.0 + s),
            Potential::Custom(c) => (c.h)(s),
        }
    }

    pub fn h_prime(&self, s: f64) -> f64 {
        match self {
            Potential::Cubic => 1.0,
            Potential::Saturable => -1.0 / ((1.0 + s) * (1.0 + s)),
            Potential::Custom(c) => (c.h_prime)(s),
        }
    }

    /// Antiderivative `G` of `h` with `G(0) = 0`. Custom potentials without a
    /// closed form fall back to adaptive Simpson quadrature.
    pub fn antiderivative(&self, s: f64) -> f64 {
        match self {
            Potential::Cubic => 0.5 * s * s,
            Potential::Saturable => s.ln_1p(),
            Potential::Custom(c) => match &c.antiderivative {
                Some(g) => g(s),
                None => adaptive_simpson(&*c.h, 0.0, s, QUADRATURE_TOL),
            },
        }
    }

    /// `sigma = sgn h'(mu^2)`.
    pub fn sigma(&self, mu: f64) -> i32 {
        let d = self.h_prime(mu * mu);
        if d > 0.0 {
            1
        } else if d < 0.0 {
            -1
        } else {
            0
        }
    }

    /// The quantity `mu^2 h'(mu^2)` that drives every regime condition.
    pub fn nonlinear_stiffness(&self, mu: f64) -> f64 {
        let s = mu * mu;
        s * self.h_prime(s)
    }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}
