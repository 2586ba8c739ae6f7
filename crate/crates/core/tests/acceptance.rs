//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dnls_ring::blocks::{
    block_m, cluster_means, coefficients, complex_block_roots, critical_frequencies, degenerate_amplitudes, eta,
    full_spectrum_oracle, linear_stability, oracle_max_real_part, DegenerateAmplitudes, SPECTRAL_TOL,
};
use dnls_ring::classify::{check_degenerate, enumerate_bifurcations, Branch};
use dnls_ring::orbits::{continue_branch, integrate, orthogonality_check, ContinuationSettings, FourierOrbit};
use dnls_ring::symmetry::{assemble_p, block_extract, real_to_complex};
use dnls_ring::{LatticeState, Potential, RingSystem};

const EXACT_TOL: f64 = 1e-12;
const PRODUCT_TOL: f64 = 1e-10;
const ORACLE_TOL: f64 = 1e-8;
const OFF_BLOCK_TOL: f64 = 1e-10;
const BRANCH_RESIDUAL_TOL: f64 = 1e-10;
const BRANCH_SYMMETRY_TOL: f64 = 1e-8;
const BRANCH_EXTRAPOLATION_TOL: f64 = 1e-4;
const BRANCH_MIN_POINTS: usize = 20;
const FD_REL_TOL: f64 = 1e-6;
const ORTHOGONALITY_TOL: f64 = 1e-10;
const POWER_TOL: f64 = 1e-8;
const ENERGY_TOL: f64 = 1e-6;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn potentials() -> [Potential; 2] {
    [Potential::Cubic, Potential::Saturable]
}

fn criterion_1() -> Outcome {
    let n3_1 = coefficients(3, 1).unwrap();
    let n3_2 = coefficients(3, 2).unwrap();
    ensure((n3_1.alpha / 2.0 + 0.75).abs() <= EXACT_TOL, || format!("n=3 alpha_1/2 = {}", n3_1.alpha / 2.0))?;
    for co in [n3_1, n3_2] {
        let d = co.delta.ok_or("n=3 delta undefined")?;
        ensure(d.abs() <= EXACT_TOL, || format!("n=3 delta_{} = {d}", co.k))?;
    }
    for k in 1..=4 {
        let a = coefficients(4, k).unwrap().alpha;
        ensure(a.abs() <= EXACT_TOL, || format!("n=4 alpha_{k} = {a}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for n in [3, 4, 5, 6, 9, 12] {
        for pot in potentials() {
            for _ in 0..20 {
                let nu: f64 = rng.gen_range(-5.0..5.0);
                let mu: f64 = rng.gen_range(0.1..2.0);
                let m = block_m(n, n, mu, &pot, nu).unwrap().matrix;
                let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
                worst = worst.max((det - Complex64::new(-nu * nu, 0.0)).norm());
            }
        }
    }
    ensure(worst <= EXACT_TOL, || format!("det m_n(nu) + nu^2 reaches {worst:e}"))?;
    Ok(format!("max |det m_n + nu^2| = {worst:.1e}"))
}

fn criterion_2() -> Outcome {
    let d15 = coefficients(15, 1).unwrap().delta.unwrap();
    let d16 = coefficients(16, 1).unwrap().delta.unwrap();
    ensure(d15 < -0.25 && -0.25 < d16, || format!("delta_1(15) = {d15}, delta_1(16) = {d16}"))?;
    ensure((d15 + 0.26754).abs() < 1e-5 && (d16 + 0.23463).abs() < 1e-5, || {
        format!("delta_1 values {d15}, {d16}")
    })?;
    for n in [5, 10, 15] {
        let roots = degenerate_amplitudes(n, 1, &Potential::Saturable).unwrap();
        ensure(roots.roots().is_empty(), || format!("n={n} should have no degenerate amplitude for k=1"))?;
    }
    let mut worst: f64 = 0.0;
    for n in [16, 20, 32] {
        match degenerate_amplitudes(n, 1, &Potential::Saturable).unwrap() {
            DegenerateAmplitudes::Exact(r) if r.len() == 2 => worst = worst.max((r[0] * r[1] - 1.0).abs()),
            other => return Err(format!("n={n}: unexpected degenerate amplitudes {other:?}")),
        }
    }
    ensure(worst <= PRODUCT_TOL, || format!("|mu_- mu_+ - 1| = {worst:e}"))?;
    Ok(format!("delta_1(15) = {d15:.5}, delta_1(16) = {d16:.5}, max |mu_- mu_+ - 1| = {worst:.1e}"))
}

/// Largest distance in a nearest-neighbour pairing of two equal-size multisets.
fn multiset_distance(expected: &[Complex64], actual: &[Complex64]) -> f64 {
    assert_eq!(expected.len(), actual.len());
    let mut used = vec![false; actual.len()];
    let mut worst: f64 = 0.0;
    for e in expected {
        let (j, d) = actual
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, a)| (j, (a - e).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

fn criterion_3() -> Outcome {
    let (mut worst_spec, mut worst_raw, mut worst_block, mut cases) = (0.0f64, 0.0f64, 0.0f64, 0);
    for n in 3..=12 {
        for pot in potentials() {
            for mu in [0.3, 0.7, 1.5] {
                if check_degenerate(n, mu, &pot).is_err() {
                    continue;
                }
                let sys = RingSystem::new(n, mu, pot.clone()).unwrap();
                let expected: Vec<Complex64> = complex_block_roots(n, mu, &pot)
                    .into_iter()
                    .map(|(_, nu)| Complex64::new(0.0, 1.0) * nu)
                    .collect();
                let raw = full_spectrum_oracle(&sys);
                worst_raw = worst_raw.max(multiset_distance(&expected, &raw));
                // Defective pairs (the rotation kernel, n = 4 double roots) scatter by
                // sqrt(eps); their cluster means are well-conditioned.
                let d = multiset_distance(&expected, &cluster_means(&raw, 1e-5));
                ensure(d <= ORACLE_TOL, || format!("n={n} {:?} mu={mu}: spectrum mismatch {d:e}", pot.kind()))?;
                worst_spec = worst_spec.max(d);
                let (a, _) = sys.standing_wave();
                let ext = block_extract(&assemble_p(n), &real_to_complex(&sys.hessian_v(&a))).unwrap();
                ensure(ext.off_block_residual <= OFF_BLOCK_TOL, || {
                    format!("n={n} mu={mu}: off-block residual {:e}", ext.off_block_residual)
                })?;
                worst_block = worst_block.max(ext.off_block_residual);
                cases += 1;
            }
        }
    }
    Ok(format!(
        "{cases} cases, max spectrum distance {worst_spec:.1e} (raw {worst_raw:.1e}), max off-block {worst_block:.1e}"
    ))
}

fn criterion_4() -> Outcome {
    let mut checked = 0;
    for mu in [0.2, 0.4] {
        for k in 1..6 {
            let crit = critical_frequencies(6, k, mu, &Potential::Cubic).unwrap();
            if crit.degenerate || crit.roots.len() != 2 || crit.roots[0] <= 0.0 {
                continue;
            }
            let em = eta(6, k, mu, &Potential::Cubic, crit.roots[0]).unwrap();
            let ep = eta(6, k, mu, &Potential::Cubic, crit.roots[1]).unwrap();
            ensure(em == -1 && ep == 1, || format!("n=6 mu={mu} k={k}: eta = ({em}, {ep})"))?;
            checked += 1;
        }
    }
    ensure(checked > 0, || "no mode with two positive roots".into())?;
    let pot = Potential::Saturable;
    ensure(pot.sigma(1.0) == -1, || "sigma should be -1".into())?;
    let crit = critical_frequencies(3, 1, 1.0, &pot).unwrap();
    let (nm, np) = (crit.roots[0], crit.roots[1]);
    ensure(nm > 0.0, || format!("nu_- = {nm} not positive"))?;
    let (em, ep) = (eta(3, 1, 1.0, &pot, nm).unwrap(), eta(3, 1, 1.0, &pot, np).unwrap());
    ensure(em == -1 && ep == 1, || format!("n=3 saturable: eta = ({em}, {ep})"))?;
    Ok(format!("{checked} generic modes with eta = (-1, +1); n=3 saturable eta = ({em}, {ep})"))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut stable = 0;
    for _ in 0..40 {
        let n = rng.gen_range(3..=12);
        let pot = if rng.gen_bool(0.5) { Potential::Cubic } else { Potential::Saturable };
        let mu = 2.0 * (1.0 - rng.gen::<f64>());
        let closed = linear_stability(n, mu, &pot).unwrap().stable;
        let sys = RingSystem::new(n, mu, pot.clone()).unwrap();
        let re = oracle_max_real_part(&sys);
        let oracle = re <= SPECTRAL_TOL;
        ensure(closed == oracle, || {
            format!("n={n} {:?} mu={mu}: closed form {closed}, oracle max Re = {re:e}", pot.kind())
        })?;
        stable += closed as usize;
    }
    Ok(format!("40 samples agree ({stable} stable)"))
}

fn criterion_6() -> Outcome {
    let settings = ContinuationSettings {
        steps: 25,
        ..Default::default()
    };
    let cases = [
        (6, 0.5, Potential::Cubic, 3, Branch::Plus, Some(3f64.sqrt())),
        (3, 1.0, Potential::Saturable, 1, Branch::Plus, None),
        (3, 1.0, Potential::Saturable, 1, Branch::Minus, None),
    ];
    let mut summary = Vec::new();
    for (n, mu, pot, k, branch, target) in cases {
        let bif = enumerate_bifurcations(n, mu, &pot)
            .unwrap()
            .into_iter()
            .find(|b| b.k == k && b.branch == branch)
            .ok_or_else(|| format!("n={n} k={k} {branch:?}: no bifurcation point"))?;
        let target = target.unwrap_or(bif.nu);
        ensure((bif.nu - target).abs() <= EXACT_TOL, || format!("nu0 = {} vs {target}", bif.nu))?;
        let sys = RingSystem::new(n, mu, pot).unwrap();
        let br = continue_branch(&sys, &bif, &settings).map_err(|e| e.to_string())?;
        ensure(br.points.len() >= BRANCH_MIN_POINTS, || {
            format!("n={n} {branch:?}: {} points ({:?})", br.points.len(), br.termination)
        })?;
        let res = br.points.iter().map(|p| p.residual).fold(0.0, f64::max);
        let sym = br.points.iter().map(|p| p.symmetry.pattern.max(p.symmetry.norm)).fold(0.0, f64::max);
        ensure(res <= BRANCH_RESIDUAL_TOL, || format!("n={n} {branch:?}: residual {res:e}"))?;
        ensure(sym <= BRANCH_SYMMETRY_TOL, || format!("n={n} {branch:?}: symmetry residual {sym:e}"))?;
        let nu = br.extrapolate_nu().ok_or("no extrapolation")?;
        ensure((nu - target).abs() <= BRANCH_EXTRAPOLATION_TOL, || {
            format!("n={n} {branch:?}: extrapolated nu {nu} vs {target}")
        })?;
        summary.push(format!("n={n} {branch:?}: {} pts, |dnu| {:.1e}", br.points.len(), (nu - target).abs()));
    }
    Ok(summary.join("; "))
}

fn random_state(n: usize, rng: &mut ChaCha8Rng) -> LatticeState {
    LatticeState::from_vector(DVector::from_fn(2 * n, |_, _| rng.gen_range(-1.2..1.2)))
}

fn rel(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = 1e-6;
    let (mut worst_g, mut worst_h) = (0.0f64, 0.0f64);
    for i in 0..20 {
        let n = rng.gen_range(3..=8);
        let pot = potentials()[i % 2].clone();
        let sys = RingSystem::new(n, rng.gen_range(0.2..1.5), pot).unwrap();
        let x = random_state(n, &mut rng);
        let grad = sys.gradient_v(&x).into_vector();
        let hess = sys.hessian_v(&x);
        let mut fd_g = DVector::zeros(2 * n);
        for c in 0..2 * n {
            let shift = |s: f64| {
                let mut v = x.as_vector().clone();
                v[c] += s;
                LatticeState::from_vector(v)
            };
            let (xp, xm) = (shift(h), shift(-h));
            fd_g[c] = (sys.potential_v(&xp) - sys.potential_v(&xm)) / (2.0 * h);
            let col = (sys.gradient_v(&xp).into_vector() - sys.gradient_v(&xm).into_vector()) / (2.0 * h);
            worst_h = worst_h.max(rel(&col, &hess.column(c).into_owned()));
        }
        worst_g = worst_g.max(rel(&fd_g, &grad));
    }
    ensure(worst_g <= FD_REL_TOL && worst_h <= FD_REL_TOL, || {
        format!("finite differences: gradient {worst_g:e}, Hessian {worst_h:e}")
    })?;
    let mut worst_o: f64 = 0.0;
    for i in 0..20 {
        let n = rng.gen_range(3..=8);
        let p = rng.gen_range(1..=6);
        let sys = RingSystem::new(n, rng.gen_range(0.2..1.5), potentials()[i % 2].clone()).unwrap();
        let modes = (0..=p)
            .map(|l| {
                let s = 0.7 * 0.5f64.powi(l);
                DVector::from_fn(2 * n, |_, _| Complex64::new(rng.gen_range(-s..s), rng.gen_range(-s..s)))
            })
            .collect();
        let orbit = FourierOrbit::from_modes(n, rng.gen_range(0.2..3.0), modes);
        let (c1, c2) = orthogonality_check(&sys, &orbit);
        worst_o = worst_o.max(c1.abs()).max(c2.abs());
    }
    ensure(worst_o <= ORTHOGONALITY_TOL, || format!("orthogonality integrals reach {worst_o:e}"))?;
    Ok(format!(
        "FD gradient {worst_g:.1e}, FD Hessian {worst_h:.1e}, orthogonality {worst_o:.1e}"
    ))
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut parts = Vec::new();
    for pot in potentials() {
        let sys = RingSystem::new(6, 0.4, pot.clone()).unwrap();
        let (a, _) = sys.standing_wave();
        let x0 = LatticeState::from_vector(a.as_vector() + DVector::from_fn(12, |_, _| rng.gen_range(-0.02..0.02)));
        let traj = integrate(&sys, &x0, 100.0, 0.01).map_err(|e| e.to_string())?;
        let (p0, v0) = (x0.power(), sys.potential_v(&x0));
        let dp = traj.states.iter().map(|x| (x.power() - p0).abs()).fold(0.0, f64::max);
        let dv = traj.states.iter().map(|x| (sys.potential_v(x) - v0).abs()).fold(0.0, f64::max);
        ensure(dp <= POWER_TOL && dv <= ENERGY_TOL, || {
            format!("{:?}: power drift {dp:e}, energy drift {dv:e}", pot.kind())
        })?;
        ensure((traj.times.last().unwrap() - 100.0).abs() < 1e-9, || "did not reach T".into())?;
        parts.push(format!("{:?}: dP {dp:.1e}, dV {dv:.1e}", pot.kind()));
    }
    Ok(parts.join("; "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 8] = [
        ("closed-form constants", criterion_1, Duration::from_secs(1)),
        ("saturable threshold", criterion_2, Duration::from_secs(1)),
        ("block/oracle equivalence", criterion_3, Duration::from_secs(10)),
        ("Morse index and eta", criterion_4, Duration::from_secs(1)),
        ("stability cross-validation", criterion_5, Duration::from_secs(10)),
        ("branch verification", criterion_6, Duration::from_secs(60)),
        ("variational consistency", criterion_7, Duration::from_secs(5)),
        ("conservation", criterion_8, Duration::from_secs(30)),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > *limit => Err(format!("{detail}; took {elapsed:?}, limit {limit:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail} ({:.3} s)", i + 1, elapsed.as_secs_f64()),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail} ({:.3} s)", i + 1, elapsed.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
