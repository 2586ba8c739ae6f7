use std::collections::BTreeMap;

use nalgebra::DVector;
use rayon::prelude::*;
use serde_json::{json, Value};

use dnls_ring::blocks::{block_b, coefficients, critical_frequencies, eta, linear_stability, oracle_max_real_part};
use dnls_ring::classify::{check_degenerate, enumerate_bifurcations, regimes, BifurcationPoint, Branch};
use dnls_ring::orbits::{continue_branch, deviation_from_rotating_wave, integrate, ContinuationSettings, Termination};
use dnls_ring::symmetry::{assemble_p, block_extract, real_to_complex};
use dnls_ring::{Error, LatticeState, RingSystem};

use crate::config::{BranchArg, RunConfig};
use crate::output::{cell, cell_opt, num, opt, to_value, Table};
use crate::CliError;

pub const VERIFY_TOL: f64 = 1e-4;
const VERIFY_RESIDUAL_TOL: f64 = 1e-10;
const VERIFY_SYMMETRY_TOL: f64 = 1e-8;

pub struct Emit {
    pub payload: Value,
    pub table: Table,
    /// Non-zero codes still emit the report; the message goes to stderr.
    pub failure: Option<CliError>,
}

fn system(cfg: &RunConfig, mu: f64) -> Result<RingSystem, CliError> {
    Ok(RingSystem::new(cfg.n, mu, cfg.potential())?)
}

pub fn equilibrium(cfg: &RunConfig) -> Result<Emit, CliError> {
    let sys = system(cfg, cfg.single_mu()?)?;
    let (a, omega) = sys.standing_wave();
    let residual = sys.gradient_v(&a).as_vector().norm();
    let comps: Vec<(usize, f64, f64)> = a.to_complex().iter().enumerate().map(|(j, z)| (j + 1, z.re, z.im)).collect();
    let payload = json!({
        "n": cfg.n,
        "mu": num(sys.mu()),
        "omega": num(omega),
        "zeta": num(sys.zeta()),
        "gradient_residual": num(residual),
        "components": comps.iter().map(|(j, re, im)| json!({"j": j, "re": num(*re), "im": num(*im)})).collect::<Vec<_>>(),
    });
    let table = Table {
        header: vec!["j", "re", "im"],
        rows: comps.iter().map(|(j, re, im)| vec![j.to_string(), cell(*re), cell(*im)]).collect(),
    };
    Ok(Emit { payload, table, failure: None })
}

pub fn blocks(cfg: &RunConfig) -> Result<Emit, CliError> {
    let mu = cfg.single_mu()?;
    let sys = system(cfg, mu)?;
    let pot = cfg.potential();
    let (a, _) = sys.standing_wave();
    let pm = assemble_p(cfg.n);
    let ext = block_extract(&pm, &real_to_complex(&sys.hessian_v(&a)))?;
    let mut records = Vec::new();
    let mut rows = Vec::new();
    for k in 1..=cfg.n {
        let co = coefficients(cfg.n, k)?;
        let b = block_b(cfg.n, k, mu, &pot)?.matrix;
        let residual = (ext.blocks[k - 1] - b).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let entries: Vec<Value> = [(0, 0), (0, 1), (1, 0), (1, 1)]
            .iter()
            .map(|&(r, c)| json!([num(b[(r, c)].re), num(b[(r, c)].im)]))
            .collect();
        records.push(json!({
            "k": k,
            "alpha": num(co.alpha),
            "gamma": num(co.gamma),
            "delta": opt(co.delta),
            "b": entries,
            "block_residual": num(residual),
        }));
        let mut row = vec![
            k.to_string(),
            cell(co.alpha),
            cell(co.gamma),
            co.delta.map_or_else(|| "-".to_string(), cell),
        ];
        for (r, c) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            row.push(cell(b[(r, c)].re));
            row.push(cell(b[(r, c)].im));
        }
        row.push(cell(residual));
        rows.push(row);
    }
    let payload = json!({
        "blocks": records,
        "off_block_residual": num(ext.off_block_residual),
        "unitarity_defect": num(pm.unitarity_defect()),
    });
    let table = Table {
        header: vec![
            "k", "alpha", "gamma", "delta", "b11_re", "b11_im", "b12_re", "b12_im", "b21_re", "b21_im", "b22_re",
            "b22_im", "block_residual",
        ],
        rows,
    };
    Ok(Emit { payload, table, failure: None })
}

fn check_mode_filter(cfg: &RunConfig) -> Result<(), CliError> {
    match cfg.k {
        Some(k) if k == cfg.n => Err(CliError::invalid(format!(
            "k = n = {}: no bifurcation with full symmetry",
            cfg.n
        ))),
        Some(k) if k == 0 || k > cfg.n => Err(CliError::invalid(format!("k = {k} outside 1..{}", cfg.n - 1))),
        _ => Ok(()),
    }
}

enum Sample {
    Points(Vec<BifurcationPoint>),
    Degenerate { k: usize, mu_k: f64 },
}

fn enumerate_at(cfg: &RunConfig, mu: f64) -> Result<Sample, CliError> {
    match enumerate_bifurcations(cfg.n, mu, &cfg.potential()) {
        Ok(points) => Ok(Sample::Points(points)),
        Err(Error::DegenerateAmplitude { k, mu_k, .. }) => Ok(Sample::Degenerate { k, mu_k }),
        Err(e) => Err(e.into()),
    }
}

fn all_degenerate(count: usize, refused: usize) -> Option<CliError> {
    (refused == count).then(|| CliError::degenerate("every requested mu is a degenerate amplitude"))
}

pub fn bifurcations(cfg: &RunConfig) -> Result<Emit, CliError> {
    check_mode_filter(cfg)?;
    let mus = cfg.mus()?;
    let pot = cfg.potential();
    let samples: Vec<Result<Sample, CliError>> = mus.par_iter().map(|&mu| enumerate_at(cfg, mu)).collect();
    let mut records = Vec::new();
    let mut refused = Vec::new();
    let mut rows = Vec::new();
    for (&mu, sample) in mus.iter().zip(samples) {
        let points = match sample? {
            Sample::Points(p) => p,
            Sample::Degenerate { k, mu_k } => {
                refused.push(json!({"mu": num(mu), "k": k, "mu_k": num(mu_k)}));
                continue;
            }
        };
        let stable = linear_stability(cfg.n, mu, &pot)?.stable;
        let mut points: Vec<BifurcationPoint> = points
            .into_iter()
            .filter(|p| cfg.k.is_none_or(|k| p.k == k))
            .filter(|p| cfg.nu_min.is_none_or(|lo| p.nu >= lo) && cfg.nu_max.is_none_or(|hi| p.nu <= hi))
            .collect();
        points.sort_by(|a, b| a.k.cmp(&b.k).then(a.nu.total_cmp(&b.nu)));
        let mut by_k: BTreeMap<usize, Vec<&BifurcationPoint>> = BTreeMap::new();
        for p in &points {
            let co = coefficients(cfg.n, p.k)?;
            records.push(json!({
                "mu": num(mu),
                "k": p.k,
                "nu": num(p.nu),
                "period": num(p.period),
                "eta": p.eta,
                "branch": to_value(&p.branch),
                "isotropy": p.isotropy.label(),
                "regime": p.regime.tag(),
                "note": p.note,
                "mirror_of": p.mirror_of,
                "alpha": num(co.alpha),
                "gamma": num(co.gamma),
                "delta": opt(co.delta),
                "stable": stable,
            }));
            by_k.entry(p.k).or_default().push(p);
        }
        for (k, pts) in by_k {
            let co = coefficients(cfg.n, k)?;
            let pick = |b: Branch| pts.iter().find(|p| p.branch == b);
            let (m, p) = (pick(Branch::Minus), pick(Branch::Plus));
            rows.push(vec![
                cfg.n.to_string(),
                k.to_string(),
                cell(mu),
                cell(co.alpha),
                cell(co.gamma),
                co.delta.map_or_else(|| "-".to_string(), cell),
                cell_opt(m.map(|x| x.nu)),
                cell_opt(p.map(|x| x.nu)),
                m.map_or_else(String::new, |x| x.eta.to_string()),
                p.map_or_else(String::new, |x| x.eta.to_string()),
                pts[0].isotropy.label(),
                pts[0].regime.tag().to_string(),
                stable.to_string(),
            ]);
        }
    }
    let (lo, hi) = (mus[0], mus[mus.len() - 1]);
    let excluded: Vec<Value> = regimes(cfg.n, &pot)?
        .excluded
        .iter()
        .filter(|e| e.mu >= lo && e.mu <= hi)
        .map(|e| json!({"k": e.k, "mu": num(e.mu)}))
        .collect();
    let payload = json!({
        "points": records,
        "excluded": excluded,
        "refused": refused,
    });
    let table = Table {
        header: vec![
            "n", "k", "mu", "alpha", "gamma", "delta", "nu_minus", "nu_plus", "eta_minus", "eta_plus", "isotropy",
            "regime", "stable",
        ],
        rows,
    };
    Ok(Emit {
        payload,
        table,
        failure: all_degenerate(mus.len(), refused.len()),
    })
}

/// Deterministic small perturbation used by the simulation check.
fn perturbed(a: &LatticeState) -> LatticeState {
    let v = a.as_vector();
    LatticeState::from_vector(DVector::from_fn(v.len(), |i, _| v[i] + 1e-3 * ((i + 1) as f64).sin()))
}

pub fn stability(cfg: &RunConfig) -> Result<Emit, CliError> {
    let mus = cfg.mus()?;
    let pot = cfg.potential();
    let results: Vec<Result<(Value, Vec<String>), CliError>> = mus
        .par_iter()
        .map(|&mu| {
            let sys = system(cfg, mu)?;
            let ls = linear_stability(cfg.n, mu, &pot)?;
            let re = oracle_max_real_part(&sys);
            let agrees = ls.stable == (re <= dnls_ring::blocks::SPECTRAL_TOL);
            let simulation = match cfg.t_end {
                Some(t_end) => {
                    let (a, _) = sys.standing_wave();
                    let x0 = perturbed(&a);
                    let traj = integrate(&sys, &x0, t_end, cfg.dt)?;
                    let dev = traj
                        .states
                        .iter()
                        .map(|x| deviation_from_rotating_wave(&sys, x))
                        .fold(0.0, f64::max);
                    json!({
                        "t_end": num(t_end),
                        "dt": num(cfg.dt),
                        "initial_deviation": num(deviation_from_rotating_wave(&sys, &x0)),
                        "max_deviation": num(dev),
                    })
                }
                None => Value::Null,
            };
            let record = json!({
                "mu": num(mu),
                "stable": ls.stable,
                "margin": opt(ls.margin),
                "method": to_value(&ls.method),
                "oracle_max_real_part": num(re),
                "agrees": agrees,
                "simulation": simulation,
            });
            let row = vec![
                cell(mu),
                ls.stable.to_string(),
                cell_opt(ls.margin),
                to_value(&ls.method).as_str().unwrap_or_default().to_string(),
                cell(re),
                agrees.to_string(),
            ];
            Ok((record, row))
        })
        .collect();
    let mut records = Vec::new();
    let mut rows = Vec::new();
    for r in results {
        let (rec, row) = r?;
        records.push(rec);
        rows.push(row);
    }
    let payload = json!({ "samples": records });
    let table = Table {
        header: vec!["mu", "stable", "margin", "method", "oracle_max_real_part", "agrees"],
        rows,
    };
    Ok(Emit { payload, table, failure: None })
}

pub fn verify(cfg: &RunConfig) -> Result<Emit, CliError> {
    let mu = cfg.single_mu()?;
    let k = cfg.k.ok_or_else(|| CliError::invalid("verify needs --k"))?;
    check_mode_filter(cfg)?;
    let pot = cfg.potential();
    if let Err(e) = check_degenerate(cfg.n, mu, &pot) {
        return Err(e.into());
    }
    let branch = match cfg.branch {
        BranchArg::Plus => Branch::Plus,
        BranchArg::Minus => Branch::Minus,
    };
    let bif = enumerate_bifurcations(cfg.n, mu, &pot)?
        .into_iter()
        .find(|p| p.k == k && p.branch == branch)
        .ok_or_else(|| {
            CliError::invalid(format!(
                "no bifurcation point for k = {k} on the {:?} branch at mu = {mu}",
                cfg.branch
            ))
        })?;
    let sys = system(cfg, mu)?;
    let settings = ContinuationSettings {
        steps: cfg.steps,
        ds: cfg.ds,
        p_max: cfg.p_max,
        ..Default::default()
    };
    let br = continue_branch(&sys, &bif, &settings)?;
    let extrapolated = br.extrapolate_nu();
    let max_res = br.points.iter().map(|p| p.residual).fold(0.0, f64::max);
    let max_sym = br
        .points
        .iter()
        .map(|p| p.symmetry.pattern.max(p.symmetry.norm))
        .fold(0.0, f64::max);
    let complete = br.points.len() == cfg.steps && !br.failed();
    let freq_ok = extrapolated.is_some_and(|nu| (nu - bif.nu).abs() <= VERIFY_TOL);
    let passed = complete && freq_ok && max_res <= VERIFY_RESIDUAL_TOL && max_sym <= VERIFY_SYMMETRY_TOL;
    let termination = match &br.termination {
        Termination::StepLimit => json!({"kind": "step-limit"}),
        Termination::AmplitudeBound => json!({"kind": "amplitude-bound"}),
        Termination::StepFailure(msg) => json!({"kind": "step-failure", "message": msg}),
    };
    let points: Vec<Value> = br
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            json!({
                "index": i,
                "amplitude": num(p.amplitude),
                "nu": num(p.nu),
                "residual": num(p.residual),
                "symmetry_pattern": num(p.symmetry.pattern),
                "symmetry_norm": num(p.symmetry.norm),
                "iterations": p.iterations,
                "cutoff": p.orbit.p(),
            })
        })
        .collect();
    let rows = br
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            vec![
                i.to_string(),
                cell(p.amplitude),
                cell(p.nu),
                cell(p.residual),
                cell(p.symmetry.pattern),
                cell(p.symmetry.norm),
            ]
        })
        .collect();
    let payload = json!({
        "k": k,
        "branch": to_value(&bif.branch),
        "isotropy": bif.isotropy.label(),
        "nu0": num(bif.nu),
        "points": points,
        "extrapolated_nu": opt(extrapolated),
        "tolerance": num(VERIFY_TOL),
        "max_residual": num(max_res),
        "max_symmetry_residual": num(max_sym),
        "termination": termination,
        "passed": passed,
    });
    let failure = (!passed).then(|| {
        CliError::numerical(match &br.termination {
            Termination::StepFailure(msg) => format!("continuation stopped after {} points: {msg}", br.points.len()),
            _ => "branch did not meet the verification tolerances".to_string(),
        })
    });
    let table = Table {
        header: vec!["index", "amplitude", "nu", "residual", "symmetry_pattern", "symmetry_norm"],
        rows,
    };
    Ok(Emit { payload, table, failure })
}

struct SweepCell {
    mu: f64,
    degenerate: Option<(usize, f64)>,
    counts: Vec<(usize, usize)>,
    stable: bool,
    plot: Vec<(usize, f64, f64, i32, i32)>,
}

fn sweep_cell(cfg: &RunConfig, mu: f64) -> Result<SweepCell, CliError> {
    let pot = cfg.potential();
    let stable = linear_stability(cfg.n, mu, &pot)?.stable;
    let points = match enumerate_at(cfg, mu)? {
        Sample::Points(p) => p,
        Sample::Degenerate { k, mu_k } => {
            return Ok(SweepCell {
                mu,
                degenerate: Some((k, mu_k)),
                counts: vec![],
                stable,
                plot: vec![],
            })
        }
    };
    let mut counts = Vec::new();
    let mut plot = Vec::new();
    for k in 1..cfg.n {
        counts.push((k, points.iter().filter(|p| p.k == k).count()));
        let crit = critical_frequencies(cfg.n, k, mu, &pot)?;
        if crit.degenerate || crit.roots.len() != 2 {
            continue;
        }
        let (lo, hi) = (crit.roots[0], crit.roots[1]);
        plot.push((k, lo, hi, eta(cfg.n, k, mu, &pot, lo)?, eta(cfg.n, k, mu, &pot, hi)?));
    }
    Ok(SweepCell {
        mu,
        degenerate: None,
        counts,
        stable,
        plot,
    })
}

pub fn sweep(cfg: &RunConfig) -> Result<Emit, CliError> {
    if cfg.mu_range.is_none() {
        return Err(CliError::invalid("sweep needs --mu-range"));
    }
    let mus = cfg.mus()?;
    let report = regimes(cfg.n, &cfg.potential())?;
    let cells: Vec<Result<SweepCell, CliError>> = mus.par_iter().map(|&mu| sweep_cell(cfg, mu)).collect();
    let mut samples = Vec::new();
    let mut plot = Vec::new();
    let mut rows = Vec::new();
    let mut refused = 0;
    for c in cells {
        let c = c?;
        refused += c.degenerate.is_some() as usize;
        samples.push(json!({
            "mu": num(c.mu),
            "degenerate": c.degenerate.map(|(k, mu_k)| json!({"k": k, "mu_k": num(mu_k)})),
            "counts": c.counts.iter().map(|(k, n)| json!({"k": k, "count": n})).collect::<Vec<_>>(),
            "total_points": c.counts.iter().map(|(_, n)| n).sum::<usize>(),
            "stable": c.stable,
        }));
        for &(k, lo, hi, em, ep) in &c.plot {
            plot.push(json!({
                "mu": num(c.mu),
                "k": k,
                "nu_minus": num(lo),
                "nu_plus": num(hi),
                "eta_minus": em,
                "eta_plus": ep,
                "stable": c.stable,
            }));
            rows.push(vec![
                cell(c.mu),
                k.to_string(),
                cell(lo),
                cell(hi),
                em.to_string(),
                ep.to_string(),
                c.stable.to_string(),
            ]);
        }
    }
    let payload = json!({
        "regimes": to_value(&report),
        "samples": samples,
        "plot": plot,
    });
    let table = Table {
        header: vec!["mu", "k", "nu_minus", "nu_plus", "eta_minus", "eta_plus", "stable"],
        rows,
    };
    Ok(Emit {
        payload,
        table,
        failure: all_degenerate(mus.len(), refused),
    })
}
