use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Serialize;

use dnls_ring::Potential;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialArg {
    Cubic,
    Saturable,
    Custom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchArg {
    Plus,
    Minus,
}

/// Flags shared by every subcommand. Each may also come from `--config`.
#[derive(Args, Debug, Default, Clone)]
pub struct CommonArgs {
    /// Number of oscillators (at least 3).
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub potential: Option<PotentialArg>,
    /// Polynomial coefficients `c0,c1,...` of h(s) for `--potential custom`.
    #[arg(long = "custom-coeffs", global = true)]
    pub custom_coeffs: Option<String>,
    #[arg(long, global = true)]
    pub mu: Option<f64>,
    /// `start:stop:count`, inclusive of both ends.
    #[arg(long = "mu-range", global = true)]
    pub mu_range: Option<String>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// `key = value` file using the long flag names as keys; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Mode filter for `bifurcations`, mode to continue for `verify`.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long = "nu-min", global = true)]
    pub nu_min: Option<f64>,
    #[arg(long = "nu-max", global = true)]
    pub nu_max: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub branch: Option<BranchArg>,
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    #[arg(long, global = true)]
    pub ds: Option<f64>,
    #[arg(long = "p-max", global = true)]
    pub p_max: Option<usize>,
    /// Integration horizon for the `stability` simulation check.
    #[arg(long = "t-end", global = true)]
    pub t_end: Option<f64>,
    #[arg(long, global = true)]
    pub dt: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MuRange {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl MuRange {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count).map(|i| self.start + step * i as f64).collect()
    }
}

/// Fully resolved configuration, echoed into every report.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub n: usize,
    pub potential: PotentialArg,
    pub custom_coeffs: Option<Vec<f64>>,
    pub mu: Option<f64>,
    pub mu_range: Option<MuRange>,
    pub k: Option<usize>,
    pub nu_min: Option<f64>,
    pub nu_max: Option<f64>,
    pub branch: BranchArg,
    pub steps: usize,
    pub ds: f64,
    pub p_max: usize,
    pub t_end: Option<f64>,
    pub dt: f64,
    pub format: Format,
    pub out: Option<String>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::invalid(msg)
}

fn parse_value<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T, CliError> {
    raw.trim()
        .parse()
        .map_err(|_| invalid(format!("cannot parse {key} = {raw:?}")))
}

fn parse_enum<T: ValueEnum>(key: &str, raw: &str) -> Result<T, CliError> {
    T::from_str(raw.trim(), true).map_err(|_| invalid(format!("invalid {key} = {raw:?}")))
}

fn read_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| invalid(format!("{}:{}: expected key = value", path.display(), lineno + 1)))?;
        out.insert(key.trim().replace('_', "-"), value.trim().to_string());
    }
    Ok(out)
}

/// Fills unset flags from the config file.
fn merge_file(args: &mut CommonArgs, file: BTreeMap<String, String>) -> Result<(), CliError> {
    for (key, raw) in file {
        let k = key.as_str();
        match k {
            "n" => args.n = args.n.or(Some(parse_value(k, &raw)?)),
            "potential" => args.potential = args.potential.or(Some(parse_enum(k, &raw)?)),
            "custom-coeffs" => args.custom_coeffs = args.custom_coeffs.take().or(Some(raw)),
            "mu" => args.mu = args.mu.or(Some(parse_value(k, &raw)?)),
            "mu-range" => args.mu_range = args.mu_range.take().or(Some(raw)),
            "format" => args.format = args.format.or(Some(parse_enum(k, &raw)?)),
            "out" => args.out = args.out.take().or(Some(PathBuf::from(raw))),
            "k" => args.k = args.k.or(Some(parse_value(k, &raw)?)),
            "nu-min" => args.nu_min = args.nu_min.or(Some(parse_value(k, &raw)?)),
            "nu-max" => args.nu_max = args.nu_max.or(Some(parse_value(k, &raw)?)),
            "branch" => args.branch = args.branch.or(Some(parse_enum(k, &raw)?)),
            "steps" => args.steps = args.steps.or(Some(parse_value(k, &raw)?)),
            "ds" => args.ds = args.ds.or(Some(parse_value(k, &raw)?)),
            "p-max" => args.p_max = args.p_max.or(Some(parse_value(k, &raw)?)),
            "t-end" => args.t_end = args.t_end.or(Some(parse_value(k, &raw)?)),
            "dt" => args.dt = args.dt.or(Some(parse_value(k, &raw)?)),
            other => return Err(invalid(format!("unknown config key {other:?}"))),
        }
    }
    Ok(())
}

fn parse_range(raw: &str) -> Result<MuRange, CliError> {
    let parts: Vec<&str> = raw.split(':').collect();
    if parts.len() != 3 {
        return Err(invalid(format!("--mu-range must be start:stop:count, got {raw:?}")));
    }
    let range = MuRange {
        start: parse_value("mu-range start", parts[0])?,
        stop: parse_value("mu-range stop", parts[1])?,
        count: parse_value("mu-range count", parts[2])?,
    };
    if range.count == 0 {
        return Err(invalid("empty mu range (count must be at least 1)"));
    }
    if !(range.start > 0.0 && range.start.is_finite() && range.stop.is_finite()) || range.stop < range.start {
        return Err(invalid(format!(
            "mu range must satisfy 0 < start <= stop, got {}:{}",
            range.start, range.stop
        )));
    }
    Ok(range)
}

impl RunConfig {
    pub fn resolve(command: &str, mut args: CommonArgs) -> Result<Self, CliError> {
        if let Some(path) = args.config.clone() {
            merge_file(&mut args, read_file(&path)?)?;
        }
        let n = args.n.ok_or_else(|| invalid("--n is required"))?;
        if n < 3 {
            return Err(invalid(format!("n = {n}: the ring needs n >= 3 oscillators")));
        }
        let potential = args.potential.unwrap_or(PotentialArg::Cubic);
        let custom_coeffs = match (potential, &args.custom_coeffs) {
            (PotentialArg::Custom, Some(raw)) => Some(
                raw.split(',')
                    .map(|c| parse_value::<f64>("custom-coeffs", c))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            (PotentialArg::Custom, None) => return Err(invalid("--potential custom needs --custom-coeffs")),
            _ => None,
        };
        if let Some(mu) = args.mu {
            if !(mu > 0.0 && mu.is_finite()) {
                return Err(invalid(format!("mu = {mu}: the amplitude must be positive")));
            }
        }
        let mu_range = args.mu_range.as_deref().map(parse_range).transpose()?;
        if args.mu.is_some() && mu_range.is_some() {
            return Err(invalid("give either --mu or --mu-range, not both"));
        }
        let cfg = Self {
            command: command.to_string(),
            n,
            potential,
            custom_coeffs,
            mu: args.mu,
            mu_range,
            k: args.k,
            nu_min: args.nu_min,
            nu_max: args.nu_max,
            branch: args.branch.unwrap_or(BranchArg::Plus),
            steps: args.steps.unwrap_or(25),
            ds: args.ds.unwrap_or(0.02),
            p_max: args.p_max.unwrap_or(256),
            t_end: args.t_end,
            dt: args.dt.unwrap_or(0.01),
            format: args.format.unwrap_or(Format::Json),
            out: args.out.map(|p| p.display().to_string()),
        };
        if cfg.ds.is_nan() || cfg.dt.is_nan() || cfg.ds <= 0.0 || cfg.dt <= 0.0 || cfg.steps == 0 || cfg.p_max < 2 {
            return Err(invalid("need ds > 0, dt > 0, steps >= 1 and p-max >= 2"));
        }
        Ok(cfg)
    }

    pub fn potential(&self) -> Potential {
        match self.potential {
            PotentialArg::Cubic => Potential::Cubic,
            PotentialArg::Saturable => Potential::Saturable,
            PotentialArg::Custom => Potential::polynomial(self.custom_coeffs.clone().unwrap_or_default()),
        }
    }

    /// The requested amplitudes, in increasing order.
    pub fn mus(&self) -> Result<Vec<f64>, CliError> {
        match (self.mu, self.mu_range) {
            (Some(mu), _) => Ok(vec![mu]),
            (None, Some(r)) => Ok(r.values()),
            (None, None) => Err(invalid("--mu or --mu-range is required")),
        }
    }

    pub fn single_mu(&self) -> Result<f64, CliError> {
        self.mu.ok_or_else(|| invalid(format!("{} needs a single --mu", self.command)))
    }
}
