//! Run configuration with flags > config file > defaults precedence.
//! The config file is flat `key=value` text using the flag names as keys.

use contact_hj::model::{ContactModel, Lambda};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Toy,
    LambdaOne,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SeedKind {
    Zero,
    ConstC,
    File(PathBuf),
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub model: ModelKind,
    pub h_shift: f64,
    pub c: f64,
    pub n: usize,
    pub delta: f64,
    pub tol: f64,
    pub t_max: f64,
    /// Flow-time budget per boundedness probe of the critical-value search.
    pub horizon: f64,
    pub out: PathBuf,
    pub seed: SeedKind,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelKind::Toy,
            h_shift: 0.0,
            c: 1.0,
            n: 1024,
            delta: 1e-3,
            tol: 1e-8,
            t_max: 50.0,
            horizon: 50.0,
            out: PathBuf::from("out"),
            seed: SeedKind::Zero,
        }
    }
}

impl RunConfig {
    pub fn build_model(&self) -> ContactModel {
        match self.model {
            ModelKind::Toy => ContactModel::toy_shifted(self.h_shift, self.c),
            ModelKind::LambdaOne => {
                let mut m = ContactModel::lambda_one(self.c);
                m.h_shift = self.h_shift;
                m.e0 = -self.h_shift;
                debug_assert_eq!(m.lambda, Lambda::One);
                m
            }
        }
    }

    fn validate(&self) -> Result<(), String> {
        if self.n < 16 {
            return Err(format!("n = {} below the minimum of 16", self.n));
        }
        if self.delta.is_nan() || self.delta <= 0.0 || self.delta >= 1.0 {
            return Err(format!("delta = {} outside (0, 1)", self.delta));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(format!("tol = {} must be positive", self.tol));
        }
        if self.t_max < self.delta || self.horizon < self.delta {
            return Err("t-max and horizon must be at least one step".into());
        }
        Ok(())
    }
}

pub fn parse_model(s: &str) -> Result<ModelKind, String> {
    match s {
        "toy" => Ok(ModelKind::Toy),
        "lambda-one" => Ok(ModelKind::LambdaOne),
        other => Err(format!("unknown model {other:?} (expected toy or lambda-one)")),
    }
}

pub fn parse_seed(s: &str) -> Result<SeedKind, String> {
    match s {
        "zero" => Ok(SeedKind::Zero),
        "const-c" => Ok(SeedKind::ConstC),
        other => match other.strip_prefix("file:") {
            Some(path) if !path.is_empty() => Ok(SeedKind::File(PathBuf::from(path))),
            _ => Err(format!(
                "unknown seed function {other:?} (expected zero, const-c, or file:<path>)"
            )),
        },
    }
}

const KNOWN_KEYS: [&str; 10] =
    ["model", "h-shift", "c", "n", "delta", "tol", "t-max", "horizon", "out", "seed-function"];

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, String> {
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("config {}: {e}", path.display()))?;
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config {}:{}: expected key=value", path.display(), idx + 1))?;
        let key = k.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(format!("config {}:{}: unknown key {key:?}", path.display(), idx + 1));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

/// Raw option set shared by the subcommands; `None` means "not set on the
/// command line" and falls through to the config file, then the default.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct CommonOpts {
    /// Model family: toy | lambda-one
    #[arg(long)]
    pub model: Option<String>,
    /// Constant added to the kinetic part p^2
    #[arg(long, allow_negative_numbers = true)]
    pub h_shift: Option<f64>,
    /// Level c of the stationary equation
    #[arg(long, allow_negative_numbers = true)]
    pub c: Option<f64>,
    /// Grid size (>= 16)
    #[arg(long)]
    pub n: Option<usize>,
    /// Implicit time step
    #[arg(long)]
    pub delta: Option<f64>,
    /// Convergence tolerance (solve) or bisection tolerance (critical)
    #[arg(long)]
    pub tol: Option<f64>,
    /// Iteration horizon in flow time
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Flow-time budget per critical-value probe
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed: zero | const-c | file:<path>
    #[arg(long)]
    pub seed_function: Option<String>,
    /// Flat key=value config file (flags take precedence)
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl CommonOpts {
    pub fn resolve(&self) -> Result<RunConfig, String> {
        let file = match &self.config {
            Some(p) => read_config_file(p)?,
            None => BTreeMap::new(),
        };
        let d = RunConfig::default();
        fn num<T: std::str::FromStr>(
            flag: Option<T>,
            file: &BTreeMap<String, String>,
            key: &str,
            default: T,
        ) -> Result<T, String> {
            match flag {
                Some(v) => Ok(v),
                None => match file.get(key) {
                    Some(s) => {
                        s.parse().map_err(|_| format!("config value {key}={s:?} unparsable"))
                    }
                    None => Ok(default),
                },
            }
        }
        let model = match (&self.model, file.get("model")) {
            (Some(s), _) => parse_model(s)?,
            (None, Some(s)) => parse_model(s)?,
            (None, None) => d.model,
        };
        let seed = match (&self.seed_function, file.get("seed-function")) {
            (Some(s), _) => parse_seed(s)?,
            (None, Some(s)) => parse_seed(s)?,
            (None, None) => d.seed,
        };
        let cfg = RunConfig {
            model,
            h_shift: num(self.h_shift, &file, "h-shift", d.h_shift)?,
            c: num(self.c, &file, "c", d.c)?,
            n: num(self.n, &file, "n", d.n)?,
            delta: num(self.delta, &file, "delta", d.delta)?,
            tol: num(self.tol, &file, "tol", d.tol)?,
            t_max: num(self.t_max, &file, "t-max", d.t_max)?,
            horizon: num(self.horizon, &file, "horizon", d.horizon)?,
            out: num(self.out.clone(), &file, "out", d.out)?,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Was `tol` given explicitly (flag or file)? `critical` reinterprets an
    /// absent tol as the coarser bisection default instead of the solver's.
    pub fn tol_explicit(&self) -> bool {
        if self.tol.is_some() {
            return true;
        }
        matches!(&self.config, Some(p) if read_config_file(p).is_ok_and(|m| m.contains_key("tol")))
    }
}
