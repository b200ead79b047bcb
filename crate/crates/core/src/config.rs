//! Run configuration and its line-based `key = value` form.

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    Svm1,
    Svm2,
    SavCn,
    Ficn,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [SchemeKind::Svm1, SchemeKind::Svm2, SchemeKind::SavCn, SchemeKind::Ficn];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Svm1 => "svm1",
            SchemeKind::Svm2 => "svm2",
            SchemeKind::SavCn => "savcn",
            SchemeKind::Ficn => "ficn",
        }
    }

    pub fn is_svm(self) -> bool {
        matches!(self, SchemeKind::Svm1 | SchemeKind::Svm2)
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme '{s}' (expected svm1, svm2, savcn or ficn)")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitKind {
    /// `0.25 sin(2πx) cos(2πy)`.
    Taylor,
    /// Three-term cosine data that coarsens quickly.
    Coarsening,
    /// Raw `SVMF` snapshot.
    File(PathBuf),
}

impl fmt::Display for InitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitKind::Taylor => f.write_str("taylor"),
            InitKind::Coarsening => f.write_str("coarsening"),
            InitKind::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl FromStr for InitKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "taylor" => Ok(InitKind::Taylor),
            "coarsening" => Ok(InitKind::Coarsening),
            _ => match s.strip_prefix("file:") {
                Some(p) if !p.is_empty() => Ok(InitKind::File(PathBuf::from(p))),
                _ => Err(Error::Config(format!("unknown initial condition '{s}'"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub scheme: SchemeKind,
    pub n: usize,
    pub tau: f64,
    pub t_end: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub init: InitKind,
    /// SAV regularization constant `C₀`.
    pub c0: f64,
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    pub max_abs_beta: f64,
    pub picard_tol: f64,
    pub max_picard_iters: usize,
    pub snapshot_times: Vec<f64>,
    pub out_dir: PathBuf,
    /// Reserved for random initial data.
    pub seed: u64,
    pub dealias: bool,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            scheme: SchemeKind::Svm2,
            n: 128,
            tau: 1.25e-2,
            t_end: 1.0,
            epsilon: 1e-2,
            lambda: 1e-3,
            init: InitKind::Taylor,
            c0: 1.0,
            newton_tol: 1e-13,
            max_newton_iters: 50,
            max_abs_beta: 0.5,
            picard_tol: 1e-12,
            max_picard_iters: 500,
            snapshot_times: Vec::new(),
            out_dir: PathBuf::from("out"),
            seed: 0,
            dealias: false,
        }
    }
}

fn parse<V: FromStr>(key: &str, value: &str) -> Result<V> {
    value.parse().map_err(|_| Error::Config(format!("invalid value '{value}' for '{key}'")))
}

pub fn parse_time_list(value: &str) -> Result<Vec<f64>> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| parse("snapshot_at", s)).collect()
}

impl SchemeConfig {
    /// Number of steps taken; the run ends at `steps() * tau`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.tau).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !self.n.is_power_of_two() || !(8..=1024).contains(&self.n) {
            return bad(format!("n must be a power of two in [8, 1024], got {}", self.n));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return bad(format!("tau must be positive, got {}", self.tau));
        }
        if !(self.t_end >= self.tau) || !self.t_end.is_finite() {
            return bad(format!("t_end must be at least tau, got {}", self.t_end));
        }
        if !(self.epsilon > 0.0 && self.lambda > 0.0) {
            return bad("epsilon and lambda must be positive".into());
        }
        if !(self.c0 >= 0.0) {
            return bad(format!("c0 must be nonnegative, got {}", self.c0));
        }
        if !(self.newton_tol > 0.0 && self.picard_tol > 0.0 && self.max_abs_beta > 0.0) {
            return bad("solver tolerances must be positive".into());
        }
        if self.max_newton_iters == 0 || self.max_picard_iters == 0 {
            return bad("iteration limits must be positive".into());
        }
        if let Some(t) = self.snapshot_times.iter().find(|&&t| !(0.0..=self.t_end).contains(&t)) {
            return bad(format!("snapshot time {t} outside [0, t_end]"));
        }
        Ok(())
    }

    /// Sets one key; keys match the config-file spelling.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "scheme" => self.scheme = value.parse()?,
            "n" => self.n = parse(key, value)?,
            "tau" => self.tau = parse(key, value)?,
            "t_end" | "t-end" => self.t_end = parse(key, value)?,
            "epsilon" => self.epsilon = parse(key, value)?,
            "lambda" => self.lambda = parse(key, value)?,
            "init" => self.init = value.parse()?,
            "c0" => self.c0 = parse(key, value)?,
            "newton_tol" => self.newton_tol = parse(key, value)?,
            "max_newton_iters" => self.max_newton_iters = parse(key, value)?,
            "max_abs_beta" => self.max_abs_beta = parse(key, value)?,
            "picard_tol" => self.picard_tol = parse(key, value)?,
            "max_picard_iters" => self.max_picard_iters = parse(key, value)?,
            "snapshot_at" | "snapshot-at" => self.snapshot_times = parse_time_list(value)?,
            "out" | "out_dir" => self.out_dir = PathBuf::from(value),
            "seed" => self.seed = parse(key, value)?,
            "dealias" => self.dealias = parse(key, value)?,
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Applies a `key = value` document on top of `self`. `#` starts a comment.
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", lineno + 1)))?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_kv(text)?;
        Ok(cfg)
    }

    /// Round-trips through [`SchemeConfig::from_kv`].
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let times: Vec<String> = self.snapshot_times.iter().map(|t| t.to_string()).collect();
        let _ = writeln!(s, "scheme = {}", self.scheme);
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "tau = {:?}", self.tau);
        let _ = writeln!(s, "t_end = {:?}", self.t_end);
        let _ = writeln!(s, "epsilon = {:?}", self.epsilon);
        let _ = writeln!(s, "lambda = {:?}", self.lambda);
        let _ = writeln!(s, "init = {}", self.init);
        let _ = writeln!(s, "c0 = {:?}", self.c0);
        let _ = writeln!(s, "newton_tol = {:?}", self.newton_tol);
        let _ = writeln!(s, "max_newton_iters = {}", self.max_newton_iters);
        let _ = writeln!(s, "max_abs_beta = {:?}", self.max_abs_beta);
        let _ = writeln!(s, "picard_tol = {:?}", self.picard_tol);
        let _ = writeln!(s, "max_picard_iters = {}", self.max_picard_iters);
        let _ = writeln!(s, "snapshot_at = {}", times.join(","));
        let _ = writeln!(s, "out = {}", self.out_dir.display());
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "dealias = {}", self.dealias);
        s
    }
}
