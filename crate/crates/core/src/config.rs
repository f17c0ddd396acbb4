//! Run configuration: `key=value` text, one pair per line, `#` comments.
//!
//! Missing keys take the defaults of [`RunConfig::default`]. Serialization
//! writes every key in a fixed order with shortest round-trip float
//! formatting, and the SHA-256 of that text is the config fingerprint.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::error::{Result, SimError};
use crate::floquet::DEFAULT_K;
use crate::model::{ProbeParams, SystemParams};
use crate::spectra::{DuanMethod, QuadratureSelector};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: SystemParams,
    pub probe: ProbeParams,
    /// Half width of the frequency window; 0 selects 50 Γ_eff.
    pub window: f64,
    pub points: usize,
    /// Variances by adaptive integration of the spectrum (true) or from the
    /// sampled grid with Lorentzian tails (false).
    pub adaptive: bool,
    /// Relative homodyne angle θ̄ of the output spectrum.
    pub theta: f64,
    /// 1–4 overrides `theta`, `phi_p`, `phi_q` with a row of the mapping table.
    pub table1_row: usize,
    pub quadrature: QuadratureSelector,
    pub duan_method: DuanMethod,
    pub sweep_min: f64,
    pub sweep_max: f64,
    pub sweep_points: usize,
    pub oracle_k: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: SystemParams::default(),
            probe: ProbeParams::new(2.5e-5, 2.5e-5, 0.0, 0.0),
            window: 0.0,
            points: 4001,
            adaptive: true,
            theta: 0.0,
            table1_row: 0,
            quadrature: QuadratureSelector::X_SIGMA,
            duan_method: DuanMethod::DirectQuadrature,
            sweep_min: 0.0,
            sweep_max: 0.95,
            sweep_points: 25,
            oracle_k: DEFAULT_K,
        }
    }
}

fn parse_f64(line: usize, key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>().map_err(|_| SimError::Parse { line, msg: format!("`{key}` expects a number, got `{v}`") })
}

fn parse_usize(line: usize, key: &str, v: &str) -> Result<usize> {
    v.parse::<usize>()
        .map_err(|_| SimError::Parse { line, msg: format!("`{key}` expects a non-negative integer, got `{v}`") })
}

fn validation(key: &str, msg: impl Into<String>) -> SimError {
    SimError::Validation { key: key.to_string(), msg: msg.into() }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        let mut seen: Vec<String> = Vec::new();
        let mut ratio = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| SimError::Parse { line, msg: format!("expected key=value, got `{body}`") })?;
            let (k, v) = (k.trim(), v.trim());
            if seen.iter().any(|s| s == k) {
                return Err(SimError::Parse { line, msg: format!("duplicate key `{k}`") });
            }
            seen.push(k.to_string());
            let f = || parse_f64(line, k, v);
            match k {
                "kappa_E" => c.params.kappa_e = f()?,
                "kappa_I" => c.params.kappa_i = f()?,
                "gamma" => c.params.gamma = f()?,
                "delta" => c.params.delta = f()?,
                "G_minus" => c.params.g_minus = f()?,
                "G_plus" => c.params.g_plus = f()?,
                "n_1" => c.params.n1 = f()?,
                "n_2" => c.params.n2 = f()?,
                "n_E" => c.params.n_e = f()?,
                "n_I" => c.params.n_i = f()?,
                "n_c" => {
                    let n = f()?;
                    c.params.n_e = n;
                    c.params.n_i = n;
                }
                "ratio" => ratio = Some(f()?),
                "G_p" => c.probe.g_p = f()?,
                "G_q" => c.probe.g_q = f()?,
                "phi_p" => c.probe.phi_p = f()?,
                "phi_q" => c.probe.phi_q = f()?,
                "lambda" => c.probe.lambda = f()?,
                "window" => c.window = f()?,
                "points" => c.points = parse_usize(line, k, v)?,
                "adaptive" => {
                    c.adaptive = match v {
                        "true" => true,
                        "false" => false,
                        _ => {
                            return Err(SimError::Parse {
                                line,
                                msg: format!("`adaptive` expects true or false, got `{v}`"),
                            })
                        }
                    }
                }
                "theta" => c.theta = f()?,
                "table1_row" => c.table1_row = parse_usize(line, k, v)?,
                "quadrature" => {
                    c.quadrature = QuadratureSelector::parse(v).ok_or_else(|| SimError::Parse {
                        line,
                        msg: format!("`quadrature` expects XSigma, YSigma, XDelta or YDelta, got `{v}`"),
                    })?
                }
                "duan_method" => {
                    c.duan_method = match v {
                        "direct" => DuanMethod::DirectQuadrature,
                        "output" => DuanMethod::OutputExtraction,
                        _ => {
                            return Err(SimError::Parse {
                                line,
                                msg: format!("`duan_method` expects direct or output, got `{v}`"),
                            })
                        }
                    }
                }
                "sweep_min" => c.sweep_min = f()?,
                "sweep_max" => c.sweep_max = f()?,
                "sweep_points" => c.sweep_points = parse_usize(line, k, v)?,
                "oracle_K" => c.oracle_k = parse_usize(line, k, v)?,
                _ => return Err(SimError::Parse { line, msg: format!("unknown key `{k}`") }),
            }
        }
        if let Some(r) = ratio {
            if seen.iter().any(|s| s == "G_plus") {
                return Err(validation("ratio", "give either ratio or G_plus, not both"));
            }
            c.params.g_plus = r * c.params.g_minus;
        }
        if (1..=4).contains(&c.table1_row) {
            let row = crate::spectra::TABLE1[c.table1_row - 1];
            c.theta = row.theta_bar;
            c.probe.phi_p = row.phi_p;
            c.probe.phi_q = row.phi_q;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate().map_err(|e| match e {
            SimError::InvalidParameter { key, constraint } => validation(key, constraint),
            SimError::DegeneratePumps { g_minus, g_plus } => {
                validation("G_minus", format!("G_minus > G_plus required, got G_minus = {g_minus}, G_plus = {g_plus}"))
            }
            other => other,
        })?;
        self.probe.validate().map_err(|e| match e {
            SimError::InvalidParameter { key, constraint } => validation(key, constraint),
            other => other,
        })?;
        if !(self.window >= 0.0 && self.window.is_finite()) {
            return Err(validation("window", "window >= 0 (0 selects the default)"));
        }
        if self.points < 5 {
            return Err(validation("points", "points >= 5"));
        }
        if self.table1_row > 4 {
            return Err(validation("table1_row", "table1_row in 0..=4"));
        }
        if !self.theta.is_finite() {
            return Err(validation("theta", "theta finite"));
        }
        if !(0.0 <= self.sweep_min && self.sweep_min <= self.sweep_max && self.sweep_max < 1.0) {
            return Err(validation("sweep_max", "0 <= sweep_min <= sweep_max < 1"));
        }
        if self.sweep_points == 0 {
            return Err(validation("sweep_points", "sweep_points >= 1"));
        }
        if self.oracle_k < 2 || self.oracle_k > crate::floquet::MAX_K {
            return Err(validation("oracle_K", format!("2 <= oracle_K <= {}", crate::floquet::MAX_K)));
        }
        Ok(())
    }

    /// Canonical text; parsing it reproduces `self`.
    pub fn serialize(&self) -> String {
        let p = &self.params;
        let q = &self.probe;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("kappa_E", p.kappa_e.to_string());
        kv("kappa_I", p.kappa_i.to_string());
        kv("gamma", p.gamma.to_string());
        kv("delta", p.delta.to_string());
        kv("G_minus", p.g_minus.to_string());
        kv("G_plus", p.g_plus.to_string());
        kv("n_1", p.n1.to_string());
        kv("n_2", p.n2.to_string());
        kv("n_E", p.n_e.to_string());
        kv("n_I", p.n_i.to_string());
        kv("G_p", q.g_p.to_string());
        kv("G_q", q.g_q.to_string());
        kv("phi_p", q.phi_p.to_string());
        kv("phi_q", q.phi_q.to_string());
        kv("lambda", q.lambda.to_string());
        kv("window", self.window.to_string());
        kv("points", self.points.to_string());
        kv("adaptive", self.adaptive.to_string());
        kv("theta", self.theta.to_string());
        kv("table1_row", self.table1_row.to_string());
        kv("quadrature", self.quadrature.label().to_string());
        kv("duan_method", self.duan_method.label().to_string());
        kv("sweep_min", self.sweep_min.to_string());
        kv("sweep_max", self.sweep_max.to_string());
        kv("sweep_points", self.sweep_points.to_string());
        kv("oracle_K", self.oracle_k.to_string());
        s
    }

    pub fn fingerprint(&self) -> String {
        sha256_hex(self.serialize().as_bytes())
    }

    /// Sweep ratios, evenly spaced and ascending.
    pub fn sweep_ratios(&self) -> Vec<f64> {
        let n = self.sweep_points;
        if n == 1 {
            return vec![self.sweep_min];
        }
        (0..n)
            .map(|k| {
                if k == n - 1 {
                    self.sweep_max
                } else {
                    self.sweep_min + (self.sweep_max - self.sweep_min) * k as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Fingerprint of a parameter set alone.
pub fn params_fingerprint(params: &SystemParams, probe: &ProbeParams) -> String {
    let c = RunConfig { params: *params, probe: *probe, ..RunConfig::default() };
    let text = c.serialize();
    let head: String = text.lines().take(15).map(|l| format!("{l}\n")).collect();
    sha256_hex(head.as_bytes())
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    RunConfig::parse(text)
}
