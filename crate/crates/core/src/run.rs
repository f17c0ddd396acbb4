//! Batch commands behind the `simulate` binary.
//!
//! [`render`] produces every artifact of a command as text without touching
//! the filesystem; [`run`] writes them plus a manifest into a directory.
//! Floats are written as `{:.16e}` (17 significant digits), lines end in LF,
//! and each CSV starts with a `#` line carrying the config fingerprint.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::bae::{bae_report, probe_scale_of};
use crate::config::{sha256_hex, RunConfig};
use crate::error::{Result, SimError};
use crate::floquet::{oracle_output_spectrum, SidebandSystem};
use crate::model::{bogolyubov, ProbeParams};
use crate::perturb::PerturbativeSolver;
use crate::spectra::{
    basis_consistency, default_half_width, duan_quantity_with, homodyne_angle, output_spectrum,
    perturbative_output_point, quadrature_spectrum, sweep_duan, uniform_grid, Contraction, DuanOptions, DuanResult,
    SpectrumCurve,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    OutputSpectrum,
    Duan,
    Sweep,
    VerifyBae,
    OracleCompare,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Spectrum,
        Command::OutputSpectrum,
        Command::Duan,
        Command::Sweep,
        Command::VerifyBae,
        Command::OracleCompare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::OutputSpectrum => "output-spectrum",
            Command::Duan => "duan",
            Command::Sweep => "sweep",
            Command::VerifyBae => "verify-bae",
            Command::OracleCompare => "oracle-compare",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

/// Verdict of a command. Only the verification commands can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Pass,
    Fail,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Pass => "pass",
            Status::Fail => "fail",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub command: Command,
    pub status: Status,
    pub artifacts: Vec<Artifact>,
    /// Named scalars recorded in the manifest.
    pub residuals: Vec<(String, f64)>,
    /// Free-form `key=value` notes recorded in the manifest.
    pub notes: Vec<(String, String)>,
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv(fingerprint: &str, command: Command, header: &str, rows: &[String]) -> String {
    let mut s = format!("# fingerprint={fingerprint} command={}\n{header}\n", command.name());
    for r in rows {
        s.push_str(r);
        s.push('\n');
    }
    s
}

fn spectrum_csv(fp: &str, command: Command, curve: &SpectrumCurve) -> String {
    let rows: Vec<String> =
        curve.grid.iter().zip(&curve.values).map(|(w, v)| format!("{},{}", fmt_f64(*w), fmt_f64(*v))).collect();
    csv(fp, command, "omega,value", &rows)
}

fn duan_row(ratio: f64, d: &DuanResult) -> String {
    format!(
        "{},{},{},{},{}",
        fmt_f64(ratio),
        fmt_f64(d.var_x_sigma),
        fmt_f64(d.var_y_delta),
        fmt_f64(d.duan_sum),
        d.violated
    )
}

const DUAN_HEADER: &str = "ratio,varXSigma,varYDelta,duan_sum,violated";
const CHECK_HEADER: &str = "check,order,residual,pass";

fn check_row(name: &str, order: usize, residual: f64, pass: bool) -> String {
    format!("{name},{order},{},{pass}", fmt_f64(residual))
}

/// Frequency grid of a configuration.
pub fn grid_of(cfg: &RunConfig) -> Result<Vec<f64>> {
    let hw = if cfg.window > 0.0 { cfg.window } else { default_half_width(&cfg.params)? };
    uniform_grid(hw, cfg.points)
}

fn duan_options(cfg: &RunConfig) -> DuanOptions {
    DuanOptions { half_width: (cfg.window > 0.0).then_some(cfg.window), points: cfg.points, adaptive: cfg.adaptive }
}

/// Evaluates a command and formats its artifacts.
pub fn render(command: Command, cfg: &RunConfig) -> Result<Rendered> {
    cfg.validate()?;
    let fp = cfg.fingerprint();
    let mut out =
        Rendered { command, status: Status::Ok, artifacts: Vec::new(), residuals: Vec::new(), notes: Vec::new() };
    match command {
        Command::Spectrum => {
            let curve = quadrature_spectrum(cfg.quadrature, &cfg.params, &grid_of(cfg)?)?;
            out.notes.push(("quadrature".into(), cfg.quadrature.label().into()));
            out.artifacts.push(Artifact { name: "spectrum.csv".into(), text: spectrum_csv(&fp, command, &curve) });
        }
        Command::OutputSpectrum => {
            let curve = output_spectrum(cfg.theta, &cfg.params, &cfg.probe, &grid_of(cfg)?)?;
            out.artifacts
                .push(Artifact { name: "output_spectrum.csv".into(), text: spectrum_csv(&fp, command, &curve) });
        }
        Command::Duan => {
            let d = duan_quantity_with(&cfg.params, &cfg.probe, cfg.duan_method, &duan_options(cfg))?;
            let ratio = cfg.params.g_plus / cfg.params.g_minus;
            out.residuals.push(("duan_sum".into(), d.duan_sum));
            out.notes.push(("duan_method".into(), d.method.label().into()));
            out.artifacts.push(Artifact {
                name: "duan.csv".into(),
                text: csv(&fp, command, DUAN_HEADER, &[duan_row(ratio, &d)]),
            });
        }
        Command::Sweep => {
            let rows = sweep_duan(&cfg.params, &cfg.probe, &cfg.sweep_ratios(), cfg.duan_method, &duan_options(cfg))?;
            let lines: Vec<String> = rows.iter().map(|(r, d)| duan_row(*r, d)).collect();
            if let Some((r, d)) = rows.iter().min_by(|a, b| a.1.duan_sum.total_cmp(&b.1.duan_sum)) {
                out.residuals.push(("min_duan_sum".into(), d.duan_sum));
                out.residuals.push(("argmin_ratio".into(), *r));
            }
            out.artifacts.push(Artifact { name: "sweep.csv".into(), text: csv(&fp, command, DUAN_HEADER, &lines) });
        }
        Command::VerifyBae => verify_bae(cfg, &fp, &mut out)?,
        Command::OracleCompare => oracle_compare(cfg, &fp, &mut out)?,
    }
    Ok(out)
}

fn verify_bae(cfg: &RunConfig, fp: &str, out: &mut Rendered) -> Result<()> {
    let report = bae_report(&cfg.params, &cfg.probe)?;
    let mut rows: Vec<String> = report.checks.iter().map(|c| check_row(&c.name, c.order, c.residual, c.pass)).collect();
    for c in &report.checks {
        out.residuals.push((format!("{}_{}", c.name, c.order), c.residual));
    }

    // The plain table must match the original baths; the `+1` form is
    // recorded to show that it does not.
    let grid = [-0.05, -2e-3, 0.0, 7e-4, 0.013, 0.2];
    let basis = basis_consistency(&cfg.params, &cfg.probe, &grid, &[0.0, 1.0])?;
    rows.push(check_row("basis_table", 0, basis[0].max_rel_diff, basis[0].pass));
    rows.push(check_row("basis_table_plus_one", 0, basis[1].max_rel_diff, basis[1].pass));
    let surviving = match (basis[0].pass, basis[1].pass) {
        (true, false) => "plain",
        (false, true) => "plus_one",
        (true, true) => "both",
        (false, false) => "none",
    };
    out.notes.push(("basis_form_surviving".into(), surviving.into()));
    out.notes.push(("phase_ok".into(), report.phase_ok.to_string()));
    out.notes.push(("dphi".into(), fmt_f64(report.dphi)));
    let sub = report.subspace.map_or("none".to_string(), |(a, b)| format!("{}+{}", a.label(), b.label()));
    out.notes.push(("subspace".into(), sub));

    out.status = if report.pass && basis[0].pass { Status::Pass } else { Status::Fail };
    out.artifacts.push(Artifact { name: "verify_bae.csv".into(), text: csv(fp, out.command, CHECK_HEADER, &rows) });
    Ok(())
}

fn oracle_compare(cfg: &RunConfig, fp: &str, out: &mut Rendered) -> Result<()> {
    let p = &cfg.params;
    let b = bogolyubov(p)?;
    let grid = grid_of(cfg)?;
    let k = cfg.oracle_k;

    // Zeroth order: probes off, oracle against the closed-form fields.
    let quiet = PerturbativeSolver::new(p, &ProbeParams::off())?;
    let sys0 = SidebandSystem::new(p, &ProbeParams::off())?;
    let mut zeroth: f64 = 0.0;
    for &w in &grid {
        let a = quiet.zeroth_order(w).a.to_original(&b);
        let o = sys0.solve_converged(w, k)?;
        zeroth = zeroth.max(o.a().sub(&a).norm() / a.norm());
    }

    // First order: odd sidebands of the oracle against a⁽¹⁾.
    let solver = PerturbativeSolver::new(p, &cfg.probe)?;
    let sys = SidebandSystem::new(p, &cfg.probe)?;
    let eps = probe_scale_of(&cfg.probe, b.cal_g);
    let mut first: f64 = 0.0;
    if eps > 0.0 {
        for &w in &grid {
            let a1 = solver.first_order_cavity(w)?.to_original(&b);
            let odd = sys.solve_converged(w, k)?.a().filtered(|l| l.shift.abs() == 1);
            first = first.max(odd.sub(&a1).norm() / a1.norm());
        }
    }

    // Homodyne output: full oracle against a⁽⁰⁾ + a⁽¹⁾.
    let theta = homodyne_angle(&solver, cfg.theta);
    let oracle = oracle_output_spectrum(p, &cfg.probe, theta, &grid, k)?;
    let c = Contraction::original(p)?;
    let pert_values =
        grid.iter().map(|&w| perturbative_output_point(&solver, &c, theta, w)).collect::<Result<Vec<_>>>()?;
    let pert = SpectrumCurve::new(grid.clone(), pert_values, oracle.meta.clone())?;
    let output = oracle.values.iter().zip(&pert.values).map(|(o, q)| (o - q).abs() / q.abs()).fold(0.0, f64::max);

    // Errors beyond first order scale as ε²; a residual above that flags
    // contributions the perturbative field misses.
    let bound = eps * eps;
    let checks = [
        ("zeroth_order", 0, zeroth, zeroth < 1e-9),
        ("first_order", 1, first, first <= 100.0 * bound),
        ("output_spectrum", 2, output, output <= bound),
    ];
    let rows: Vec<String> = checks.iter().map(|(n, o, r, ok)| check_row(n, *o, *r, *ok)).collect();
    for (n, _, r, _) in &checks {
        out.residuals.push((n.to_string(), *r));
    }
    out.notes.push(("b2_detuning".into(), "+delta (b1 at -delta)".into()));
    out.notes.push(("homodyne_theta".into(), fmt_f64(theta)));
    out.status = if checks.iter().all(|c| c.3) { Status::Pass } else { Status::Fail };
    out.artifacts.push(Artifact { name: "oracle_spectrum.csv".into(), text: spectrum_csv(fp, out.command, &oracle) });
    out.artifacts
        .push(Artifact { name: "perturbative_spectrum.csv".into(), text: spectrum_csv(fp, out.command, &pert) });
    out.artifacts.push(Artifact { name: "oracle_compare.csv".into(), text: csv(fp, out.command, CHECK_HEADER, &rows) });
    Ok(())
}

/// Manifest text: resolved config, residuals, notes and artifact hashes.
pub fn manifest(cfg: &RunConfig, r: &Rendered) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "command={}", r.command.name());
    let _ = writeln!(s, "fingerprint={}", cfg.fingerprint());
    let _ = writeln!(s, "status={}", r.status.label());
    s.push_str("[config]\n");
    s.push_str(&cfg.serialize());
    s.push_str("[residuals]\n");
    for (k, v) in &r.residuals {
        let _ = writeln!(s, "{k}={}", fmt_f64(*v));
    }
    s.push_str("[notes]\n");
    for (k, v) in &r.notes {
        let _ = writeln!(s, "{k}={v}");
    }
    s.push_str("[files]\n");
    for a in &r.artifacts {
        let _ = writeln!(s, "{}={}", a.name, sha256_hex(a.text.as_bytes()));
    }
    s
}

/// Runs a command and writes its artifacts and `manifest.txt` into `out_dir`.
pub fn run(command: Command, cfg: &RunConfig, out_dir: &Path) -> Result<(Rendered, Vec<PathBuf>)> {
    let r = render(command, cfg)?;
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for a in &r.artifacts {
        let path = out_dir.join(&a.name);
        fs::write(&path, &a.text)?;
        written.push(path);
    }
    let path = out_dir.join("manifest.txt");
    fs::write(&path, manifest(cfg, &r))?;
    written.push(path);
    Ok((r, written))
}

/// Machine-readable error record, one `key=value` per line.
pub fn error_record(command: Option<Command>, e: &SimError) -> String {
    let msg = e.to_string().replace('\n', " ");
    format!("status=error\ncommand={}\nkind={}\nmessage={msg}\n", command.map_or("none", Command::name), e.kind())
}
