//! Collective-quadrature spectra, the homodyne output spectrum and the Duan
//! quantity.
//!
//! Quadratures follow `X = (b + b†)/√2`, `Y = −i(b − b†)/√2`. The shifted
//! forms sample `b₁` at `ω + δ` and `b₂` at `ω − δ`, which moves both
//! mechanical resonances to ω ≈ 0:
//!
//! ```text
//! X̄₁ = (b₁(ω+δ) + b₁†(ω−δ))/√2     X̄₂ = (b₂(ω−δ) + b₂†(ω+δ))/√2
//! X̄^Σ = X̄₁ + X̄₂                   X̄^Δ = X̄₁ − X̄₂
//! ```
//!
//! Collective fields are unnormalized sums. The Duan variances divide them
//! by two, so that a separable state obeys `var X^Σ + var Y^Δ ≥ 1` and the
//! vacuum contributes exactly ½ to each.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Result, SimError};
use crate::linfield::{symmetrized_spectrum, Basis, Bath, CorrelatorTable, LinearField, NoiseLabel};
use crate::model::{bogolyubov, chi_cavity, effective_linewidth, BogolyubovCoeffs, ProbeParams, SystemParams};
use crate::perturb::{OrderedSolution, PerturbativeSolver, QuadratureWeights};
use crate::quad::{integrate_samples, Integrator};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Collective {
    Sigma,
    Delta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quadrature {
    /// Angle 0.
    X,
    /// Angle π/2.
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuadratureSelector {
    pub collective: Collective,
    pub quadrature: Quadrature,
}

impl QuadratureSelector {
    pub const X_SIGMA: Self = Self { collective: Collective::Sigma, quadrature: Quadrature::X };
    pub const Y_SIGMA: Self = Self { collective: Collective::Sigma, quadrature: Quadrature::Y };
    pub const X_DELTA: Self = Self { collective: Collective::Delta, quadrature: Quadrature::X };
    pub const Y_DELTA: Self = Self { collective: Collective::Delta, quadrature: Quadrature::Y };
    pub const ALL: [Self; 4] = [Self::X_SIGMA, Self::Y_DELTA, Self::X_DELTA, Self::Y_SIGMA];

    pub fn label(&self) -> &'static str {
        match (self.quadrature, self.collective) {
            (Quadrature::X, Collective::Sigma) => "XSigma",
            (Quadrature::Y, Collective::Sigma) => "YSigma",
            (Quadrature::X, Collective::Delta) => "XDelta",
            (Quadrature::Y, Collective::Delta) => "YDelta",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|q| q.label().eq_ignore_ascii_case(s))
    }
}

/// Callable returning the Bogolyubov-frame fields of one perturbative order
/// at any frequency.
pub type Modes<'a> = &'a dyn Fn(f64) -> Result<OrderedSolution>;

/// `b₁(ν) = u β₁(ν) − v β₂†(ν)`, `b₂(ν) = u β₂(ν) − v β₁†(ν)`.
fn b_fields(bog: &BogolyubovCoeffs, modes: Modes, nu: f64) -> Result<(LinearField, LinearField)> {
    let s = modes(nu)?;
    let m = modes(-nu)?;
    let b1 = s.beta1.scale_re(bog.u).sub(&m.beta2.dagger().scale_re(bog.v));
    let b2 = s.beta2.scale_re(bog.u).sub(&m.beta1.dagger().scale_re(bog.v));
    Ok((b1, b2))
}

fn quad_combination(q: Quadrature, b: &LinearField, b_dag: &LinearField) -> LinearField {
    match q {
        Quadrature::X => b.add(b_dag).scale_re(FRAC_1_SQRT_2),
        Quadrature::Y => b.sub(b_dag).scale(-I * FRAC_1_SQRT_2),
    }
}

fn collective(c: Collective, q1: LinearField, q2: &LinearField) -> LinearField {
    match c {
        Collective::Sigma => q1.add(q2),
        Collective::Delta => q1.sub(q2),
    }
}

/// Shifted collective quadrature at ω from the mechanical fields of one order.
pub fn shifted_quadrature_from(
    sel: QuadratureSelector,
    bog: &BogolyubovCoeffs,
    delta: f64,
    modes: Modes,
    omega: f64,
) -> Result<LinearField> {
    let b1 = b_fields(bog, modes, omega + delta)?.0.rebased(1);
    let b1_dag = b_fields(bog, modes, -omega + delta)?.0.dagger().rebased(-1);
    let b2 = b_fields(bog, modes, omega - delta)?.1.rebased(-1);
    let b2_dag = b_fields(bog, modes, -omega - delta)?.1.dagger().rebased(1);
    let q1 = quad_combination(sel.quadrature, &b1, &b1_dag);
    let q2 = quad_combination(sel.quadrature, &b2, &b2_dag);
    Ok(collective(sel.collective, q1, &q2))
}

/// Lab-frame (unshifted) collective quadrature at ω.
pub fn unshifted_quadrature_from(
    sel: QuadratureSelector,
    bog: &BogolyubovCoeffs,
    modes: Modes,
    omega: f64,
) -> Result<LinearField> {
    let (b1, b2) = b_fields(bog, modes, omega)?;
    let (m1, m2) = b_fields(bog, modes, -omega)?;
    let q1 = quad_combination(sel.quadrature, &b1, &m1.dagger());
    let q2 = quad_combination(sel.quadrature, &b2, &m2.dagger());
    Ok(collective(sel.collective, q1, &q2))
}

/// Shifted collective quadrature built from the exact order-`order` fields.
pub fn shifted_quadrature_field(
    sel: QuadratureSelector,
    order: usize,
    solver: &PerturbativeSolver,
    omega: f64,
) -> Result<LinearField> {
    let modes = |nu: f64| solver.order(order, nu);
    shifted_quadrature_from(sel, solver.bogolyubov(), solver.params().delta, &modes, omega)
}

/// Contracts fields against a bath table, converting Bogolyubov-basis fields
/// when the table is in the original basis.
#[derive(Debug, Clone)]
pub struct Contraction {
    table: CorrelatorTable,
    bog: BogolyubovCoeffs,
}

impl Contraction {
    pub fn original(params: &SystemParams) -> Result<Self> {
        Ok(Self { table: CorrelatorTable::original(params), bog: bogolyubov(params)? })
    }

    pub fn with_table(params: &SystemParams, table: CorrelatorTable) -> Result<Self> {
        Ok(Self { table, bog: bogolyubov(params)? })
    }

    fn to_table_basis(&self, f: &LinearField) -> LinearField {
        match (f.basis(), self.table.basis()) {
            (Basis::Bogolyubov, Basis::Original) => f.to_original(&self.bog),
            (a, b) if a == b => f.clone(),
            _ => panic!("original-basis field cannot be contracted with a Bogolyubov-basis table"),
        }
    }

    /// `½⟨{F(ω), F(−ω)}⟩` from the field at ω and at −ω.
    pub fn spectrum(&self, f: &LinearField, f_neg: &LinearField) -> Result<f64> {
        symmetrized_spectrum(&self.to_table_basis(f), &self.to_table_basis(f_neg), &self.table)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Fingerprint of the parameters that produced the curve.
    pub meta: String,
}

impl SpectrumCurve {
    /// Builds a curve, rejecting values below −1e−12 and clipping the rest at 0.
    pub fn new(grid: Vec<f64>, values: Vec<f64>, meta: String) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(SimError::InvalidGrid("grid and values differ in length".into()));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(SimError::InvalidGrid("grid is not strictly increasing".into()));
        }
        if let Some((w, v)) = grid.iter().zip(&values).find(|(_, v)| !(**v >= -1e-12)) {
            return Err(SimError::InvalidGrid(format!("negative spectral density {v:e} at omega = {w}")));
        }
        let values = values.into_iter().map(|v| v.max(0.0)).collect();
        Ok(Self { grid, values, meta })
    }
}

/// Uniform grid of `points` samples on `[−half_width, half_width]`.
pub fn uniform_grid(half_width: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(half_width > 0.0) || !half_width.is_finite() {
        return Err(SimError::InvalidGrid(format!(
            "need points >= 2 and a positive half width, got {points} and {half_width}"
        )));
    }
    let step = 2.0 * half_width / (points - 1) as f64;
    Ok((0..points).map(|k| -half_width + k as f64 * step).collect())
}

/// Default window half width, 50 Γ_eff.
pub fn default_half_width(params: &SystemParams) -> Result<f64> {
    Ok(50.0 * effective_linewidth(params)?)
}

fn eval_grid(grid: &[f64], f: impl Fn(f64) -> Result<f64> + Sync) -> Result<Vec<f64>> {
    grid.par_iter().map(|&w| f(w)).collect()
}

/// Order-0 symmetrized spectrum `S̄(ω)` of a shifted collective quadrature.
pub fn quadrature_point(
    sel: QuadratureSelector,
    solver: &PerturbativeSolver,
    c: &Contraction,
    omega: f64,
) -> Result<f64> {
    let f = shifted_quadrature_field(sel, 0, solver, omega)?;
    let g = shifted_quadrature_field(sel, 0, solver, -omega)?;
    c.spectrum(&f, &g)
}

pub fn quadrature_spectrum(sel: QuadratureSelector, params: &SystemParams, grid: &[f64]) -> Result<SpectrumCurve> {
    let solver = PerturbativeSolver::new(params, &ProbeParams::off())?;
    let c = Contraction::original(params)?;
    let values = eval_grid(grid, |w| quadrature_point(sel, &solver, &c, w))?;
    SpectrumCurve::new(grid.to_vec(), values, crate::config::params_fingerprint(params, &ProbeParams::off()))
}

/// Homodyne background with the mechanics decoupled:
/// `½ Σ± [(n_E+½)|κ_E χ_a(ω±δ) − 1|² + (n_I+½) κ_E κ_I |χ_a(ω±δ)|²]`.
pub fn background(params: &SystemParams, omega: f64) -> f64 {
    let ke = params.kappa_e;
    let term = |nu: f64| {
        let ca = chi_cavity(nu, params);
        (params.n_e + 0.5) * (ke * ca - 1.0).norm_sqr() + (params.n_i + 0.5) * ke * params.kappa_i * ca.norm_sqr()
    };
    0.5 * (term(omega + params.delta) + term(omega - params.delta))
}

/// Background in the form `|κ_E χ_a(ω+δ) − 1|² (n_c + ½)`, which drops the
/// internal-loss port; it is exact only for `κ_I = 0`.
pub fn background_external_only(params: &SystemParams, n_c: f64, omega: f64) -> f64 {
    (params.kappa_e * chi_cavity(omega + params.delta, params) - 1.0).norm_sqr() * (n_c + 0.5)
}

/// Transfer `h(ω) = χ_a(ω+δ)/Δ(ω)` from the quadratures to the cavity field.
pub fn transfer(solver: &PerturbativeSolver, omega: f64) -> Complex64 {
    solver.cavity_transfer(omega)
}

/// Physical homodyne angle that reads the relative angle `theta_bar` of
/// the quadrature decomposition: `θ = arg h(0) − π/2 − θ̄`.
pub fn homodyne_angle(solver: &PerturbativeSolver, theta_bar: f64) -> f64 {
    transfer(solver, 0.0).arg() - PI / 2.0 - theta_bar
}

/// Homodyne quadrature `(a_out e^{−iθ} + a_out† e^{iθ})/√2` at ω, with
/// `a_out = √κ_E a − a_E` and `cavity(ν)` returning the intracavity field.
pub fn homodyne_field(
    cavity: &dyn Fn(f64) -> Result<LinearField>,
    kappa_e: f64,
    theta: f64,
    omega: f64,
) -> Result<LinearField> {
    let out = |nu: f64| -> Result<LinearField> {
        let mut f = cavity(nu)?.scale_re(kappa_e.sqrt());
        f.add_term(NoiseLabel::new(Bath::CavityExternal, false, 0), Complex64::from(-1.0));
        Ok(f)
    };
    let e = Complex64::from_polar(FRAC_1_SQRT_2, -theta);
    let mut x = out(omega)?.scale(e);
    x.add_assign_scaled(&out(-omega)?.dagger(), e.conj());
    Ok(x)
}

/// Symmetrized homodyne spectrum of a cavity-field model at ω.
pub fn homodyne_spectrum(
    cavity: &dyn Fn(f64) -> Result<LinearField>,
    contraction: &Contraction,
    kappa_e: f64,
    theta: f64,
    omega: f64,
) -> Result<f64> {
    let f = homodyne_field(cavity, kappa_e, theta, omega)?;
    let g = homodyne_field(cavity, kappa_e, theta, -omega)?;
    contraction.spectrum(&f, &g)
}

/// Quadrature read at relative angle θ̄ through the first-order cavity field:
/// `cos θ̄ (𝒜⁺X̄^Σ + ℬ⁺Ȳ^Σ) + sin θ̄ (ℬ⁻X̄^Δ − 𝒜⁻Ȳ^Δ)` at order 0.
fn measured_combination(
    solver: &PerturbativeSolver,
    w: &QuadratureWeights,
    theta_bar: f64,
    omega: f64,
) -> Result<LinearField> {
    let (c, s) = (theta_bar.cos(), theta_bar.sin());
    let mut acc = LinearField::zero(Basis::Bogolyubov);
    for (sel, coef) in [
        (QuadratureSelector::X_SIGMA, c * w.a_plus),
        (QuadratureSelector::Y_SIGMA, c * w.b_plus),
        (QuadratureSelector::X_DELTA, s * w.b_minus),
        (QuadratureSelector::Y_DELTA, -s * w.a_minus),
    ] {
        if coef != 0.0 {
            acc.add_assign_scaled(&shifted_quadrature_field(sel, 0, solver, omega)?, coef.into());
        }
    }
    Ok(acc)
}

/// `S_out(ω) = background + κ_E S⁽¹⁾(ω)` with
/// `S⁽¹⁾ = |h(ω)|² S[cos θ̄ (𝒜⁺X̄^Σ + ℬ⁺Ȳ^Σ) + sin θ̄ (ℬ⁻X̄^Δ − 𝒜⁻Ȳ^Δ)]`.
pub fn output_point(solver: &PerturbativeSolver, c: &Contraction, theta_bar: f64, omega: f64) -> Result<f64> {
    let eff = solver.effective();
    if !eff.bae_phase_ok {
        return Err(SimError::PhaseConditionViolated { dphi: crate::model::wrap_angle(eff.phi_1 - eff.phi_2) });
    }
    let w = solver.quadrature_weights();
    let f = measured_combination(solver, &w, theta_bar, omega)?;
    let g = measured_combination(solver, &w, theta_bar, -omega)?;
    let s1 = transfer(solver, omega).norm_sqr() * c.spectrum(&f, &g)?;
    let p = solver.params();
    Ok(background(p, omega) + p.kappa_e * s1)
}

pub fn output_spectrum(
    theta_bar: f64,
    params: &SystemParams,
    probe: &ProbeParams,
    grid: &[f64],
) -> Result<SpectrumCurve> {
    let solver = PerturbativeSolver::new(params, probe)?;
    let c = Contraction::original(params)?;
    let values = eval_grid(grid, |w| output_point(&solver, &c, theta_bar, w))?;
    SpectrumCurve::new(grid.to_vec(), values, crate::config::params_fingerprint(params, probe))
}

/// Homodyne spectrum of `a⁽⁰⁾ + a⁽¹⁾` with the exact susceptibilities, at
/// physical angle `theta`. Diagnostic counterpart of [`output_point`].
pub fn perturbative_output_point(solver: &PerturbativeSolver, c: &Contraction, theta: f64, omega: f64) -> Result<f64> {
    let cavity = |nu: f64| solver.cavity_series(1, nu);
    homodyne_spectrum(&cavity, c, solver.params().kappa_e, theta, omega)
}

/// One row of the output-to-quadrature mapping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Table1Row {
    pub theta_bar: f64,
    pub phi_p: f64,
    pub phi_q: f64,
    pub selector: QuadratureSelector,
}

pub const TABLE1: [Table1Row; 4] = [
    Table1Row { theta_bar: 0.0, phi_p: 0.0, phi_q: 0.0, selector: QuadratureSelector::X_SIGMA },
    Table1Row { theta_bar: 0.0, phi_p: PI / 2.0, phi_q: PI / 2.0, selector: QuadratureSelector::Y_SIGMA },
    Table1Row { theta_bar: PI / 2.0, phi_p: 0.0, phi_q: PI, selector: QuadratureSelector::Y_DELTA },
    Table1Row { theta_bar: PI / 2.0, phi_p: PI / 2.0, phi_q: -PI / 2.0, selector: QuadratureSelector::X_DELTA },
];

impl Table1Row {
    pub fn probe(&self, g_p: f64, g_q: f64) -> ProbeParams {
        ProbeParams::new(g_p, g_q, self.phi_p, self.phi_q)
    }

    /// Weight multiplying the selected quadrature in the measured combination.
    pub fn coefficient(&self, w: &QuadratureWeights) -> f64 {
        match (self.selector.quadrature, self.selector.collective) {
            (Quadrature::X, Collective::Sigma) => w.a_plus,
            (Quadrature::Y, Collective::Sigma) => w.b_plus,
            (Quadrature::X, Collective::Delta) => w.b_minus,
            (Quadrature::Y, Collective::Delta) => w.a_minus,
        }
    }
}

/// Extracts `S̄` of the row's quadrature from the output spectrum:
/// `(S_out − background) / (κ_E |h|² c²)`.
pub struct Extractor {
    solver: PerturbativeSolver,
    contraction: Contraction,
    row: Table1Row,
    coef2: f64,
    peak: f64,
}

impl Extractor {
    pub fn new(params: &SystemParams, g_p: f64, g_q: f64, row: Table1Row) -> Result<Self> {
        let probe = row.probe(g_p, g_q);
        let solver = PerturbativeSolver::new(params, &probe)?;
        let coef2 = row.coefficient(&solver.quadrature_weights()).powi(2);
        if !(coef2 > 0.0) {
            return Err(SimError::InvalidParameter {
                key: "G_p",
                constraint: "output extraction needs probes on with a nonzero quadrature weight".into(),
            });
        }
        let peak = params.kappa_e * transfer(&solver, 0.0).norm_sqr() * coef2;
        Ok(Self { contraction: Contraction::original(params)?, solver, row, coef2, peak })
    }

    pub fn prefactor(&self, omega: f64) -> f64 {
        self.solver.params().kappa_e * transfer(&self.solver, omega).norm_sqr() * self.coef2
    }

    fn check_point(&self, omega: f64) -> Result<f64> {
        let pf = self.prefactor(omega);
        if !(pf >= 1e-12 * self.peak) {
            return Err(SimError::ExtractionIllConditioned { omega, value: pf, peak: self.peak });
        }
        Ok(pf)
    }

    pub fn output(&self, omega: f64) -> Result<f64> {
        output_point(&self.solver, &self.contraction, self.row.theta_bar, omega)
    }

    pub fn extract(&self, omega: f64) -> Result<f64> {
        let pf = self.check_point(omega)?;
        Ok((self.output(omega)? - background(self.solver.params(), omega)) / pf)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DuanMethod {
    DirectQuadrature,
    OutputExtraction,
}

impl DuanMethod {
    pub fn label(&self) -> &'static str {
        match self {
            DuanMethod::DirectQuadrature => "direct",
            DuanMethod::OutputExtraction => "output",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuanResult {
    pub var_x_sigma: f64,
    pub var_y_delta: f64,
    pub duan_sum: f64,
    pub violated: bool,
    pub method: DuanMethod,
}

impl DuanResult {
    fn new(var_x_sigma: f64, var_y_delta: f64, method: DuanMethod) -> Self {
        let duan_sum = var_x_sigma + var_y_delta;
        Self { var_x_sigma, var_y_delta, duan_sum, violated: duan_sum < 1.0, method }
    }
}

/// Breakpoints that bracket every feature of the order-0 spectra: the
/// linewidth scales around each resonance center `0, ±δ, ±2δ`, plus the
/// cavity scales.
pub fn spectral_breakpoints(params: &SystemParams) -> Result<Vec<f64>> {
    let g = effective_linewidth(params)?;
    let d = params.delta;
    let mut bp = vec![0.5, -0.5, 2.0, -2.0];
    for c in [0.0, d, -d, 2.0 * d, -2.0 * d] {
        bp.push(c);
        for x in [g, 5.0 * g, 50.0 * g] {
            bp.push(c + x);
            bp.push(c - x);
        }
    }
    bp.sort_by(f64::total_cmp);
    bp.dedup();
    Ok(bp)
}

/// `∫ dω/2π S(ω)` over the full line for a callable spectrum.
pub fn integrate_spectrum(params: &SystemParams, s: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let bp = spectral_breakpoints(params)?;
    Ok(Integrator::default().integrate_line(s, &bp, 1.0)? / (2.0 * PI))
}

/// `∫ dω/2π` of a sampled curve with Lorentzian tails beyond its grid.
pub fn integrate_variance(curve: &SpectrumCurve) -> Result<f64> {
    integrate_samples(&curve.grid, &curve.values)
}

/// Variance of the normalized collective quadrature `Q/√2`.
pub fn quadrature_variance(params: &SystemParams, sel: QuadratureSelector) -> Result<f64> {
    let solver = PerturbativeSolver::new(params, &ProbeParams::off())?;
    let c = Contraction::original(params)?;
    Ok(0.5 * integrate_spectrum(params, |w| quadrature_point(sel, &solver, &c, w))?)
}

/// Same variance from the unshifted quadratures.
pub fn unshifted_quadrature_variance(params: &SystemParams, sel: QuadratureSelector) -> Result<f64> {
    let solver = PerturbativeSolver::new(params, &ProbeParams::off())?;
    let c = Contraction::original(params)?;
    let modes = |nu: f64| Ok(solver.zeroth_order(nu));
    let s = |w: f64| {
        let f = unshifted_quadrature_from(sel, solver.bogolyubov(), &modes, w)?;
        let g = unshifted_quadrature_from(sel, solver.bogolyubov(), &modes, -w)?;
        c.spectrum(&f, &g)
    };
    Ok(0.5 * integrate_spectrum(params, s)?)
}

/// Integration settings of the Duan quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuanOptions {
    /// Half width of the sampled window; `None` selects 50 Γ_eff.
    pub half_width: Option<f64>,
    pub points: usize,
    /// Direct method only: integrate the spectra adaptively over the whole
    /// line instead of sampling the window.
    pub adaptive: bool,
}

impl Default for DuanOptions {
    fn default() -> Self {
        Self { half_width: None, points: 4001, adaptive: true }
    }
}

fn sampled_variance(grid: &[f64], s: impl Fn(f64) -> Result<f64> + Sync) -> Result<f64> {
    let values = eval_grid(grid, s)?;
    Ok(0.5 * integrate_samples(grid, &values)?)
}

/// Duan quantity with default options.
pub fn duan_quantity(params: &SystemParams, probe: &ProbeParams, method: DuanMethod) -> Result<DuanResult> {
    duan_quantity_with(params, probe, method, &DuanOptions::default())
}

/// Output extraction always samples the window: outside it the background
/// subtraction loses all precision as the transfer prefactor decays.
pub fn duan_quantity_with(
    params: &SystemParams,
    probe: &ProbeParams,
    method: DuanMethod,
    opts: &DuanOptions,
) -> Result<DuanResult> {
    let hw = match opts.half_width {
        Some(h) => h,
        None => default_half_width(params)?,
    };
    match method {
        DuanMethod::DirectQuadrature if opts.adaptive => Ok(DuanResult::new(
            quadrature_variance(params, QuadratureSelector::X_SIGMA)?,
            quadrature_variance(params, QuadratureSelector::Y_DELTA)?,
            method,
        )),
        DuanMethod::DirectQuadrature => {
            let grid = uniform_grid(hw, opts.points)?;
            let solver = PerturbativeSolver::new(params, &ProbeParams::off())?;
            let c = Contraction::original(params)?;
            let var = |sel| sampled_variance(&grid, |w| quadrature_point(sel, &solver, &c, w));
            Ok(DuanResult::new(var(QuadratureSelector::X_SIGMA)?, var(QuadratureSelector::Y_DELTA)?, method))
        }
        DuanMethod::OutputExtraction => {
            let grid = uniform_grid(hw, opts.points)?;
            let mut vars = [0.0; 2];
            for (slot, row) in vars.iter_mut().zip([TABLE1[0], TABLE1[2]]) {
                let ex = Extractor::new(params, probe.g_p, probe.g_q, row)?;
                *slot = sampled_variance(&grid, |w| ex.extract(w))?;
            }
            Ok(DuanResult::new(vars[0], vars[1], method))
        }
    }
}

/// Duan quantity at each `G₊/G₋` ratio with `G₋` fixed, in input order.
pub fn sweep_duan(
    params: &SystemParams,
    probe: &ProbeParams,
    ratios: &[f64],
    method: DuanMethod,
    opts: &DuanOptions,
) -> Result<Vec<(f64, DuanResult)>> {
    if let Some(r) = ratios.iter().find(|r| !(**r >= 0.0 && **r < 1.0)) {
        return Err(SimError::InvalidParameter {
            key: "ratio",
            constraint: format!("0 <= G_plus/G_minus < 1, got {r}"),
        });
    }
    ratios
        .par_iter()
        .map(|&r| {
            let p = SystemParams { g_plus: r * params.g_minus, ..*params };
            duan_quantity_with(&p, probe, method, opts).map(|d| (r, d))
        })
        .collect()
}

/// Agreement between spectra contracted with a Bogolyubov-basis bath table
/// and with the original mechanical baths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisCheck {
    /// Offset added to `⟨β β†⟩` in the Bogolyubov table.
    pub offset: f64,
    /// Largest relative difference over quadratures, probe output and grid.
    pub max_rel_diff: f64,
    pub pass: bool,
}

/// Tolerance of the basis-change comparison.
pub const BASIS_TOL: f64 = 1e-10;

/// Compares the four collective-quadrature spectra and the first-order
/// homodyne output for each table offset.
pub fn basis_consistency(
    params: &SystemParams,
    probe: &ProbeParams,
    grid: &[f64],
    offsets: &[f64],
) -> Result<Vec<BasisCheck>> {
    let quiet = PerturbativeSolver::new(params, &ProbeParams::off())?;
    let probed = PerturbativeSolver::new(params, probe)?;
    let orig = Contraction::original(params)?;
    let theta = homodyne_angle(&probed, 0.0);
    let points = |c: &Contraction, w: f64| -> Result<Vec<f64>> {
        let mut v = QuadratureSelector::ALL
            .iter()
            .map(|&sel| quadrature_point(sel, &quiet, c, w))
            .collect::<Result<Vec<_>>>()?;
        v.push(perturbative_output_point(&probed, c, theta, w)?);
        Ok(v)
    };
    let reference = grid.par_iter().map(|&w| points(&orig, w)).collect::<Result<Vec<_>>>()?;
    offsets
        .iter()
        .map(|&offset| {
            let c = Contraction::with_table(params, crate::linfield::bogolyubov_table_with_offset(params, offset)?)?;
            let rows = grid.par_iter().map(|&w| points(&c, w)).collect::<Result<Vec<_>>>()?;
            let max_rel_diff = rows
                .iter()
                .zip(&reference)
                .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs() / y.abs().max(f64::MIN_POSITIVE)))
                .fold(0.0, f64::max);
            Ok(BasisCheck { offset, max_rel_diff, pass: max_rel_diff < BASIS_TOL })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solver() -> PerturbativeSolver {
        PerturbativeSolver::new(&SystemParams::default(), &ProbeParams::off()).unwrap()
    }

    #[test]
    fn selector_labels_round_trip() {
        for s in QuadratureSelector::ALL {
            assert_eq!(QuadratureSelector::parse(s.label()), Some(s));
        }
    }

    #[test]
    fn order0_x_sigma_matches_bogolyubov_form() {
        // X̄^Σ = (u−v)/√2 [β₁(ω+δ) + β₁†(ω−δ) + β₂(ω−δ) + β₂†(ω+δ)]
        let s = solver();
        let (b, d) = (*s.bogolyubov(), s.params().delta);
        let w = 0.0013;
        let lhs = shifted_quadrature_field(QuadratureSelector::X_SIGMA, 0, &s, w).unwrap();
        let z = |nu: f64| s.zeroth_order(nu);
        let rhs = z(w + d)
            .beta1
            .rebased(1)
            .add(&z(-w + d).beta1.dagger().rebased(-1))
            .add(&z(w - d).beta2.rebased(-1))
            .add(&z(-w - d).beta2.dagger().rebased(1))
            .scale_re((b.u - b.v) * FRAC_1_SQRT_2);
        assert!(lhs.sub(&rhs).norm() < 1e-12 * rhs.norm());
    }

    #[test]
    fn spectra_are_even_for_equal_occupations() {
        let s = solver();
        let c = Contraction::original(s.params()).unwrap();
        for sel in QuadratureSelector::ALL {
            for w in [1e-3, 4e-3, 0.02] {
                let a = quadrature_point(sel, &s, &c, w).unwrap();
                let b = quadrature_point(sel, &s, &c, -w).unwrap();
                assert!((a - b).abs() < 1e-10 * a, "{} at {w}: {a} vs {b}", sel.label());
            }
        }
    }

    #[test]
    fn background_is_flat_for_equal_cavity_baths() {
        let p = SystemParams { n_e: 0.3, n_i: 0.3, ..SystemParams::default() };
        for w in [-0.4, 0.0, 0.07] {
            assert!((background(&p, w) - 0.8).abs() < 1e-14);
        }
    }

    #[test]
    fn output_requires_bae_phases() {
        let p = SystemParams::default();
        let probe = ProbeParams::new(1e-5, 1e-5, 0.0, PI / 4.0);
        let err = output_spectrum(0.0, &p, &probe, &[-0.01, 0.0, 0.01]).unwrap_err();
        assert!(matches!(err, SimError::PhaseConditionViolated { .. }));
    }

    #[test]
    fn curve_rejects_negative_values() {
        assert!(SpectrumCurve::new(vec![0.0, 1.0], vec![1.0, -1e-6], String::new()).is_err());
        let c = SpectrumCurve::new(vec![0.0, 1.0], vec![1.0, -1e-13], String::new()).unwrap();
        assert_eq!(c.values[1], 0.0);
    }
}
