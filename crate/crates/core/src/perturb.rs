//! Hierarchical solution of the Bogolyubov-frame equations in powers of the
//! probe couplings.
//!
//! Frequency conventions: `f(t) = ∫dω/2π e^{-iωt} f(ω)`, so a factor `e^{iδt}`
//! moves an operator to `ω + δ`. In this convention the `p` tone pairs the
//! cavity with mechanical operators at `ω + δ` and the `q` tone with `ω − δ`.
//!
//! At every order the three fields obey
//!
//! ```text
//! χ_a(ω+δ)⁻¹ a   = −i𝒢 (β₁ + β₂) + A
//! χ(ω−δ)⁻¹   β₁  = −i𝒢 a + B
//! χ(ω+δ)⁻¹   β₂  = −i𝒢 a + B
//! ```
//!
//! with sources `A`, `B` built from the previous order. Both Bogolyubov modes
//! receive the same probe source `B`.

use num_complex::Complex64;

use crate::error::Result;
use crate::linfield::{Basis, Bath, LinearField, NoiseLabel, DEFAULT_MAX_SHIFT};
use crate::model::{
    bogolyubov, chi_cavity, chi_mech, effective_probe, sin_cos_exact, BogolyubovCoeffs, EffectiveProbe, ProbeParams,
    SystemParams,
};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq)]
pub struct OrderedSolution {
    pub order: usize,
    pub a: LinearField,
    pub beta1: LinearField,
    pub beta2: LinearField,
}

/// How probe insertions beyond the closed-form orders are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecursionMode {
    /// Full susceptibilities at every insertion.
    Exact,
    /// Only resonant mechanical responses are kept, with the common dressed
    /// kernel `χ(ω) / (1 + 𝒢² χ(ω) χ_a(ω))` valid for δ ≪ κ.
    Resonant,
}

/// Coefficients multiplying the shifted collective quadratures in the
/// resonant part of the first-order cavity field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureWeights {
    pub a_plus: f64,
    pub a_minus: f64,
    pub b_plus: f64,
    pub b_minus: f64,
}

impl QuadratureWeights {
    pub fn new(probe: &ProbeParams) -> Self {
        let (sp, cp) = sin_cos_exact(probe.phi_p);
        let (sq, cq) = sin_cos_exact(probe.phi_q);
        Self {
            a_plus: probe.g_p * cp + probe.g_q * cq,
            a_minus: probe.g_p * cp - probe.g_q * cq,
            b_plus: probe.g_p * sp + probe.g_q * sq,
            b_minus: probe.g_p * sp - probe.g_q * sq,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PerturbativeSolver {
    params: SystemParams,
    bog: BogolyubovCoeffs,
    eff: EffectiveProbe,
    probe: ProbeParams,
    max_shift: i32,
}

type Lower<'a> = &'a dyn Fn(f64) -> Result<OrderedSolution>;

impl PerturbativeSolver {
    pub fn new(params: &SystemParams, probe: &ProbeParams) -> Result<Self> {
        params.validate()?;
        probe.validate()?;
        Ok(Self {
            params: *params,
            bog: bogolyubov(params)?,
            eff: effective_probe(params, probe)?,
            probe: *probe,
            max_shift: DEFAULT_MAX_SHIFT,
        })
    }

    pub fn with_max_shift(mut self, max_shift: i32) -> Self {
        self.max_shift = max_shift;
        self
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn bogolyubov(&self) -> &BogolyubovCoeffs {
        &self.bog
    }

    pub fn effective(&self) -> &EffectiveProbe {
        &self.eff
    }

    pub fn probe(&self) -> &ProbeParams {
        &self.probe
    }

    /// `χ_a(ω+δ) / Δ(ω)`, the cavity transfer of every source term.
    pub fn cavity_transfer(&self, omega: f64) -> Complex64 {
        let p = &self.params;
        let ca = chi_cavity(omega + p.delta, p);
        let g2 = self.bog.cal_g.powi(2);
        ca / (1.0 + g2 * ca * (chi_mech(omega - p.delta, p) + chi_mech(omega + p.delta, p)))
    }

    /// Solves the three coupled equations at ω for given sources.
    pub fn solve_sources(
        &self,
        order: usize,
        omega: f64,
        a_src: &LinearField,
        b1_src: &LinearField,
        b2_src: &LinearField,
    ) -> OrderedSolution {
        let p = &self.params;
        let g = self.bog.cal_g;
        let ca = chi_cavity(omega + p.delta, p);
        let c1 = chi_mech(omega - p.delta, p);
        let c2 = chi_mech(omega + p.delta, p);
        let big_delta = 1.0 + g * g * ca * (c1 + c2);

        // A − i𝒢(χ₁B₁ + χ₂B₂)
        let mut drive = a_src.clone();
        drive.add_assign_scaled(b1_src, -I * g * c1);
        drive.add_assign_scaled(b2_src, -I * g * c2);
        let a = drive.scale(ca / big_delta);

        let beta = |own: &LinearField, own_chi: Complex64, other: &LinearField, other_chi: Complex64| {
            // χ_own/Δ · [(1 + 𝒢²χ_a χ_other) B_own − i𝒢 χ_a (A − i𝒢 χ_other B_other)]
            let mut f = own.scale(1.0 + g * g * ca * other_chi);
            f.add_assign_scaled(a_src, -I * g * ca);
            f.add_assign_scaled(other, -(g * g) * ca * other_chi);
            f.scale(own_chi / big_delta)
        };
        let beta1 = beta(b1_src, c1, b2_src, c2);
        let beta2 = beta(b2_src, c2, b1_src, c1);
        OrderedSolution { order, a, beta1, beta2 }
    }

    pub fn zeroth_order(&self, omega: f64) -> OrderedSolution {
        let p = &self.params;
        let basis = Basis::Bogolyubov;
        let mut a_src = LinearField::zero(basis);
        a_src.add_term(NoiseLabel::new(Bath::CavityExternal, false, 0), p.kappa_e.sqrt().into());
        a_src.add_term(NoiseLabel::new(Bath::CavityInternal, false, 0), p.kappa_i.sqrt().into());
        let sg = Complex64::from(p.gamma.sqrt());
        let b1 = LinearField::single(basis, NoiseLabel::new(Bath::Mech1, false, 0), sg);
        let b2 = LinearField::single(basis, NoiseLabel::new(Bath::Mech2, false, 0), sg);
        self.solve_sources(0, omega, &a_src, &b1, &b2)
    }

    fn insertion_weights(&self) -> (Complex64, Complex64) {
        let l = self.probe.lambda;
        (self.eff.rot_p * (l * self.probe.g_p), self.eff.rot_q * (l * self.probe.g_q))
    }

    /// Probe source for both mechanical modes from a cavity field:
    /// `B = −i𝒢_p e^{iφ₁}[a(ω−δ) + a†(ω+δ)] − i𝒢_q e^{iφ₂}[a(ω+δ) + a†(ω−δ)]`.
    fn mechanical_source(&self, lower: Lower, omega: f64) -> Result<LinearField> {
        let d = self.params.delta;
        let (wp, wq) = self.insertion_weights();
        let a_dn = lower(omega - d)?.a.rebased(-1);
        let a_up = lower(omega + d)?.a.rebased(1);
        let a_dag_up = lower(-omega - d)?.a.dagger().rebased(1);
        let a_dag_dn = lower(-omega + d)?.a.dagger().rebased(-1);
        let mut b = a_dn.add(&a_dag_up).scale(-I * wp);
        b.add_assign_scaled(&a_up.add(&a_dag_dn), -I * wq);
        Ok(b)
    }

    /// Full cavity source from both Bogolyubov modes and their conjugates.
    fn cavity_source_exact(&self, lower: Lower, omega: f64) -> Result<LinearField> {
        let d = self.params.delta;
        let (wp, wq) = self.insertion_weights();
        let sum = |s: &OrderedSolution| s.beta1.add(&s.beta2);
        let up = sum(&lower(omega + d)?).rebased(1);
        let dn = sum(&lower(omega - d)?).rebased(-1);
        let up_dag = sum(&lower(-omega - d)?).dagger().rebased(1);
        let dn_dag = sum(&lower(-omega + d)?).dagger().rebased(-1);
        // 𝒢_p e^{-iφ₁} = conj(wp)
        let mut a = up.scale(-I * wp.conj());
        a.add_assign_scaled(&up_dag, -I * wp);
        a.add_assign_scaled(&dn, -I * wq.conj());
        a.add_assign_scaled(&dn_dag, -I * wq);
        Ok(a)
    }

    /// Cavity source keeping only the mechanical terms resonant near ω ≈ 0:
    /// β₁(ω+δ), β₂†(ω+δ), β₂(ω−δ), β₁†(ω−δ).
    fn cavity_source_resonant(&self, lower: Lower, omega: f64) -> Result<LinearField> {
        let d = self.params.delta;
        let (wp, wq) = self.insertion_weights();
        let b1_up = lower(omega + d)?.beta1.rebased(1);
        let b2_dag_up = lower(-omega - d)?.beta2.dagger().rebased(1);
        let b2_dn = lower(omega - d)?.beta2.rebased(-1);
        let b1_dag_dn = lower(-omega + d)?.beta1.dagger().rebased(-1);
        let mut a = b1_up.scale(-I * wp.conj());
        a.add_assign_scaled(&b2_dag_up, -I * wp);
        a.add_assign_scaled(&b2_dn, -I * wq.conj());
        a.add_assign_scaled(&b1_dag_dn, -I * wq);
        Ok(a)
    }

    /// Common resonant mechanical kernel `χ(ω)/(1 + 𝒢²χ(ω)χ_a(ω))`.
    pub fn resonant_kernel(&self, omega: f64) -> Complex64 {
        let cm = chi_mech(omega, &self.params);
        cm / (1.0 + self.bog.cal_g.powi(2) * cm * chi_cavity(omega, &self.params))
    }

    /// Order `n + 1` at ω from a callable returning order `n` at any frequency.
    pub fn next_order(&self, lower: Lower, omega: f64, mode: RecursionMode) -> Result<OrderedSolution> {
        let order = lower(omega)?.order + 1;
        let b_src = self.mechanical_source(lower, omega)?;
        let sol = match mode {
            RecursionMode::Exact => {
                let a_src = self.cavity_source_exact(lower, omega)?;
                self.solve_sources(order, omega, &a_src, &b_src, &b_src)
            }
            RecursionMode::Resonant => {
                let d = self.params.delta;
                let a_src = self.cavity_source_resonant(lower, omega)?;
                OrderedSolution {
                    order,
                    a: a_src.scale(self.cavity_transfer(omega)),
                    // β₁ resonates at ω = +δ, β₂ at ω = −δ
                    beta1: b_src.scale(self.resonant_kernel(omega - d)),
                    beta2: b_src.scale(self.resonant_kernel(omega + d)),
                }
            }
        };
        for f in [&sol.a, &sol.beta1, &sol.beta2] {
            f.check_shifts(self.max_shift)?;
        }
        Ok(sol)
    }

    /// Exact order-`n` fields at ω.
    pub fn order(&self, n: usize, omega: f64) -> Result<OrderedSolution> {
        if n == 0 {
            return Ok(self.zeroth_order(omega));
        }
        let lower = |w: f64| self.order(n - 1, w);
        self.next_order(&lower, omega, RecursionMode::Exact)
    }

    /// Exact first-order cavity correction a⁽¹⁾(ω).
    pub fn first_order_cavity(&self, omega: f64) -> Result<LinearField> {
        Ok(self.order(1, omega)?.a)
    }

    /// Resonant part of a⁽¹⁾(ω): only the mechanical terms peaked at ω ≈ 0.
    pub fn first_order_cavity_resonant(&self, omega: f64) -> Result<LinearField> {
        let lower = |w: f64| Ok(self.zeroth_order(w));
        Ok(self.cavity_source_resonant(&lower, omega)?.scale(self.cavity_transfer(omega)))
    }

    pub fn quadrature_weights(&self) -> QuadratureWeights {
        QuadratureWeights::new(&self.probe)
    }

    /// Sum of the perturbative cavity fields through `max_order`.
    pub fn cavity_series(&self, max_order: usize, omega: f64) -> Result<LinearField> {
        let mut acc = LinearField::zero(Basis::Bogolyubov);
        for n in 0..=max_order {
            acc = acc.add(&self.order(n, omega)?.a);
        }
        Ok(acc)
    }
}
