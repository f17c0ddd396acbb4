//! Scalar building blocks of the linearized two-pump model: parameters,
//! susceptibilities, the Bogolyubov transformation of the mechanical modes and
//! the effective probe couplings it induces.
//!
//! All frequencies are in units of the total cavity linewidth and ħ = 1.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Result, SimError};

/// Rates, detunings, pump couplings and bath occupations of the linear model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub kappa_e: f64,
    pub kappa_i: f64,
    pub gamma: f64,
    pub delta: f64,
    pub g_minus: f64,
    pub g_plus: f64,
    pub n1: f64,
    pub n2: f64,
    pub n_e: f64,
    pub n_i: f64,
}

impl Default for SystemParams {
    /// Operating point used throughout: γ = 1e-5, δ = 0.1, G₋ = 4.8e-2,
    /// G₊ = 4.0e-2, n₁ = n₂ = 10, cold cavity baths, κ_E = 0.9.
    fn default() -> Self {
        Self {
            kappa_e: 0.9,
            kappa_i: 0.1,
            gamma: 1e-5,
            delta: 0.1,
            g_minus: 4.8e-2,
            g_plus: 4.0e-2,
            n1: 10.0,
            n2: 10.0,
            n_e: 0.0,
            n_i: 0.0,
        }
    }
}

fn check(ok: bool, key: &'static str, constraint: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(SimError::InvalidParameter { key, constraint: constraint.to_string() })
    }
}

impl SystemParams {
    pub fn kappa(&self) -> f64 {
        self.kappa_e + self.kappa_i
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.kappa_e,
            self.kappa_i,
            self.gamma,
            self.delta,
            self.g_minus,
            self.g_plus,
            self.n1,
            self.n2,
            self.n_e,
            self.n_i,
        ]
        .iter()
        .all(|x| x.is_finite());
        check(finite, "params", "all values must be finite")?;
        check(self.kappa_e >= 0.0, "kappa_E", "kappa_E >= 0")?;
        check(self.kappa_i >= 0.0, "kappa_I", "kappa_I >= 0")?;
        check(self.kappa() > 0.0, "kappa_E", "kappa_E + kappa_I > 0")?;
        check(self.gamma > 0.0, "gamma", "gamma > 0")?;
        check(self.delta >= 0.0, "delta", "delta >= 0")?;
        check(self.g_plus >= 0.0, "G_plus", "G_plus >= 0")?;
        for (v, k) in [(self.n1, "n_1"), (self.n2, "n_2"), (self.n_e, "n_E"), (self.n_i, "n_I")] {
            check(v >= 0.0, k, "occupation >= 0")?;
        }
        if self.g_minus <= self.g_plus {
            return Err(SimError::DegeneratePumps { g_minus: self.g_minus, g_plus: self.g_plus });
        }
        Ok(())
    }

    /// Regime flags that are reported but never fatal.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.gamma * 100.0 > self.delta {
            w.push(format!("gamma = {} is not much smaller than delta = {}", self.gamma, self.delta));
        }
        if self.delta >= self.kappa() {
            w.push(format!("delta = {} is not below kappa = {}", self.delta, self.kappa()));
        }
        w
    }
}

/// Probe tone amplitudes and phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeParams {
    pub g_p: f64,
    pub g_q: f64,
    pub phi_p: f64,
    pub phi_q: f64,
    /// Perturbative bookkeeping scale multiplying every probe insertion.
    pub lambda: f64,
}

impl Default for ProbeParams {
    fn default() -> Self {
        Self { g_p: 0.0, g_q: 0.0, phi_p: 0.0, phi_q: 0.0, lambda: 1.0 }
    }
}

impl ProbeParams {
    pub fn new(g_p: f64, g_q: f64, phi_p: f64, phi_q: f64) -> Self {
        Self { g_p, g_q, phi_p, phi_q, lambda: 1.0 }
    }

    pub fn off() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        check(self.g_p.is_finite() && self.g_p >= 0.0, "G_p", "G_p >= 0")?;
        check(self.g_q.is_finite() && self.g_q >= 0.0, "G_q", "G_q >= 0")?;
        check(self.lambda.is_finite() && self.lambda >= 0.0, "lambda", "lambda >= 0")?;
        check(self.phi_p.is_finite(), "phi_p", "phi_p finite")?;
        check(self.phi_q.is_finite(), "phi_q", "phi_q finite")?;
        Ok(())
    }

    pub fn is_off(&self) -> bool {
        self.g_p == 0.0 && self.g_q == 0.0
    }

    /// Warns when a probe exceeds a tenth of the collective coupling.
    pub fn warnings(&self, params: &SystemParams) -> Vec<String> {
        let cal_g2 = params.g_minus * params.g_minus - params.g_plus * params.g_plus;
        let limit = if cal_g2 > 0.0 { 0.1 * cal_g2.sqrt() } else { 0.0 };
        if self.g_p.max(self.g_q) > limit {
            vec![format!(
                "probe amplitude {} exceeds 0.1*calG = {limit}; perturbative truncation may be inaccurate",
                self.g_p.max(self.g_q)
            )]
        } else {
            Vec::new()
        }
    }
}

/// Bogolyubov weights with u² − v² = 1 and the collective coupling 𝒢.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BogolyubovCoeffs {
    pub u: f64,
    pub v: f64,
    pub cal_g: f64,
}

/// Effective probe couplings seen by the Bogolyubov modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveProbe {
    pub cal_g_p: f64,
    pub cal_g_q: f64,
    pub phi_1: f64,
    pub phi_2: f64,
    pub bae_phase_ok: bool,
    /// `𝒢_p e^{iφ₁}` per unit `G_p`, kept in Cartesian form so that quarter
    /// turns stay exact.
    pub rot_p: Complex64,
    pub rot_q: Complex64,
}

pub const BAE_PHASE_TOL: f64 = 1e-10;

/// χ_a(ω) = 1 / (κ/2 − iω).
pub fn chi_cavity(omega: f64, params: &SystemParams) -> Complex64 {
    Complex64::new(params.kappa() / 2.0, -omega).inv()
}

/// χ(ω) = 1 / (γ/2 − iω).
pub fn chi_mech(omega: f64, params: &SystemParams) -> Complex64 {
    Complex64::new(params.gamma / 2.0, -omega).inv()
}

pub fn bogolyubov(params: &SystemParams) -> Result<BogolyubovCoeffs> {
    let (gm, gp) = (params.g_minus, params.g_plus);
    if !(gm > gp) {
        return Err(SimError::DegeneratePumps { g_minus: gm, g_plus: gp });
    }
    // Working with r = G₊/G₋ avoids underflow of G² for weak pumps, and
    // (1 − r)(1 + r) keeps precision near degeneracy.
    let r = gp / gm;
    let s = ((1.0 - r) * (1.0 + r)).sqrt();
    Ok(BogolyubovCoeffs { u: 1.0 / s, v: r / s, cal_g: gm * s })
}

/// Wraps an angle into (−π, π].
pub fn wrap_angle(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

/// `(sin φ, cos φ)` with exact zeros and unit values when φ is a multiple
/// of π/2 to within a few ulps.
pub fn sin_cos_exact(phi: f64) -> (f64, f64) {
    let k = (phi / (PI / 2.0)).round();
    if (phi - k * (PI / 2.0)).abs() <= 4.0 * f64::EPSILON * phi.abs().max(1.0) {
        match (k as i64).rem_euclid(4) {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        }
    } else {
        phi.sin_cos()
    }
}

/// True when `dphi` is 0 or π modulo 2π within [`BAE_PHASE_TOL`].
pub fn is_bae_phase(dphi: f64) -> bool {
    let d = wrap_angle(dphi).abs();
    d < BAE_PHASE_TOL || (PI - d) < BAE_PHASE_TOL
}

pub fn effective_probe(params: &SystemParams, probe: &ProbeParams) -> Result<EffectiveProbe> {
    let b = bogolyubov(params)?;
    // u e^{-iφ} − v e^{iφ} = (u − v) cos φ − i (u + v) sin φ; its conjugate carries +φ₁.
    let rotated = |phi: f64| {
        let (sn, cs) = sin_cos_exact(phi);
        Complex64::new((b.u - b.v) * cs, (b.u + b.v) * sn)
    };
    let zp = rotated(probe.phi_p);
    let zq = rotated(probe.phi_q);
    let phi_1 = zp.arg();
    let phi_2 = zq.arg();
    Ok(EffectiveProbe {
        cal_g_p: zp.norm() * probe.g_p,
        cal_g_q: zq.norm() * probe.g_q,
        phi_1,
        phi_2,
        bae_phase_ok: is_bae_phase(phi_1 - phi_2),
        rot_p: zp,
        rot_q: zq,
    })
}

/// Δ(ω) = 1 + 𝒢² χ_a(ω+δ) [χ(ω−δ) + χ(ω+δ)].
pub fn denominator_delta(omega: f64, params: &SystemParams) -> Result<Complex64> {
    let g2 = bogolyubov(params)?.cal_g.powi(2);
    let d = params.delta;
    Ok(1.0 + g2 * chi_cavity(omega + d, params) * (chi_mech(omega - d, params) + chi_mech(omega + d, params)))
}

/// η₁,₂(ω) = 1 + 𝒢² χ_a(ω+δ) χ(ω∓δ).
///
/// In the closed-form solution the β₁ input is weighted by η₂ and the β₂
/// input by η₁; see [`crate::perturb`].
pub fn etas(omega: f64, params: &SystemParams) -> Result<(Complex64, Complex64)> {
    let g2 = bogolyubov(params)?.cal_g.powi(2);
    let d = params.delta;
    let ca = chi_cavity(omega + d, params);
    Ok((1.0 + g2 * ca * chi_mech(omega - d, params), 1.0 + g2 * ca * chi_mech(omega + d, params)))
}

/// Γ_eff = γ + 4𝒢² Re χ_a(δ), the dressed mechanical linewidth scale.
pub fn effective_linewidth(params: &SystemParams) -> Result<f64> {
    let b = bogolyubov(params)?;
    Ok(params.gamma + 4.0 * b.cal_g.powi(2) * chi_cavity(params.delta, params).re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit_kappa() -> SystemParams {
        SystemParams { kappa_e: 1.0, kappa_i: 0.0, ..SystemParams::default() }
    }

    #[test]
    fn cavity_susceptibility_values() {
        let p = unit_kappa();
        let c0 = chi_cavity(0.0, &p);
        assert_eq!(c0, Complex64::new(2.0, 0.0));
        let c = chi_cavity(0.1, &p);
        assert!((c.re - 1.9231).abs() < 1e-4 && (c.im - 0.3846).abs() < 1e-4, "{c}");
        assert!(chi_cavity(1e9, &p).norm() < 1e-8);
    }

    #[test]
    fn mechanical_susceptibility_values() {
        let p = unit_kappa();
        assert_relative_eq!(chi_mech(0.0, &p).re, 2e5, max_relative = 1e-12);
        let c = chi_mech(0.1, &p);
        assert!((c.re - 5e-4).abs() < 1e-6 && (c.im - 10.0).abs() < 1e-6, "{c}");
        assert_eq!(chi_mech(-0.1, &p), chi_mech(0.1, &p).conj());
    }

    #[test]
    fn bogolyubov_operating_point() {
        let b = bogolyubov(&SystemParams::default()).unwrap();
        // independent evaluation: sqrt(0.048² − 0.04²), 0.048/𝒢, 0.04/𝒢
        assert!((b.cal_g - 2.65329983228432e-2).abs() < 1e-15);
        assert!((b.u - 1.8090680674665818).abs() < 1e-12);
        assert!((b.v - 1.5075567228888183).abs() < 1e-12);
    }

    #[test]
    fn bogolyubov_limits() {
        let p = SystemParams { g_plus: 0.0, g_minus: 0.03, ..SystemParams::default() };
        let b = bogolyubov(&p).unwrap();
        assert_eq!((b.u, b.v, b.cal_g), (1.0, 0.0, 0.03));
        let p = SystemParams { g_plus: 0.0, g_minus: 1e-300, ..SystemParams::default() };
        let b = bogolyubov(&p).unwrap();
        assert_eq!((b.u, b.v, b.cal_g), (1.0, 0.0, 1e-300));
        let p = SystemParams { g_plus: 0.05, g_minus: 0.05, ..SystemParams::default() };
        assert!(matches!(bogolyubov(&p), Err(SimError::DegeneratePumps { .. })));
    }

    #[test]
    fn effective_probe_table_phases() {
        let p = SystemParams::default();
        let b = bogolyubov(&p).unwrap();
        let e = effective_probe(&p, &ProbeParams::new(1e-4, 2e-4, 0.0, 0.0)).unwrap();
        assert_eq!((e.phi_1, e.phi_2), (0.0, 0.0));
        assert_relative_eq!(e.cal_g_p, (b.u - b.v) * 1e-4, max_relative = 1e-14);
        assert!(e.bae_phase_ok);

        let h = std::f64::consts::FRAC_PI_2;
        let e = effective_probe(&p, &ProbeParams::new(1e-4, 1e-4, h, h)).unwrap();
        assert_relative_eq!(e.phi_1, h, epsilon = 1e-14);
        assert_relative_eq!(e.phi_2, h, epsilon = 1e-14);
        assert_relative_eq!(e.cal_g_p, (b.u + b.v) * 1e-4, max_relative = 1e-12);

        let e = effective_probe(&p, &ProbeParams::new(1e-4, 1e-4, 0.0, PI)).unwrap();
        assert!(e.bae_phase_ok);
        assert_relative_eq!(wrap_angle(e.phi_1 - e.phi_2).abs(), PI, epsilon = 1e-12);

        let e = effective_probe(&p, &ProbeParams::new(1e-4, 1e-4, 0.0, PI / 4.0)).unwrap();
        assert!(!e.bae_phase_ok);
    }

    #[test]
    fn uncoupled_denominators() {
        let p = SystemParams { g_plus: 0.0, g_minus: 1e-300, ..SystemParams::default() };
        let d = denominator_delta(0.0, &p).unwrap();
        let (e1, e2) = etas(0.0, &p).unwrap();
        assert_eq!((d, e1, e2), (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn operating_point_delta_at_zero() {
        let p = SystemParams::default();
        let g2 = bogolyubov(&p).unwrap().cal_g.powi(2);
        // χ(−δ) + χ(δ) = 2 Re χ(δ) = γ/((γ/2)² + δ²) ≈ 1e-3.
        let mech_sum = 2.0 * chi_mech(0.1, &p).re;
        assert!((mech_sum - 1e-3).abs() < 1e-8);
        let direct = 1.0 + g2 * chi_cavity(0.1, &p) * mech_sum;
        assert!((denominator_delta(0.0, &p).unwrap() - direct).norm() < 1e-9);
    }

    proptest! {
        #[test]
        fn bogolyubov_invariants(gm in 1e-4f64..1.0, ratio in 0.0f64..0.999) {
            let p = SystemParams { g_minus: gm, g_plus: gm * ratio, ..SystemParams::default() };
            let b = bogolyubov(&p).unwrap();
            prop_assert!((b.u * b.u - b.v * b.v - 1.0).abs() < 1e-12 * b.u * b.u);
            let target = gm * gm - (gm * ratio).powi(2);
            prop_assert!((b.cal_g.powi(2) - target).abs() <= 1e-12 * target);
        }

        #[test]
        fn susceptibility_conjugation(w in -10.0f64..10.0) {
            let p = SystemParams::default();
            prop_assert_eq!(chi_cavity(-w, &p), chi_cavity(w, &p).conj());
            prop_assert_eq!(chi_mech(-w, &p), chi_mech(w, &p).conj());
        }

        #[test]
        fn equal_phases_are_bae(phi in -PI..PI, ratio in 0.0f64..0.95) {
            let p = SystemParams { g_plus: 0.048 * ratio, ..SystemParams::default() };
            let e = effective_probe(&p, &ProbeParams::new(1e-4, 1e-4, phi, phi)).unwrap();
            prop_assert!(e.bae_phase_ok);
        }

        #[test]
        fn coupling_even_in_phase(phi in -PI..PI) {
            let p = SystemParams::default();
            let a = effective_probe(&p, &ProbeParams::new(1e-4, 0.0, phi, 0.0)).unwrap();
            let b = effective_probe(&p, &ProbeParams::new(1e-4, 0.0, -phi, 0.0)).unwrap();
            prop_assert!((a.cal_g_p - b.cal_g_p).abs() <= 1e-15 * a.cal_g_p.max(1e-300));
        }

        #[test]
        fn delta_is_finite_on_real_axis(w in -2.0f64..2.0) {
            let d = denominator_delta(w, &SystemParams::default()).unwrap();
            prop_assert!(d.re.is_finite() && d.im.is_finite() && d.norm() > 0.0);
        }
    }
}
