//! Harmonic-balance solution of the time-periodic linearized Langevin
//! equations, used as an independent reference for the perturbative solver.
//!
//! In the frame where `a ~ e^{-iδt}` relative to the mechanics, the pumps are
//! static and the probes carry `e^{±iδt}`. Writing each field as a comb of
//! sidebands `ω + kδ`, `|k| ≤ K`, turns the equations at fixed ω into one
//! dense linear system of size `6(2K + 1)` in the unknowns
//! `a, a†, b₁, b₁†, b₂, b₂†` at every sideband. Couplings that would reach
//! beyond `±K` are dropped.
//!
//! All noise labels are in the original mechanical basis.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Result, SimError};
use crate::linfield::{Basis, Bath, LinearField, NoiseLabel};
use crate::model::{sin_cos_exact, ProbeParams, SystemParams};
use crate::spectra::{homodyne_spectrum, Contraction, SpectrumCurve};

const I: Complex64 = Complex64::new(0.0, 1.0);

pub const DEFAULT_K: usize = 6;
pub const MAX_K: usize = 40;
pub const COND_LIMIT: f64 = 1e12;
pub const CONVERGENCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    A,
    ADag,
    B1,
    B1Dag,
    B2,
    B2Dag,
}

impl Mode {
    pub const ALL: [Mode; 6] = [Mode::A, Mode::ADag, Mode::B1, Mode::B1Dag, Mode::B2, Mode::B2Dag];

    fn index(self) -> usize {
        self as usize
    }
}

/// All sideband fields at one ω.
#[derive(Debug, Clone)]
pub struct SidebandSolution {
    pub omega: f64,
    pub k: usize,
    /// ‖M‖₁ ‖M⁻¹‖₁ of the system matrix.
    pub condition: f64,
    fields: Vec<LinearField>,
}

impl SidebandSolution {
    /// Field of `mode` at `ω + shift·δ`, expressed relative to ω.
    pub fn field(&self, shift: i32, mode: Mode) -> &LinearField {
        &self.fields[row(self.k, shift, mode)]
    }

    pub fn a(&self) -> &LinearField {
        self.field(0, Mode::A)
    }
}

fn row(k: usize, shift: i32, mode: Mode) -> usize {
    let s = shift + k as i32;
    assert!(s >= 0 && s <= 2 * k as i32, "sideband {shift} outside ±{k}");
    s as usize * 6 + mode.index()
}

fn one_norm(m: &DMatrix<Complex64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct SidebandSystem {
    params: SystemParams,
    probe: ProbeParams,
}

impl SidebandSystem {
    pub fn new(params: &SystemParams, probe: &ProbeParams) -> Result<Self> {
        params.validate()?;
        probe.validate()?;
        Ok(Self { params: *params, probe: *probe })
    }

    fn matrix(&self, omega: f64, k: usize) -> DMatrix<Complex64> {
        let p = &self.params;
        let pr = &self.probe;
        let d = p.delta;
        let n = 6 * (2 * k + 1);
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        let (gm, gpl) = (Complex64::from(p.g_minus), Complex64::from(p.g_plus));
        let tone = |g: f64, phi: f64| {
            let (s, c) = sin_cos_exact(phi);
            Complex64::new(g * c, g * s)
        };
        let gp_p = tone(pr.g_p, pr.phi_p);
        let gq_p = tone(pr.g_q, pr.phi_q);
        let (gp_m, gq_m) = (gp_p.conj(), gq_p.conj());
        let ki = k as i32;

        // Adds c · (mode at shift s) to row r, skipping sidebands outside the truncation.
        let mut put = |r: usize, s: i32, mode: Mode, c: Complex64| {
            if s.abs() <= ki {
                m[(r, row(k, s, mode))] += c;
            }
        };

        for s in -ki..=ki {
            let nu = omega + s as f64 * d;
            let half_k = p.kappa() / 2.0;
            let half_g = p.gamma / 2.0;

            let r = row(k, s, Mode::A);
            put(r, s, Mode::A, Complex64::new(half_k, -(nu + d)));
            for (b, bd) in [(Mode::B1, Mode::B1Dag), (Mode::B2, Mode::B2Dag)] {
                put(r, s, b, I * gm);
                put(r, s, bd, I * gpl);
                put(r, s + 1, b, I * gp_m);
                put(r, s + 1, bd, I * gp_p);
                put(r, s - 1, b, I * gq_m);
                put(r, s - 1, bd, I * gq_p);
            }

            let r = row(k, s, Mode::ADag);
            put(r, s, Mode::ADag, Complex64::new(half_k, -(nu - d)));
            for (b, bd) in [(Mode::B1, Mode::B1Dag), (Mode::B2, Mode::B2Dag)] {
                put(r, s, bd, -I * gm.conj());
                put(r, s, b, -I * gpl.conj());
                put(r, s - 1, bd, -I * gp_m.conj());
                put(r, s - 1, b, -I * gp_p.conj());
                put(r, s + 1, bd, -I * gq_m.conj());
                put(r, s + 1, b, -I * gq_p.conj());
            }

            // b₁ is detuned by −δ and b₂ by +δ; their conjugates the other way.
            for (b, bd, det) in [(Mode::B1, Mode::B1Dag, -d), (Mode::B2, Mode::B2Dag, d)] {
                let r = row(k, s, b);
                put(r, s, b, Complex64::new(half_g, -(nu + det)));
                put(r, s, Mode::A, I * gm.conj());
                put(r, s, Mode::ADag, I * gpl);
                put(r, s - 1, Mode::A, I * gp_m.conj());
                put(r, s + 1, Mode::ADag, I * gp_p);
                put(r, s + 1, Mode::A, I * gq_m.conj());
                put(r, s - 1, Mode::ADag, I * gq_p);

                let r = row(k, s, bd);
                put(r, s, bd, Complex64::new(half_g, -(nu - det)));
                put(r, s, Mode::ADag, -I * gm);
                put(r, s, Mode::A, -I * gpl.conj());
                put(r, s + 1, Mode::ADag, -I * gp_m);
                put(r, s - 1, Mode::A, -I * gp_p.conj());
                put(r, s - 1, Mode::ADag, -I * gq_m);
                put(r, s + 1, Mode::A, -I * gq_p.conj());
            }
        }
        m
    }

    /// Input-noise content of each equation row.
    fn sources(&self, k: usize) -> Vec<Vec<(NoiseLabel, f64)>> {
        let p = &self.params;
        let mut out = vec![Vec::new(); 6 * (2 * k + 1)];
        let ki = k as i32;
        for s in -ki..=ki {
            for dag in [false, true] {
                let (a_mode, b1_mode, b2_mode) =
                    if dag { (Mode::ADag, Mode::B1Dag, Mode::B2Dag) } else { (Mode::A, Mode::B1, Mode::B2) };
                out[row(k, s, a_mode)] = vec![
                    (NoiseLabel::new(Bath::CavityExternal, dag, s), p.kappa_e.sqrt()),
                    (NoiseLabel::new(Bath::CavityInternal, dag, s), p.kappa_i.sqrt()),
                ];
                out[row(k, s, b1_mode)] = vec![(NoiseLabel::new(Bath::Mech1, dag, s), p.gamma.sqrt())];
                out[row(k, s, b2_mode)] = vec![(NoiseLabel::new(Bath::Mech2, dag, s), p.gamma.sqrt())];
            }
        }
        out
    }

    /// Solves the truncated system at ω with `k` sidebands on each side.
    pub fn solve(&self, omega: f64, k: usize) -> Result<SidebandSolution> {
        let m = self.matrix(omega, k);
        let norm = one_norm(&m);
        let inv = m.try_inverse().ok_or(SimError::IllConditioned { omega, cond: f64::INFINITY })?;
        let condition = norm * one_norm(&inv);
        if !(condition <= COND_LIMIT) {
            return Err(SimError::IllConditioned { omega, cond: condition });
        }
        let src = self.sources(k);
        let n = src.len();
        let fields = (0..n)
            .map(|out| {
                let mut f = LinearField::zero(Basis::Original);
                for (r, terms) in src.iter().enumerate() {
                    let g = inv[(out, r)];
                    for (lbl, w) in terms {
                        f.add_term(*lbl, g * *w);
                    }
                }
                f
            })
            .collect();
        Ok(SidebandSolution { omega, k, condition, fields })
    }

    /// Solves at `k` and raises the truncation in steps of two until the
    /// central cavity field changes by less than [`CONVERGENCE_TOL`].
    pub fn solve_converged(&self, omega: f64, k: usize) -> Result<SidebandSolution> {
        let mut k = k.max(2);
        let mut cur = self.solve(omega, k)?;
        loop {
            if k + 2 > MAX_K {
                return Err(SimError::NotConverged(format!(
                    "sideband truncation at omega = {omega} not converged by K = {k}"
                )));
            }
            let next = self.solve(omega, k + 2)?;
            let diff = next.a().sub(cur.a()).norm();
            let scale = next.a().norm().max(f64::MIN_POSITIVE);
            if diff <= CONVERGENCE_TOL * scale {
                return Ok(cur);
            }
            k += 2;
            cur = next;
        }
    }

    /// Output field `√κ_E a − a_E` at ω.
    pub fn output_field(&self, omega: f64, k: usize) -> Result<LinearField> {
        let sol = self.solve_converged(omega, k)?;
        let mut out = sol.a().scale_re(self.params.kappa_e.sqrt());
        out.add_term(NoiseLabel::new(Bath::CavityExternal, false, 0), Complex64::from(-1.0));
        Ok(out)
    }

    /// Symmetrized homodyne spectrum of the converged oracle field at
    /// physical angle `theta`.
    pub fn output_point(&self, theta: f64, omega: f64, k: usize) -> Result<f64> {
        let cavity = |nu: f64| Ok(self.solve_converged(nu, k)?.a().clone());
        let c = Contraction::original(&self.params)?;
        homodyne_spectrum(&cavity, &c, self.params.kappa_e, theta, omega)
    }
}

/// Oracle homodyne spectrum on a grid.
pub fn oracle_output_spectrum(
    params: &SystemParams,
    probe: &ProbeParams,
    theta: f64,
    grid: &[f64],
    k: usize,
) -> Result<SpectrumCurve> {
    let sys = SidebandSystem::new(params, probe)?;
    let values = grid.par_iter().map(|&w| sys.output_point(theta, w, k)).collect::<Result<Vec<_>>>()?;
    SpectrumCurve::new(grid.to_vec(), values, crate::config::params_fingerprint(params, probe))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::bogolyubov;
    use crate::model::chi_cavity;
    use crate::perturb::PerturbativeSolver;

    #[test]
    fn decoupled_cavity() {
        let p = SystemParams { g_minus: 1e-300, g_plus: 0.0, ..SystemParams::default() };
        let sys = SidebandSystem::new(&p, &ProbeParams::off()).unwrap();
        let w = 0.02;
        let sol = sys.solve(w, 2).unwrap();
        let ca = chi_cavity(w + p.delta, &p);
        let c = sol.a().coeff(&NoiseLabel::new(Bath::CavityExternal, false, 0));
        assert!((c - ca * p.kappa_e.sqrt()).norm() < 1e-15);
    }

    #[test]
    fn probes_off_matches_zeroth_order() {
        let p = SystemParams::default();
        let sys = SidebandSystem::new(&p, &ProbeParams::off()).unwrap();
        let pert = PerturbativeSolver::new(&p, &ProbeParams::off()).unwrap();
        let b = bogolyubov(&p).unwrap();
        for &w in &[p.delta, -p.delta, 0.0, 0.031] {
            let sol = sys.solve(w, 2).unwrap();
            let z = pert.zeroth_order(w);
            let a = z.a.to_original(&b);
            assert!(sol.a().sub(&a).norm() <= 1e-9 * a.norm(), "w={w}");
            // b₁ = u β₁ − v β₂†
            let b1 = z.beta1.scale_re(b.u).sub(&pert.zeroth_order(-w).beta2.dagger().scale_re(b.v));
            let b1 = b1.to_original(&b);
            assert!(sol.field(0, Mode::B1).sub(&b1).norm() <= 1e-9 * b1.norm(), "w={w}");
        }
    }

    #[test]
    fn truncation_converges() {
        let p = SystemParams::default();
        let g = bogolyubov(&p).unwrap().cal_g;
        let probe = ProbeParams::new(1e-3 * g, 1e-3 * g, 0.0, 0.0);
        let sys = SidebandSystem::new(&p, &probe).unwrap();
        let a4 = sys.solve(0.001, 4).unwrap();
        let a6 = sys.solve(0.001, 6).unwrap();
        assert!(a4.a().sub(a6.a()).norm() <= 1e-10 * a6.a().norm());
        assert!(a6.condition < COND_LIMIT);
    }
}
