//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `DOCUMENTED` are known to fail for reasons explained
//! in the README; their FAIL line is printed but does not fail the target.
//! Any other FAIL exits nonzero.

use std::f64::consts::PI;
use std::fs;
use std::time::Instant;

use bae_core::bae::{bae_report, expected_subspace, second_order_cavity_factor, EXPOSED_MIN, ZERO_TOL};
use bae_core::config::RunConfig;
use bae_core::floquet::SidebandSystem;
use bae_core::model::{bogolyubov, chi_cavity, effective_linewidth, effective_probe, ProbeParams, SystemParams};
use bae_core::perturb::PerturbativeSolver;
use bae_core::run::{run, Command};
use bae_core::spectra::{
    background, basis_consistency, duan_quantity_with, perturbative_output_point, quadrature_point,
    quadrature_variance, sweep_duan, uniform_grid, unshifted_quadrature_variance, Contraction, DuanMethod, DuanOptions,
    Extractor, QuadratureSelector, TABLE1,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DOCUMENTED: [usize; 2] = [4, 5];

struct Outcome {
    pass: bool,
    detail: String,
}

fn single_thread<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(f)
}

fn operating_point() -> SystemParams {
    SystemParams::default()
}

fn criterion_1() -> Outcome {
    let p = operating_point();
    let probe = ProbeParams::off();
    let t = Instant::now();
    let adaptive =
        single_thread(|| duan_quantity_with(&p, &probe, DuanMethod::DirectQuadrature, &DuanOptions::default()));
    let dt_adaptive = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let opts = DuanOptions { adaptive: false, ..DuanOptions::default() };
    let sampled = single_thread(|| duan_quantity_with(&p, &probe, DuanMethod::DirectQuadrature, &opts));
    let dt_sampled = t.elapsed().as_secs_f64();
    match (adaptive, sampled) {
        (Ok(a), Ok(s)) => Outcome {
            pass: a.duan_sum < 1.0 && s.duan_sum < 1.0 && dt_adaptive < 10.0 && dt_sampled < 10.0,
            detail: format!(
                "duan_sum adaptive={:.8} ({dt_adaptive:.2}s), sampled 4001 pts={:.8} ({dt_sampled:.2}s), 1 thread",
                a.duan_sum, s.duan_sum
            ),
        },
        (a, s) => Outcome { pass: false, detail: format!("error: {:?} / {:?}", a.err(), s.err()) },
    }
}

fn criterion_2() -> Outcome {
    let p = operating_point();
    let ratios = RunConfig::default().sweep_ratios();
    let t = Instant::now();
    let rows = match sweep_duan(&p, &ProbeParams::off(), &ratios, DuanMethod::DirectQuadrature, &DuanOptions::default())
    {
        Ok(r) => r,
        Err(e) => return Outcome { pass: false, detail: format!("error: {e}") },
    };
    let dt = t.elapsed().as_secs_f64();
    let sums: Vec<f64> = rows.iter().map(|r| r.1.duan_sum).collect();
    let below: Vec<usize> = (0..sums.len()).filter(|&i| sums[i] < 1.0).collect();
    let contiguous = below.windows(2).all(|w| w[1] == w[0] + 1);
    let target = 5.0 / 6.0;
    let contains = below.iter().any(|&i| ratios[i] <= target) && below.iter().any(|&i| ratios[i] >= target);
    let local_minima = (1..sums.len() - 1).filter(|&i| sums[i] < sums[i - 1] && sums[i] < sums[i + 1]).count();
    let (imin, smin) = sums.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(i, s)| (i, *s)).unwrap();
    let pass = rows.len() == 25 && sums[0] > 1.0 && contiguous && contains && local_minima == 1 && dt < 120.0;
    Outcome {
        pass,
        detail: format!(
            "sum(0)={:.4}, below 1 on [{:.4}, {:.4}], min {:.4} at ratio {:.4}, {local_minima} local min, sum(0.95)={:.4}, {dt:.1}s",
            sums[0],
            below.first().map_or(f64::NAN, |&i| ratios[i]),
            below.last().map_or(f64::NAN, |&i| ratios[i]),
            smin,
            ratios[imin],
            sums[sums.len() - 1]
        ),
    }
}

fn duan_identity(p: &SystemParams) -> bae_core::Result<f64> {
    let shifted =
        quadrature_variance(p, QuadratureSelector::X_SIGMA)? + quadrature_variance(p, QuadratureSelector::Y_DELTA)?;
    let unshifted = unshifted_quadrature_variance(p, QuadratureSelector::X_SIGMA)?
        + unshifted_quadrature_variance(p, QuadratureSelector::Y_DELTA)?;
    Ok((shifted - unshifted).abs() / shifted)
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    let mut sets = vec![operating_point()];
    for _ in 0..10 {
        let kappa_e = rng.random_range(0.5..1.0);
        let n = rng.random_range(0.0..20.0);
        let g_minus = rng.random_range(0.02..0.06);
        sets.push(SystemParams {
            kappa_e,
            kappa_i: 1.0 - kappa_e,
            gamma: rng.random_range(1e-5..1e-4),
            delta: rng.random_range(0.05..0.3),
            g_minus,
            g_plus: rng.random_range(0.0..0.9) * g_minus,
            n1: n,
            n2: n,
            n_e: rng.random_range(0.0..0.5),
            n_i: rng.random_range(0.0..0.5),
        });
    }
    let mut worst: f64 = 0.0;
    for p in &sets {
        match duan_identity(p) {
            Ok(r) => worst = worst.max(r),
            Err(e) => return Outcome { pass: false, detail: format!("error at {p:?}: {e}") },
        }
    }
    Outcome { pass: worst < 1e-8, detail: format!("max relative gap {worst:.2e} over operating point + 10 draws") }
}

fn criterion_4() -> Outcome {
    // Probes off and pumps at 1e-10: mechanical leakage into the output is
    // near 1e-13, so the cavity only sees its two input ports.
    let max_dev = |p: &SystemParams, model: &dyn Fn(f64) -> f64| -> bae_core::Result<f64> {
        let solver = PerturbativeSolver::new(p, &ProbeParams::off())?;
        let c = Contraction::original(p)?;
        let mut worst: f64 = 0.0;
        for w in uniform_grid(2.0, 401)? {
            for theta in [0.0, 1.1] {
                let d = (perturbative_output_point(&solver, &c, theta, w)? - model(w)).abs();
                // NaN must not be swallowed by max.
                worst = if d.is_nan() { f64::NAN } else { worst.max(d) };
            }
        }
        Ok(worst)
    };
    let quiet = |p: SystemParams| SystemParams { g_minus: 1e-10, g_plus: 0.0, ..p };
    let p = quiet(operating_point());
    let n_c = p.n_e;
    let printed =
        |q: SystemParams| move |w: f64| (q.kappa_e * chi_cavity(w + q.delta, &q) - 1.0).norm_sqr() * (n_c + 0.5);
    let lossless = quiet(SystemParams { kappa_e: 1.0, kappa_i: 0.0, ..operating_point() });
    let r = (|| -> bae_core::Result<(f64, f64, f64)> {
        Ok((max_dev(&p, &printed(p))?, max_dev(&p, &|w| background(&p, w))?, max_dev(&lossless, &printed(lossless))?))
    })();
    match r {
        Ok((printed_dev, exact_dev, lossless_dev)) => Outcome {
            pass: printed_dev < 1e-12,
            detail: format!(
                "|kE chi_a - 1|^2 (n_c+1/2) off by {printed_dev:.2e} at kappa_I=0.1; exact two-port background off by {exact_dev:.2e}; printed form off by {lossless_dev:.2e} at kappa_I=0"
            ),
        },
        Err(e) => Outcome { pass: false, detail: format!("error: {e}") },
    }
}

fn criterion_5() -> Outcome {
    let p = operating_point();
    let g = match bogolyubov(&p) {
        Ok(b) => 1e-3 * b.cal_g,
        Err(e) => return Outcome { pass: false, detail: format!("error: {e}") },
    };
    let r = (|| -> bae_core::Result<(Vec<f64>, Vec<f64>, f64)> {
        let quiet = PerturbativeSolver::new(&p, &ProbeParams::off())?;
        let c = Contraction::original(&p)?;
        let gam = effective_linewidth(&p)?;
        let grid = uniform_grid(50.0 * gam, 4001)?;
        let (mut full, mut core) = (Vec::new(), Vec::new());
        let mut floor: f64 = 0.0;
        for row in TABLE1 {
            let ex = Extractor::new(&p, g, g, row)?;
            let (mut wf, mut wc): (f64, f64) = (0.0, 0.0);
            for &w in &grid {
                let direct = quadrature_point(row.selector, &quiet, &c, w)?;
                let err = (ex.extract(w)? - direct).abs();
                wf = wf.max(err / direct);
                if w.abs() <= 5.0 * gam {
                    wc = wc.max(err / direct);
                }
                floor = floor.max(err * ex.prefactor(w));
            }
            full.push(wf);
            core.push(wc);
        }
        Ok((full, core, floor))
    })();
    match r {
        Ok((full, core, floor)) => Outcome {
            pass: full.iter().all(|e| *e < 1e-9),
            detail: format!(
                "max rel err per row over +-50 Gamma_eff {:.1e}; within +-5 Gamma_eff {:.1e}; largest error in output units {floor:.1e} (double rounding of S_out ~ 0.5 is 5.6e-17)",
                Fmt(&full),
                Fmt(&core)
            ),
        },
        Err(e) => Outcome { pass: false, detail: format!("error: {e}") },
    }
}

struct Fmt<'a>(&'a [f64]);

impl std::fmt::LowerExp for Fmt<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let prec = f.precision().unwrap_or(2);
        let parts: Vec<String> = self.0.iter().map(|x| format!("{x:.prec$e}")).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

fn criterion_6() -> Outcome {
    let p = operating_point();
    let g = bogolyubov(&p).unwrap().cal_g;
    let mut protected_max: f64 = 0.0;
    let mut exposed_min = f64::INFINITY;
    let mut ok = true;
    for row in TABLE1 {
        let probe = row.probe(1e-3 * g, 1e-3 * g);
        let r = match bae_report(&p, &probe) {
            Ok(r) => r,
            Err(e) => return Outcome { pass: false, detail: format!("error: {e}") },
        };
        ok &= r.pass && r.subspace == expected_subspace(&probe);
        for c in r.checks.iter().filter(|c| c.order >= 2) {
            if c.name.starts_with("backaction_") {
                protected_max = protected_max.max(c.residual);
            } else if c.name.starts_with("exposed_") {
                exposed_min = exposed_min.min(c.residual);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0006);
    let mut factor_min = f64::INFINITY;
    let mut draws = 0;
    while draws < 10 {
        let probe = ProbeParams::new(1e-3 * g, 1e-3 * g, 0.0, rng.random_range(-PI..PI));
        if effective_probe(&p, &probe).unwrap().bae_phase_ok {
            continue;
        }
        draws += 1;
        let f = second_order_cavity_factor(&p, &probe, 0.0).unwrap().norm();
        factor_min = factor_min.min(f);
    }
    let pass = ok && protected_max < ZERO_TOL && exposed_min > EXPOSED_MIN && factor_min > 0.0;
    Outcome {
        pass,
        detail: format!(
            "protected max {protected_max:.2e}, exposed min {exposed_min:.2e} (orders 2-3, 4 phase sets); second-order factor min {factor_min:.2e} over 10 off-condition draws"
        ),
    }
}

fn criterion_7() -> Outcome {
    let p = operating_point();
    let b = bogolyubov(&p).unwrap();
    let first = |eps: f64, phi_q: f64, w: f64| -> bae_core::Result<f64> {
        let probe = ProbeParams::new(eps * b.cal_g, eps * b.cal_g, 0.0, phi_q);
        let odd = SidebandSystem::new(&p, &probe)?.solve_converged(w, 6)?.a().filtered(|l| l.shift.abs() == 1);
        let a1 = PerturbativeSolver::new(&p, &probe)?.first_order_cavity(w)?.to_original(&b);
        Ok(odd.sub(&a1).norm() / a1.norm())
    };
    let r = (|| -> bae_core::Result<(f64, f64)> {
        let mut slope_dev: f64 = 0.0;
        for phi_q in [0.0, 1.2] {
            for w in [0.0, 2e-3] {
                let e: Vec<f64> =
                    [1e-2, 1e-3, 1e-4].iter().map(|&x| first(x, phi_q, w)).collect::<bae_core::Result<_>>()?;
                let s1 = (e[0] / e[1]).log10();
                let s2 = (e[1] / e[2]).log10();
                slope_dev = slope_dev.max((s1 - 2.0).abs()).max((s2 - 2.0).abs());
            }
        }
        let quiet = PerturbativeSolver::new(&p, &ProbeParams::off())?;
        let sys = SidebandSystem::new(&p, &ProbeParams::off())?;
        let mut zeroth: f64 = 0.0;
        for w in [-p.delta, -0.02, 0.0, 1e-3, 0.031, p.delta] {
            let a = quiet.zeroth_order(w).a.to_original(&b);
            zeroth = zeroth.max(sys.solve_converged(w, 6)?.a().sub(&a).norm() / a.norm());
        }
        Ok((slope_dev, zeroth))
    })();
    match r {
        Ok((slope_dev, zeroth)) => Outcome {
            pass: slope_dev < 0.1 && zeroth < 1e-9,
            detail: format!("max |slope - 2| = {slope_dev:.3}; zeroth-order rel err {zeroth:.2e}"),
        },
        Err(e) => Outcome { pass: false, detail: format!("error: {e}") },
    }
}

fn criterion_8() -> Outcome {
    let p = operating_point();
    let cfg = RunConfig::default();
    let grid = match uniform_grid(0.3, 61) {
        Ok(g) => g,
        Err(e) => return Outcome { pass: false, detail: format!("error: {e}") },
    };
    match basis_consistency(&p, &cfg.probe, &grid, &[0.0, 1.0]) {
        Ok(r) => Outcome {
            pass: r[0].pass && !r[1].pass,
            detail: format!(
                "plain table rel diff {:.2e}; table with +1 rel diff {:.2e}; surviving form: {}",
                r[0].max_rel_diff,
                r[1].max_rel_diff,
                if r[0].pass && !r[1].pass { "plain" } else { "ambiguous" }
            ),
        },
        Err(e) => Outcome { pass: false, detail: format!("error: {e}") },
    }
}

fn criterion_9() -> Outcome {
    let cfg = RunConfig { sweep_points: 5, ..RunConfig::default() };
    let small = RunConfig { points: 21, ..cfg.clone() };
    let mut compared = 0;
    for cmd in Command::ALL {
        let c = if cmd == Command::OracleCompare { &small } else { &cfg };
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        let mut files = Vec::new();
        for d in &dirs {
            match run(cmd, c, d.path()) {
                Ok((_, f)) => files.push(f),
                Err(e) => return Outcome { pass: false, detail: format!("{}: {e}", cmd.name()) },
            }
        }
        for (a, b) in files[0].iter().zip(&files[1]) {
            if fs::read(a).unwrap() != fs::read(b).unwrap() {
                return Outcome { pass: false, detail: format!("{} differs between runs", a.display()) };
            }
            compared += 1;
        }
    }
    Outcome { pass: true, detail: format!("{compared} files byte-identical across two runs of all 6 commands") }
}

fn main() {
    let criteria: [(usize, fn() -> Outcome); 9] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
    ];
    let mut unexpected = Vec::new();
    for (n, f) in criteria {
        let o = f();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        let note = if !o.pass && DOCUMENTED.contains(&n) { " [documented, see README]" } else { "" };
        println!("criterion {n}: {tag}{note}: {}", o.detail);
        if !o.pass && !DOCUMENTED.contains(&n) {
            unexpected.push(n);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("undocumented failures: {unexpected:?}");
        std::process::exit(1);
    }
}
