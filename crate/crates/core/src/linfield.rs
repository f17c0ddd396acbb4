//! Operators as complex linear combinations of frequency-shifted input noise.
//!
//! A [`LinearField`] holds the coefficients of one operator evaluated at a
//! fixed frequency ω: a term `c · ξ(ω + s·δ)` is stored as label `ξ` with
//! integer shift `s`. Contracting two fields against a [`CorrelatorTable`]
//! gives the symmetrized spectral density with the convention
//! `⟨ξ_k(ω) ξ_l(ω')⟩ = C_kl · 2π δ(ω + ω')`.

use num_complex::Complex64;
use std::collections::BTreeMap;

use crate::error::{Result, SimError};
use crate::model::{BogolyubovCoeffs, SystemParams};

pub const DEFAULT_MAX_SHIFT: i32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bath {
    CavityExternal,
    CavityInternal,
    /// `b₁ⁱⁿ` in the original basis, `β₁ⁱⁿ` in the Bogolyubov basis.
    Mech1,
    Mech2,
}

impl Bath {
    pub const ALL: [Bath; 4] = [Bath::CavityExternal, Bath::CavityInternal, Bath::Mech1, Bath::Mech2];

    fn index(self) -> usize {
        self as usize
    }
}

/// Which set of mechanical input operators the `Mech*` labels refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Original,
    Bogolyubov,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NoiseLabel {
    pub bath: Bath,
    pub dagger: bool,
    pub shift: i32,
}

impl NoiseLabel {
    pub fn new(bath: Bath, dagger: bool, shift: i32) -> Self {
        Self { bath, dagger, shift }
    }

    fn slot(self) -> usize {
        2 * self.bath.index() + usize::from(self.dagger)
    }

    fn flipped(self) -> Self {
        Self { bath: self.bath, dagger: !self.dagger, shift: -self.shift }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearField {
    basis: Basis,
    terms: BTreeMap<NoiseLabel, Complex64>,
}

impl LinearField {
    pub fn zero(basis: Basis) -> Self {
        Self { basis, terms: BTreeMap::new() }
    }

    pub fn single(basis: Basis, label: NoiseLabel, coeff: Complex64) -> Self {
        let mut f = Self::zero(basis);
        f.add_term(label, coeff);
        f
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn add_term(&mut self, label: NoiseLabel, coeff: Complex64) {
        if coeff == Complex64::new(0.0, 0.0) {
            return;
        }
        *self.terms.entry(label).or_default() += coeff;
    }

    pub fn coeff(&self, label: &NoiseLabel) -> Complex64 {
        self.terms.get(label).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&NoiseLabel, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { basis: self.basis, terms: self.terms.iter().map(|(k, v)| (*k, v * c)).collect() }
    }

    pub fn scale_re(&self, c: f64) -> Self {
        self.scale(Complex64::new(c, 0.0))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_assign_scaled(other, Complex64::new(1.0, 0.0));
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_assign_scaled(other, Complex64::new(-1.0, 0.0));
        out
    }

    pub fn add_assign_scaled(&mut self, other: &Self, c: Complex64) {
        assert_eq!(self.basis, other.basis, "cannot combine fields in different noise bases");
        for (k, v) in &other.terms {
            self.add_term(*k, v * c);
        }
    }

    /// Re-expresses a field evaluated at `ω + k·δ` as a function of ω.
    pub fn rebased(&self, k: i32) -> Self {
        Self {
            basis: self.basis,
            terms: self.terms.iter().map(|(l, v)| (NoiseLabel { shift: l.shift + k, ..*l }, *v)).collect(),
        }
    }

    /// Hermitian conjugate. `self` must be the field evaluated at −ω; the
    /// result is `F†` at ω, mapping `c·ξ(−ω + sδ)` to `c*·ξ†(ω − sδ)`.
    pub fn dagger(&self) -> Self {
        Self { basis: self.basis, terms: self.terms.iter().map(|(l, v)| (l.flipped(), v.conj())).collect() }
    }

    /// Terms whose label satisfies `keep`.
    pub fn filtered(&self, keep: impl Fn(&NoiseLabel) -> bool) -> Self {
        Self { basis: self.basis, terms: self.terms.iter().filter(|(l, _)| keep(l)).map(|(l, v)| (*l, *v)).collect() }
    }

    pub fn max_abs_shift(&self) -> i32 {
        self.terms.keys().map(|l| l.shift.abs()).max().unwrap_or(0)
    }

    pub fn check_shifts(&self, max: i32) -> Result<()> {
        match self.terms.keys().map(|l| l.shift).find(|s| s.abs() > max) {
            Some(shift) => Err(SimError::SidebandOverflow { shift, max }),
            None => Ok(()),
        }
    }

    /// Euclidean norm of the coefficient vector.
    pub fn norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.terms.values().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Rewrites Bogolyubov-basis mechanical inputs in terms of the original
    /// ones: β₁ⁱⁿ = u b₁ⁱⁿ + v b₂ⁱⁿ†, β₂ⁱⁿ = u b₂ⁱⁿ + v b₁ⁱⁿ†.
    pub fn to_original(&self, b: &BogolyubovCoeffs) -> Self {
        if self.basis == Basis::Original {
            return self.clone();
        }
        let mut out = Self::zero(Basis::Original);
        for (l, c) in &self.terms {
            match l.bath {
                Bath::CavityExternal | Bath::CavityInternal => out.add_term(*l, *c),
                Bath::Mech1 | Bath::Mech2 => {
                    let partner = if l.bath == Bath::Mech1 { Bath::Mech2 } else { Bath::Mech1 };
                    out.add_term(*l, c * b.u);
                    out.add_term(NoiseLabel::new(partner, !l.dagger, l.shift), c * b.v);
                }
            }
        }
        out
    }
}

/// Second moments `⟨ξ_k ξ_l⟩` of the shift-free input operators.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatorTable {
    basis: Basis,
    c: [[Complex64; 8]; 8],
}

fn slot(bath: Bath, dagger: bool) -> usize {
    NoiseLabel::new(bath, dagger, 0).slot()
}

impl CorrelatorTable {
    /// Independent thermal baths: `⟨ξ ξ†⟩ = n + 1`, `⟨ξ† ξ⟩ = n`.
    pub fn original(params: &SystemParams) -> Self {
        let mut c = [[Complex64::default(); 8]; 8];
        for (bath, n) in [
            (Bath::CavityExternal, params.n_e),
            (Bath::CavityInternal, params.n_i),
            (Bath::Mech1, params.n1),
            (Bath::Mech2, params.n2),
        ] {
            c[slot(bath, false)][slot(bath, true)] = Complex64::new(n + 1.0, 0.0);
            c[slot(bath, true)][slot(bath, false)] = Complex64::new(n, 0.0);
        }
        Self { basis: Basis::Original, c }
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn get(&self, k: (Bath, bool), l: (Bath, bool)) -> Complex64 {
        self.c[slot(k.0, k.1)][slot(l.0, l.1)]
    }

    fn symmetrized(&self, a: usize, b: usize) -> Complex64 {
        0.5 * (self.c[a][b] + self.c[b][a])
    }

    /// Largest violation of `C_kl = conj(C_{l̄ k̄})`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..8 {
            for l in 0..8 {
                let kb = k ^ 1;
                let lb = l ^ 1;
                worst = worst.max((self.c[k][l] - self.c[lb][kb].conj()).norm());
            }
        }
        worst
    }
}

/// Mechanical bath table in the Bogolyubov basis (requires n₁ = n₂).
///
/// `⟨β β†⟩ = (n+1)u² + n v²`, `⟨β† β⟩ = (n+1)v² + n u²`,
/// `⟨β₁ β₂⟩ = ⟨β₁† β₂†⟩ = (2n+1) u v`.
pub fn bogolyubov_bath_correlators(params: &SystemParams) -> Result<CorrelatorTable> {
    bogolyubov_table_with_offset(params, 0.0)
}

/// Same table with an additive offset on `⟨β β†⟩`; offset 1 reproduces the
/// alternative form with a trailing `+1`, kept so the basis-change check can
/// report which of the two is consistent with the original baths.
pub fn bogolyubov_table_with_offset(params: &SystemParams, offset: f64) -> Result<CorrelatorTable> {
    if params.n1 != params.n2 {
        return Err(SimError::UnequalOccupations { n1: params.n1, n2: params.n2 });
    }
    let b = crate::model::bogolyubov(params)?;
    let n = params.n1;
    let (u2, v2, uv) = (b.u * b.u, b.v * b.v, b.u * b.v);
    let mut t = CorrelatorTable::original(params);
    t.basis = Basis::Bogolyubov;
    for m in [Bath::Mech1, Bath::Mech2] {
        t.c[slot(m, false)][slot(m, true)] = Complex64::new((n + 1.0) * u2 + n * v2 + offset, 0.0);
        t.c[slot(m, true)][slot(m, false)] = Complex64::new((n + 1.0) * v2 + n * u2, 0.0);
    }
    let cross = Complex64::new((2.0 * n + 1.0) * uv, 0.0);
    for d in [false, true] {
        t.c[slot(Bath::Mech1, d)][slot(Bath::Mech2, d)] = cross;
        t.c[slot(Bath::Mech2, d)][slot(Bath::Mech1, d)] = cross;
    }
    Ok(t)
}

/// Symmetrized cross density `½⟨{F(ω), G(−ω)}⟩` per 2πδ(ω+ω'), pairing only
/// terms whose shifts cancel.
pub fn cross_spectrum(f: &LinearField, g_neg: &LinearField, table: &CorrelatorTable) -> Complex64 {
    assert_eq!(f.basis, table.basis, "field and correlator table use different bases");
    assert_eq!(g_neg.basis, table.basis, "field and correlator table use different bases");
    let mut acc = Complex64::default();
    for (lf, cf) in &f.terms {
        for (lg, cg) in &g_neg.terms {
            if lf.shift + lg.shift != 0 {
                continue;
            }
            let s = table.symmetrized(lf.slot(), lg.slot());
            if s != Complex64::default() {
                acc += cf * cg * s;
            }
        }
    }
    acc
}

/// Symmetrized auto-spectrum `½⟨{F(ω), F(−ω)}⟩` from F at ω and at −ω.
pub fn symmetrized_spectrum(f: &LinearField, f_neg: &LinearField, table: &CorrelatorTable) -> Result<f64> {
    let s = cross_spectrum(f, f_neg, table);
    if s.im.abs() > 1e-9 * s.re.abs().max(1e-300) && s.im.abs() > 1e-300 {
        return Err(SimError::NonHermitianResult { re: s.re, im: s.im });
    }
    Ok(s.re)
}
