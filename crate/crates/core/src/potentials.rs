//! Singular interaction potentials with an algebraic singularity at `r = -1`.
//!
//! All three families share the derivative
//! `Φ'(r) = ((1+r)^(k-m-1) - (1+r)^(-m-1)) / (m+1)` on `(-1, 0]`, so they are
//! evaluated through one closed form parameterized by `(m, k)`. For `r > 0`
//! the potential is continued as the quadratic `½Φ''(0)r²`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("distance r = {0} is at or below the hard-core limit -1")]
    Domain(f64),
    #[error("derivative order {0} is not supported (0..=3)")]
    UnsupportedOrder(u8),
    #[error("invalid potential parameters: {0}")]
    InvalidParameter(String),
}

/// The closed-form families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialKind {
    /// `Φ(r) = ((1+r)^(-m) + m r - 1) / (m(m+1))`, with `k = m+1`.
    InverseMonomial { m: f64 },
    /// `Φ(r) = ((1+r)^(-n) - 1)² / (2n(2n+1))`, with `m = 2n`, `k = n`.
    LennardJonesType { n: f64 },
    /// Two inverse powers with independent exponents `m != k`.
    TwoTerm { m: f64, k: f64 },
}

impl PotentialKind {
    pub fn exponents(&self) -> (f64, f64) {
        match *self {
            PotentialKind::InverseMonomial { m } => (m, m + 1.0),
            PotentialKind::LennardJonesType { n } => (2.0 * n, n),
            PotentialKind::TwoTerm { m, k } => (m, k),
        }
    }
}

/// A validated potential. Immutable once built.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PotentialKind", into = "PotentialKind")]
pub struct Potential {
    kind: PotentialKind,
    m: f64,
    k: f64,
}

impl TryFrom<PotentialKind> for Potential {
    type Error = PotentialError;
    fn try_from(kind: PotentialKind) -> Result<Self, Self::Error> {
        Potential::new(kind)
    }
}

impl From<Potential> for PotentialKind {
    fn from(p: Potential) -> Self {
        p.kind
    }
}

impl Potential {
    /// Builds a potential, rejecting parameters outside `m > 1, k > 1, m != k`.
    ///
    /// [`Potential::unchecked`] skips the checks so that [`Potential::validate`]
    /// can report on inadmissible members.
    pub fn new(kind: PotentialKind) -> Result<Self, PotentialError> {
        let p = Self::unchecked(kind);
        let (m, k) = (p.m, p.k);
        if !(m.is_finite() && k.is_finite()) {
            return Err(PotentialError::InvalidParameter(format!("non-finite exponents m={m}, k={k}")));
        }
        if m <= 1.0 {
            return Err(PotentialError::InvalidParameter(format!("singularity order m={m} must exceed 1")));
        }
        if k <= 1.0 {
            return Err(PotentialError::InvalidParameter(format!("correction exponent k={k} must exceed 1")));
        }
        if (m - k).abs() < 1e-12 {
            return Err(PotentialError::InvalidParameter(format!("m = k = {m} needs logarithmic corrections")));
        }
        Ok(p)
    }

    pub fn unchecked(kind: PotentialKind) -> Self {
        let (m, k) = kind.exponents();
        Potential { kind, m, k }
    }

    pub fn inverse_monomial(m: f64) -> Result<Self, PotentialError> {
        Self::new(PotentialKind::InverseMonomial { m })
    }

    pub fn lennard_jones(n: f64) -> Result<Self, PotentialError> {
        Self::new(PotentialKind::LennardJonesType { n })
    }

    pub fn two_term(m: f64, k: f64) -> Result<Self, PotentialError> {
        Self::new(PotentialKind::TwoTerm { m, k })
    }

    pub fn kind(&self) -> PotentialKind {
        self.kind
    }

    /// Singularity order.
    pub fn m(&self) -> f64 {
        self.m
    }

    /// Correction exponent.
    pub fn k(&self) -> f64 {
        self.k
    }

    /// `Φ''(0) = k/(m+1)`, the squared sound speed.
    pub fn curvature(&self) -> f64 {
        self.k / (self.m + 1.0)
    }

    /// Checked evaluation of `Φ` or one of its first three derivatives.
    pub fn eval(&self, r: f64, order: u8) -> Result<f64, PotentialError> {
        if order > 3 {
            return Err(PotentialError::UnsupportedOrder(order));
        }
        if !(r > -1.0) {
            return Err(PotentialError::Domain(r));
        }
        Ok(match order {
            0 => self.phi(r),
            1 => self.d1(r),
            2 => self.d2(r),
            _ => self.d3(r),
        })
    }

    #[inline]
    pub fn phi(&self, r: f64) -> f64 {
        let (m, k) = (self.m, self.k);
        if r > 0.0 {
            return 0.5 * self.curvature() * r * r;
        }
        let s = 1.0 + r;
        let lead = s.powf(-m) / (m * (m + 1.0));
        let corr = s.powf(k - m) / ((m - k) * (m + 1.0));
        // constant chosen so that Φ(0) = 0; for r near 0 use a cancellation-free form
        if r > -0.25 {
            // (s^-m - 1)/(m(m+1)) - (s^(k-m) - 1)/((m-k)(m+1))
            let a = (-m * r.ln_1p()).exp_m1() / (m * (m + 1.0));
            let b = ((k - m) * r.ln_1p()).exp_m1() / ((m - k) * (m + 1.0));
            return a - b;
        }
        lead - corr + k / (m * (m - k) * (m + 1.0))
    }

    #[inline]
    pub fn d1(&self, r: f64) -> f64 {
        if r > 0.0 {
            return self.curvature() * r;
        }
        let (m, k) = (self.m, self.k);
        let l = r.ln_1p();
        // s^(-m-1) (s^k - 1) / (m+1)
        (-(m + 1.0) * l).exp() * (k * l).exp_m1() / (m + 1.0)
    }

    #[inline]
    pub fn d2(&self, r: f64) -> f64 {
        if r > 0.0 {
            return self.curvature();
        }
        let (m, k) = (self.m, self.k);
        let s = 1.0 + r;
        ((m + 1.0) * s.powf(-m - 2.0) - (m + 1.0 - k) * s.powf(k - m - 2.0)) / (m + 1.0)
    }

    #[inline]
    pub fn d3(&self, r: f64) -> f64 {
        if r > 0.0 {
            return 0.0;
        }
        let (m, k) = (self.m, self.k);
        let s = 1.0 + r;
        ((m + 1.0 - k) * (m + 2.0 - k) * s.powf(k - m - 3.0) - (m + 1.0) * (m + 2.0) * s.powf(-m - 3.0))
            / (m + 1.0)
    }

    /// Checks the admissibility conditions on the standard validation grid.
    pub fn validate(&self) -> ValidationReport {
        let mut checks = Vec::new();
        let (m, k) = (self.m, self.k);
        checks.push(Check::new("m > 1", m > 1.0, m));
        checks.push(Check::new("k > 1", k > 1.0, k));
        checks.push(Check::new("m != k", (m - k).abs() > 1e-12, (m - k).abs()));

        let v0 = self.phi(0.0);
        let v1 = self.d1(0.0);
        let c = self.d2(0.0);
        checks.push(Check::new("phi(0) = 0", v0.abs() <= 1e-15, v0.abs()));
        checks.push(Check::new("phi'(0) = 0", v1.abs() <= 1e-15, v1.abs()));
        checks.push(Check::new("phi''(0) > 0", c > 0.0 && c.is_finite(), c));

        let grid = validation_grid();
        let min_curv = grid.iter().map(|&r| self.d2(r)).fold(f64::INFINITY, f64::min);
        checks.push(Check::new("phi'' > 0 on grid", min_curv > 0.0, min_curv));

        let s: f64 = 1e-4;
        let norm = s.powf(m + 2.0) * self.d2(s - 1.0);
        checks.push(Check::new(
            "(1+r)^(m+2) phi'' -> 1",
            (norm - 1.0).abs() <= 1e-3,
            (norm - 1.0).abs(),
        ));

        let constant = self.singularity_constant();
        checks.push(Check::new(
            "|(m+1)(1+r)^(m+1) phi' + 1| <= C (1+r)^k",
            constant.is_finite(),
            constant,
        ));

        let passed = checks.iter().all(|c| c.passed);
        ValidationReport { m, k, passed, checks }
    }

    /// Smallest `C` with `|(m+1)(1+r)^(m+1)Φ'(r) + 1| <= C(1+r)^k` on the
    /// singular part of the validation grid.
    ///
    /// Points with `(1+r)^k < 1e-6` are skipped: there the left side is at
    /// roundoff level and the quotient is noise.
    pub fn singularity_constant(&self) -> f64 {
        let (m, k) = (self.m, self.k);
        validation_grid()
            .into_iter()
            .filter(|&r| r <= 0.0 && (1.0 + r).powf(k) >= 1e-6)
            .map(|r| {
                let s = 1.0 + r;
                ((m + 1.0) * s.powf(m + 1.0) * self.d1(r) + 1.0).abs() / s.powf(k)
            })
            .fold(0.0, f64::max)
    }
}

/// 512 log-spaced points in `(-1+1e-8, 0]` followed by 128 uniform points in `(0, 2]`.
pub fn validation_grid() -> Vec<f64> {
    let mut g = Vec::with_capacity(640);
    let (lo, hi) = (1e-8f64.ln(), 0.0f64);
    for i in 0..512 {
        let t = (i + 1) as f64 / 512.0;
        g.push((lo + (hi - lo) * t).exp() - 1.0);
    }
    for i in 0..128 {
        g.push(2.0 * (i + 1) as f64 / 128.0);
    }
    g
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
}

impl Check {
    fn new(name: &str, passed: bool, measured: f64) -> Self {
        Check { name: name.to_string(), passed, measured }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub m: f64,
    pub k: f64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

#[cfg(test)]
mod tests {
    use super::*;

    // Direct transcriptions of the family formulas, independent of the shared closed form.
    fn inverse_monomial_phi(m: f64, r: f64) -> f64 {
        ((1.0 + r).powf(-m) + m * r - 1.0) / (m * (m + 1.0))
    }

    fn lj_phi(n: f64, r: f64) -> f64 {
        ((1.0 + r).powf(-n) - 1.0).powi(2) / (2.0 * n * (2.0 * n + 1.0))
    }

    fn fd2(f: impl Fn(f64) -> f64, r: f64, h: f64) -> f64 {
        (f(r + h) - 2.0 * f(r) + f(r - h)) / (h * h)
    }

    #[test]
    fn inverse_monomial_values_at_zero() {
        let p = Potential::inverse_monomial(2.0).unwrap();
        assert_eq!(p.eval(0.0, 0).unwrap(), 0.0);
        assert_eq!(p.eval(0.0, 1).unwrap(), 0.0);
        assert!((p.eval(0.0, 2).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(p.k(), 3.0);
    }

    #[test]
    fn lennard_jones_curvature() {
        let p = Potential::lennard_jones(2.0).unwrap();
        assert!((p.eval(0.0, 2).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!((p.m(), p.k()), (4.0, 2.0));
    }

    #[test]
    fn matches_family_formulas() {
        let im = Potential::inverse_monomial(2.5).unwrap();
        let lj = Potential::lennard_jones(3.0).unwrap();
        for &r in &[-0.99, -0.7, -0.3, -0.05, -1e-3, 0.0] {
            let a = inverse_monomial_phi(2.5, r);
            assert!((im.phi(r) - a).abs() <= 1e-12 * a.abs().max(1.0), "r={r}");
            let b = lj_phi(3.0, r);
            assert!((lj.phi(r) - b).abs() <= 1e-12 * b.abs().max(1.0), "r={r}");
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = Potential::two_term(3.0, 1.5).unwrap();
        for &r in &[-0.9f64, -0.5, -0.1, 0.5, 3.0] {
            let h = 1e-4 * (1.0 + r).min(1.0);
            let d1 = (p.phi(r + h) - p.phi(r - h)) / (2.0 * h);
            assert!((d1 - p.d1(r)).abs() < 1e-6 * p.d1(r).abs().max(1.0));
            let d2 = fd2(|x| p.phi(x), r, 1e-3 * (1.0 + r).min(1.0));
            assert!((d2 - p.d2(r)).abs() < 1e-4 * p.d2(r).abs().max(1.0), "r={r}");
            let d3 = (p.d2(r + h) - p.d2(r - h)) / (2.0 * h);
            assert!((d3 - p.d3(r)).abs() < 1e-5 * p.d3(r).abs().max(1.0));
        }
    }

    #[test]
    fn second_difference_error_is_quadratic() {
        let p = Potential::lennard_jones(2.0).unwrap();
        for &r in &[-0.9, -0.4, 0.0 - 1e-3, 1.0, 5.0] {
            let e = |h: f64| (fd2(|x| p.phi(x), r, h) - p.d2(r)).abs();
            let (e1, e2, e3) = (e(4e-3), e(2e-3), e(1e-3));
            if e1 > 1e-9 {
                assert!(e1 / e2 > 3.0 && e2 / e3 > 3.0, "r={r}: {e1} {e2} {e3}");
            }
        }
    }

    #[test]
    fn errors() {
        let p = Potential::inverse_monomial(2.0).unwrap();
        assert_eq!(p.eval(-1.0, 0), Err(PotentialError::Domain(-1.0)));
        assert_eq!(p.eval(0.1, 4), Err(PotentialError::UnsupportedOrder(4)));
        assert_eq!(p.eval(2.0, 3).unwrap(), 0.0);
        assert!(Potential::two_term(3.0, 3.0).is_err());
        assert!(Potential::inverse_monomial(0.5).is_err());
    }

    #[test]
    fn validation_reports() {
        let ok = Potential::inverse_monomial(2.0).unwrap().validate();
        assert!(ok.passed, "{ok:?}");
        assert_eq!(ok.k, 3.0);
        let bad = Potential::unchecked(PotentialKind::InverseMonomial { m: 0.5 }).validate();
        assert!(!bad.passed);
        assert!(!bad.checks[0].passed);
        let eq = Potential::unchecked(PotentialKind::TwoTerm { m: 3.0, k: 3.0 }).validate();
        assert!(!eq.passed);
    }

    #[test]
    fn grid_shape() {
        let g = validation_grid();
        assert_eq!(g.len(), 640);
        assert!(g[0] > -1.0 && g[0] < -1.0 + 2e-8);
        assert_eq!(g[511], 0.0);
        assert_eq!(*g.last().unwrap(), 2.0);
    }
}
