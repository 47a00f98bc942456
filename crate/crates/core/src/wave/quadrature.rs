//! Quadrature for even functions sampled on a uniform half grid.
//!
//! Each cell `[c h, (c+1) h]` carries the cubic through the four nodes
//! `c-1 ..= c+2`; nodes at negative index are mirrored and nodes past the
//! last one are zero. Tent and box kernels are linear on every cell, so
//! their integrals against the interpolant are exact.

/// `∫₀¹ ℓ_k(t) dt` for the cardinal cubics on nodes `-1, 0, 1, 2`.
pub(crate) const CELL_I: [f64; 4] = [-1.0 / 24.0, 13.0 / 24.0, 13.0 / 24.0, -1.0 / 24.0];
/// `∫₀¹ t ℓ_k(t) dt`.
pub(crate) const CELL_J: [f64; 4] = [-7.0 / 360.0, 66.0 / 360.0, 129.0 / 360.0, -8.0 / 360.0];

/// An even function known at `x_i = i h`, `i = 0..=n`, and zero beyond `x_n`.
#[derive(Debug, Clone)]
pub struct EvenField {
    h: f64,
    n: isize,
    vals: Vec<f64>,
    /// per cell `c` from `c_lo`: `∫ f` and `∫ (y - x_c) f`
    a: Vec<f64>,
    t: Vec<f64>,
    c_lo: isize,
}

fn snap(s: f64) -> f64 {
    let r = s.round();
    if (s - r).abs() < 1e-9 {
        r
    } else {
        s
    }
}

/// Coefficients of the cubic through `(−1, f₀), (0, f₁), (1, f₂), (2, f₃)`.
fn cubic(f: [f64; 4]) -> [f64; 4] {
    let [fm, f0, f1, f2] = f;
    [
        f0,
        -fm / 3.0 - 0.5 * f0 + f1 - f2 / 6.0,
        0.5 * fm - f0 + 0.5 * f1,
        -fm / 6.0 + 0.5 * f0 - 0.5 * f1 + f2 / 6.0,
    ]
}

impl EvenField {
    pub fn new(h: f64, vals: Vec<f64>) -> Self {
        assert!(!vals.is_empty() && h > 0.0);
        let n = vals.len() as isize - 1;
        let c_lo = -n - 2;
        let c_hi = n + 1;
        let mut f = EvenField { h, n, vals, a: Vec::new(), t: Vec::new(), c_lo };
        let len = (c_hi - c_lo + 1) as usize;
        let mut a = Vec::with_capacity(len);
        let mut t = Vec::with_capacity(len);
        for c in c_lo..=c_hi {
            let s = f.stencil(c);
            let (mut ai, mut ti) = (0.0, 0.0);
            for k in 0..4 {
                ai += CELL_I[k] * s[k];
                ti += CELL_J[k] * s[k];
            }
            a.push(h * ai);
            t.push(h * h * ti);
        }
        f.a = a;
        f.t = t;
        f
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn values(&self) -> &[f64] {
        &self.vals
    }

    #[inline]
    pub fn node(&self, j: isize) -> f64 {
        let j = j.abs();
        if j <= self.n {
            self.vals[j as usize]
        } else {
            0.0
        }
    }

    #[inline]
    fn stencil(&self, c: isize) -> [f64; 4] {
        [self.node(c - 1), self.node(c), self.node(c + 1), self.node(c + 2)]
    }

    #[inline]
    fn full(&self, c: isize) -> (f64, f64) {
        let k = c - self.c_lo;
        if k < 0 || k as usize >= self.a.len() {
            (0.0, 0.0)
        } else {
            (self.a[k as usize], self.t[k as usize])
        }
    }

    /// `(∫ f, ∫ (y − x_c) f)` over the part `[t0, t1] ⊂ [0, 1]` of cell `c`.
    fn partial(&self, c: isize, t0: f64, t1: f64) -> (f64, f64) {
        if c < self.c_lo || c > self.n + 1 || t1 <= t0 {
            return (0.0, 0.0);
        }
        let p = cubic(self.stencil(c));
        let (mut i0, mut i1) = (0.0, 0.0);
        let (mut a0, mut a1) = (t0, t1);
        for (k, ck) in p.iter().enumerate() {
            // a0 = t0^(k+1), a1 = t1^(k+1)
            let kk = k as f64;
            i0 += ck * (a1 - a0) / (kk + 1.0);
            i1 += ck * (a1 * t1 - a0 * t0) / (kk + 2.0);
            a0 *= t0;
            a1 *= t1;
        }
        (self.h * i0, self.h * self.h * i1)
    }

    /// `(∫_u^v f, ∫_u^v (y − pivot) f)`.
    pub fn moments(&self, u: f64, v: f64, pivot: f64) -> (f64, f64) {
        if v <= u {
            return (0.0, 0.0);
        }
        let h = self.h;
        let su = snap(u / h);
        let sv = snap(v / h);
        let cu = su.floor() as isize;
        let cv = sv.floor() as isize;
        let tu = su - cu as f64;
        let tv = sv - cv as f64;
        let mut m0 = 0.0;
        let mut m1 = 0.0;
        let mut add = |c: isize, (a, t): (f64, f64)| {
            m0 += a;
            m1 += (c as f64 * h - pivot) * a + t;
        };
        if cu == cv {
            add(cu, self.partial(cu, tu, tv));
            return (m0, m1);
        }
        add(cu, if tu == 0.0 { self.full(cu) } else { self.partial(cu, tu, 1.0) });
        let lo = (cu + 1).max(self.c_lo);
        let hi = (cv - 1).min(self.n + 1);
        for c in lo..=hi {
            add(c, self.full(c));
        }
        if tv > 0.0 {
            add(cv, self.partial(cv, 0.0, tv));
        }
        (m0, m1)
    }

    /// Interpolated value at `x`.
    pub fn value(&self, x: f64) -> f64 {
        let s = snap(x / self.h);
        let c = s.floor() as isize;
        let t = s - c as f64;
        let p = cubic(self.stencil(c));
        ((p[3] * t + p[2]) * t + p[1]) * t + p[0]
    }

    /// `∫ max(w − |x − y|, 0) f(y) dy`.
    pub fn tent(&self, x: f64, w: f64) -> f64 {
        let (l0, l1) = self.moments(x - w, x, x);
        let (r0, r1) = self.moments(x, x + w, x);
        w * (l0 + r0) + l1 - r1
    }

    /// `d/dx` of [`EvenField::tent`].
    pub fn tent_slope(&self, x: f64, w: f64) -> f64 {
        self.moments(x, x + w, x).0 - self.moments(x - w, x, x).0
    }

    /// `∫_{x−w}^{x+w} f`.
    pub fn boxed(&self, x: f64, w: f64) -> f64 {
        self.moments(x - w, x + w, x).0
    }

    /// `∫_ℝ f`.
    pub fn integral(&self) -> f64 {
        self.a.iter().sum()
    }

    /// Tent convolution at node `i` with half-width `w = nw·h`; full cells only.
    pub fn tent_node(&self, i: usize, nw: usize) -> f64 {
        let (i, nw) = (i as isize, nw as isize);
        let w = nw as f64 * self.h;
        let mut acc = 0.0;
        for c in (i - nw)..i {
            let (a, t) = self.full(c);
            acc += (w + (c - i) as f64 * self.h) * a + t;
        }
        for c in i..(i + nw) {
            let (a, t) = self.full(c);
            acc += (w - (c - i) as f64 * self.h) * a - t;
        }
        acc
    }

    /// Box integral at node `i` with half-width `nw·h`.
    pub fn box_node(&self, i: usize, nw: usize) -> f64 {
        let (i, nw) = (i as isize, nw as isize);
        ((i - nw)..(i + nw)).map(|c| self.full(c).0).sum()
    }
}

/// Dense weights `w[i][j]` with `(tent ∗ f)(x_i) = Σ_j w[i][j] f_j` for
/// `i, j < na`, where the kernel is `max(nw·h − |x|, 0)`. Contributions of
/// nodes `j ≥ na` are dropped.
pub fn tent_weights(h: f64, nw: usize, na: usize, n: usize) -> Vec<f64> {
    let mut w = vec![0.0; na * na];
    let (nw, nn) = (nw as isize, n as isize);
    let width = nw as f64 * h;
    crate::parallel::fill_rows(&mut w, na, |i, row| {
        let i = i as isize;
        for c in (i - nw)..(i + nw) {
            let k0 = width - ((i - c) as f64 * h).abs();
            let k1 = width - ((i - c - 1) as f64 * h).abs();
            for k in 0..4 {
                let j = (c - 1 + k as isize).abs();
                if j < na as isize && j <= nn {
                    row[j as usize] += h * (k0 * CELL_I[k] + (k1 - k0) * CELL_J[k]);
                }
            }
        }
    });
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss_field(h: f64, n: usize) -> EvenField {
        EvenField::new(h, (0..=n).map(|i| (-(i as f64 * h).powi(2)).exp()).collect())
    }

    #[test]
    fn integral_of_gaussian() {
        let f = gauss_field(0.05, 200);
        assert!((f.integral() - std::f64::consts::PI.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn cubic_reproduced_exactly() {
        // even quartic is not cubic, but x² is even and locally polynomial
        let h = 0.1;
        let f = EvenField::new(h, (0..=100).map(|i| (i as f64 * h).powi(2)).collect());
        let (m0, m1) = f.moments(0.23, 1.77, 0.5);
        let e0 = (1.77f64.powi(3) - 0.23f64.powi(3)) / 3.0;
        let e1 = (1.77f64.powi(4) - 0.23f64.powi(4)) / 4.0 - 0.5 * e0;
        assert!((m0 - e0).abs() < 1e-12);
        assert!((m1 - e1).abs() < 1e-12);
        assert!((f.value(0.37) - 0.37 * 0.37).abs() < 1e-13);
    }

    #[test]
    fn tent_matches_closed_form_for_gaussian() {
        // ∫ max(w − |x−y|, 0) e^{−y²} dy, computed by fine trapezoid oracle
        let f = gauss_field(0.02, 500);
        let (x, w) = (0.31, 0.8);
        let oracle = {
            let n = 200_000;
            let (a, b) = (x - w, x + w);
            let dy = (b - a) / n as f64;
            (0..=n)
                .map(|k| {
                    let y = a + k as f64 * dy;
                    let wt = if k == 0 || k == n { 0.5 } else { 1.0 };
                    wt * (w - (x - y).abs()) * (-y * y).exp()
                })
                .sum::<f64>()
                * dy
        };
        assert!((f.tent(x, w) - oracle).abs() < 1e-8, "{} {}", f.tent(x, w), oracle);
    }

    #[test]
    fn node_paths_agree_with_general_paths() {
        let f = gauss_field(0.05, 120);
        for i in [0usize, 3, 40, 119] {
            let x = i as f64 * 0.05;
            assert!((f.tent_node(i, 16) - f.tent(x, 0.8)).abs() < 1e-13);
            assert!((f.box_node(i, 8) - f.boxed(x, 0.4)).abs() < 1e-13);
        }
    }

    #[test]
    fn dense_weights_match_matvec() {
        let (h, n, nw) = (0.05, 60, 10);
        let vals: Vec<f64> = (0..=n).map(|i| ((i as f64) * 0.3).cos() / (1.0 + i as f64)).collect();
        let f = EvenField::new(h, vals.clone());
        let w = tent_weights(h, nw, n + 1, n);
        for i in [0, 5, 31, 60] {
            let dense: f64 = (0..=n).map(|j| w[i * (n + 1) + j] * vals[j]).sum();
            assert!((dense - f.tent_node(i, nw)).abs() < 1e-13);
        }
    }
}
