//! Hyperelliptic curves y² = ∏(x − e_b) of genus g ≥ 1 and the angular
//! chart e^{2iφ} = (x − e_a)/c around a distinguished branch point.
//!
//! A curve is stored as its 2g+1 branch points together with the expanded
//! monic polynomial coefficients, so y² can be evaluated both ways and the
//! two routes cross-check each other.  The chart fixes a bijection σ from
//! slot positions onto the non-distinguished branch points; consecutive
//! slots (2j, 2j+1) form the j-th pair with
//!
//! ```text
//!   c_j = sqrt(e_{2j,a} · e_{2j+1,a}),
//!   k_j = 2i (e_{2j,a} e_{2j+1,a})^{1/4} / (sqrt(e_{2j,a}) − sqrt(e_{2j+1,a})),
//! ```
//!
//! where e_{b,a} = e_{σ(b)} − e_a and every root is principal.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative tolerance used for branch-point distinctness.
pub const DISTINCT_TOL: f64 = 1e-12;

/// Hyperelliptic curve of genus g given by 2g+1 branch points.
#[derive(Debug, Clone)]
pub struct Curve {
    branch_points: Vec<Complex64>,
    /// λ_0 .. λ_{2g}; the leading coefficient of y² is 1.
    coeffs: Vec<Complex64>,
    genus: usize,
}

impl Curve {
    /// Builds a curve from its branch points.
    ///
    /// The list must have odd length ≥ 3 and pairwise distinct entries
    /// (minimum distance `DISTINCT_TOL · scale`).
    pub fn new(branch_points: &[Complex64]) -> Result<Self> {
        Self::with_tolerance(branch_points, DISTINCT_TOL)
    }

    /// [`Curve::new`] with a caller-chosen relative distinctness tolerance.
    pub fn with_tolerance(branch_points: &[Complex64], tol: f64) -> Result<Self> {
        let n = branch_points.len();
        if n.is_multiple_of(2) || n < 3 {
            return Err(Error::EvenCount(n));
        }
        let scale = branch_points
            .iter()
            .map(|e| e.norm())
            .fold(0.0_f64, f64::max)
            + 1.0;
        for i in 0..n {
            for j in (i + 1)..n {
                if (branch_points[i] - branch_points[j]).norm() < tol * scale {
                    return Err(Error::DuplicateBranchPoint(i, j));
                }
            }
        }
        // Expand ∏(x − e_b); lam[j] is the coefficient of x^j, lam[n] == 1.
        let mut lam = vec![Complex64::new(1.0, 0.0)];
        for &e in branch_points {
            let mut next = vec![Complex64::new(0.0, 0.0); lam.len() + 1];
            for (k, &c) in lam.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= c * e;
            }
            lam = next;
        }
        let coeffs = lam[..n].to_vec();

        Ok(Self {
            branch_points: branch_points.to_vec(),
            coeffs,
            genus: (n - 1) / 2,
        })
    }

    /// Convenience constructor from real branch points.
    pub fn from_reals(points: &[f64]) -> Result<Self> {
        let pts: Vec<Complex64> = points.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::new(&pts)
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn branch_points(&self) -> &[Complex64] {
        &self.branch_points
    }

    pub fn branch_point(&self, index: usize) -> Complex64 {
        self.branch_points[index]
    }

    /// λ_j, the coefficient of x^j in y² (j = 0 .. 2g; the x^{2g+1} term is monic).
    pub fn lambda(&self, j: usize) -> Complex64 {
        self.coeffs[j]
    }

    /// max |e_b| + 1, the length scale used for relative tolerances.
    pub fn scale(&self) -> f64 {
        self.branch_points
            .iter()
            .map(|e| e.norm())
            .fold(0.0_f64, f64::max)
            + 1.0
    }

    /// y² at x, evaluated as the branch-point product.
    pub fn y_squared(&self, x: Complex64) -> Complex64 {
        self.branch_points.iter().map(|&e| x - e).product()
    }

    /// y² at x, evaluated from the expanded coefficients (Horner).
    pub fn y_squared_from_coeffs(&self, x: Complex64) -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// True when every branch point is real within `tol · scale`.
    pub fn is_real(&self, tol: f64) -> bool {
        let bound = tol * self.scale();
        self.branch_points.iter().all(|e| e.im.abs() <= bound)
    }
}

/// Angular chart around the distinguished branch point e_a.
///
/// `sigma[b]` is the branch-point index occupying slot b; slots (2j, 2j+1)
/// form pair j.  All derived quantities use principal roots.
#[derive(Debug, Clone)]
pub struct PhiChart {
    curve: Curve,
    a: usize,
    sigma: Vec<usize>,
    /// e_{b,a} = e_{σ(b)} − e_a per slot.
    shifts: Vec<Complex64>,
    /// Principal sqrt of each shift.
    sqrt_shifts: Vec<Complex64>,
    /// c_j = principal sqrt of the pair product.
    c_pairs: Vec<Complex64>,
    /// k_j moduli.
    k_moduli: Vec<Complex64>,
    /// ∏_j (sqrt(e_{2j,a}) − sqrt(e_{2j+1,a})).
    prefactor: Complex64,
}

impl PhiChart {
    /// Builds the chart for distinguished index `a` (0-based) and ordering
    /// `sigma`, a bijection onto the remaining indices.
    pub fn new(curve: &Curve, a: usize, sigma: &[usize]) -> Result<Self> {
        let n = curve.branch_points().len();
        if a >= n {
            return Err(Error::InvalidArgument(format!(
                "distinguished index {a} out of range 0..{n}"
            )));
        }
        if sigma.len() != n - 1 {
            return Err(Error::InvalidArgument(format!(
                "sigma must list the {} non-distinguished indices, got {}",
                n - 1,
                sigma.len()
            )));
        }
        let mut seen = vec![false; n];
        seen[a] = true;
        for &s in sigma {
            if s >= n || seen[s] {
                return Err(Error::InvalidArgument(format!(
                    "sigma entry {s} is not a bijection onto the other indices"
                )));
            }
            seen[s] = true;
        }

        let ea = curve.branch_point(a);
        let shifts: Vec<Complex64> = sigma.iter().map(|&s| curve.branch_point(s) - ea).collect();
        let sqrt_shifts: Vec<Complex64> = shifts.iter().map(|z| z.sqrt()).collect();
        let g = curve.genus();
        let mut c_pairs = Vec::with_capacity(g);
        let mut k_moduli = Vec::with_capacity(g);
        let mut prefactor = Complex64::new(1.0, 0.0);
        for j in 0..g {
            let p = shifts[2 * j];
            let q = shifts[2 * j + 1];
            let prod = p * q;
            c_pairs.push(prod.sqrt());
            let diff = sqrt_shifts[2 * j] - sqrt_shifts[2 * j + 1];
            let quarter = prod.powf(0.25);
            k_moduli.push(Complex64::new(0.0, 2.0) * quarter / diff);
            prefactor *= diff;
        }

        Ok(Self {
            curve: curve.clone(),
            a,
            sigma: sigma.to_vec(),
            shifts,
            sqrt_shifts,
            c_pairs,
            k_moduli,
            prefactor,
        })
    }

    pub fn curve(&self) -> &Curve {
        &self.curve
    }

    pub fn genus(&self) -> usize {
        self.curve.genus()
    }

    pub fn distinguished_index(&self) -> usize {
        self.a
    }

    pub fn distinguished_point(&self) -> Complex64 {
        self.curve.branch_point(self.a)
    }

    pub fn sigma(&self) -> &[usize] {
        &self.sigma
    }

    /// e_{b,a} for slot b.
    pub fn shift(&self, slot: usize) -> Complex64 {
        self.shifts[slot]
    }

    pub fn sqrt_shift(&self, slot: usize) -> Complex64 {
        self.sqrt_shifts[slot]
    }

    pub fn c_pairs(&self) -> &[Complex64] {
        &self.c_pairs
    }

    /// The chart-defining constant c = c_1 (first pair).
    pub fn c(&self) -> Complex64 {
        self.c_pairs[0]
    }

    /// c_1 as a real number; admissible charts always have real positive c.
    pub fn c_real(&self) -> f64 {
        self.c_pairs[0].re
    }

    pub fn k_moduli(&self) -> &[Complex64] {
        &self.k_moduli
    }

    pub fn prefactor(&self) -> Complex64 {
        self.prefactor
    }

    /// x(φ) = e_a + c₁ e^{2iφ}; |x − e_a| = |c₁| for every real φ.
    pub fn x_at(&self, phi: f64) -> Complex64 {
        self.distinguished_point() + self.c() * Complex64::new(0.0, 2.0 * phi).exp()
    }

    /// Per-pair coefficients (A_j, B_j) of H_j(φ) = A_j + B_j sin²φ, with
    /// A_j = (sqrt(e_{2j,a}) − sqrt(e_{2j+1,a}))² and B_j = 4 c_j.
    ///
    /// Returns an error if a pair mixes signs (A_j or B_j not real), which
    /// is exactly the excluded I-0 configuration.
    pub fn h_coeffs(&self) -> Result<Vec<HPair>> {
        let tol = 1e-10 * (self.curve.scale() + 1.0);
        let mut out = Vec::with_capacity(self.genus());
        for j in 0..self.genus() {
            let a = self.prefactor_pair(j) * self.prefactor_pair(j);
            let b = 4.0 * self.c_pairs[j];
            if a.im.abs() > tol || b.im.abs() > tol {
                return Err(Error::UnclassifiableSigns(
                    self.sigma[2 * j],
                    self.sigma[2 * j + 1],
                ));
            }
            out.push(HPair { a: a.re, b: b.re });
        }
        Ok(out)
    }

    /// sqrt(e_{2j,a}) − sqrt(e_{2j+1,a}) for pair j.
    pub fn prefactor_pair(&self, j: usize) -> Complex64 {
        self.sqrt_shifts[2 * j] - self.sqrt_shifts[2 * j + 1]
    }
}

/// Real coefficients of one factor H(φ) = A + B sin²φ under the denominator
/// square root.  Positive-type pairs have A > 0; negative-type pairs have
/// A < 0 and a turning point at sin²φ = −A/B.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HPair {
    pub a: f64,
    pub b: f64,
}

impl HPair {
    /// H(φ) evaluated directly.
    pub fn eval(&self, phi: f64) -> f64 {
        let s = phi.sin();
        self.a + self.b * s * s
    }

    /// H(φ) evaluated stably near a turning point φ_t with sin²φ_t = −A/B,
    /// given the signed distance δ = φ − φ_t.  Uses the factorization
    /// H = B (sin φ − sin φ_t)(sin φ + sin φ_t) with the difference written
    /// as 2 cos((φ+φ_t)/2) sin(δ/2) to avoid cancellation.
    pub fn eval_at_distance(&self, phi: f64, phi_turn: f64, delta: f64) -> f64 {
        let diff = 2.0 * ((phi + phi_turn) * 0.5).cos() * (delta * 0.5).sin();
        self.b * diff * (phi.sin() + phi_turn.sin())
    }

    /// d/dφ of H.
    pub fn deriv(&self, phi: f64) -> f64 {
        self.b * (2.0 * phi).sin()
    }

    /// k² = −B/A for this pair.
    pub fn k_squared(&self) -> f64 {
        -self.b / self.a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn expands_cubic() {
        // x(x−1)(x−4) = x³ − 5x² + 4x
        let curve = Curve::from_reals(&[0.0, 1.0, 4.0]).unwrap();
        assert_eq!(curve.genus(), 1);
        assert!((curve.lambda(2) - c(-5.0, 0.0)).norm() < 1e-14);
        assert!((curve.lambda(1) - c(4.0, 0.0)).norm() < 1e-14);
        assert!((curve.lambda(0)).norm() < 1e-14);
    }

    #[test]
    fn genus_two_from_five_points() {
        let curve = Curve::from_reals(&[-2.0, -1.0, 2.0, -1.5, 6.0]).unwrap();
        assert_eq!(curve.genus(), 2);
    }

    #[test]
    fn rejects_duplicates_and_even_count() {
        assert!(matches!(
            Curve::from_reals(&[0.0, 0.0, 1.0]),
            Err(Error::DuplicateBranchPoint(0, 1))
        ));
        assert!(matches!(
            Curve::from_reals(&[0.0, 1.0]),
            Err(Error::EvenCount(2))
        ));
    }

    #[test]
    fn y_squared_examples() {
        let curve = Curve::from_reals(&[0.0, 1.0, 4.0]).unwrap();
        assert!(curve.y_squared(c(1.0, 0.0)).norm() < 1e-14);
        assert!((curve.y_squared(c(2.0, 0.0)) - c(-4.0, 0.0)).norm() < 1e-14);

        let g2 = Curve::from_reals(&[-2.0, -1.0, 2.0, -1.5, 6.0]).unwrap();
        assert!((g2.y_squared(c(0.0, 0.0)) - c(36.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn product_and_coefficient_evaluation_agree() {
        let curve = Curve::new(&[
            c(0.3, 0.1),
            c(-1.0, 2.0),
            c(4.0, -0.5),
            c(1.0, 1.0),
            c(-3.0, 0.0),
        ])
        .unwrap();
        let scale = curve.scale();
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let r = 2.0 * scale * next().sqrt();
            let th = 2.0 * std::f64::consts::PI * next();
            let x = c(r * th.cos(), r * th.sin());
            let via_product = curve.y_squared(x);
            let via_coeffs = curve.y_squared_from_coeffs(x);
            let denom = via_product.norm().max(1.0);
            assert!(
                (via_product - via_coeffs).norm() / denom < 1e-12,
                "mismatch at x = {x}"
            );
        }
    }

    #[test]
    fn branch_points_are_roots() {
        let curve = Curve::from_reals(&[-2.0, -1.0, 2.0, -1.5, 6.0]).unwrap();
        let bound = 1e-10 * curve.scale().powi(5);
        for &e in curve.branch_points() {
            assert!(curve.y_squared_from_coeffs(e).norm() < bound);
        }
    }

    #[test]
    fn chart_first_example() {
        // curve [0,1,4], a = 0, sigma = (1,2): c = 2, k = −2√2 i, prefactor = −1.
        let curve = Curve::from_reals(&[0.0, 1.0, 4.0]).unwrap();
        let chart = PhiChart::new(&curve, 0, &[1, 2]).unwrap();
        assert!((chart.c() - c(2.0, 0.0)).norm() < 1e-14);
        assert!((chart.k_moduli()[0] - c(0.0, -2.0 * 2f64.sqrt())).norm() < 1e-14);
        assert!((chart.prefactor() - c(-1.0, 0.0)).norm() < 1e-14);
        let h = chart.h_coeffs().unwrap()[0];
        assert!((h.a - 1.0).abs() < 1e-14);
        assert!((h.b - 8.0).abs() < 1e-14);
        assert!((h.k_squared() + 8.0).abs() < 1e-13);
    }

    #[test]
    fn chart_negative_pair_example() {
        // curve [−4,−1,0], a = 2, sigma = (0,1): principal roots 2i and i,
        // c = 2, k = 2√2 real, prefactor = i.
        let curve = Curve::from_reals(&[-4.0, -1.0, 0.0]).unwrap();
        let chart = PhiChart::new(&curve, 2, &[0, 1]).unwrap();
        assert!((chart.shift(0) - c(-4.0, 0.0)).norm() < 1e-14);
        assert!((chart.shift(1) - c(-1.0, 0.0)).norm() < 1e-14);
        assert!((chart.c() - c(2.0, 0.0)).norm() < 1e-14);
        assert!((chart.k_moduli()[0] - c(2.0 * 2f64.sqrt(), 0.0)).norm() < 1e-13);
        assert!((chart.prefactor() - c(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn pair_swap_flips_k_but_not_k_squared() {
        let curve = Curve::from_reals(&[-2.0, -1.0, 2.0, -1.5, 6.0]).unwrap();
        let chart1 = PhiChart::new(&curve, 0, &[1, 2, 3, 4]).unwrap();
        let chart2 = PhiChart::new(&curve, 0, &[2, 1, 3, 4]).unwrap();
        for j in 0..2 {
            assert!((chart1.c_pairs()[j] - chart2.c_pairs()[j]).norm() < 1e-13);
            let k1 = chart1.k_moduli()[j] * chart1.k_moduli()[j];
            let k2 = chart2.k_moduli()[j] * chart2.k_moduli()[j];
            assert!((k1 - k2).norm() < 1e-12);
        }
    }

    #[test]
    fn x_at_examples() {
        let curve = Curve::from_reals(&[0.0, 1.0, 4.0]).unwrap();
        let chart = PhiChart::new(&curve, 0, &[1, 2]).unwrap();
        assert!((chart.x_at(0.0) - c(2.0, 0.0)).norm() < 1e-14);
        assert!((chart.x_at(std::f64::consts::FRAC_PI_2) - c(-2.0, 0.0)).norm() < 1e-13);
        assert!((chart.x_at(std::f64::consts::FRAC_PI_4) - c(0.0, 2.0)).norm() < 1e-13);
    }

    #[test]
    fn circle_radius_is_constant() {
        let curve = Curve::from_reals(&[-2.0, -1.0, 2.0, -1.5, 6.0]).unwrap();
        let chart = PhiChart::new(&curve, 0, &[1, 2, 3, 4]).unwrap();
        let radius = chart.c().norm();
        for i in 0..100 {
            let phi = -3.0 + 6.0 * (i as f64) / 99.0;
            let r = (chart.x_at(phi) - chart.distinguished_point()).norm();
            assert!((r - radius).abs() / radius < 1e-14);
        }
    }

    #[test]
    fn pair_identity_holds_for_any_chart() {
        // 4 sqrt(e_b e_c) + k² (sqrt(e_b) − sqrt(e_c))² = 0, principal roots,
        // also for complex branch points.
        let curve = Curve::new(&[
            c(0.3, 0.1),
            c(-1.0, 2.0),
            c(4.0, -0.5),
            c(1.0, 1.0),
            c(-3.0, 0.0),
        ])
        .unwrap();
        let chart = PhiChart::new(&curve, 1, &[0, 2, 3, 4]).unwrap();
        for j in 0..2 {
            let prod = chart.shift(2 * j) * chart.shift(2 * j + 1);
            let diff = chart.prefactor_pair(j);
            let k2 = chart.k_moduli()[j] * chart.k_moduli()[j];
            let lhs = 4.0 * prod.sqrt() + k2 * diff * diff;
            assert!(lhs.norm() < 1e-12 * prod.norm().max(1.0));
        }
    }
}
