//! Chart differentials and their real-line quadrature: du_g/dφ, incomplete
//! integrals u(φ), the genus-2 elliptic reduction by v = w², and genus-1
//! period lattices.
//!
//! On an admissible chart the differential of interest reduces to
//!
//! ```text
//!   du_g/dφ = N(φ) / D(φ),   N = (2 sqrt(c) sin φ)^{g−1},
//!   D = sqrt(∏_j H_j(φ)),    H_j = A_j + B_j sin²φ,
//! ```
//!
//! real on the admissible φ ranges.  Libration endpoints are simple zeros
//! of one (or two) H_j, so every singular integral is of inverse-square-root
//! type; the quadrature evaluates those factors from the distance to the
//! endpoint to avoid cancellation.

use num_complex::Complex64;

use crate::curve::{HPair, PhiChart};
use crate::error::{Error, Result};
use crate::quad::{self, CROSS_CHECK_EPS, QUAD_EPS};
use crate::reality::{classify_case, CaseClass, CaseLabel};

/// An admissible chart: the φ-chart together with its classification and
/// realized (real) H-coefficients.  This is the working type consumed by
/// the am-function, divisor-flow and soliton layers.
#[derive(Debug, Clone)]
pub struct AdmissibleChart {
    chart: PhiChart,
    case: CaseClass,
    h: Vec<HPair>,
    /// c = c_1 (= −e_a for genus ≥ 2).
    c: f64,
    sqrt_c: f64,
    e_a: f64,
    /// |∂_{u_g} Z| = ∏ c_j.
    r_const: f64,
}

impl AdmissibleChart {
    /// Classifies the chart and realizes the H-coefficients.
    pub fn new(chart: PhiChart) -> Result<Self> {
        let case = classify_case(&chart)?;
        let h = chart.h_coeffs()?;
        let c = chart.c_real();
        let e_a = chart.distinguished_point().re;
        let r_const: f64 = chart.c_pairs().iter().map(|cj| cj.re).product();
        Ok(Self {
            chart,
            case,
            h,
            c,
            sqrt_c: c.sqrt(),
            e_a,
            r_const,
        })
    }

    pub fn chart(&self) -> &PhiChart {
        &self.chart
    }

    pub fn case(&self) -> &CaseClass {
        &self.case
    }

    pub fn genus(&self) -> usize {
        self.chart.genus()
    }

    pub fn h_pairs(&self) -> &[HPair] {
        &self.h
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn e_a(&self) -> f64 {
        self.e_a
    }

    /// ∏ c_j, the modulus of ∂_{u_g} Z.
    pub fn r_const(&self) -> f64 {
        self.r_const
    }

    /// λ_{2g} + e_a, the denominator of the evolution time mix.
    pub fn time_mix_denominator(&self) -> f64 {
        let g = self.genus();
        self.chart.curve().lambda(2 * g).re + self.e_a
    }

    /// N(φ) = (2 sqrt(c) sin φ)^{g−1}, signed.
    pub fn n_value(&self, phi: f64) -> f64 {
        let g = self.genus();
        (2.0 * self.sqrt_c * phi.sin()).powi(g as i32 - 1)
    }

    /// ∏_j H_j(φ).
    pub fn p_value(&self, phi: f64) -> f64 {
        self.h.iter().map(|h| h.eval(phi)).product()
    }

    /// d/dφ of ∏_j H_j(φ).
    pub fn p_deriv(&self, phi: f64) -> f64 {
        let vals: Vec<f64> = self.h.iter().map(|h| h.eval(phi)).collect();
        let mut total = 0.0;
        for j in 0..self.h.len() {
            let mut term = self.h[j].deriv(phi);
            for (l, v) in vals.iter().enumerate() {
                if l != j {
                    term *= v;
                }
            }
            total += term;
        }
        total
    }

    /// D(φ) = sqrt(∏ H_j); errors outside the admissible set.
    pub fn d_value(&self, phi: f64) -> Result<f64> {
        let p = self.p_value(phi);
        if p < 0.0 {
            let tol = 1e-12 * self.h.iter().map(|h| h.a.abs() + h.b).product::<f64>();
            if p < -tol {
                return Err(Error::OutsideAdmissibleRange(phi));
            }
            return Ok(0.0);
        }
        Ok(p.sqrt())
    }

    /// du_g/dφ = N(φ)/D(φ) with the positive-D sign convention.
    pub fn du_g_dphi(&self, phi: f64) -> Result<f64> {
        let d = self.d_value(phi)?;
        Ok(self.n_value(phi) / d)
    }

    /// Reference point of the admissible interval containing `phi`:
    /// φ = 0 when the interval contains 0 (rotating and inner ranges),
    /// otherwise the interval's lower turning point.
    pub fn reference_phi(&self, phi: f64) -> Result<f64> {
        let (lo, hi) = self
            .case
            .phi_range_containing(phi)
            .ok_or(Error::OutsideAdmissibleRange(phi))?;
        if lo <= 0.0 && hi >= 0.0 {
            Ok(0.0)
        } else {
            Ok(lo)
        }
    }

    /// u(φ) = ∫_ref^φ N/D dφ′, the per-point incomplete integral (identical
    /// for every divisor point).  `phi` may sit at a singular turning
    /// endpoint; the integral converges there.
    pub fn u_of_phi(&self, phi: f64) -> Result<f64> {
        let (lo, hi) = self
            .case
            .phi_range_containing(phi)
            .ok_or(Error::OutsideAdmissibleRange(phi))?;
        // reduce phi into the component's base window
        let two_pi = 2.0 * std::f64::consts::PI;
        let mid = 0.5 * (lo + hi);
        let p = phi - two_pi * ((phi - mid) / two_pi).round();
        let reference = if lo <= 0.0 && hi >= 0.0 { 0.0 } else { lo };
        self.integrate_du(reference, p)
    }

    /// ∫_a^b N/D dφ inside one admissible interval; endpoints may be
    /// turning points.
    pub fn integrate_du(&self, from: f64, to: f64) -> Result<f64> {
        if from == to {
            return Ok(0.0);
        }
        if to < from {
            return Ok(-self.integrate_du(to, from)?);
        }
        let spec = IntegrandSpec::new(self, from, to);
        spec.integrate()
    }

    /// Genus-1 period lattice; errors on other genera or unclassified cases.
    pub fn periods(&self) -> Result<PeriodLattice> {
        if self.genus() != 1 {
            return Err(Error::WrongGenus {
                expected: 1,
                got: self.genus(),
            });
        }
        let HPair { a, b } = self.h[0];
        match self.case.label {
            CaseLabel::I1 => {
                // ω = ∫_0^1 dw / sqrt((1−w²)(A+Bw²)), singular at w = 1
                let omega = dual_quadrature(
                    &|w: f64, _dl: f64, dh: f64| 1.0 / (dh * (1.0 + w) * (a + b * w * w)).sqrt(),
                    0.0,
                    1.0,
                    false,
                    true,
                )?;
                // L = ∫_0^{sqrt(A/B)} dv / sqrt((1+v²)(A−Bv²)), the w = iv leg
                let vt = (a / b).sqrt();
                let l_imag = dual_quadrature(
                    &|v: f64, _dl: f64, dh: f64| 1.0 / ((1.0 + v * v) * b * dh * (vt + v)).sqrt(),
                    0.0,
                    vt,
                    false,
                    true,
                )?;
                // lattice (4ω, 2ω′); the generator choice ω′ = ω + iL keeps Re τ = 1/2
                let omega_prime = Complex64::new(omega, l_imag);
                let tau = omega_prime / (2.0 * omega);
                Ok(PeriodLattice {
                    omega,
                    omega_prime,
                    tau,
                    label: self.case.label,
                })
            }
            CaseLabel::I2 => {
                let abs_a = -a;
                let wt = (abs_a / b).sqrt(); // = 1/k
                                             // ω = 2 ∫_0^{1/k} dw / sqrt((1−w²)(|A|−Bw²)), singular at 1/k
                let omega = 2.0
                    * dual_quadrature(
                        &|w: f64, _dl: f64, dh: f64| {
                            1.0 / ((1.0 - w * w) * b * dh * (wt + w)).sqrt()
                        },
                        0.0,
                        wt,
                        false,
                        true,
                    )?;
                // ω′ = i ∫_{1/k}^1 dw / sqrt((1−w²)(Bw²−|A|)), singular at both ends
                let l_imag = dual_quadrature(
                    &|w: f64, dl: f64, dh: f64| 1.0 / (dh * (1.0 + w) * b * dl * (w + wt)).sqrt(),
                    wt,
                    1.0,
                    true,
                    true,
                )?;
                let omega_prime = Complex64::new(0.0, l_imag);
                let tau = omega_prime / (2.0 * omega);
                Ok(PeriodLattice {
                    omega,
                    omega_prime,
                    tau,
                    label: self.case.label,
                })
            }
            other => Err(Error::UnclassifiedChart(format!(
                "periods need a genus-1 case, chart classified {other}"
            ))),
        }
    }

    /// u₂ over [phi_lo, phi_hi] ⊂ [0, π/2] via the substitution v = sin²φ,
    /// which reduces the genus-2 integrand to an elliptic one.  Independent
    /// route used to cross-check the direct φ-quadrature.
    pub fn u2_via_w_squared(&self, phi_lo: f64, phi_hi: f64) -> Result<f64> {
        if self.genus() != 2 {
            return Err(Error::WrongGenus {
                expected: 2,
                got: self.genus(),
            });
        }
        if !(0.0..=std::f64::consts::FRAC_PI_2 + 1e-12).contains(&phi_lo) || phi_hi < phi_lo {
            return Err(Error::InvalidArgument(format!(
                "need 0 <= {phi_lo} <= {phi_hi} <= pi/2 for the w-squared substitution"
            )));
        }
        let (h1, h2) = (self.h[0], self.h[1]);
        // second substitution s = sqrt(1 − v) removes the 1/sqrt(1−v)
        // factor analytically: du_2 = 2 sqrt(c) ds / sqrt(G_1 G_2) with
        // G_j(s) = (A_j + B_j) − B_j s², integrated from s(phi_hi) up to
        // s(phi_lo); G_j zeros can only sit at the endpoints.
        let s_of = |phi: f64| {
            let w = phi.sin();
            (1.0 - w * w).max(0.0).sqrt() // = |cos phi| on [0, pi/2]
        };
        let s_lo = s_of(phi_hi);
        let s_hi = s_of(phi_lo);
        let g1 = (h1.a + h1.b, h1.b);
        let g2 = (h2.a + h2.b, h2.b);
        let near = |x: f64, y: f64| (x - y).abs() < 1e-10 * (1.0 + y.abs());
        let zero1 = if g1.0 / g1.1 > 0.0 {
            (g1.0 / g1.1).sqrt()
        } else {
            f64::NAN
        };
        let zero2 = if g2.0 / g2.1 > 0.0 {
            (g2.0 / g2.1).sqrt()
        } else {
            f64::NAN
        };
        let lo_singular = near(s_lo, zero1) || near(s_lo, zero2);
        let hi_singular = near(s_hi, zero1) || near(s_hi, zero2);
        let f = |s: f64, dl: f64, dh: f64| {
            let eval = |(a0, b): (f64, f64), zero: f64| {
                if near(s_lo, zero) {
                    // G = B (zero − s)(zero + s) with zero − s = −(s − s_lo) − (s_lo − zero)
                    b * (zero - s_lo - dl) * (zero + s)
                } else if near(s_hi, zero) {
                    b * (zero - s_hi + dh) * (zero + s)
                } else {
                    a0 - b * s * s
                }
            };
            let prod = eval(g1, zero1) * eval(g2, zero2);
            2.0 * self.sqrt_c / prod.sqrt()
        };
        dual_quadrature(&f, s_lo, s_hi, lo_singular, hi_singular)
    }
}

/// Genus-1 period lattice (4ω, 2ω′) of the chart differential.
///
/// `tau` is the lattice modulus 2ω′ / 4ω = ω′/(2ω), with the generator ω′
/// chosen so that admissible charts land on Re τ = 1/2 (rotating case) or
/// Re τ = 0 (librating case) with Im τ > 0.
#[derive(Debug, Clone)]
pub struct PeriodLattice {
    pub omega: f64,
    pub omega_prime: Complex64,
    pub tau: Complex64,
    pub label: CaseLabel,
}

/// One integrable chart integrand on a sub-interval of an admissible range:
/// du_g/dφ with bookkeeping for which H-factors vanish at which endpoint.
///
/// Endpoint-vanishing factors are evaluated from the exact turning angle
/// (the nearest zero of H_j) plus the quadrature's distance to the
/// endpoint, so values stay accurate arbitrarily close to the singularity.
#[derive(Debug)]
pub struct IntegrandSpec<'a> {
    chart: &'a AdmissibleChart,
    from: f64,
    to: f64,
    /// Per pair: (turning angle, offset of `from` above it), if singular at lo.
    lo_turns: Vec<Option<(f64, f64)>>,
    /// Per pair: (turning angle, offset of `to` below it), if singular at hi.
    hi_turns: Vec<Option<(f64, f64)>>,
    pub singular_lo: bool,
    pub singular_hi: bool,
}

/// Zero of H nearest to `phi` for a negative-type pair: solves
/// sin²φ_t = −A/B on the branch closest to `phi`.
fn nearest_turning(h: &HPair, phi: f64) -> f64 {
    use std::f64::consts::PI;
    let s = (-h.a / h.b).sqrt().min(1.0);
    let base = s.asin();
    let mut best = f64::NAN;
    let mut best_dist = f64::INFINITY;
    let n0 = (phi / PI).round() as i64;
    for n in (n0 - 1)..=(n0 + 1) {
        for cand in [n as f64 * PI + base, n as f64 * PI - base] {
            let d = (cand - phi).abs();
            if d < best_dist {
                best_dist = d;
                best = cand;
            }
        }
    }
    best
}

impl<'a> IntegrandSpec<'a> {
    /// Prepares the integrand for [from, to]; both endpoints may be turning
    /// points, the interior must stay admissible.
    pub fn new(chart: &'a AdmissibleChart, from: f64, to: f64) -> Self {
        let mut lo_turns = Vec::with_capacity(chart.h.len());
        let mut hi_turns = Vec::with_capacity(chart.h.len());
        for h in &chart.h {
            let htol = 1e-10 * (h.a.abs() + h.b);
            lo_turns.push((h.a < 0.0 && h.eval(from).abs() < htol).then(|| {
                let t = nearest_turning(h, from);
                (t, (from - t).max(0.0))
            }));
            hi_turns.push((h.a < 0.0 && h.eval(to).abs() < htol).then(|| {
                let t = nearest_turning(h, to);
                (t, (t - to).max(0.0))
            }));
        }
        let singular_lo = lo_turns.iter().any(Option::is_some);
        let singular_hi = hi_turns.iter().any(Option::is_some);
        Self {
            chart,
            from,
            to,
            lo_turns,
            hi_turns,
            singular_lo,
            singular_hi,
        }
    }

    /// N/D with distance-stable H-factors near the endpoints.
    fn eval(&self, phi: f64, d_lo: f64, d_hi: f64) -> f64 {
        let mut prod = 1.0;
        for (j, h) in self.chart.h.iter().enumerate() {
            let v = match (self.lo_turns[j], self.hi_turns[j]) {
                (Some((t, off)), None) => h.eval_at_distance(phi, t, off + d_lo),
                (None, Some((t, off))) => h.eval_at_distance(phi, t, -(off + d_hi)),
                (Some((tl, off_l)), Some((th, off_h))) => {
                    if d_lo <= d_hi {
                        h.eval_at_distance(phi, tl, off_l + d_lo)
                    } else {
                        h.eval_at_distance(phi, th, -(off_h + d_hi))
                    }
                }
                (None, None) => h.eval(phi),
            };
            prod *= v;
        }
        if prod <= 0.0 {
            return f64::NAN; // interior sign change: surfaced as SingularInterior
        }
        self.chart.n_value(phi) / prod.sqrt()
    }

    /// Tanh-sinh value cross-checked against the Gauss-Legendre route.
    pub fn integrate(&self) -> Result<f64> {
        let f = |phi: f64, dl: f64, dh: f64| self.eval(phi, dl, dh);
        let primary = quad::tanh_sinh(f, self.from, self.to, QUAD_EPS)?;
        let check =
            quad::gauss_sqrt_endpoints(&f, self.from, self.to, self.singular_lo, self.singular_hi);
        if (primary - check).abs() > CROSS_CHECK_EPS * (1.0 + primary.abs()) {
            return Err(Error::NoConvergence(format!(
                "quadrature routes disagree: tanh-sinh {primary} vs gauss {check}"
            )));
        }
        Ok(primary)
    }
}

/// Tanh-sinh with Gauss cross-check for a free-standing integrand.
fn dual_quadrature<F>(f: &F, lo: f64, hi: f64, singular_lo: bool, singular_hi: bool) -> Result<f64>
where
    F: Fn(f64, f64, f64) -> f64,
{
    let primary = quad::tanh_sinh(f, lo, hi, QUAD_EPS)?;
    let check = quad::gauss_sqrt_endpoints(f, lo, hi, singular_lo, singular_hi);
    if (primary - check).abs() > CROSS_CHECK_EPS * (1.0 + primary.abs()) {
        return Err(Error::NoConvergence(format!(
            "quadrature routes disagree: tanh-sinh {primary} vs gauss {check}"
        )));
    }
    Ok(primary)
}
