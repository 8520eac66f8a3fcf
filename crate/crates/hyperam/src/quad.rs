//! Quadrature engines: tanh-sinh (double exponential) as the primary rule,
//! Gauss-Legendre panels with a square-root substitution as the independent
//! cross-check, and an AGM evaluation of complete elliptic integrals.
//!
//! The tanh-sinh change of variable x = m + h·tanh((π/2) sinh t) clusters
//! nodes double-exponentially at both endpoints, which integrates the
//! inverse-square-root endpoint singularities of the chart differentials at
//! full accuracy.  Integrands receive the distances to both endpoints so
//! they can evaluate near-singular factors without cancellation.

use crate::error::{Error, Result};

/// Absolute/relative target used by default: |err| ≤ EPS · (1 + |result|).
pub const QUAD_EPS: f64 = 1e-12;

/// Primary and cross-check rules must agree to this tolerance.
pub const CROSS_CHECK_EPS: f64 = 1e-11;

/// Integrates `f` on [lo, hi] with tanh-sinh quadrature.
///
/// `f(x, d_lo, d_hi)` is called with the node and its exact distances to the
/// endpoints (`d_lo = x − lo`, `d_hi = hi − x`, both computed in transformed
/// space so they stay accurate down to ~1e−290).  Integrable endpoint
/// singularities like d^{-1/2} are fine; the integrand must be finite on the
/// open interval.
pub fn tanh_sinh<F>(f: F, lo: f64, hi: f64, eps: f64) -> Result<f64>
where
    F: Fn(f64, f64, f64) -> f64,
{
    if lo == hi {
        return Ok(0.0);
    }
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let t_max = 3.6_f64;

    // value of the weighted integrand at node tanh((π/2) sinh t)
    let eval = |t: f64| -> f64 {
        let u = std::f64::consts::FRAC_PI_2 * t.sinh();
        // 1 − tanh(u) = 2 e^{-2u} / (1 + e^{-2u}) evaluated stably for u of either sign
        let em = (-2.0 * u.abs()).exp();
        let dist_small = 2.0 * em / (1.0 + em); // distance of |tanh| to 1
        let tanh_u = u.tanh();
        let (d_lo, d_hi) = if u >= 0.0 {
            (half * (1.0 + tanh_u), half * dist_small)
        } else {
            (half * dist_small, half * (1.0 - tanh_u))
        };
        if d_lo == 0.0 || d_hi == 0.0 {
            return 0.0;
        }
        let x = mid + half * tanh_u;
        let w = std::f64::consts::FRAC_PI_2 * t.cosh() / (u.cosh() * u.cosh());
        let v = f(x, d_lo, d_hi);
        if v.is_finite() {
            v * w
        } else {
            f64::NAN
        }
    };

    let mut h = 1.0_f64;
    let mut sum = eval(0.0);
    let mut k = 1;
    while (k as f64) * h <= t_max {
        let t = (k as f64) * h;
        sum += eval(t) + eval(-t);
        k += 1;
    }
    let mut result = sum * h * half;
    let mut prev = f64::INFINITY;

    for _level in 0..12 {
        h *= 0.5;
        // add the new midpoints t = h, 3h, 5h, ...
        let mut add = 0.0;
        let mut k = 1;
        while (k as f64) * h <= t_max {
            let t = (k as f64) * h;
            add += eval(t) + eval(-t);
            k += 2;
        }
        sum += add;
        prev = result;
        result = sum * h * half;
        if result.is_nan() {
            return Err(Error::SingularInterior(lo, hi));
        }
        if (result - prev).abs() <= eps * (1.0 + result.abs()) {
            return Ok(result);
        }
    }
    if (result - prev).abs() <= 10.0 * eps * (1.0 + result.abs()) {
        return Ok(result);
    }
    Err(Error::NoConvergence(format!(
        "tanh-sinh on [{lo}, {hi}] stalled at residual {:e}",
        (result - prev).abs()
    )))
}

/// 40-point Gauss-Legendre nodes/weights on [-1, 1], computed once by Newton
/// iteration on the Legendre polynomial.
fn gauss_legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-style initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            // Legendre recurrence for P_n(x) and P'_n(x)
            let (mut p0, mut p1) = (1.0_f64, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = (n as f64) * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                let (mut p0b, mut p1b) = (1.0_f64, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1b - (kf - 1.0) * p0b) / kf;
                    p0b = p1b;
                    p1b = p2;
                }
                let dpb = (n as f64) * (x * p1b - p0b) / (x * x - 1.0);
                nodes[i] = -x;
                nodes[n - 1 - i] = x;
                weights[i] = 2.0 / ((1.0 - x * x) * dpb * dpb);
                weights[n - 1 - i] = weights[i];
                break;
            }
        }
    }
    (nodes, weights)
}

/// Gauss-Legendre integration of a smooth integrand over [lo, hi] split into
/// `panels` panels.
pub fn gauss_legendre<F>(f: F, lo: f64, hi: f64, panels: usize) -> f64
where
    F: Fn(f64) -> f64,
{
    let (nodes, weights) = gauss_legendre_rule(40);
    let mut total = 0.0;
    let dw = (hi - lo) / panels as f64;
    for p in 0..panels {
        let a = lo + dw * p as f64;
        let mid = a + 0.5 * dw;
        let half = 0.5 * dw;
        let mut acc = 0.0;
        for (x, w) in nodes.iter().zip(&weights) {
            acc += w * f(mid + half * x);
        }
        total += acc * half;
    }
    total
}

/// Cross-check integral with inverse-square-root singularities allowed at
/// either endpoint: each singular side is regularized by the substitution
/// x = endpoint ± τ², after which plain Gauss-Legendre applies.
///
/// `f(x, d_lo, d_hi)` as in [`tanh_sinh`].
pub fn gauss_sqrt_endpoints<F>(f: &F, lo: f64, hi: f64, singular_lo: bool, singular_hi: bool) -> f64
where
    F: Fn(f64, f64, f64) -> f64,
{
    if lo == hi {
        return 0.0;
    }
    let mid = 0.5 * (lo + hi);
    let len = hi - lo;
    let mut total = 0.0;
    // left half
    if singular_lo {
        let tmax = (mid - lo).sqrt();
        total += gauss_legendre(
            |tau| {
                let d = tau * tau;
                2.0 * tau * f(lo + d, d, len - d)
            },
            0.0,
            tmax,
            8,
        );
    } else {
        total += gauss_legendre(|x| f(x, x - lo, hi - x), lo, mid, 8);
    }
    // right half
    if singular_hi {
        let tmax = (hi - mid).sqrt();
        total += gauss_legendre(
            |tau| {
                let d = tau * tau;
                2.0 * tau * f(hi - d, len - d, d)
            },
            0.0,
            tmax,
            8,
        );
    } else {
        total += gauss_legendre(|x| f(x, x - lo, hi - x), mid, hi, 8);
    }
    total
}

/// Complete elliptic integral of the first kind K(m), parameter m = k²,
/// by the arithmetic-geometric mean: K(m) = π / (2 agm(1, sqrt(1−m))).
pub fn ellip_k_agm(m: f64) -> f64 {
    assert!(m < 1.0, "K(m) needs m < 1, got {m}");
    // m < 0 is fine: sqrt(1−m) > 1 and the AGM converges the same way.
    let mut a = 1.0_f64;
    let mut b = (1.0 - m).sqrt();
    for _ in 0..60 {
        let an = 0.5 * (a + b);
        let bn = (a * b).sqrt();
        if (an - bn).abs() < 1e-17 * an {
            return std::f64::consts::FRAC_PI_2 / an;
        }
        a = an;
        b = bn;
    }
    std::f64::consts::FRAC_PI_2 / a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_on_unit_interval() {
        let v = tanh_sinh(|_, _, _| 1.0, 0.0, 1.0, QUAD_EPS).unwrap();
        assert!((v - 1.0).abs() < 1e-13);
    }

    #[test]
    fn arcsine_benchmark() {
        // ∫₀¹ dw/√(1−w²) = π/2, singular at the upper endpoint.
        let v = tanh_sinh(
            |w, _dl, dh| 1.0 / (dh * (1.0 + w)).sqrt(),
            0.0,
            1.0,
            QUAD_EPS,
        )
        .unwrap();
        assert!((v - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn halving_the_step_is_converged() {
        // polynomial with endpoint singularity: ∫₀¹ x^{-1/2}(1+x) dx = 2 + 2/3
        let f = |x: f64, dl: f64, _dh: f64| (1.0 + x) / dl.sqrt();
        let v = tanh_sinh(f, 0.0, 1.0, 1e-13).unwrap();
        assert!((v - (2.0 + 2.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn gauss_cross_check_matches() {
        let f = |w: f64, _dl: f64, dh: f64| 1.0 / (dh * (1.0 + w)).sqrt();
        let ts = tanh_sinh(f, 0.0, 1.0, QUAD_EPS).unwrap();
        let gl = gauss_sqrt_endpoints(&f, 0.0, 1.0, false, true);
        assert!((ts - gl).abs() < CROSS_CHECK_EPS);
    }

    #[test]
    fn agm_reference_values() {
        assert!((ellip_k_agm(0.0) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        // K(m = 0.5) from standard tables
        assert!((ellip_k_agm(0.5) - 1.854_074_677_301_371_9).abs() < 1e-14);
    }

    #[test]
    fn elliptic_reduction_of_chart_integral() {
        // ∫₀^{π/2} dφ/√(1+8 sin²φ) = (1/3) K(8/9): 1+8sin²φ = 9(1−(8/9)cos²φ).
        let v = tanh_sinh(
            |phi: f64, _, _| 1.0 / (1.0 + 8.0 * phi.sin().powi(2)).sqrt(),
            0.0,
            std::f64::consts::FRAC_PI_2,
            QUAD_EPS,
        )
        .unwrap();
        let k = ellip_k_agm(8.0 / 9.0);
        assert!((v - k / 3.0).abs() < 1e-12, "{v} vs {}", k / 3.0);
    }
}
