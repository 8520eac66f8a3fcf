//! The am-function layer: inversion of the per-point integral u(φ), an
//! independent genus-1 oracle, and the summed hyperelliptic am/al values.
//!
//! Each divisor point moves on a fixed cycle of its admissible component:
//! monotone "legs" separated by turning points (zeros of D, where the
//! motion reflects) and — for even genus — interior folds (zeros of N,
//! where u reverses while φ keeps going).  [`AmTable`] precomputes the
//! monotone u(φ) mapping per leg and inverts it with safeguarded Newton
//! iterations backed by exact quadrature, so round trips hold to ~1e−12.
//!
//! For genus 1 the cycle parameter coincides with u itself and φ_a(u) is
//! the classical Jacobi amplitude up to the affine rescaling by the chart
//! prefactor; [`am_genus1_oracle`] integrates the equivalent pendulum
//! system with a fixed-step RK4 as a fully independent cross-check.

use num_complex::Complex64;

use crate::contour::AdmissibleChart;
use crate::error::{Error, Result};
use crate::flow::DivisorState;

/// One monotone leg of the motion: φ ∈ [phi0, phi1] with N of constant sign.
#[derive(Debug, Clone)]
struct Leg {
    phi0: f64,
    phi1: f64,
    /// +1 when u increases with φ on this leg.
    sign: f64,
    /// cycle-arc values at the graded nodes, paired with their φ.
    nodes: Vec<(f64, f64)>, // (phi, chi)
    chi0: f64,
    chi1: f64,
}

/// Precomputed inversion table for one admissible component of a chart.
///
/// The cycle-arc coordinate χ measures accumulated |du| along the motion
/// starting from the component reference in the positive φ direction; for
/// genus 1 it coincides with u_g^{(i)} itself.
#[derive(Debug, Clone)]
pub struct AmTable {
    lo: f64,
    hi: f64,
    rotating: bool,
    /// φ advance per full arc period (rotating only): π for odd genus,
    /// 2π for even genus.
    phi_cycle: f64,
    /// up-sweep arc from lo to hi.
    sweep: f64,
    /// arc offset of the reference point inside the up-sweep.
    chi_ref: f64,
    legs: Vec<Leg>,
}

const TABLE_NODES: usize = 48;

impl AmTable {
    /// Builds the table for the admissible component containing `phi_seed`.
    pub fn new(chart: &AdmissibleChart, phi_seed: f64) -> Result<Self> {
        let (lo, hi) = chart
            .case()
            .phi_range_containing(phi_seed)
            .ok_or(Error::OutsideAdmissibleRange(phi_seed))?;
        let rotating = chart.case().rotating;
        let g = chart.genus();
        let (lo, hi, phi_cycle) = if rotating {
            if g % 2 == 1 {
                (0.0, std::f64::consts::PI, std::f64::consts::PI)
            } else {
                (0.0, 2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI)
            }
        } else {
            (lo, hi, 0.0)
        };

        // split at interior zeros of N (multiples of π strictly inside)
        let mut cuts = vec![lo];
        if g > 1 {
            let mut m = (lo / std::f64::consts::PI).floor();
            loop {
                let z = m * std::f64::consts::PI;
                if z > hi - 1e-12 {
                    break;
                }
                if z > lo + 1e-12 {
                    cuts.push(z);
                }
                m += 1.0;
            }
        }
        cuts.push(hi);

        let mut legs = Vec::new();
        let mut chi = 0.0;
        for seg in cuts.windows(2) {
            let (p0, p1) = (seg[0], seg[1]);
            let mid = 0.5 * (p0 + p1);
            let sign = chart.n_value(mid).signum();
            let mut nodes = Vec::with_capacity(TABLE_NODES + 1);
            nodes.push((p0, chi));
            let mut prev_phi = p0;
            let mut acc = chi;
            for i in 1..=TABLE_NODES {
                let t = i as f64 / TABLE_NODES as f64;
                // cosine grading clusters nodes at both leg ends
                let phi = p0 + (p1 - p0) * 0.5 * (1.0 - (std::f64::consts::PI * t).cos());
                let du = chart.integrate_du(prev_phi, phi)?;
                acc += du.abs();
                nodes.push((phi, acc));
                prev_phi = phi;
            }
            let leg = Leg {
                phi0: p0,
                phi1: p1,
                sign: if sign == 0.0 { 1.0 } else { sign },
                chi0: chi,
                chi1: acc,
                nodes,
            };
            chi = acc;
            legs.push(leg);
        }
        let sweep = chi;
        let reference = chart.reference_phi(0.5 * (lo + hi)).unwrap_or(lo);
        // arc of the reference inside the up-sweep
        let chi_ref = if (reference - lo).abs() < 1e-14 {
            0.0
        } else {
            let mut acc = 0.0;
            for leg in &legs {
                if reference >= leg.phi1 - 1e-14 {
                    acc = leg.chi1;
                } else if reference > leg.phi0 {
                    acc = leg.chi0 + chart.integrate_du(leg.phi0, reference)?.abs();
                    break;
                } else {
                    break;
                }
            }
            acc
        };
        Ok(Self {
            lo,
            hi,
            rotating,
            phi_cycle,
            sweep,
            chi_ref,
            legs,
        })
    }

    /// Total cycle arc: the u-distance after which the motion repeats
    /// (rotating: φ advances by `phi_advance_per_cycle`).
    pub fn cycle_arc(&self) -> f64 {
        if self.rotating {
            self.sweep
        } else {
            2.0 * self.sweep
        }
    }

    /// φ advance per cycle arc (0 for librating components).
    pub fn phi_advance_per_cycle(&self) -> f64 {
        self.phi_cycle
    }

    /// Lower/upper φ of the tabulated window.
    pub fn window(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Inverts the up-sweep: φ with arc(φ) = chi, chi ∈ [0, sweep].
    fn invert_sweep(&self, chart: &AdmissibleChart, chi: f64) -> Result<f64> {
        let chi = chi.clamp(0.0, self.sweep);
        let leg = self
            .legs
            .iter()
            .find(|l| chi <= l.chi1 + 1e-14)
            .ok_or(Error::InversionFailure(chi))?;
        // node bracket
        let idx = leg
            .nodes
            .windows(2)
            .position(|w| chi <= w[1].1 + 1e-14)
            .unwrap_or(leg.nodes.len() - 2);
        let (phi_a, chi_a) = leg.nodes[idx];
        let (phi_b, chi_b) = leg.nodes[idx + 1];
        if (chi - chi_a).abs() < 1e-15 {
            return Ok(phi_a);
        }
        if (chi - chi_b).abs() < 1e-15 {
            return Ok(phi_b);
        }
        // target offset from the left node, in signed u
        let delta = (chi - chi_a) * leg.sign;
        let mut lo = phi_a;
        let mut hi = phi_b;
        let mut phi = if chi_b > chi_a {
            phi_a + (phi_b - phi_a) * (chi - chi_a) / (chi_b - chi_a)
        } else {
            0.5 * (phi_a + phi_b)
        };
        for _ in 0..80 {
            let val = chart.integrate_du(phi_a, phi)?;
            let err = val - delta;
            if err.abs() < 1e-13 * (1.0 + delta.abs()) {
                return Ok(phi);
            }
            if err * leg.sign > 0.0 {
                hi = phi;
            } else {
                lo = phi;
            }
            let slope = chart.du_g_dphi(phi).unwrap_or(0.0);
            let mut next = if slope.abs() > 1e-14 {
                phi - err / slope
            } else {
                0.5 * (lo + hi)
            };
            if !(lo..=hi).contains(&next) {
                next = 0.5 * (lo + hi);
            }
            if (next - phi).abs() < 1e-15 * (1.0 + phi.abs()) {
                return Ok(next);
            }
            phi = next;
        }
        Err(Error::InversionFailure(chi))
    }

    /// φ at cycle arc u from the reference point (positive direction).
    ///
    /// For genus 1 the arc equals u_g itself; for higher genus it is the
    /// motion parameter that unfolds the per-point u reversals.
    pub fn am(&self, chart: &AdmissibleChart, u: f64) -> Result<f64> {
        if self.rotating {
            let total = self.chi_ref + u;
            let n = (total / self.sweep).floor();
            let frac = total - n * self.sweep;
            let phi = self.invert_sweep(chart, frac)?;
            Ok(phi + n * self.phi_cycle)
        } else {
            let period = 2.0 * self.sweep;
            let total = (self.chi_ref + u).rem_euclid(period);
            if total <= self.sweep {
                self.invert_sweep(chart, total)
            } else {
                self.invert_sweep(chart, period - total)
            }
        }
    }

    /// Sheet sign (direction of u motion) at cycle arc u from the reference.
    pub fn sheet_at(&self, u: f64) -> i8 {
        if self.rotating {
            1
        } else {
            let period = 2.0 * self.sweep;
            let total = (self.chi_ref + u).rem_euclid(period);
            if total <= self.sweep {
                1
            } else {
                -1
            }
        }
    }
}

/// Inverts u(φ) for one divisor point of the chart: the hyperelliptic
/// am function ingredient φ_a^{(i)}(u).
///
/// Builds the inversion table for the component containing `phi_seed`
/// (use the reference 0 or a range endpoint) and evaluates at `u`.
/// Prebuild an [`AmTable`] when evaluating many points.
pub fn am_point(chart: &AdmissibleChart, phi_seed: f64, u: f64) -> Result<f64> {
    let table = AmTable::new(chart, phi_seed)?;
    table.am(chart, u)
}

/// Classical Jacobi-amplitude oracle by direct pendulum integration,
/// independent of the quadrature/Newton machinery.
///
/// * `k_sq ≤ 1` (rotating or classical libration is impossible here since
///   the energy level is 1): integrates φ′′ = −(k²/2) sin 2φ from φ(0) = 0,
///   φ′(0) = 1, so φ′² = 1 − k² sin²φ.  This is am(u, m = k_sq), valid for
///   k_sq < 1 including k_sq < 0.
/// * `k_sq > 1`: the outer librating branch: integrates
///   φ′′ = +(k²/2) sin 2φ from the turning point φ(0) = asin(1/k),
///   φ′(0) = 0, so φ′² = k² sin²φ − 1.
pub fn am_genus1_oracle(k_sq: f64, u: f64) -> f64 {
    am_genus1_oracle_series(k_sq, &[u])[0]
}

/// Oracle evaluated on a sorted grid of u values (single integration pass).
pub fn am_genus1_oracle_series(k_sq: f64, us: &[f64]) -> Vec<f64> {
    let librating = k_sq > 1.0;
    let accel_sign = if librating { 1.0 } else { -1.0 };
    let f = |phi: f64, v: f64| -> (f64, f64) { (v, accel_sign * 0.5 * k_sq * (2.0 * phi).sin()) };
    let (phi0, v0) = if librating {
        ((1.0 / k_sq.sqrt()).asin(), 0.0)
    } else {
        (0.0, 1.0)
    };

    let mut out = Vec::with_capacity(us.len());
    // scale-aware fixed step; RK4 global error ~ h^4 per unit time
    let h_base = 2e-4 / (1.0 + k_sq.abs().sqrt());
    let mut state = (phi0, v0);
    let mut t = 0.0;
    let rk4 = |s: (f64, f64), h: f64| -> (f64, f64) {
        let (k1p, k1v) = f(s.0, s.1);
        let (k2p, k2v) = f(s.0 + 0.5 * h * k1p, s.1 + 0.5 * h * k1v);
        let (k3p, k3v) = f(s.0 + 0.5 * h * k2p, s.1 + 0.5 * h * k2v);
        let (k4p, k4v) = f(s.0 + h * k3p, s.1 + h * k3v);
        (
            s.0 + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
            s.1 + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
        )
    };
    for &u in us {
        debug_assert!(u >= t, "oracle grid must be sorted ascending");
        while t < u {
            let h = h_base.min(u - t);
            state = rk4(state, h);
            t += h;
        }
        out.push(state.0);
    }
    out
}

/// One evaluation of the summed am function along a flow.
#[derive(Debug, Clone)]
pub struct AmEvaluation {
    /// u_g = Σ_i u_g^{(i)} accumulated along the flow.
    pub u: f64,
    /// Per-point angles φ_a^{(i)}.
    pub phis: Vec<f64>,
    /// φ_a = Σ_i φ_a^{(i)}, the hyperelliptic am value.
    pub phi_total: f64,
    /// al_a = e^{i φ_a}, unit modulus.
    pub al: Complex64,
}

/// Assembles am/al evaluations from divisor states sampled along a flow.
///
/// Also verifies ∂_{t₁}Z consistency: ∏ (x^{(i)} − e_a) must equal
/// R · e^{2iφ_a} at every sample (returns `NonRealVelocity` with the
/// residual when the sheet bookkeeping has drifted).
pub fn hyper_am(chart: &AdmissibleChart, states: &[DivisorState]) -> Result<Vec<AmEvaluation>> {
    let e_a = Complex64::new(chart.e_a(), 0.0);
    let r = chart.r_const();
    let mut out = Vec::with_capacity(states.len());
    for state in states {
        let phi_total: f64 = state.phis.iter().sum();
        let al = Complex64::new(0.0, phi_total).exp();
        let tangent = Complex64::new(0.0, 2.0 * phi_total).exp();
        let direct: Complex64 = state
            .phis
            .iter()
            .map(|&phi| chart.chart().x_at(phi) - e_a)
            .product();
        let residual = (direct / r - tangent).norm();
        if residual > 1e-9 {
            return Err(Error::NonRealVelocity(residual));
        }
        out.push(AmEvaluation {
            u: state.u_partial.iter().sum(),
            phis: state.phis.clone(),
            phi_total,
            al,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{Curve, PhiChart};
    use crate::quad::ellip_k_agm;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn chart_014() -> AdmissibleChart {
        let curve = Curve::from_reals(&[0.0, 1.0, 4.0]).unwrap();
        AdmissibleChart::new(PhiChart::new(&curve, 0, &[1, 2]).unwrap()).unwrap()
    }

    fn chart_i2() -> AdmissibleChart {
        let curve = Curve::from_reals(&[-4.0, -1.0, 0.0]).unwrap();
        AdmissibleChart::new(PhiChart::new(&curve, 2, &[0, 1]).unwrap()).unwrap()
    }

    #[test]
    fn am_at_zero_is_reference() {
        let chart = chart_014();
        assert!(am_point(&chart, 0.0, 0.0).unwrap().abs() < 1e-13);
        let chart = chart_i2();
        let phi_l = (1.0 / (2.0 * 2f64.sqrt())).asin();
        assert!((am_point(&chart, FRAC_PI_2, 0.0).unwrap() - phi_l).abs() < 1e-12);
    }

    #[test]
    fn am_round_trips_u_of_phi() {
        let chart = chart_014();
        let u = chart.u_of_phi(FRAC_PI_2).unwrap();
        let phi = am_point(&chart, 0.0, u).unwrap();
        assert!((phi - FRAC_PI_2).abs() < 1e-10);

        let table = AmTable::new(&chart, 0.0).unwrap();
        for i in 0..25 {
            let target = -1.4 + 2.8 * (i as f64) / 24.0;
            let u = chart.u_of_phi(target).unwrap();
            let back = table.am(&chart, u).unwrap();
            assert!((back - target).abs() < 1e-10, "{target} -> {back}");
        }
    }

    #[test]
    fn rotating_advances_two_pi_per_double_cycle() {
        let chart = chart_014();
        let table = AmTable::new(&chart, 0.0).unwrap();
        // cycle arc T advances φ by π; 2T (= 4 quarter periods) gives 2π
        let t = table.cycle_arc();
        let phi0 = table.am(&chart, 0.3).unwrap();
        let phi1 = table.am(&chart, 0.3 + 2.0 * t).unwrap();
        assert!((phi1 - phi0 - 2.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn librating_oscillates_between_turning_points() {
        let chart = chart_i2();
        let table = AmTable::new(&chart, FRAC_PI_2).unwrap();
        let phi_l = (1.0 / (2.0 * 2f64.sqrt())).asin();
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let period = table.cycle_arc();
        for i in 0..400 {
            let u = 3.0 * period * (i as f64) / 399.0;
            let phi = table.am(&chart, u).unwrap();
            min = min.min(phi);
            max = max.max(phi);
        }
        // samples stay inside the admissible interval and approach both
        // turning points (φ(u) is quadratic there, so sampled extrema are
        // only O(Δu²)-close)
        assert!(min >= phi_l - 1e-10 && max <= PI - phi_l + 1e-10);
        assert!(min < phi_l + 1e-2 && max > PI - phi_l - 1e-2);
        // the exact turning points sit at half the up-sweep arc
        let phi_top = table.am(&chart, 0.5 * period).unwrap();
        assert!((phi_top - (PI - phi_l)).abs() < 1e-9);
        // periodicity of the libration
        let a = table.am(&chart, 0.37).unwrap();
        let b = table.am(&chart, 0.37 + period).unwrap();
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn oracle_trivial_values() {
        assert!(am_genus1_oracle(0.0, 0.7) - 0.7 < 1e-12);
        assert!(am_genus1_oracle(-3.0, 0.0).abs() < 1e-14);
        // am(K(m), m) = π/2 with K from the AGM
        let m = 0.5;
        let k = ellip_k_agm(m);
        assert!((am_genus1_oracle(m, k) - FRAC_PI_2).abs() < 1e-9);
    }

    #[test]
    fn hyper_am_assembles_flow_states() {
        use crate::flow::{trajectory, DivisorState, FlowSpec, FlowTarget};
        use crate::reality::{synthesize_curve, PairSign};
        let (_, chart) = synthesize_curve(
            2,
            -2.0,
            &[1.0, 0.5],
            &[PairSign::Positive, PairSign::Positive],
        )
        .unwrap();
        let chart = AdmissibleChart::new(chart).unwrap();
        let init = DivisorState::new(&chart, &[0.3, 1.7], &[1, 1]).unwrap();
        let spec = FlowSpec::new(chart.clone(), FlowTarget::Tangent { rate: 0.25 });
        let traj = trajectory(&spec, &init, 0.8, 60).unwrap();
        let evals = hyper_am(&chart, &traj).unwrap();
        assert_eq!(evals.len(), traj.len());
        for (e, s) in evals.iter().zip(&traj) {
            assert!((e.al.norm() - 1.0).abs() < 1e-13);
            assert!((e.phi_total - s.phis.iter().sum::<f64>()).abs() < 1e-14);
        }
        // u_g accumulates at the requested rate
        let du = evals.last().unwrap().u - evals[0].u;
        assert!((du - 0.25 * 0.8).abs() < 1e-9);

        // genus 1: hyper_am agrees with the am-table inversion
        let curve = crate::curve::Curve::from_reals(&[0.0, 1.0, 4.0]).unwrap();
        let chart =
            AdmissibleChart::new(crate::curve::PhiChart::new(&curve, 0, &[1, 2]).unwrap()).unwrap();
        let table = AmTable::new(&chart, 0.0).unwrap();
        let init = DivisorState::new(&chart, &[0.0], &[1]).unwrap();
        let spec = FlowSpec::new(chart.clone(), FlowTarget::Tangent { rate: 1.0 });
        let traj = trajectory(&spec, &init, 2.5, 40).unwrap();
        let evals = hyper_am(&chart, &traj).unwrap();
        for e in &evals {
            let phi = table.am(&chart, e.u).unwrap();
            assert!((phi - e.phi_total).abs() < 1e-8, "{phi} vs {}", e.phi_total);
        }
    }

    #[test]
    fn am_matches_oracle_rotating() {
        // I-1: dφ/du = sqrt(A) sqrt(1 − k² sin²φ): oracle clock is sqrt(A)·u
        let chart = chart_014();
        let table = AmTable::new(&chart, 0.0).unwrap();
        let h = chart.h_pairs()[0];
        let root_a = h.a.sqrt();
        let k_sq = h.k_squared();
        let period = table.cycle_arc();
        let us: Vec<f64> = (0..300).map(|i| 3.0 * period * i as f64 / 299.0).collect();
        let scaled: Vec<f64> = us.iter().map(|u| u * root_a).collect();
        let oracle = am_genus1_oracle_series(k_sq, &scaled);
        for (u, oracle_phi) in us.iter().zip(&oracle) {
            let phi = table.am(&chart, *u).unwrap();
            assert!(
                (phi - oracle_phi).abs() < 1e-8,
                "u = {u}: {phi} vs {oracle_phi}"
            );
        }
    }

    #[test]
    fn am_matches_oracle_librating() {
        // I-2: dφ/du = sqrt(|A|) sqrt(k² sin²φ − 1): oracle clock sqrt(|A|)·u
        let chart = chart_i2();
        let table = AmTable::new(&chart, FRAC_PI_2).unwrap();
        let h = chart.h_pairs()[0];
        let root_a = (-h.a).sqrt();
        let k_sq = h.k_squared();
        let period = table.cycle_arc();
        let us: Vec<f64> = (0..300).map(|i| 3.0 * period * i as f64 / 299.0).collect();
        let scaled: Vec<f64> = us.iter().map(|u| u * root_a).collect();
        let oracle = am_genus1_oracle_series(k_sq, &scaled);
        for (u, oracle_phi) in us.iter().zip(&oracle) {
            let phi = table.am(&chart, *u).unwrap();
            assert!(
                (phi - oracle_phi).abs() < 1e-8,
                "u = {u}: {phi} vs {oracle_phi}"
            );
        }
    }
}
