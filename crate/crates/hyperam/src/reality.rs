//! Reality conditions on branch points, classification of admissible
//! contours, predicted winding numbers and constructive curve synthesis.
//!
//! For genus 1 the admissible configurations only constrain the signs of
//! e_{b,a} = e_b − e_a (cases I-1, I-2).  For genus ≥ 2 the non-distinguished
//! branch points must split into g pairs with
//!
//! ```text
//!   (e_c − e_a)(e_d − e_a) = e_a²,   e_a < 0,
//! ```
//!
//! which makes every pair constant c_j = −e_a and pins |x − e_a| = −e_a.
//! Each pair is either positive-type (both shifts > 0, factor H_j > 0
//! everywhere) or negative-type (both ≤ 0, H_j ≥ 0 only where
//! sin²φ ≥ 1/k_j²); the admissible w = sin φ set is where the product of
//! the H_j is non-negative.

use crate::curve::{Curve, PhiChart};
use crate::error::{Error, Result};

/// Relative tolerance for realness of branch points and pair products.
pub const REALITY_TOL: f64 = 1e-10;

/// Case labels for admissible charts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseLabel {
    /// Genus 1, both shifts positive: rotating, k ∈ i·ℝ.
    I1,
    /// Genus 1, both shifts non-positive: librating, k > 1.
    I2,
    /// Genus 2, both pairs positive.
    II1,
    /// Genus 2, first pair positive, second negative.
    II2,
    /// Genus 2, both pairs negative, k₁ < k₂ < 1: rotating.
    II3a,
    /// Genus 2, both pairs negative, k₁ ≤ 1 < k₂: inner libration.
    II3b,
    /// Genus 2, both pairs negative, 1 < k₁ < k₂: outer libration.
    II3c,
    /// Any other genus or sign pattern, classified by range intersection.
    GGeneral,
}

impl std::fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CaseLabel::I1 => "I-1",
            CaseLabel::I2 => "I-2",
            CaseLabel::II1 => "II-1",
            CaseLabel::II2 => "II-2",
            CaseLabel::II3a => "II-3a",
            CaseLabel::II3b => "II-3b",
            CaseLabel::II3c => "II-3c",
            CaseLabel::GGeneral => "G-general",
        };
        f.write_str(s)
    }
}

/// Classification of an admissible chart: moduli, admissible w = sin φ
/// ranges and whether the divisor points rotate (full [−1, 1]) or librate.
#[derive(Debug, Clone)]
pub struct CaseClass {
    pub genus: usize,
    pub label: CaseLabel,
    /// k_j² per pair, in chart pair order (real for admissible charts).
    pub k_squares: Vec<f64>,
    /// Closed admissible intervals for w = sin φ, symmetric under w ↦ −w.
    pub w_ranges: Vec<(f64, f64)>,
    /// True when the admissible set is the full [−1, 1].
    pub rotating: bool,
}

impl CaseClass {
    /// Admissible φ intervals, one per connected component of the divisor
    /// circle, derived from the w ranges.
    ///
    /// A librating range [w_lo, w_hi] with 0 < w_lo maps to
    /// [asin(w_lo), π − asin(w_lo)]; its mirror maps to the reflection
    /// through 0.  An inner range [−w_b, w_b] gives [−asin(w_b), asin(w_b)]
    /// and the matching component around π.
    pub fn phi_ranges(&self) -> Vec<(f64, f64)> {
        use std::f64::consts::PI;
        if self.rotating {
            return vec![(-PI, PI)];
        }
        let mut out = Vec::new();
        for &(lo, hi) in &self.w_ranges {
            if lo > 0.0 {
                let a = lo.asin();
                out.push((a, PI - a));
            } else if hi < 0.0 {
                let a = (-hi).asin();
                out.push((-PI + a, -a));
            } else {
                let b = hi.asin();
                out.push((-b, b));
                out.push((PI - b, PI + b));
            }
        }
        out
    }

    /// The admissible φ interval containing `phi` (compared modulo 2π).
    pub fn phi_range_containing(&self, phi: f64) -> Option<(f64, f64)> {
        use std::f64::consts::PI;
        if self.rotating {
            return Some((-PI, PI));
        }
        let tol = 1e-12;
        for &(lo, hi) in &self.phi_ranges() {
            let mid = 0.5 * (lo + hi);
            let p = phi - (2.0 * PI) * ((phi - mid) / (2.0 * PI)).round();
            if p >= lo - tol && p <= hi + tol {
                return Some((lo, hi));
            }
        }
        None
    }
}

/// Outcome of the reality check for (curve, a).
#[derive(Debug, Clone)]
pub struct RealityReport {
    pub passed: bool,
    /// Branch-point index pairs (c_j, d_j), each normalized e_c ≤ e_d.
    pub pairs: Vec<(usize, usize)>,
    /// The distinguished point e_a (real part).
    pub e_a: f64,
    /// Modulus of the tangent product: ∏ c_j (equals |e_a|^g for g ≥ 2).
    pub r_const: f64,
    /// Human-readable reasons when the check fails.
    pub violations: Vec<String>,
    /// Informational notes (e.g. the genus-1 product-condition exemption).
    pub notes: Vec<String>,
}

impl RealityReport {
    /// σ ordering induced by the pairs: slots (2j, 2j+1) hold pair j.
    pub fn sigma(&self) -> Vec<usize> {
        self.pairs.iter().flat_map(|&(c, d)| [c, d]).collect()
    }
}

/// Checks the reality condition for the curve with distinguished index `a`.
///
/// Genus 1 follows the sign-pattern criterion only; genus ≥ 2 requires
/// e_a < 0 and a perfect matching of the remaining branch points with pair
/// products (e_c − e_a)(e_d − e_a) = e_a².
pub fn check_reality(curve: &Curve, a: usize) -> Result<RealityReport> {
    let scale = curve.scale();
    for (i, e) in curve.branch_points().iter().enumerate() {
        if e.im.abs() > REALITY_TOL * scale {
            return Err(Error::NonRealBranchPoint {
                index: i,
                imag: e.im,
            });
        }
    }
    let reals: Vec<f64> = curve.branch_points().iter().map(|e| e.re).collect();
    let e_a = reals[a];
    let others: Vec<usize> = (0..reals.len()).filter(|&i| i != a).collect();
    let g = curve.genus();

    if g == 1 {
        let (i, j) = (others[0], others[1]);
        let p = reals[i] - e_a;
        let q = reals[j] - e_a;
        let pair = if reals[i] <= reals[j] { (i, j) } else { (j, i) };
        let c = (p * q).abs().sqrt();
        if (p > 0.0 && q > 0.0) || (p <= 0.0 && q <= 0.0) {
            return Ok(RealityReport {
                passed: true,
                pairs: vec![pair],
                e_a,
                r_const: c,
                violations: vec![],
                notes: vec![
                    "genus 1 uses the sign-pattern condition only; the pair-product \
                     constraint applies from genus 2 on"
                        .to_string(),
                ],
            });
        }
        return Ok(RealityReport {
            passed: false,
            pairs: vec![],
            e_a,
            r_const: c,
            violations: vec![format!(
                "shifts e_b - e_a = {p} and {q} mix signs (excluded case I-0)"
            )],
            notes: vec![],
        });
    }

    // genus >= 2
    let mut violations = Vec::new();
    if e_a >= 0.0 {
        violations.push(format!("distinguished point e_a = {e_a} must be negative"));
    }
    let target = e_a * e_a;
    let tol = REALITY_TOL * target.max(1.0);

    fn matching(rest: &[usize], reals: &[f64], e_a: f64, tol: f64) -> Option<Vec<(usize, usize)>> {
        if rest.is_empty() {
            return Some(vec![]);
        }
        let first = rest[0];
        for k in 1..rest.len() {
            let partner = rest[k];
            let prod = (reals[first] - e_a) * (reals[partner] - e_a);
            if (prod - e_a * e_a).abs() <= tol {
                let remaining: Vec<usize> = rest[1..]
                    .iter()
                    .copied()
                    .filter(|&i| i != partner)
                    .collect();
                if let Some(mut tail) = matching(&remaining, reals, e_a, tol) {
                    let pair = if reals[first] <= reals[partner] {
                        (first, partner)
                    } else {
                        (partner, first)
                    };
                    tail.insert(0, pair);
                    return Some(tail);
                }
            }
        }
        None
    }

    let found = if violations.is_empty() {
        matching(&others, &reals, e_a, tol)
    } else {
        None
    };

    match found {
        Some(mut pairs) => {
            // deterministic order: positive-type pairs first, then by lower member
            pairs.sort_by(|x, y| {
                let pos_x = reals[x.0] - e_a > 0.0;
                let pos_y = reals[y.0] - e_a > 0.0;
                pos_y
                    .cmp(&pos_x)
                    .then(reals[x.0].partial_cmp(&reals[y.0]).unwrap())
            });
            Ok(RealityReport {
                passed: true,
                pairs,
                e_a,
                r_const: (-e_a).powi(g as i32),
                violations: vec![],
                notes: vec![],
            })
        }
        None => {
            if violations.is_empty() {
                violations.push(format!(
                    "no pairing of the non-distinguished branch points achieves \
                     products e_a² = {target}"
                ));
            }
            Ok(RealityReport {
                passed: false,
                pairs: vec![],
                e_a,
                r_const: (-e_a).powi(g as i32),
                violations,
                notes: vec![],
            })
        }
    }
}

/// Classifies an admissible chart into the standard cases.
///
/// Expects `chart.sigma()` to pair slots per a passing [`check_reality`].
pub fn classify_case(chart: &PhiChart) -> Result<CaseClass> {
    let g = chart.genus();
    let h = chart.h_coeffs()?; // errors with UnclassifiableSigns on mixed pairs
    let k_squares: Vec<f64> = h.iter().map(|p| p.k_squared()).collect();

    // positive-type pair: A > 0 (k² < 0); negative-type: A < 0 (k real)
    let negative: Vec<usize> = (0..g).filter(|&j| h[j].a < 0.0).collect();

    if g == 1 {
        if negative.is_empty() {
            return Ok(CaseClass {
                genus: 1,
                label: CaseLabel::I1,
                k_squares,
                w_ranges: vec![(-1.0, 1.0)],
                rotating: true,
            });
        }
        let k = k_squares[0].sqrt();
        if k <= 1.0 {
            return Err(Error::EmptyAdmissibleRange(format!(
                "genus-1 librating modulus k = {k} does not exceed 1"
            )));
        }
        return Ok(CaseClass {
            genus: 1,
            label: CaseLabel::I2,
            k_squares,
            w_ranges: vec![(1.0 / k, 1.0), (-1.0, -1.0 / k)],
            rotating: false,
        });
    }

    let (w_ranges, rotating) = admissible_w_ranges(&h)?;
    let label = if g == 2 {
        match negative.len() {
            0 => CaseLabel::II1,
            1 => CaseLabel::II2,
            _ => {
                let mut ks: Vec<f64> = k_squares.iter().map(|k2| k2.sqrt()).collect();
                ks.sort_by(|x, y| x.partial_cmp(y).unwrap());
                if ks[1] < 1.0 {
                    CaseLabel::II3a
                } else if ks[0] > 1.0 {
                    CaseLabel::II3c
                } else {
                    CaseLabel::II3b
                }
            }
        }
    } else {
        CaseLabel::GGeneral
    };
    // II-3c keeps the outer component as its primary ranges
    let w_ranges = if label == CaseLabel::II3c {
        let k1 = k_squares
            .iter()
            .map(|k2| k2.sqrt())
            .fold(f64::INFINITY, f64::min);
        vec![(1.0 / k1, 1.0), (-1.0, -1.0 / k1)]
    } else {
        w_ranges
    };
    Ok(CaseClass {
        genus: g,
        label,
        k_squares,
        w_ranges,
        rotating,
    })
}

/// Admissible w-ranges from the sign pattern of ∏ H_j(w), H_j = A_j + B_j w².
///
/// On s = |w| ∈ [0, 1] each negative-type pair contributes a threshold
/// t_j = 1/k_j below which its factor is negative; the product is
/// non-negative exactly where the count of active negative factors is even.
fn admissible_w_ranges(h: &[crate::curve::HPair]) -> Result<(Vec<(f64, f64)>, bool)> {
    let mut thresholds: Vec<f64> = Vec::new();
    for pair in h {
        if pair.a < 0.0 {
            thresholds.push((-pair.a / pair.b).sqrt()); // = 1/k_j
        }
    }
    if thresholds.is_empty() {
        return Ok((vec![(-1.0, 1.0)], true));
    }
    thresholds.sort_by(|x, y| x.partial_cmp(y).unwrap());

    let mut cuts: Vec<f64> = thresholds.iter().copied().filter(|&t| t < 1.0).collect();
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let always_active = thresholds.iter().filter(|&&t| t >= 1.0).count();

    // segments of [0,1] between consecutive thresholds
    let mut bounds = vec![0.0];
    bounds.extend(cuts.iter().copied());
    bounds.push(1.0);
    let mut pos_segments: Vec<(f64, f64)> = Vec::new();
    for w in bounds.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi - lo < 1e-14 {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let active = always_active + cuts.iter().filter(|&&t| t > mid).count();
        if active % 2 == 0 {
            pos_segments.push((lo, hi));
        }
    }
    if pos_segments.is_empty() {
        return Err(Error::EmptyAdmissibleRange(
            "the product of the H_j factors is negative on all of [-1, 1]".into(),
        ));
    }
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for seg in pos_segments {
        match merged.last_mut() {
            Some(last) if (last.1 - seg.0).abs() < 1e-14 => last.1 = seg.1,
            _ => merged.push(seg),
        }
    }
    let rotating = merged.len() == 1 && merged[0].0 == 0.0 && merged[0].1 == 1.0;
    if rotating {
        return Ok((vec![(-1.0, 1.0)], true));
    }
    // symmetrize to signed w ranges: positive side, then mirrored negatives
    let mut out = Vec::new();
    for &(lo, hi) in &merged {
        if lo == 0.0 {
            out.push((-hi, hi));
        } else {
            out.push((lo, hi));
        }
    }
    for &(lo, hi) in merged.iter().rev() {
        if lo > 0.0 {
            out.push((-hi, -lo));
        }
    }
    Ok((out, false))
}

/// Predicted winding number of the tangent map per the case label.
pub fn predicted_winding(case: &CaseClass) -> i64 {
    match case.label {
        CaseLabel::I1 => 1,
        CaseLabel::I2 => 0,
        CaseLabel::II1 => 2,
        CaseLabel::II2 => 0,
        CaseLabel::II3a => 2,
        CaseLabel::II3b | CaseLabel::II3c => 0,
        CaseLabel::GGeneral => {
            if case.rotating {
                case.genus as i64
            } else {
                0
            }
        }
    }
}

/// Sign choice for one synthesized pair: offsets added to or subtracted
/// from e_a.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSign {
    Positive,
    Negative,
}

/// Builds a curve guaranteed to satisfy the reality condition: for each
/// ratio r_j > 0 the pair is e_a ± r_j and e_a ± e_a²/r_j.
///
/// Returns the curve (distinguished point first) and its chart with the
/// pairing σ in construction order.
pub fn synthesize_curve(
    genus: usize,
    e_a: f64,
    ratios: &[f64],
    signs: &[PairSign],
) -> Result<(Curve, PhiChart)> {
    if genus == 0 || ratios.len() != genus || signs.len() != genus {
        return Err(Error::InvalidArgument(format!(
            "need {genus} ratios and signs, got {} and {}",
            ratios.len(),
            signs.len()
        )));
    }
    if e_a >= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "distinguished point e_a = {e_a} must be negative"
        )));
    }
    let mut points = vec![e_a];
    for (j, (&r, &sign)) in ratios.iter().zip(signs).enumerate() {
        if r <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "ratio r_{j} = {r} must be > 0"
            )));
        }
        let partner = e_a * e_a / r;
        if (r - partner).abs() < 1e-9 * r.max(partner) {
            return Err(Error::DegenerateSynthesis(format!(
                "ratio r_{j} = {r} equals |e_a|; both pair members coincide"
            )));
        }
        let (c, d) = match sign {
            PairSign::Positive => (e_a + r, e_a + partner),
            PairSign::Negative => (e_a - r, e_a - partner),
        };
        points.push(c);
        points.push(d);
    }
    let scale = points.iter().map(|x| x.abs()).fold(0.0_f64, f64::max) + 1.0;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            if (points[i] - points[j]).abs() < 1e-9 * scale {
                return Err(Error::DegenerateSynthesis(format!(
                    "branch points #{i} and #{j} collide at {}",
                    points[i]
                )));
            }
        }
    }
    let curve = Curve::from_reals(&points)?;
    let sigma: Vec<usize> = (1..points.len()).collect();
    let chart = PhiChart::new(&curve, 0, &sigma)?;
    Ok((curve, chart))
}

/// Builds the chart for a curve/index that passed [`check_reality`], using
/// the pairing found by the checker.
pub fn admissible_chart(curve: &Curve, a: usize) -> Result<(PhiChart, RealityReport)> {
    let report = check_reality(curve, a)?;
    if !report.passed {
        return Err(Error::EmptyAdmissibleRange(report.violations.join("; ")));
    }
    let chart = PhiChart::new(curve, a, &report.sigma())?;
    Ok((chart, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn genus_two_pairing_found() {
        let curve = Curve::from_reals(&[-2.0, -1.0, 2.0, -1.5, 6.0]).unwrap();
        let report = check_reality(&curve, 0).unwrap();
        assert!(report.passed, "{:?}", report.violations);
        // pairs {(-1, 2), (-1.5, 6)} with products (1)(4) = (0.5)(8) = e_a²,
        // ordered by lower member
        assert_eq!(report.pairs, vec![(3, 4), (1, 2)]);
        assert!((report.r_const - 4.0).abs() < 1e-12);
    }

    #[test]
    fn genus_one_sign_condition() {
        let curve = Curve::from_reals(&[0.0, 1.0, 4.0]).unwrap();
        let report = check_reality(&curve, 0).unwrap();
        assert!(report.passed);
        assert_eq!(report.pairs, vec![(1, 2)]);
    }

    #[test]
    fn genus_two_failing_product() {
        // (0.5)(7) = 3.5 != 4 for the only viable second pair
        let curve = Curve::from_reals(&[-2.0, -1.0, 2.0, -1.5, 5.0]).unwrap();
        let report = check_reality(&curve, 0).unwrap();
        assert!(!report.passed);
        assert!(report.violations[0].contains("no pairing"));
    }

    #[test]
    fn complex_branch_point_rejected() {
        let pts = [
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.5),
            Complex64::new(4.0, 0.0),
        ];
        let curve = Curve::new(&pts).unwrap();
        assert!(matches!(
            check_reality(&curve, 0),
            Err(Error::NonRealBranchPoint { index: 1, .. })
        ));
    }

    #[test]
    fn classify_examples() {
        let curve = Curve::from_reals(&[0.0, 1.0, 4.0]).unwrap();
        let chart = PhiChart::new(&curve, 0, &[1, 2]).unwrap();
        let case = classify_case(&chart).unwrap();
        assert_eq!(case.label, CaseLabel::I1);
        assert_eq!(case.w_ranges, vec![(-1.0, 1.0)]);
        assert!(case.rotating);

        let curve = Curve::from_reals(&[-4.0, -1.0, 0.0]).unwrap();
        let chart = PhiChart::new(&curve, 2, &[0, 1]).unwrap();
        let case = classify_case(&chart).unwrap();
        assert_eq!(case.label, CaseLabel::I2);
        let k = 2.0 * 2f64.sqrt();
        assert!((case.k_squares[0] - 8.0).abs() < 1e-12);
        assert!((case.w_ranges[0].0 - 1.0 / k).abs() < 1e-13);
        assert!((case.w_ranges[0].1 - 1.0).abs() < 1e-15);
        assert!((case.w_ranges[1].0 + 1.0).abs() < 1e-15);
        assert!((case.w_ranges[1].1 + 1.0 / k).abs() < 1e-13);
        assert!(!case.rotating);

        let curve = Curve::from_reals(&[-2.0, -1.0, 2.0, -1.5, 6.0]).unwrap();
        let (chart, _) = admissible_chart(&curve, 0).unwrap();
        let case = classify_case(&chart).unwrap();
        assert_eq!(case.label, CaseLabel::II1);
    }

    #[test]
    fn mixed_pair_is_unclassifiable() {
        let curve = Curve::from_reals(&[0.0, 1.0, -1.0]).unwrap();
        let chart = PhiChart::new(&curve, 0, &[1, 2]).unwrap();
        assert!(matches!(
            classify_case(&chart),
            Err(Error::UnclassifiableSigns(1, 2))
        ));
    }

    #[test]
    fn synthesize_example_curve() {
        let (curve, _) = synthesize_curve(
            2,
            -2.0,
            &[1.0, 0.5],
            &[PairSign::Positive, PairSign::Positive],
        )
        .unwrap();
        let got: Vec<f64> = curve.branch_points().iter().map(|e| e.re).collect();
        assert_eq!(got, vec![-2.0, -1.0, 2.0, -1.5, 6.0]);
    }

    #[test]
    fn synthesize_degenerate_ratio() {
        assert!(matches!(
            synthesize_curve(1, -1.0, &[1.0], &[PairSign::Positive]),
            Err(Error::DegenerateSynthesis(_))
        ));
    }

    #[test]
    fn synthesize_mixed_signs_is_ii2() {
        let (curve, chart) = synthesize_curve(
            2,
            -2.0,
            &[1.0, 0.5],
            &[PairSign::Positive, PairSign::Negative],
        )
        .unwrap();
        let case = classify_case(&chart).unwrap();
        assert_eq!(case.label, CaseLabel::II2);
        let got: Vec<f64> = curve.branch_points().iter().map(|e| e.re).collect();
        assert_eq!(got, vec![-2.0, -1.0, 2.0, -2.5, -10.0]);
    }

    #[test]
    fn ii3_sublabels() {
        // negative pairs; k_j = 2 sqrt(|e_a| r) / |r - |e_a|| in the r parametrization
        // r far from |e_a| gives small k (II-3a); r near |e_a| gives large k.
        let (_, chart) = synthesize_curve(
            2,
            -2.0,
            &[0.05, 30.0],
            &[PairSign::Negative, PairSign::Negative],
        )
        .unwrap();
        let case = classify_case(&chart).unwrap();
        assert_eq!(case.label, CaseLabel::II3a);
        assert!(case.rotating);

        let (_, chart) = synthesize_curve(
            2,
            -2.0,
            &[1.5, 0.05],
            &[PairSign::Negative, PairSign::Negative],
        )
        .unwrap();
        let case = classify_case(&chart).unwrap();
        assert_eq!(case.label, CaseLabel::II3b);

        let (_, chart) = synthesize_curve(
            2,
            -2.0,
            &[1.5, 2.8],
            &[PairSign::Negative, PairSign::Negative],
        )
        .unwrap();
        let case = classify_case(&chart).unwrap();
        assert_eq!(case.label, CaseLabel::II3c);
    }

    #[test]
    fn synthesized_curves_always_pass() {
        let mut state = 0x1234_5678_9abc_def0u64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for trial in 0..60 {
            let g = 1 + (trial % 3);
            let e_a = -(0.3 + 3.0 * next());
            let ratios: Vec<f64> = (0..g).map(|_| 0.2 + 4.0 * next()).collect();
            let signs: Vec<PairSign> = (0..g)
                .map(|_| {
                    if next() < 0.5 {
                        PairSign::Positive
                    } else {
                        PairSign::Negative
                    }
                })
                .collect();
            let Ok((curve, _chart)) = synthesize_curve(g, e_a, &ratios, &signs) else {
                continue; // collision between random pairs; skip
            };
            let report = check_reality(&curve, 0).unwrap();
            assert!(
                report.passed,
                "reality failed for {:?}",
                curve.branch_points()
            );
            for &(c, d) in &report.pairs {
                let p = curve.branch_point(c).re - e_a;
                let q = curve.branch_point(d).re - e_a;
                assert!((p * q - e_a * e_a).abs() < 1e-12 * (e_a * e_a));
            }
        }
    }

    #[test]
    fn classification_invariant_under_pair_permutation() {
        let (curve, _) = synthesize_curve(
            2,
            -1.5,
            &[0.4, 2.0],
            &[PairSign::Negative, PairSign::Negative],
        )
        .unwrap();
        let base = PhiChart::new(&curve, 0, &[1, 2, 3, 4]).unwrap();
        let swapped_members = PhiChart::new(&curve, 0, &[2, 1, 4, 3]).unwrap();
        let swapped_pairs = PhiChart::new(&curve, 0, &[3, 4, 1, 2]).unwrap();
        let c0 = classify_case(&base).unwrap();
        let c1 = classify_case(&swapped_members).unwrap();
        let c2 = classify_case(&swapped_pairs).unwrap();
        assert_eq!(c0.label, c1.label);
        assert_eq!(c0.label, c2.label);
        for (a, b) in c0.w_ranges.iter().zip(&c1.w_ranges) {
            assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
        }
        for (a, b) in c0.w_ranges.iter().zip(&c2.w_ranges) {
            assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
        }
    }

    #[test]
    fn range_endpoints_lie_on_moduli() {
        let (_, chart) = synthesize_curve(
            2,
            -2.0,
            &[0.3, 3.0],
            &[PairSign::Negative, PairSign::Negative],
        )
        .unwrap();
        let case = classify_case(&chart).unwrap();
        let mut allowed = vec![1.0, -1.0];
        for &k2 in &case.k_squares {
            if k2 > 0.0 {
                allowed.push(1.0 / k2.sqrt());
                allowed.push(-1.0 / k2.sqrt());
            }
        }
        for &(lo, hi) in &case.w_ranges {
            for v in [lo, hi] {
                assert!(
                    allowed.iter().any(|&a| (a - v).abs() < 1e-12),
                    "endpoint {v} not a modulus reciprocal"
                );
            }
        }
        for &(lo, hi) in &case.w_ranges {
            assert!(
                case.w_ranges
                    .iter()
                    .any(|&(l2, h2)| (l2 + hi).abs() < 1e-12 && (h2 + lo).abs() < 1e-12),
                "range ({lo},{hi}) has no mirror"
            );
        }
    }

    #[test]
    fn predicted_winding_table() {
        let mk = |label| CaseClass {
            genus: 2,
            label,
            k_squares: vec![],
            w_ranges: vec![],
            rotating: false,
        };
        assert_eq!(predicted_winding(&mk(CaseLabel::I1)), 1);
        assert_eq!(predicted_winding(&mk(CaseLabel::I2)), 0);
        assert_eq!(predicted_winding(&mk(CaseLabel::II1)), 2);
        assert_eq!(predicted_winding(&mk(CaseLabel::II2)), 0);
        assert_eq!(predicted_winding(&mk(CaseLabel::II3a)), 2);
        assert_eq!(predicted_winding(&mk(CaseLabel::II3b)), 0);
        assert_eq!(predicted_winding(&mk(CaseLabel::II3c)), 0);
    }

    #[test]
    fn perturbed_pairing_is_rejected() {
        let (curve, _) = synthesize_curve(
            2,
            -2.0,
            &[1.0, 0.5],
            &[PairSign::Positive, PairSign::Positive],
        )
        .unwrap();
        let mut pts: Vec<f64> = curve.branch_points().iter().map(|e| e.re).collect();
        pts[2] += 1e-3 * curve.scale();
        let perturbed = Curve::from_reals(&pts).unwrap();
        let report = check_reality(&perturbed, 0).unwrap();
        assert!(!report.passed);
    }
}
