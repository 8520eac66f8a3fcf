//! Motion of the degree-g divisor (φ^{(1)}, …, φ^{(g)}) under prescribed
//! velocities in the Abel coordinates, with automatic branch-sheet
//! bookkeeping.
//!
//! Each point carries the pair (φ_i, v_i) with the exact invariant
//! v_i² = P(φ_i), P := ∏_j H_j.  In terms of per-point clock rates r_i the
//! dynamics is polynomial-smooth:
//!
//! ```text
//!   dφ_i/dt = v_i r_i,     dv_i/dt = ½ P′(φ_i) r_i,
//!   du_k^{(i)}/dt = C_k(φ_i) r_i,
//! ```
//!
//! where C_k(φ) = x^{k−1} (dx/dφ) / (2 y) · D(φ) has the denominator D
//! cancelled analytically (|v| = D on shell).  Turning points are ordinary
//! zeros of v: the sign flip of the y-sheet and the φ-reflection of
//! librating motion emerge from the ODE itself, no event detection needed.
//! The clock rates solve the real g×g system fixing d u_g/dt together with
//! the imaginary parts of d u_k/dt for k < g — the directions that span the
//! real slice picked out by the reality conditions (the real parts of the
//! lower u-rates are slaved to u_g on that slice: Re du_{g−1} =
//! du_g/(2 e_a) pointwise).

use num_complex::Complex64;

use crate::contour::AdmissibleChart;
use crate::error::{Error, Result};

/// Requested flow direction in the (realizable) slice coordinates:
/// the rate of u_g plus the rates of Im u_k for k = 1..g−1.
#[derive(Debug, Clone)]
pub enum FlowTarget {
    /// d u_g/dt = rate, all Im u_k frozen: the tangent (t₁) direction.
    Tangent { rate: f64 },
    /// General slice direction: u_g rate and Im u_1..Im u_{g−1} rates.
    Custom { u_g_rate: f64, im_u_rates: Vec<f64> },
}

impl FlowTarget {
    fn rhs(&self, genus: usize) -> Result<Vec<f64>> {
        match self {
            FlowTarget::Tangent { rate } => {
                let mut v = vec![0.0; genus];
                v[genus - 1] = *rate;
                Ok(v)
            }
            FlowTarget::Custom {
                u_g_rate,
                im_u_rates,
            } => {
                if im_u_rates.len() != genus - 1 {
                    return Err(Error::InvalidArgument(format!(
                        "need {} Im-rates for genus {genus}, got {}",
                        genus - 1,
                        im_u_rates.len()
                    )));
                }
                let mut v = im_u_rates.clone();
                v.push(*u_g_rate);
                Ok(v)
            }
        }
    }
}

/// Snapshot of the divisor: angles, y-sheet signs, accumulated per-point
/// u_g integrals and the flow time.
#[derive(Debug, Clone)]
pub struct DivisorState {
    pub phis: Vec<f64>,
    /// Sign of the y-sheet per point (= direction of the per-point motion).
    pub sheets: Vec<i8>,
    /// Accumulated u_g^{(i)} along the flow (real by construction).
    pub u_partial: Vec<f64>,
    pub t: f64,
}

impl DivisorState {
    /// Builds a state at flow time 0; every φ must lie in the admissible
    /// closure.  `sheets` gives the initial motion direction per point
    /// (ignored up to sign at exact turning points).
    pub fn new(chart: &AdmissibleChart, phis: &[f64], sheets: &[i8]) -> Result<Self> {
        if phis.len() != chart.genus() || sheets.len() != chart.genus() {
            return Err(Error::InvalidArgument(format!(
                "need {} angles and sheets",
                chart.genus()
            )));
        }
        for &phi in phis {
            if chart.case().phi_range_containing(phi).is_none() {
                return Err(Error::OutsideAdmissibleRange(phi));
            }
        }
        Ok(Self {
            phis: phis.to_vec(),
            sheets: sheets.iter().map(|&s| if s < 0 { -1 } else { 1 }).collect(),
            u_partial: vec![0.0; phis.len()],
            t: 0.0,
        })
    }

    /// Signed velocities v_i = sheet_i · sqrt(P(φ_i)).
    #[allow(clippy::needless_range_loop)]
    fn v_values(&self, chart: &AdmissibleChart) -> Vec<f64> {
        self.phis
            .iter()
            .zip(&self.sheets)
            .map(|(&phi, &s)| f64::from(s) * chart.p_value(phi).max(0.0).sqrt())
            .collect()
    }
}

/// Flow specification: chart, direction and step control.
#[derive(Debug, Clone)]
pub struct FlowSpec {
    pub chart: AdmissibleChart,
    pub target: FlowTarget,
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
}

impl FlowSpec {
    pub fn new(chart: AdmissibleChart, target: FlowTarget) -> Self {
        Self {
            chart,
            target,
            rtol: 1e-11,
            atol: 1e-13,
            max_step: f64::INFINITY,
        }
    }
}

/// Free-component row coefficient of the clock-rate system for k < g:
/// Im C_k when g − k is odd, Re C_k when g − k is even, with
/// C_k(φ) = du_k/dτ per point; row g is C_g = N(φ).
fn free_row_coefficient(chart: &AdmissibleChart, k: usize, phi: f64) -> f64 {
    let g = chart.genus();
    let c = chart.c();
    let m = k as i32 - g as i32;
    let amp = 2f64.powi(k as i32 - 1)
        * c.powf(k as f64 - (g as f64 + 1.0) / 2.0)
        * phi.sin().powi(k as i32 - 1);
    let phase = f64::from(m) * (phi + std::f64::consts::FRAC_PI_2);
    if (g - k) % 2 == 1 {
        amp * phase.sin()
    } else {
        amp * phase.cos()
    }
}

/// Solves the g×g real system for the per-point clock rates r_i.
#[allow(clippy::needless_range_loop)]
fn clock_rates(chart: &AdmissibleChart, phis: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let g = chart.genus();
    let mut m = vec![vec![0.0; g]; g];
    for (i, &phi) in phis.iter().enumerate() {
        for k in 1..g {
            m[k - 1][i] = free_row_coefficient(chart, k, phi);
        }
        m[g - 1][i] = chart.n_value(phi);
    }
    let mut aug: Vec<Vec<f64>> = m
        .iter()
        .zip(rhs)
        .map(|(row, &b)| {
            let mut r = row.clone();
            r.push(b);
            r
        })
        .collect();
    // Gaussian elimination with partial pivoting
    let scale: f64 = aug
        .iter()
        .map(|r| r[..g].iter().map(|x| x.abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max)
        .max(1e-300);
    for col in 0..g {
        let (pivot_row, pivot_val) = (col..g)
            .map(|r| (r, aug[r][col].abs()))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        if pivot_val < 1e-13 * scale {
            return Err(Error::DegenerateDivisor(format!(
                "clock-rate system singular at phis {phis:?}"
            )));
        }
        aug.swap(col, pivot_row);
        for r in (col + 1)..g {
            let f = aug[r][col] / aug[col][col];
            for c in col..=g {
                aug[r][c] -= f * aug[col][c];
            }
        }
    }
    let mut x = vec![0.0; g];
    for col in (0..g).rev() {
        let mut acc = aug[col][g];
        for c in (col + 1)..g {
            acc -= aug[col][c] * x[c];
        }
        x[col] = acc / aug[col][col];
    }
    Ok(x)
}

/// dφ_i/dt for the requested flow target at the given state.
///
/// The rates are real by construction (the system is assembled over the
/// real slice); a singular clock-rate system signals a degenerate divisor
/// (two points over the same x).
pub fn flow_velocity(
    chart: &AdmissibleChart,
    state: &DivisorState,
    target: &FlowTarget,
) -> Result<Vec<f64>> {
    let rhs = target.rhs(chart.genus())?;
    let rates = clock_rates(chart, &state.phis, &rhs)?;
    let vs = state.v_values(chart);
    Ok(vs.iter().zip(&rates).map(|(v, r)| v * r).collect())
}

/// Achieved complex u_k rates (k = 1..g) for diagnostics: on the real
/// slice Re(du_{g−1}/dt) = du_g/dt / (2 e_a) independently of the target.
pub fn achieved_u_rates(
    chart: &AdmissibleChart,
    state: &DivisorState,
    target: &FlowTarget,
) -> Result<Vec<Complex64>> {
    let g = chart.genus();
    let rhs = target.rhs(g)?;
    let rates = clock_rates(chart, &state.phis, &rhs)?;
    let c = chart.c();
    let mut out = Vec::with_capacity(g);
    for k in 1..=g {
        let mut acc = Complex64::new(0.0, 0.0);
        for (&phi, &r) in state.phis.iter().zip(&rates) {
            let m = k as i32 - g as i32;
            let amp = 2f64.powi(k as i32 - 1)
                * c.powf(k as f64 - (g as f64 + 1.0) / 2.0)
                * phi.sin().powi(k as i32 - 1);
            let phase = f64::from(m) * (phi + std::f64::consts::FRAC_PI_2);
            acc += Complex64::new(amp * phase.cos(), amp * phase.sin()) * r;
        }
        out.push(acc);
    }
    Ok(out)
}

// Dormand–Prince 5(4) coefficients.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Internal packed state: per point (φ, v, u).
fn pack(state: &DivisorState, chart: &AdmissibleChart) -> Vec<f64> {
    let vs = state.v_values(chart);
    let mut y = Vec::with_capacity(3 * state.phis.len());
    for ((&phi, v), &u) in state.phis.iter().zip(vs).zip(&state.u_partial) {
        y.push(phi);
        y.push(v);
        y.push(u);
    }
    y
}

fn unpack(y: &[f64], t: f64) -> DivisorState {
    let g = y.len() / 3;
    let mut phis = Vec::with_capacity(g);
    let mut sheets = Vec::with_capacity(g);
    let mut u_partial = Vec::with_capacity(g);
    for i in 0..g {
        phis.push(y[3 * i]);
        sheets.push(if y[3 * i + 1] < 0.0 { -1 } else { 1 });
        u_partial.push(y[3 * i + 2]);
    }
    DivisorState {
        phis,
        sheets,
        u_partial,
        t,
    }
}

fn rhs_ode(chart: &AdmissibleChart, target_rhs: &[f64], y: &[f64], dy: &mut [f64]) -> Result<()> {
    let g = y.len() / 3;
    let phis: Vec<f64> = (0..g).map(|i| y[3 * i]).collect();
    let rates = clock_rates(chart, &phis, target_rhs)?;
    for i in 0..g {
        let phi = y[3 * i];
        let v = y[3 * i + 1];
        let r = rates[i];
        dy[3 * i] = v * r;
        dy[3 * i + 1] = 0.5 * chart.p_deriv(phi) * r;
        dy[3 * i + 2] = chart.n_value(phi) * r;
    }
    Ok(())
}

/// Advances the state by `dt` with adaptive Dormand–Prince 5(4).
pub fn step(spec: &FlowSpec, state: &DivisorState, dt: f64) -> Result<DivisorState> {
    if dt == 0.0 {
        return Ok(state.clone());
    }
    let chart = &spec.chart;
    let target_rhs = spec.target.rhs(chart.genus())?;
    let mut y = pack(state, chart);
    let mut t = 0.0;
    let dir = dt.signum();
    let t_end = dt;
    let n = y.len();
    let mut h = (dt.abs() * 0.01).min(spec.max_step) * dir;
    let h_min = dt.abs() * 1e-14 + 1e-300;

    let mut k = vec![vec![0.0; n]; 7];
    let mut ytmp = vec![0.0; n];
    let mut iterations = 0usize;
    while (t_end - t) * dir > 1e-15 * dt.abs() {
        iterations += 1;
        if iterations > 50_000_000 {
            return Err(Error::StepFailure(state.t + t));
        }
        if !h.is_finite() || h == 0.0 {
            return Err(Error::StepFailure(state.t + t));
        }
        if (t + h - t_end) * dir > 0.0 {
            h = t_end - t;
        }
        rhs_ode(chart, &target_rhs, &y, &mut k[0])?;
        let mut failed_stage = false;
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += DP_A[s][j] * kj[i];
                }
                ytmp[i] = y[i] + h * acc;
            }
            let _ = DP_C; // stage times unused: the system is autonomous
            if rhs_ode(chart, &target_rhs, &ytmp, &mut k[s]).is_err() {
                failed_stage = true;
                break;
            }
        }
        if failed_stage {
            h *= 0.25;
            if h.abs() < h_min {
                return Err(Error::StepFailure(state.t + t));
            }
            continue;
        }
        // 5th-order solution and embedded error
        let mut err_norm: f64 = 0.0;
        for i in 0..n {
            let mut y5 = 0.0;
            let mut y4 = 0.0;
            for s in 0..7 {
                y5 += DP_B5[s] * k[s][i];
                y4 += DP_B4[s] * k[s][i];
            }
            ytmp[i] = y[i] + h * y5;
            let sc = spec.atol + spec.rtol * y[i].abs().max(ytmp[i].abs());
            err_norm = err_norm.max((h * (y5 - y4)).abs() / sc);
        }
        if err_norm <= 1.0 {
            t += h;
            y.copy_from_slice(&ytmp);
            // re-project v onto the exact shell v² = P(φ); skipped near
            // turning points where the sign of v is about to flip
            for i in 0..(n / 3) {
                let p = chart.p_value(y[3 * i]);
                let v = y[3 * i + 1];
                if p > 0.0 && v * v > 0.5 * p {
                    y[3 * i + 1] = v.signum() * p.sqrt();
                }
            }
        }
        let factor = if !err_norm.is_finite() {
            0.25
        } else if err_norm > 0.0 {
            (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h *= factor;
        if h.abs() > spec.max_step {
            h = spec.max_step * dir;
        }
        if h.abs() < h_min {
            return Err(Error::StepFailure(state.t + t));
        }
    }
    Ok(unpack(&y, state.t + dt))
}

/// Equally spaced samples of the flow over [0, t_span] from `init`.
pub fn trajectory(
    spec: &FlowSpec,
    init: &DivisorState,
    t_span: f64,
    samples: usize,
) -> Result<Vec<DivisorState>> {
    if samples == 0 || t_span == 0.0 {
        return Ok(vec![init.clone()]);
    }
    let mut out = Vec::with_capacity(samples + 1);
    out.push(init.clone());
    let dt = t_span / samples as f64;
    let mut current = init.clone();
    for _ in 0..samples {
        current = step(spec, &current, dt)?;
        out.push(current.clone());
    }
    Ok(out)
}
