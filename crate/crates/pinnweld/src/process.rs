//! Welding schedule, welding-control substitute model, and electric contact
//! heat at the faying surface.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::material::{HardnessModel, MaterialTable};

/// Current schedule: preheat plateau, linear upslope, main weld, hold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeldSchedule {
    /// Preheat current in kA.
    pub i_preheat_ka: f64,
    /// Main weld current in kA.
    pub i_max_ka: f64,
    /// Schedule breakpoints in ms: preheat end, upslope end, weld end, hold end.
    pub breakpoints_ms: [f64; 4],
    /// Apparent electrode-sheet contact area in mm².
    pub apparent_area_mm2: f64,
}

impl WeldSchedule {
    pub fn new(i_max_ka: f64) -> Self {
        Self {
            i_preheat_ka: 12.0,
            i_max_ka,
            breakpoints_ms: [400.0, 470.0, 560.0, 760.0],
            apparent_area_mm2: 79.0,
        }
    }

    /// End of the hold phase in ms.
    pub fn t_end_ms(&self) -> f64 {
        self.breakpoints_ms[3]
    }

    /// End of the main weld (current switch-off) in ms.
    pub fn t_weld_end_ms(&self) -> f64 {
        self.breakpoints_ms[2]
    }

    /// Current density in A/mm² at time `t` ms.
    ///
    /// Piecewise: preheat plateau, linear upslope, main plateau, zero during
    /// hold. Continuous at the first two breakpoints, drops to zero after
    /// weld end.
    pub fn current_density(&self, t_ms: f64) -> Result<f64> {
        let [t_pt, t_up, t_weld, t_hold] = self.breakpoints_ms;
        if t_ms < 0.0 || t_ms > t_hold {
            return Err(Error::Domain(format!(
                "schedule time {t_ms} ms outside [0, {t_hold}]"
            )));
        }
        let j_pt = self.i_preheat_ka * 1e3 / self.apparent_area_mm2;
        let j_max = self.i_max_ka * 1e3 / self.apparent_area_mm2;
        Ok(if t_ms <= t_pt {
            j_pt
        } else if t_ms <= t_up {
            j_pt + (j_max - j_pt) * (t_ms - t_pt) / (t_up - t_pt)
        } else if t_ms <= t_weld {
            j_max
        } else {
            0.0
        })
    }

    pub fn validate(&self) -> Result<()> {
        let b = &self.breakpoints_ms;
        if !(0.0 < b[0] && b[0] < b[1] && b[1] < b[2] && b[2] < b[3]) {
            return Err(Error::Config("schedule breakpoints must be strictly increasing".into()));
        }
        if self.i_preheat_ka <= 0.0 || self.i_max_ka <= 0.0 || self.apparent_area_mm2 <= 0.0 {
            return Err(Error::Config("schedule currents and area must be positive".into()));
        }
        Ok(())
    }
}

/// Discrete PID constants for the welding-control substitute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PIDParams {
    /// Proportional constant, dimensionless.
    pub k_p: f64,
    /// Integral constant in 1/s.
    pub k_i: f64,
    /// Derivative constant in s.
    pub k_d: f64,
    /// Control step in ms.
    pub dt_ms: f64,
    /// Number of recent steps kept in the integral accumulator.
    pub window: usize,
}

impl Default for PIDParams {
    fn default() -> Self {
        // Machine constants estimated from torque/force data.
        Self { k_p: 5.3, k_i: 0.2, k_d: 0.003, dt_ms: 1.0, window: 50 }
    }
}

/// The three PID feature series: proportional, windowed integral (already
/// multiplied by Δt in seconds) and backward difference quotient.
///
/// `pid_response` is exactly `k_p·f1 + k_i·f2 + k_d·f3`, which also makes the
/// least-squares fit in [`fit_pid`] exact.
fn pid_features(errors: &[f64], dt_ms: f64, window: usize) -> [Vec<f64>; 3] {
    let dt_s = dt_ms * 1e-3;
    let n = errors.len();
    let mut f1 = Vec::with_capacity(n);
    let mut f2 = Vec::with_capacity(n);
    let mut f3 = Vec::with_capacity(n);
    let mut acc = 0.0;
    for tau in 0..n {
        let e = errors[tau];
        acc += e;
        if window > 0 && tau >= window {
            acc -= errors[tau - window];
        }
        let e_prev = if tau == 0 { 0.0 } else { errors[tau - 1] };
        f1.push(e);
        f2.push(acc * dt_s);
        f3.push((e - e_prev) / dt_s);
    }
    [f1, f2, f3]
}

/// Discrete PID response to an error series, sampled at the control step.
pub fn pid_response(errors: &[f64], k: &PIDParams) -> Vec<f64> {
    let [f1, f2, f3] = pid_features(errors, k.dt_ms, k.window);
    (0..errors.len())
        .map(|i| k.k_p * f1[i] + k.k_i * f2[i] + k.k_d * f3[i])
        .collect()
}

/// Estimate PID constants by minimizing the MSE between the recorded torque
/// and the PID response to the force error `e(τ) = F0 − k_spring·x_s(τ)`.
///
/// The response is linear in (K_p, K_i, K_d), so the argmin is the exact
/// solution of the 3×3 normal equations. Degenerate inputs where the feature
/// matrix has no unique minimizer raise a singular-fit error, except the
/// all-zero case which returns (0, 0, 0) as the documented tie-break.
pub fn fit_pid(
    torque: &[f64],
    displacement: &[f64],
    f0: f64,
    k_spring: f64,
    shape: &PIDParams,
) -> Result<PIDParams> {
    if torque.len() != displacement.len() {
        return Err(Error::Data(format!(
            "torque ({}) and displacement ({}) lengths differ",
            torque.len(),
            displacement.len()
        )));
    }
    if torque.len() < 10 {
        return Err(Error::Data("need at least 10 samples to fit PID constants".into()));
    }
    let errors: Vec<f64> = displacement.iter().map(|&x| f0 - k_spring * x).collect();
    let span = |s: &[f64]| {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in s {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (hi - lo, lo.abs().max(hi.abs()))
    };
    let (e_span, e_mag) = span(&errors);
    let (t_span, t_mag) = span(torque);
    if e_mag == 0.0 && t_mag == 0.0 {
        // Any constants fit a zero/zero pair; documented tie-break.
        return Ok(PIDParams { k_p: 0.0, k_i: 0.0, k_d: 0.0, ..*shape });
    }
    if e_span <= 1e-12 * (1.0 + e_mag) || t_span <= 1e-12 * (1.0 + t_mag) {
        return Err(Error::SingularFit(
            "constant torque or error signal cannot identify PID constants".into(),
        ));
    }
    let feats = pid_features(&errors, shape.dt_ms, shape.window);

    // Normal equations A k = b with A = ΦᵀΦ, b = Φᵀy.
    let mut a = [[0.0f64; 3]; 3];
    let mut b = [0.0f64; 3];
    for t in 0..torque.len() {
        let phi = [feats[0][t], feats[1][t], feats[2][t]];
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] += phi[i] * phi[j];
            }
            b[i] += phi[i] * torque[t];
        }
    }

    let scale = (0..3).map(|i| a[i][i]).fold(0.0f64, f64::max);
    if scale == 0.0 {
        return if torque.iter().all(|&y| y == 0.0) {
            Ok(PIDParams { k_p: 0.0, k_i: 0.0, k_d: 0.0, ..*shape })
        } else {
            Err(Error::SingularFit("error series is identically zero".into()))
        };
    }

    let det = det3(&a);
    if det.abs() <= 1e-12 * scale.powi(3) {
        return Err(Error::SingularFit("feature matrix is rank-deficient (constant signals?)".into()));
    }
    let k = solve3(&a, &b, det);
    Ok(PIDParams { k_p: k[0], k_i: k[1], k_d: k[2], ..*shape })
}

fn det3(a: &[[f64; 3]; 3]) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

fn solve3(a: &[[f64; 3]; 3], b: &[f64; 3], det: f64) -> [f64; 3] {
    let mut out = [0.0; 3];
    for col in 0..3 {
        let mut m = *a;
        for row in 0..3 {
            m[row][col] = b[row];
        }
        out[col] = det3(&m) / det;
    }
    out
}

/// Measured dynamic displacement: thermal expansion minus the control
/// response. A control response exceeding the expansion is physically
/// impossible, so the difference must stay non-negative up to rounding.
pub fn measured_displacement(u_th: &[f64], x_s: &[f64]) -> Vec<f64> {
    assert_eq!(u_th.len(), x_s.len(), "series lengths differ");
    u_th.iter()
        .zip(x_s)
        .map(|(&u, &x)| {
            let d = u - x;
            debug_assert!(d >= -1e-9, "control response exceeds thermal expansion: {d}");
            d
        })
        .collect()
}

/// Real (load-bearing) contact area in mm²: nπa² = F/H.
pub fn real_contact_area(force_n: f64, hardness: f64) -> f64 {
    force_n / hardness
}

/// Contact-heat model selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactModel {
    /// Inverse model with a learnable contact-spot count n.
    AInverse,
    /// Forward model without learnable parameters.
    BForward,
}

/// Electric contact configuration at the faying surface.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContactConfig {
    pub model: ContactModel,
    /// Contact-spot count; learnable for model A.
    pub n_spots: f64,
    /// Film resistivity in Ω·mm.
    pub rho_film: f64,
    /// Film thickness in mm; also the thickness of the faying-surface band
    /// over which the contact heat acts as a volumetric source.
    pub l_film: f64,
    /// Electrode force in N.
    pub force_n: f64,
    /// Substitute spring constant of the welding arm in N/mm.
    pub k_spring: f64,
    /// Weight the 2D contact heat by the Hertzian pressure profile instead
    /// of uniformly across the radius.
    #[serde(default)]
    pub hertzian_weighting: bool,
}

impl Default for ContactConfig {
    fn default() -> Self {
        Self {
            model: ContactModel::AInverse,
            n_spots: 120_000.0,
            rho_film: 1e5,
            l_film: 1e-5,
            force_n: 5000.0,
            k_spring: 6_666.0,
            hertzian_weighting: false,
        }
    }
}

impl ContactConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_spots < 1.0 {
            return Err(Error::Config(format!(
                "contact-spot count {} rejected: n < 1 is the hyperbolic regime",
                self.n_spots
            )));
        }
        if self.rho_film <= 0.0 || self.l_film <= 0.0 || self.force_n <= 0.0 {
            return Err(Error::Config("film resistivity, thickness, and force must be positive".into()));
        }
        Ok(())
    }
}

/// Per-spot contact resistance of model A in Ω:
/// constriction (ρ_el/2)·√(nπH/F) plus film ρ_f·n·l_f·H/F.
pub fn contact_resistance_a(rho_el: f64, rho_f: f64, l_f: f64, n: f64, hardness: f64, force_n: f64) -> f64 {
    let constriction = 0.5 * rho_el * (n * std::f64::consts::PI * hardness / force_n).sqrt();
    let film = rho_f * n * l_f * hardness / force_n;
    constriction + film
}

/// Spreading-based contact resistance of model B in Ω:
/// (1.05·ρ_el/4)·√(πH/F) plus film ρ_f·l_f·H/F.
pub fn contact_resistance_b(rho_el: f64, rho_f: f64, l_f: f64, hardness: f64, force_n: f64) -> f64 {
    let constriction = 1.05 * rho_el / 4.0 * (std::f64::consts::PI * hardness / force_n).sqrt();
    let film = rho_f * l_f * hardness / force_n;
    constriction + film
}

/// Bulk Joule heating ρ_el(T)·J² in W/mm³.
pub fn bulk_heat(j: f64, t: f64, mat: &MaterialTable) -> f64 {
    mat.rho_el(t) * j * j
}

/// Volumetric heat in W/mm³ at a faying-surface point: bulk Joule heating
/// plus the contact term `(A_a/l_f)·R·J²`, with the total contact resistance
/// `R^A/n` (n parallel spots) for model A and `R^B` for model B. Material
/// quantities are evaluated at `t` °C.
pub fn contact_heat(
    j: f64,
    t: f64,
    apparent_area_mm2: f64,
    cfg: &ContactConfig,
    mat: &MaterialTable,
    hard: &HardnessModel,
) -> Result<f64> {
    if cfg.model == ContactModel::AInverse && cfg.n_spots < 1.0 {
        return Err(Error::Config(format!(
            "contact-spot count {} rejected: n < 1 is the hyperbolic regime",
            cfg.n_spots
        )));
    }
    let rho_el = mat.rho_el(t);
    let h = hard.hardness(t).max(1e-9);
    let r_total = match cfg.model {
        ContactModel::AInverse => {
            contact_resistance_a(rho_el, cfg.rho_film, cfg.l_film, cfg.n_spots, h, cfg.force_n)
                / cfg.n_spots
        }
        ContactModel::BForward => {
            contact_resistance_b(rho_el, cfg.rho_film, cfg.l_film, h, cfg.force_n)
        }
    };
    Ok(rho_el * j * j + apparent_area_mm2 / cfg.l_film * r_total * j * j)
}

/// Derivative of [`contact_heat`] with respect to the spot count n, for the
/// inverse model's learnable parameter. Only the constriction part depends
/// on n: d/dn[(ρ_el/2)·√(πH/(nF))] = −(ρ_el/4)·√(πH/F)·n^(−3/2).
pub fn contact_heat_dn(
    j: f64,
    t: f64,
    apparent_area_mm2: f64,
    cfg: &ContactConfig,
    mat: &MaterialTable,
    hard: &HardnessModel,
) -> f64 {
    let rho_el = mat.rho_el(t);
    let h = hard.hardness(t).max(1e-9);
    let d_constriction = -0.25 * rho_el * (std::f64::consts::PI * h / cfg.force_n).sqrt()
        / cfg.n_spots.powf(1.5);
    apparent_area_mm2 / cfg.l_film * d_constriction * j * j
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn preheat_current_density() {
        let s = WeldSchedule::new(32.0);
        assert_relative_eq!(s.current_density(200.0).unwrap(), 12_000.0 / 79.0, max_relative = 1e-12);
    }

    #[test]
    fn upslope_midpoint_is_average() {
        let s = WeldSchedule::new(32.0);
        let j_pt = 12_000.0 / 79.0;
        let j = 32_000.0 / 79.0;
        assert_relative_eq!(s.current_density(435.0).unwrap(), 0.5 * (j_pt + j), max_relative = 1e-12);
    }

    #[test]
    fn hold_phase_is_zero() {
        let s = WeldSchedule::new(32.0);
        assert_eq!(s.current_density(600.0).unwrap(), 0.0);
    }

    #[test]
    fn out_of_schedule_is_domain_error() {
        let s = WeldSchedule::new(32.0);
        assert!(s.current_density(-1.0).is_err());
        assert!(s.current_density(761.0).is_err());
    }

    #[test]
    fn continuous_on_weld_interval_and_zero_after() {
        let s = WeldSchedule::new(47.0);
        // One-sided probes at ε = 1e-9 see at most slope·ε from the upslope
        // branch; anything beyond that would be a genuine jump.
        for &t in &[400.0, 470.0, 560.0] {
            let lo = s.current_density(t - 1e-9).unwrap();
            let hi = s.current_density(t).unwrap();
            assert!((lo - hi).abs() <= 1e-7, "jump at {t}");
        }
        let mut t = 560.0 + 1e-9;
        while t <= 760.0 {
            assert_eq!(s.current_density(t).unwrap(), 0.0);
            t += 13.7;
        }
    }

    #[test]
    fn pid_zero_errors_zero_response() {
        let k = PIDParams::default();
        assert!(pid_response(&[0.0; 20], &k).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn pid_step_response_matches_hand_arithmetic() {
        // e = (0, 1) with machine constants and Δt = 1 ms:
        // x_s(1) = 5.3·1 + 0.2·(0+1)·0.001 + 0.003·(1−0)/0.001 = 8.3002.
        let k = PIDParams::default();
        let resp = pid_response(&[0.0, 1.0], &k);
        assert_relative_eq!(resp[1], 8.3002, max_relative = 1e-12);
    }

    #[test]
    fn pid_derivative_term_vanishes_for_constant_error() {
        let k = PIDParams { k_p: 0.0, k_i: 0.0, ..PIDParams::default() };
        let resp = pid_response(&[2.0, 2.0, 2.0, 2.0], &k);
        assert!(resp[1..].iter().all(|&x| x == 0.0));
        assert!(resp[0] != 0.0); // first step differentiates against e(−1) = 0
    }

    proptest! {
        #[test]
        fn pid_response_is_linear(
            e1 in proptest::collection::vec(-5.0f64..5.0, 30),
            e2 in proptest::collection::vec(-5.0f64..5.0, 30),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
        ) {
            let k = PIDParams::default();
            let combo: Vec<f64> = e1.iter().zip(&e2).map(|(x, y)| a * x + b * y).collect();
            let r_combo = pid_response(&combo, &k);
            let r1 = pid_response(&e1, &k);
            let r2 = pid_response(&e2, &k);
            for i in 0..combo.len() {
                prop_assert!((r_combo[i] - (a * r1[i] + b * r2[i])).abs() <= 1e-8 * (1.0 + r_combo[i].abs()));
            }
        }
    }

    /// Synthetic displacement ramp used by the fit tests.
    fn synthetic_xs(n: usize) -> Vec<f64> {
        (0..n).map(|i| 0.05 * (1.0 - (-(i as f64) / 80.0).exp()) + 0.01 * (i as f64 / n as f64)).collect()
    }

    #[test]
    fn fit_pid_recovers_constants_from_noiseless_torque() {
        let truth = PIDParams::default();
        let xs = synthetic_xs(600);
        let f0 = 5_000.0;
        let k_spring = 6_666.0;
        let errors: Vec<f64> = xs.iter().map(|&x| f0 - k_spring * x).collect();
        let torque = pid_response(&errors, &truth);
        let fit = fit_pid(&torque, &xs, f0, k_spring, &truth).unwrap();
        assert_relative_eq!(fit.k_p, truth.k_p, max_relative = 1e-6);
        assert_relative_eq!(fit.k_i, truth.k_i, max_relative = 1e-6);
        assert_relative_eq!(fit.k_d, truth.k_d, max_relative = 1e-6);
    }

    #[test]
    fn fit_pid_zero_everywhere_tie_breaks_to_zero() {
        let shape = PIDParams::default();
        let fit = fit_pid(&[0.0; 50], &vec![5000.0 / 6666.0; 50], 5_000.0, 6_666.0, &shape).unwrap();
        assert_eq!((fit.k_p, fit.k_i, fit.k_d), (0.0, 0.0, 0.0));
    }

    #[test]
    fn fit_pid_constant_signals_are_singular() {
        let shape = PIDParams::default();
        // Constant nonzero error with nonzero torque: features become
        // collinear once the integral window saturates.
        let xs = vec![0.1; 400];
        let torque = vec![1.0; 400];
        let err = fit_pid(&torque, &xs, 5_000.0, 6_666.0, &shape);
        assert!(matches!(err, Err(crate::error::Error::SingularFit(_))), "{err:?}");
    }

    #[test]
    fn measured_displacement_examples() {
        assert_eq!(measured_displacement(&[1.0, 2.0], &[1.0, 2.0]), vec![0.0, 0.0]);
        assert_eq!(measured_displacement(&[1.0, 2.0], &[0.0, 0.0]), vec![1.0, 2.0]);
        assert_eq!(measured_displacement(&[0.0, 1.0, 2.0], &[0.0, 0.5, 1.0]), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn real_contact_area_examples() {
        assert_relative_eq!(real_contact_area(5_000.0, 430.0), 11.6279, max_relative = 1e-4);
        assert_relative_eq!(
            real_contact_area(10_000.0, 430.0),
            2.0 * real_contact_area(5_000.0, 430.0),
            max_relative = 1e-12
        );
        assert!(real_contact_area(5_000.0, 1e12) < 1e-8);
    }

    #[test]
    fn contact_resistance_a_constriction_term() {
        // Table values, F = 5000 N: (3.66e−5/2)·√(120000·π·430/5000).
        let r = contact_resistance_a(3.66e-5, 0.0, 1e-5, 120_000.0, 430.0, 5_000.0);
        let expect = 0.5 * 3.66e-5 * (120_000.0 * std::f64::consts::PI * 430.0 / 5_000.0f64).sqrt();
        assert_relative_eq!(r, expect, max_relative = 1e-12);
        assert_relative_eq!(r, 3.2953e-3, max_relative = 1e-4);
    }

    #[test]
    fn contact_resistance_film_term_is_linear_in_thickness() {
        let base = contact_resistance_a(0.0, 1e5, 1e-5, 120_000.0, 430.0, 5_000.0);
        let doubled = contact_resistance_a(0.0, 1e5, 2e-5, 120_000.0, 430.0, 5_000.0);
        assert_relative_eq!(doubled, 2.0 * base, max_relative = 1e-12);
    }

    #[test]
    fn contact_resistance_b_constriction_term() {
        let r = contact_resistance_b(3.66e-5, 0.0, 1e-5, 430.0, 5_000.0);
        assert_relative_eq!(r, 5.00e-6, max_relative = 2e-3);
    }

    proptest! {
        #[test]
        fn contact_resistances_decrease_in_force(f1 in 5_000.0f64..8_000.0, df in 1.0f64..1_000.0) {
            let f2 = f1 + df;
            let ra1 = contact_resistance_a(3.66e-5, 1e5, 1e-5, 120_000.0, 430.0, f1);
            let ra2 = contact_resistance_a(3.66e-5, 1e5, 1e-5, 120_000.0, 430.0, f2);
            prop_assert!(ra2 < ra1);
            let rb1 = contact_resistance_b(3.66e-5, 1e5, 1e-5, 430.0, f1);
            let rb2 = contact_resistance_b(3.66e-5, 1e5, 1e-5, 430.0, f2);
            prop_assert!(rb2 < rb1);
        }
    }

    #[test]
    fn contact_resistance_b_decreases_with_temperature() {
        let mat = MaterialTable::default_almgsi();
        let hard = HardnessModel::default();
        let r = |t: f64| contact_resistance_b(mat.rho_el(t), 1e5, 1e-5, hard.hardness(t).max(1e-9), 5_000.0);
        assert!(r(400.0) < r(20.0));
        assert!(r(600.0) < r(400.0));
    }

    #[test]
    fn contact_heat_zero_current_is_zero() {
        let mat = MaterialTable::default_almgsi();
        let hard = HardnessModel::default();
        let cfg = ContactConfig::default();
        assert_eq!(contact_heat(0.0, 20.0, 79.0, &cfg, &mat, &hard).unwrap(), 0.0);
    }

    #[test]
    fn contact_heat_matches_independent_arithmetic() {
        // One-line recomputation with the reconstructed ρ_el at 20 °C.
        let mat = MaterialTable::default_almgsi();
        let hard = HardnessModel::default();
        let cfg = ContactConfig::default();
        let j = 151.9;
        let rho_el = mat.rho_el(20.0);
        let r_a = 0.5 * rho_el * (120_000.0 * std::f64::consts::PI * 430.0 / 5_000.0f64).sqrt()
            + 1e5 * 120_000.0 * 1e-5 * 430.0 / 5_000.0;
        let expect = rho_el * j * j + 79.0 / 1e-5 * (r_a / 120_000.0) * j * j;
        let got = contact_heat(j, 20.0, 79.0, &cfg, &mat, &hard).unwrap();
        assert_relative_eq!(got, expect, max_relative = 1e-12);
    }

    #[test]
    fn contact_heat_exceeds_bulk_heat() {
        let mat = MaterialTable::default_almgsi();
        let hard = HardnessModel::default();
        for model in [ContactModel::AInverse, ContactModel::BForward] {
            let cfg = ContactConfig { model, ..ContactConfig::default() };
            for t in [20.0, 300.0, 650.0] {
                let q = contact_heat(151.9, t, 79.0, &cfg, &mat, &hard).unwrap();
                assert!(q >= bulk_heat(151.9, t, &mat));
            }
        }
    }

    #[test]
    fn contact_heat_rejects_hyperbolic_regime() {
        let mat = MaterialTable::default_almgsi();
        let hard = HardnessModel::default();
        let cfg = ContactConfig { n_spots: 0.5, ..ContactConfig::default() };
        assert!(contact_heat(100.0, 20.0, 79.0, &cfg, &mat, &hard).is_err());
    }

    #[test]
    fn contact_heat_dn_matches_finite_difference() {
        let mat = MaterialTable::default_almgsi();
        let hard = HardnessModel::default();
        let cfg = ContactConfig { rho_film: 1.0, l_film: 0.03, ..ContactConfig::default() };
        let j = 405.0;
        // Wide step keeps the n-independent film term from swamping the
        // difference with rounding noise.
        let dn = 50.0;
        let up = contact_heat(j, 300.0, 79.0, &ContactConfig { n_spots: cfg.n_spots + dn, ..cfg.clone() }, &mat, &hard).unwrap();
        let dn_ = contact_heat(j, 300.0, 79.0, &ContactConfig { n_spots: cfg.n_spots - dn, ..cfg.clone() }, &mat, &hard).unwrap();
        let fd = (up - dn_) / (2.0 * dn);
        let analytic = contact_heat_dn(j, 300.0, 79.0, &cfg, &mat, &hard);
        assert_relative_eq!(analytic, fd, max_relative = 1e-5);
    }
}
