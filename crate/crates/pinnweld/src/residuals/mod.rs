//! Non-dimensionalization and the PINN loss terms: PDE residuals in 1D and
//! axisymmetric 2D form, initial/boundary losses, experimental goal losses,
//! symmetry losses, the negative-temperature penalty, and the weighted total.
//!
//! The heat source is a single field shared with the finite-difference
//! oracle: bulk Joule heating everywhere, and inside the faying-surface band
//! of thickness `l_film` the contact-heat form, so both solvers discretize
//! the same problem.

use serde::{Deserialize, Serialize};

use crate::adnet::Jet2;
use crate::error::{Error, Result};
use crate::material::{HardnessModel, MaterialTable};
use crate::process::{contact_heat, contact_heat_dn, ContactConfig, ContactModel, WeldSchedule};

/// Characteristic scales for the non-dimensionalization.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CharScales {
    /// Radial scale in mm (apparent contact radius).
    pub r_c: f64,
    /// Axial scale in mm (sheet stack thickness).
    pub z_c: f64,
    /// Time scale ρ_c·c_p,c·z_c²/λ_c in ms.
    pub t_c: f64,
    /// Temperature scale in K (liquidus).
    pub temp_c: f64,
    /// Displacement scale T_c·β_c·z_c in mm.
    pub u_c: f64,
    /// Characteristic thermal conductivity in W/(mm·K).
    pub lambda_c: f64,
}

impl Default for CharScales {
    fn default() -> Self {
        let (rho_c, cp_c, beta_c, lambda_c) = (2.7e-6, 890.0, 2.3e-5, 0.16);
        let z_c = 3.0;
        let temp_c = 660.0;
        Self {
            r_c: 5.0,
            z_c,
            t_c: rho_c * cp_c * z_c * z_c / (lambda_c * 1e-3),
            temp_c,
            u_c: temp_c * beta_c * z_c,
            lambda_c,
        }
    }
}

impl CharScales {
    pub fn validate(&self) -> Result<()> {
        let all = [self.r_c, self.z_c, self.t_c, self.temp_c, self.u_c, self.lambda_c];
        if all.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::Config("characteristic scales must be positive and finite".into()));
        }
        Ok(())
    }

    /// (z_c/r_c)², the prefactor of the radial conduction terms.
    pub fn radial_factor(&self) -> f64 {
        (self.z_c / self.r_c) * (self.z_c / self.r_c)
    }
}

/// Reference temperatures; each loss term carries its own reference.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TempRefs {
    /// Offset T_0 of the temperature non-dimensionalization, °C.
    pub offset_c: f64,
    /// Room temperature enforced by the initial condition, °C.
    pub initial_c: f64,
    /// Electrode coolant temperature on Γ_es, °C.
    pub coolant_c: f64,
    /// Far-field sheet temperature on Γ_s, °C.
    pub far_field_c: f64,
}

impl Default for TempRefs {
    fn default() -> Self {
        Self { offset_c: 0.0, initial_c: 23.0, coolant_c: 19.0, far_field_c: 20.0 }
    }
}

/// Boundary-condition constants.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundaryConstants {
    /// Heat transfer coefficient to the coolant in W/(mm²·K).
    pub h_th: f64,
    /// Radial distance in mm at which the sheet temperature is unaffected.
    pub l_far_mm: f64,
}

impl Default for BoundaryConstants {
    fn default() -> Self {
        Self { h_th: 0.025, l_far_mm: 20.0 }
    }
}

impl BoundaryConstants {
    /// Dimensionless Biot number Bĩ = (h_th/λ_c)·z_c for the axial Robin
    /// condition written in z̃.
    pub fn biot_nd(&self, scales: &CharScales) -> f64 {
        self.h_th / scales.lambda_c * scales.z_c
    }

    /// 1/ln(L) coefficient of the radial flux condition.
    pub fn inv_ln_l(&self) -> f64 {
        1.0 / self.l_far_mm.ln()
    }
}

/// Complete physical description of one weld setup.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeldConfig {
    pub schedule: WeldSchedule,
    pub contact: ContactConfig,
    pub scales: CharScales,
    pub refs: TempRefs,
    pub bounds: BoundaryConstants,
}

impl Default for WeldConfig {
    fn default() -> Self {
        Self {
            schedule: WeldSchedule::new(32.0),
            contact: ContactConfig::default(),
            scales: CharScales::default(),
            refs: TempRefs::default(),
            bounds: BoundaryConstants::default(),
        }
    }
}

impl WeldConfig {
    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        self.contact.validate()?;
        self.scales.validate()?;
        if self.bounds.h_th <= 0.0 || self.bounds.l_far_mm <= 1.0 {
            return Err(Error::Config("Biot coefficient must be positive and L > 1 mm".into()));
        }
        Ok(())
    }

    /// Weld end expressed in nondimensional time.
    pub fn t_end_nd(&self) -> f64 {
        self.schedule.t_end_ms() / self.scales.t_c
    }
}

/// Forward/backward maps between physical and dimensionless variables.
impl CharScales {
    pub fn r_nd(&self, r_mm: f64) -> f64 {
        r_mm / self.r_c
    }
    pub fn z_nd(&self, z_mm: f64) -> f64 {
        z_mm / self.z_c
    }
    pub fn t_nd(&self, t_ms: f64) -> f64 {
        t_ms / self.t_c
    }
    pub fn temp_nd_from(&self, temp_c: f64, offset_c: f64) -> f64 {
        (temp_c - offset_c) / self.temp_c
    }
    pub fn u_nd(&self, u_mm: f64) -> f64 {
        u_mm / self.u_c
    }
    pub fn r_mm(&self, r_nd: f64) -> f64 {
        r_nd * self.r_c
    }
    pub fn z_mm(&self, z_nd: f64) -> f64 {
        z_nd * self.z_c
    }
    pub fn t_ms(&self, t_nd: f64) -> f64 {
        t_nd * self.t_c
    }
    pub fn temp_c_from(&self, temp_nd: f64, offset_c: f64) -> f64 {
        temp_nd * self.temp_c + offset_c
    }
    pub fn u_mm(&self, u_nd: f64) -> f64 {
        u_nd * self.u_c
    }
}

/// Per-term weights λ of the total loss.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LossWeights {
    pub pde: f64,
    pub ic: f64,
    pub bc: f64,
    /// Displacement-series goal loss λ_d.
    pub disp: f64,
    /// Nugget-diameter goal loss λ_dp.
    pub nugget: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { pde: 1.0, ic: 1.0, bc: 1.0, disp: 0.7, nugget: 10.0 }
    }
}

/// Dimensionless material coefficients entering the residual: λ̃ = λ_th/λ_c
/// and its slope with respect to T̃.
#[derive(Debug, Clone, Copy)]
pub struct NdProps {
    pub lambda: f64,
    pub dlambda: f64,
}

impl NdProps {
    pub fn from_point(props: &crate::material::PointProps, scales: &CharScales) -> Self {
        Self {
            lambda: props.lambda_th / scales.lambda_c,
            dlambda: props.dlambda_dt * scales.temp_c / scales.lambda_c,
        }
    }

    pub const CONST_UNIT: NdProps = NdProps { lambda: 1.0, dlambda: 0.0 };
}

/// Partials of the 2D heat residual with respect to the temperature jet
/// components, for hand-assembled backpropagation.
#[derive(Debug, Clone, Copy)]
pub struct HeatPartials2D {
    pub t_t: f64,
    pub t_r: f64,
    pub t_rr: f64,
    pub t_z: f64,
    pub t_zz: f64,
}

/// Axisymmetric heat residual at one collocation point. Jet coordinate
/// order is (r̃, z̃, t̃). Conduction terms are chain-rule expanded so the
/// material enters only through per-point λ̃ and dλ̃/dT̃.
pub fn heat_residual_2d(jet_t: &Jet2, r_nd: f64, q_nd: f64, props: NdProps, scales: &CharScales) -> (f64, HeatPartials2D) {
    heat_residual_2d_parts(
        jet_t.d1[0], jet_t.d1[1], jet_t.d1[2], jet_t.d2[0], jet_t.d2[1],
        r_nd, q_nd, props, scales,
    )
}

/// Component form of [`heat_residual_2d`] for callers that hold raw jet
/// streams.
#[allow(clippy::too_many_arguments)]
pub fn heat_residual_2d_parts(
    t_r: f64,
    t_z: f64,
    t_t: f64,
    t_rr: f64,
    t_zz: f64,
    r_nd: f64,
    q_nd: f64,
    props: NdProps,
    scales: &CharScales,
) -> (f64, HeatPartials2D) {
    let c_r = scales.radial_factor();
    let radial = c_r * (props.lambda * t_r / r_nd + props.dlambda * t_r * t_r + props.lambda * t_rr);
    let axial = props.dlambda * t_z * t_z + props.lambda * t_zz;
    let value = t_t - radial - axial - q_nd;
    let partials = HeatPartials2D {
        t_t: 1.0,
        t_r: -c_r * (props.lambda / r_nd + 2.0 * props.dlambda * t_r),
        t_rr: -c_r * props.lambda,
        t_z: -2.0 * props.dlambda * t_z,
        t_zz: -props.lambda,
    };
    (value, partials)
}

/// Partials of the 1D heat residual; jet coordinate order is (z̃, t̃).
#[derive(Debug, Clone, Copy)]
pub struct HeatPartials1D {
    pub t_t: f64,
    pub t_z: f64,
    pub t_zz: f64,
}

/// One-dimensional heat residual (the radial terms of the 2D form dropped).
pub fn heat_residual_1d(jet_t: &Jet2, q_nd: f64, props: NdProps) -> (f64, HeatPartials1D) {
    heat_residual_1d_parts(jet_t.d1[0], jet_t.d1[1], jet_t.d2[0], q_nd, props)
}

/// Component form of [`heat_residual_1d`].
pub fn heat_residual_1d_parts(t_z: f64, t_t: f64, t_zz: f64, q_nd: f64, props: NdProps) -> (f64, HeatPartials1D) {
    let value = t_t - (props.dlambda * t_z * t_z + props.lambda * t_zz) - q_nd;
    let partials = HeatPartials1D {
        t_t: 1.0,
        t_z: -2.0 * props.dlambda * t_z,
        t_zz: -props.lambda,
    };
    (value, partials)
}

/// Benchmark residual with fixed diffusivity and sinusoidal source:
/// ∂T/∂t − α·∂²T/∂z² − sin(πz). Jet order (z, t).
pub fn benchmark_residual(jet_t: &Jet2, z: f64, alpha: f64) -> (f64, HeatPartials1D) {
    benchmark_residual_parts(jet_t.d1[1], jet_t.d2[0], z, alpha)
}

/// Component form of [`benchmark_residual`].
pub fn benchmark_residual_parts(t_t: f64, t_zz: f64, z: f64, alpha: f64) -> (f64, HeatPartials1D) {
    let value = t_t - alpha * t_zz - (std::f64::consts::PI * z).sin();
    (value, HeatPartials1D { t_t: 1.0, t_z: 0.0, t_zz: -alpha })
}

/// Displacement residual ∂²ũ/∂z̃² − ∂T̃/∂z̃. `z_index` selects the axial
/// coordinate in the jets (0 in 1D, 1 in 2D).
pub fn displacement_residual(jet_u: &Jet2, jet_t: &Jet2, z_index: usize) -> f64 {
    jet_u.d2[z_index] - jet_t.d1[z_index]
}

fn mean_sq(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        sum += v * v;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Initial-condition losses: mean squared (T̂ − T̃_ref) and mean squared û.
pub fn ic_losses(t_hat: &[f64], u_hat: &[f64], t_ref_nd: f64) -> (f64, f64) {
    (mean_sq(t_hat.iter().map(|&t| t - t_ref_nd)), mean_sq(u_hat.iter().copied()))
}

/// Axial Robin residual |∂T̂/∂z̃| − Bĩ·(T̂ − T̃_ref); the absolute value
/// enforces an outward flux without fixing its sign.
pub fn axial_flux_residual(dt_dz: f64, t_hat: f64, biot_nd: f64, t_ref_nd: f64) -> f64 {
    dt_dz.abs() - biot_nd * (t_hat - t_ref_nd)
}

/// Radial Robin residual |∂T̂/∂r̃| − (1/ln L)·(T̃_ref − T̂).
pub fn radial_flux_residual(dt_dr: f64, t_hat: f64, inv_ln_l: f64, t_ref_nd: f64) -> f64 {
    dt_dr.abs() - inv_ln_l * (t_ref_nd - t_hat)
}

/// Boundary losses over pre-evaluated batches: axial points carry
/// (∂T̂/∂z̃, T̂), radial points (∂T̂/∂r̃, T̂), and the displacement clamp is
/// mean squared û(0, t).
pub fn bc_losses(
    axial: &[(f64, f64)],
    radial: &[(f64, f64)],
    u_at_z0: &[f64],
    biot_nd: f64,
    t_ref_cool_nd: f64,
    inv_ln_l: f64,
    t_ref_far_nd: f64,
) -> (f64, f64) {
    let ax = mean_sq(axial.iter().map(|&(g, t)| axial_flux_residual(g, t, biot_nd, t_ref_cool_nd)));
    let rad = mean_sq(radial.iter().map(|&(g, t)| radial_flux_residual(g, t, inv_ln_l, t_ref_far_nd)));
    let bc_t = if radial.is_empty() { ax } else { ax + rad };
    (bc_t, mean_sq(u_at_z0.iter().copied()))
}

/// Displacement goal loss: mean[(û(1,t) − x̃_s(t) − ỹ_d(t))²] on the
/// measurement grid, in nondimensional displacement units.
pub fn goal_loss_displacement(u_hat_z1: &[f64], x_s_nd: &[f64], y_d_nd: &[f64]) -> Result<f64> {
    if u_hat_z1.len() != x_s_nd.len() || u_hat_z1.len() != y_d_nd.len() {
        return Err(Error::Data(format!(
            "displacement series misaligned: {} vs {} vs {}",
            u_hat_z1.len(),
            x_s_nd.len(),
            y_d_nd.len()
        )));
    }
    Ok(mean_sq(
        u_hat_z1.iter().zip(x_s_nd).zip(y_d_nd).map(|((&u, &x), &y)| u - x - y),
    ))
}

/// Nugget goal loss: mean[(min{T̂, T̃_liq} − T̃_liq)²] over faying-surface
/// points inside the measured nugget radius; zero once every point is at or
/// above liquidus, and zero by convention for an empty set.
pub fn goal_loss_nugget(t_hat: &[f64], t_liq_nd: f64) -> f64 {
    mean_sq(t_hat.iter().map(|&t| t.min(t_liq_nd) - t_liq_nd))
}

/// Penalty for negative predicted temperatures: mean[min{0, T̂}²].
pub fn negative_temp_penalty(t_hat: &[f64]) -> f64 {
    mean_sq(t_hat.iter().map(|&t| t.min(0.0)))
}

/// Symmetry losses: mean squared ∂T̂/∂r̃ on the axis and mean squared
/// ∂T̂/∂z̃ on the faying plane.
pub fn symmetry_losses(dt_dr_axis: &[f64], dt_dz_plane: &[f64]) -> (f64, f64) {
    (mean_sq(dt_dz_plane.iter().copied()), mean_sq(dt_dr_axis.iter().copied()))
}

/// Per-term loss values with gate/fade state; the record written per epoch.
#[derive(Debug, Clone, Copy, Default)]
pub struct LossBundle {
    pub pde_t: f64,
    pub pde_u: f64,
    pub ic_t: f64,
    pub ic_u: f64,
    pub bc_t: f64,
    pub bc_u: f64,
    pub disp: f64,
    pub nugget: f64,
    pub sym_z: f64,
    pub sym_r: f64,
    pub neg_temp: f64,
    pub fade: f64,
    pub gate_material: bool,
    pub gate_experimental: bool,
    pub total: f64,
}

impl LossBundle {
    /// CSV header of the per-epoch loss log.
    pub const CSV_HEADER: &'static str = "epoch,lr,fade,gate_material,gate_experimental,l_pde_t,l_pde_u,l_ic_t,l_ic_u,l_bc_t,l_bc_u,l_d,l_dp,l_sym_z,l_sym_r,l_neg,total";

    pub fn csv_row(&self, epoch: usize, lr: f64) -> String {
        format!(
            "{},{:e},{:e},{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            epoch,
            lr,
            self.fade,
            self.gate_material as u8,
            self.gate_experimental as u8,
            self.pde_t,
            self.pde_u,
            self.ic_t,
            self.ic_u,
            self.bc_t,
            self.bc_u,
            self.disp,
            self.nugget,
            self.sym_z,
            self.sym_r,
            self.neg_temp,
            self.total
        )
    }
}

/// Weighted total: experimental terms are scaled by the fade factor and
/// included only while the experimental gate is open; symmetry and
/// negative-temperature terms carry no hyperparameter.
pub fn total_loss(bundle: &mut LossBundle, weights: &LossWeights) -> f64 {
    let mut total = weights.pde * (bundle.pde_t + bundle.pde_u)
        + weights.ic * (bundle.ic_t + bundle.ic_u)
        + weights.bc * (bundle.bc_t + bundle.bc_u)
        + bundle.sym_z
        + bundle.sym_r
        + bundle.neg_temp;
    if bundle.gate_experimental {
        total += bundle.fade * (weights.disp * bundle.disp + weights.nugget * bundle.nugget);
    }
    bundle.total = total;
    total
}

/// Heat-source field shared by the PINN residual and the FD oracle.
///
/// Bulk points see the Joule term t_c·κ(T)·J²/T_c; points inside the
/// faying-surface band |z̃ − 0.5| ≤ l_film/(2·z_c) see the contact-heat form
/// divided by the local ρc_p. The optional Hertzian weight redistributes the
/// contact part over the radius while preserving its area integral.
pub struct SourceField<'a> {
    pub weld: &'a WeldConfig,
    pub mat: &'a MaterialTable,
    pub hard: &'a HardnessModel,
}

impl<'a> SourceField<'a> {
    pub fn new(weld: &'a WeldConfig, mat: &'a MaterialTable, hard: &'a HardnessModel) -> Self {
        Self { weld, mat, hard }
    }

    /// Half-width of the faying band in z̃.
    pub fn band_half_width_nd(&self) -> f64 {
        0.5 * self.weld.contact.l_film / self.weld.scales.z_c
    }

    pub fn on_band(&self, z_nd: f64) -> bool {
        (z_nd - 0.5).abs() <= self.band_half_width_nd() + 1e-15
    }

    fn current(&self, t_nd: f64, i_max_ka: f64) -> Result<f64> {
        let sched = WeldSchedule { i_max_ka, ..self.weld.schedule };
        let t_ms = (t_nd * self.weld.scales.t_c).clamp(0.0, sched.t_end_ms());
        sched.current_density(t_ms)
    }

    /// Nondimensional source at a collocation point. `r_nd` is only used by
    /// the Hertzian weighting; pass 0 in 1D. `force_n` and `n_spots` come
    /// from the sampled process parameters and the (possibly learnable)
    /// contact state.
    pub fn q_nd(
        &self,
        r_nd: f64,
        z_nd: f64,
        t_nd: f64,
        temp_c: f64,
        i_max_ka: f64,
        force_n: f64,
        n_spots: f64,
    ) -> Result<f64> {
        let j = self.current(t_nd, i_max_ka)?;
        if j == 0.0 {
            return Ok(0.0);
        }
        let scales = &self.weld.scales;
        let rho_cp = self.mat.rho_cp(temp_c);
        if self.on_band(z_nd) {
            let cfg = ContactConfig { force_n, n_spots, ..self.weld.contact.clone() };
            let q_c = contact_heat(j, temp_c, self.weld.schedule.apparent_area_mm2, &cfg, self.mat, self.hard)?;
            let bulk = self.mat.rho_el(temp_c) * j * j;
            let contact_part = (q_c - bulk) * self.radial_weight(r_nd);
            Ok(scales.t_c * 1e-3 * (bulk + contact_part) / (rho_cp * scales.temp_c))
        } else {
            let (kappa, _) = self.mat.lookup(crate::material::Property::Kappa, temp_c);
            Ok(scales.t_c * kappa * j * j / scales.temp_c)
        }
    }

    /// Derivative of the source with respect to the contact-spot count n;
    /// zero off the band and for the forward model.
    pub fn q_nd_dn(
        &self,
        r_nd: f64,
        z_nd: f64,
        t_nd: f64,
        temp_c: f64,
        i_max_ka: f64,
        force_n: f64,
        n_spots: f64,
    ) -> Result<f64> {
        if !self.on_band(z_nd) || self.weld.contact.model != ContactModel::AInverse {
            return Ok(0.0);
        }
        let j = self.current(t_nd, i_max_ka)?;
        if j == 0.0 {
            return Ok(0.0);
        }
        let scales = &self.weld.scales;
        let cfg = ContactConfig { force_n, n_spots, ..self.weld.contact.clone() };
        let dq = contact_heat_dn(j, temp_c, self.weld.schedule.apparent_area_mm2, &cfg, self.mat, self.hard);
        let rho_cp = self.mat.rho_cp(temp_c);
        Ok(scales.t_c * 1e-3 * dq * self.radial_weight(r_nd) / (rho_cp * scales.temp_c))
    }

    /// Cell-averaged source over an axial control volume [z_lo, z_hi], for
    /// finite-volume discretizations: the contact part is weighted by the
    /// cell's overlap with the faying band so the deposited power is
    /// mesh-independent.
    #[allow(clippy::too_many_arguments)]
    pub fn q_nd_cell(
        &self,
        r_nd: f64,
        z_lo: f64,
        z_hi: f64,
        t_nd: f64,
        temp_c: f64,
        i_max_ka: f64,
        force_n: f64,
        n_spots: f64,
    ) -> Result<f64> {
        let half = self.band_half_width_nd();
        let overlap = (z_hi.min(0.5 + half) - z_lo.max(0.5 - half)).max(0.0);
        let frac = overlap / (z_hi - z_lo);
        let q_bulk = {
            let j = self.current(t_nd, i_max_ka)?;
            let (kappa, _) = self.mat.lookup(crate::material::Property::Kappa, temp_c);
            self.weld.scales.t_c * kappa * j * j / self.weld.scales.temp_c
        };
        if frac == 0.0 {
            return Ok(q_bulk);
        }
        let q_band = self.q_nd(r_nd, 0.5, t_nd, temp_c, i_max_ka, force_n, n_spots)?;
        Ok(q_bulk + (q_band - q_bulk) * frac)
    }

    /// Radial weight of the contact part: uniform by default, or the
    /// area-normalized Hertzian profile (3/2)·√(1−r̃²) behind the config flag.
    pub fn radial_weight(&self, r_nd: f64) -> f64 {
        if self.weld.contact.hertzian_weighting {
            1.5 * (1.0 - (r_nd * r_nd).min(1.0)).sqrt()
        } else {
            1.0
        }
    }
}
