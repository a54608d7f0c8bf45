//! Full-batch loss and gradient assembly: evaluates the network jets over
//! every dataset, forms the per-term losses, and backpropagates hand-derived
//! residual adjoints through the jet engine.
//!
//! Gradient layout: network parameters first, then one slot for the
//! learnable log contact-spot count (zero while unregistered). Accumulation
//! runs over fixed-size chunks reduced in index order, so results are
//! run-to-run deterministic under any thread schedule.

use rayon::prelude::*;

use crate::adnet::{NetworkParams, NetworkSpec, Workspace};
use crate::error::Result;
use crate::material::{HardnessModel, MaterialTable, PointProps, ROOM_TEMP_C};
use crate::residuals::{
    benchmark_residual_parts, heat_residual_1d_parts, heat_residual_2d_parts, LossBundle,
    LossWeights, NdProps, SourceField, WeldConfig,
};
use crate::sampler::{Datasets, ModelMode, F_RANGE_KN, I_RANGE_KA};
use crate::trainer::TrainState;

const CHUNK: usize = 128;

/// Everything needed to evaluate the total loss and its gradient.
pub struct Objective<'a> {
    pub mode: ModelMode,
    pub spec: NetworkSpec,
    pub data: &'a Datasets,
    pub weld: &'a WeldConfig,
    pub mat: &'a MaterialTable,
    pub hard: &'a HardnessModel,
    pub weights: LossWeights,
    /// Diffusivity of the Dirichlet benchmark residual.
    pub bench_alpha: f64,
    /// Mini-batch size over the PDE set (0 = full batch).
    pub batch_size: usize,
    pub batch_seed: u64,
    n_bc_z0: usize,
}

impl<'a> Objective<'a> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mode: ModelMode,
        spec: NetworkSpec,
        data: &'a Datasets,
        weld: &'a WeldConfig,
        mat: &'a MaterialTable,
        hard: &'a HardnessModel,
        weights: LossWeights,
        batch_size: usize,
        batch_seed: u64,
    ) -> Self {
        let z_idx = mode.z_index();
        let n_bc_z0 = data.bc_axial.iter().filter(|p| p[z_idx] == 0.0).count();
        Self { mode, spec, data, weld, mat, hard, weights, bench_alpha: 0.06, batch_size, batch_seed, n_bc_z0 }
    }

    pub fn has_learnable_n(&self) -> bool {
        self.mode.is_inverse()
    }

    pub fn n_spots_init(&self) -> f64 {
        self.weld.contact.n_spots
    }

    /// Initial n handed to the gate latch (inverse model only).
    pub fn gate_n_init(&self) -> Option<f64> {
        self.has_learnable_n().then(|| self.n_spots_init())
    }

    fn denorm_current(&self, x: f64) -> f64 {
        I_RANGE_KA.0 + x * (I_RANGE_KA.1 - I_RANGE_KA.0)
    }

    fn denorm_force_n(&self, x: f64) -> f64 {
        (F_RANGE_KN.0 + x * (F_RANGE_KN.1 - F_RANGE_KN.0)) * 1e3
    }

    /// Material properties at a predicted temperature under the gate rule:
    /// frozen room-temperature values (zero λ-slope) while closed.
    fn gated_props(&self, temp_c: f64, gate: bool) -> (PointProps, f64) {
        if gate {
            (self.mat.props_at(temp_c), temp_c)
        } else {
            let p = self.mat.props_at(ROOM_TEMP_C);
            (PointProps { dlambda_dt: 0.0, ..p }, ROOM_TEMP_C)
        }
    }

    /// Evaluate the loss bundle (raw per-term values; total left for the
    /// caller) and the gradient of the weighted total.
    pub fn eval(
        &self,
        params: &NetworkParams,
        state: &TrainState,
        fade: f64,
        epoch: usize,
    ) -> Result<(LossBundle, Vec<f64>)> {
        let n_net = self.spec.param_count();
        let grad_len = n_net + 1;
        let mut bundle = LossBundle {
            fade,
            gate_material: state.gate_material,
            gate_experimental: state.gate_experimental,
            ..Default::default()
        };
        let mut grad = vec![0.0; grad_len];

        let n_spots = state.n_spots().unwrap_or(self.weld.contact.n_spots);
        let batch = self.pde_batch(epoch);
        let pde_idx: &[usize] = &batch;

        // PDE residuals (+ negative-temperature penalty on the same points).
        let (sums, g) = self.pde_pass(params, pde_idx, state, n_spots, grad_len)?;
        bundle.pde_t = sums[0];
        bundle.pde_u = sums[1];
        bundle.neg_temp = sums[2];
        add(&mut grad, &g);

        // Initial conditions.
        if !self.data.ic.is_empty() {
            let (sums, g) = self.ic_pass(params, grad_len)?;
            bundle.ic_t = sums[0];
            bundle.ic_u = sums[1];
            add(&mut grad, &g);
        }

        // Boundaries.
        if !self.data.bc_axial.is_empty() {
            let (sums, g) = self.bc_axial_pass(params, grad_len)?;
            bundle.bc_t += sums[0];
            bundle.bc_u = sums[1];
            add(&mut grad, &g);
        }
        if !self.data.bc_radial.is_empty() {
            let (sums, g) = self.bc_radial_pass(params, grad_len)?;
            bundle.bc_t += sums[0];
            add(&mut grad, &g);
        }

        // Symmetry planes.
        if !self.data.sym_plane.is_empty() {
            let (sums, g) = self.sym_pass(params, &self.data.sym_plane, self.mode.z_index(), grad_len)?;
            bundle.sym_z = sums[0];
            add(&mut grad, &g);
        }
        if !self.data.sym_axis.is_empty() {
            let (sums, g) = self.sym_pass(params, &self.data.sym_axis, 0, grad_len)?;
            bundle.sym_r = sums[0];
            add(&mut grad, &g);
        }

        // Experimental goal losses, only while the gate is open.
        if state.gate_experimental && !self.data.disp.is_empty() {
            let (sums, g) = self.disp_pass(params, fade, grad_len)?;
            bundle.disp = sums[0];
            add(&mut grad, &g);
        }
        if state.gate_experimental && !self.data.nugget.is_empty() {
            let (sums, g) = self.nugget_pass(params, fade, grad_len)?;
            bundle.nugget = sums[0];
            add(&mut grad, &g);
        }

        Ok((bundle, grad))
    }

    /// Epoch's PDE subset: full batch by default, else a seeded subsample.
    fn pde_batch(&self, epoch: usize) -> Vec<usize> {
        let n = self.data.pde.len();
        if self.batch_size == 0 || self.batch_size >= n {
            return (0..n).collect();
        }
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(
            self.batch_seed ^ (epoch as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
        );
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        idx.truncate(self.batch_size);
        idx
    }

    fn pde_pass(
        &self,
        params: &NetworkParams,
        idx: &[usize],
        state: &TrainState,
        n_spots: f64,
        grad_len: usize,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = idx.len();
        let inv_n = 1.0 / n as f64;
        let scales = &self.weld.scales;
        let src = SourceField::new(self.weld, self.mat, self.hard);
        let mode = self.mode;
        let in_dim = self.spec.input_dim;
        let m = self.spec.output_dim;
        let kj = mode.jet_dims();
        let gate = state.gate_material;
        let n_registered = state.log_n_spots.is_some();
        let w_pde = self.weights.pde;

        par_chunks(n, 3, grad_len, &self.spec, kj, |ci, ws, sums, grad| {
            let x = &self.data.pde[idx[ci]];
            params.forward_jets(x, ws)?;
            let t_hat = ws.output()[0];
            let mut ybar = [0.0f64; 2];
            let mut ybar_d1 = vec![0.0; kj * m];
            let mut ybar_d2 = vec![0.0; kj * m];

            if mode.is_benchmark() {
                let z = x[0];
                let (r, p) = benchmark_residual_parts(ws.d1(0, 1), ws.d2(0, 0), z, self.bench_alpha);
                sums[0] += r * r * inv_n;
                let s = 2.0 * w_pde * r * inv_n;
                ybar_d1[1 * m] += s * p.t_t;
                ybar_d2[0] += s * p.t_zz;
                params.backprop_jets(ws, &ybar[..m], &ybar_d1, &ybar_d2, grad);
                return Ok(());
            }

            let z_i = mode.z_index();
            let t_i = mode.t_index();
            let (z, t) = (x[z_i], x[t_i]);
            let r_nd = if mode.is_2d() { x[0] } else { 0.0 };
            let i_ka = self.denorm_current(x[in_dim - 2]);
            let force_n = self.denorm_force_n(x[in_dim - 1]);

            let temp_pred_c = scales.temp_c_from(t_hat, self.weld.refs.offset_c);
            let (props, temp_mat_c) = self.gated_props(temp_pred_c, gate);
            let nd = NdProps::from_point(&props, scales);
            let q = src.q_nd(r_nd, z, t, temp_mat_c, i_ka, force_n, n_spots)?;

            // Heat residual.
            let s_heat;
            if mode.is_2d() {
                let (r, p) = heat_residual_2d_parts(
                    ws.d1(0, 0), ws.d1(0, 1), ws.d1(0, 2), ws.d2(0, 0), ws.d2(0, 1),
                    r_nd, q, nd, scales,
                );
                sums[0] += r * r * inv_n;
                s_heat = 2.0 * w_pde * r * inv_n;
                ybar_d1[m] += s_heat * p.t_z; // k = 1 (z), output 0
                ybar_d1[2 * m] += s_heat * p.t_t;
                ybar_d1[0] += s_heat * p.t_r;
                ybar_d2[0] += s_heat * p.t_rr;
                ybar_d2[m] += s_heat * p.t_zz;
            } else {
                let (r, p) = heat_residual_1d_parts(ws.d1(0, 0), ws.d1(0, 1), ws.d2(0, 0), q, nd);
                sums[0] += r * r * inv_n;
                s_heat = 2.0 * w_pde * r * inv_n;
                ybar_d1[0] += s_heat * p.t_z;
                ybar_d1[m] += s_heat * p.t_t;
                ybar_d2[0] += s_heat * p.t_zz;
            }

            // Learnable contact-spot count: gradient through the source term
            // (∂residual/∂q = −1), in log space.
            if n_registered {
                let dq_dn = src.q_nd_dn(r_nd, z, t, temp_mat_c, i_ka, force_n, n_spots)?;
                grad[grad_len - 1] += s_heat * (-dq_dn) * n_spots;
            }

            // Displacement residual u_zz − T_z.
            let r_disp = ws.d2(1, z_i) - ws.d1(0, z_i);
            sums[1] += r_disp * r_disp * inv_n;
            let s_disp = 2.0 * w_pde * r_disp * inv_n;
            ybar_d2[z_i * m + 1] += s_disp;
            ybar_d1[z_i * m] -= s_disp;

            // Negative-temperature penalty (unweighted).
            if t_hat < 0.0 {
                sums[2] += t_hat * t_hat * inv_n;
                ybar[0] += 2.0 * t_hat * inv_n;
            }

            params.backprop_jets(ws, &ybar[..m], &ybar_d1, &ybar_d2, grad);
            Ok(())
        })
    }

    fn ic_pass(&self, params: &NetworkParams, grad_len: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.data.ic.len();
        let inv_n = 1.0 / n as f64;
        let m = self.spec.output_dim;
        let t_ref = if self.mode.is_benchmark() {
            0.0
        } else {
            self.weld.scales.temp_nd_from(self.weld.refs.initial_c, self.weld.refs.offset_c)
        };
        let w_ic = self.weights.ic;
        par_chunks(n, 2, grad_len, &self.spec, 1, |ci, ws, sums, grad| {
            let x = &self.data.ic[ci];
            params.forward_values(x, ws)?;
            let t_hat = ws.output()[0];
            let e_t = t_hat - t_ref;
            sums[0] += e_t * e_t * inv_n;
            let mut ybar = [0.0f64; 2];
            ybar[0] = 2.0 * w_ic * e_t * inv_n;
            if m > 1 {
                let u_hat = ws.output()[1];
                sums[1] += u_hat * u_hat * inv_n;
                ybar[1] = 2.0 * w_ic * u_hat * inv_n;
            }
            params.backprop_values(ws, &ybar[..m], grad);
            Ok(())
        })
    }

    fn bc_axial_pass(&self, params: &NetworkParams, grad_len: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.data.bc_axial.len();
        let inv_n = 1.0 / n as f64;
        let m = self.spec.output_dim;
        let kj = self.mode.jet_dims();
        let w_bc = self.weights.bc;
        let z_i = self.mode.z_index();

        if self.mode.is_benchmark() {
            // Dirichlet benchmark: plain squared boundary values.
            return par_chunks(n, 2, grad_len, &self.spec, 1, |ci, ws, sums, grad| {
                let x = &self.data.bc_axial[ci];
                params.forward_values(x, ws)?;
                let t_hat = ws.output()[0];
                sums[0] += t_hat * t_hat * inv_n;
                let ybar = [2.0 * w_bc * t_hat * inv_n];
                params.backprop_values(ws, &ybar, grad);
                Ok(())
            });
        }

        let scales = &self.weld.scales;
        let biot = self.weld.bounds.biot_nd(scales);
        let cool = scales.temp_nd_from(self.weld.refs.coolant_c, self.weld.refs.offset_c);
        let inv_n0 = if self.n_bc_z0 > 0 { 1.0 / self.n_bc_z0 as f64 } else { 0.0 };
        par_chunks(n, 2, grad_len, &self.spec, kj, |ci, ws, sums, grad| {
            let x = &self.data.bc_axial[ci];
            params.forward_jets(x, ws)?;
            let t_hat = ws.output()[0];
            let dt_dz = ws.d1(0, z_i);
            let g = dt_dz.abs() - biot * (t_hat - cool);
            sums[0] += g * g * inv_n;
            let s = 2.0 * w_bc * g * inv_n;
            let mut ybar = [0.0f64; 2];
            let mut ybar_d1 = vec![0.0; kj * m];
            let ybar_d2 = vec![0.0; kj * m];
            ybar[0] = -s * biot;
            ybar_d1[z_i * m] = s * dt_dz.signum();
            // Displacement clamp û(0, t) = 0 on the lower face.
            if x[z_i] == 0.0 && m > 1 {
                let u_hat = ws.output()[1];
                sums[1] += u_hat * u_hat * inv_n0;
                ybar[1] = 2.0 * w_bc * u_hat * inv_n0;
            }
            params.backprop_jets(ws, &ybar[..m], &ybar_d1, &ybar_d2, grad);
            Ok(())
        })
    }

    fn bc_radial_pass(&self, params: &NetworkParams, grad_len: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.data.bc_radial.len();
        let inv_n = 1.0 / n as f64;
        let m = self.spec.output_dim;
        let kj = self.mode.jet_dims();
        let w_bc = self.weights.bc;
        let scales = &self.weld.scales;
        let inv_ln_l = self.weld.bounds.inv_ln_l();
        let far = scales.temp_nd_from(self.weld.refs.far_field_c, self.weld.refs.offset_c);
        par_chunks(n, 1, grad_len, &self.spec, kj, |ci, ws, sums, grad| {
            let x = &self.data.bc_radial[ci];
            params.forward_jets(x, ws)?;
            let t_hat = ws.output()[0];
            let dt_dr = ws.d1(0, 0);
            let g = dt_dr.abs() - inv_ln_l * (far - t_hat);
            sums[0] += g * g * inv_n;
            let s = 2.0 * w_bc * g * inv_n;
            let mut ybar = [0.0f64; 2];
            let mut ybar_d1 = vec![0.0; kj * m];
            let ybar_d2 = vec![0.0; kj * m];
            ybar[0] = s * inv_ln_l;
            ybar_d1[0] = s * dt_dr.signum();
            params.backprop_jets(ws, &ybar[..m], &ybar_d1, &ybar_d2, grad);
            Ok(())
        })
    }

    fn sym_pass(
        &self,
        params: &NetworkParams,
        points: &[Vec<f64>],
        coord: usize,
        grad_len: usize,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = points.len();
        let inv_n = 1.0 / n as f64;
        let m = self.spec.output_dim;
        let kj = self.mode.jet_dims();
        par_chunks(n, 1, grad_len, &self.spec, kj, |ci, ws, sums, grad| {
            let x = &points[ci];
            params.forward_jets(x, ws)?;
            let d = ws.d1(0, coord);
            sums[0] += d * d * inv_n;
            let ybar = [0.0f64; 2];
            let mut ybar_d1 = vec![0.0; kj * m];
            let ybar_d2 = vec![0.0; kj * m];
            ybar_d1[coord * m] = 2.0 * d * inv_n;
            params.backprop_jets(ws, &ybar[..m], &ybar_d1, &ybar_d2, grad);
            Ok(())
        })
    }

    fn disp_pass(&self, params: &NetworkParams, fade: f64, grad_len: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.data.disp.len();
        let inv_n = 1.0 / n as f64;
        let m = self.spec.output_dim;
        let scale = fade * self.weights.disp;
        par_chunks(n, 1, grad_len, &self.spec, 1, |ci, ws, sums, grad| {
            let row = &self.data.disp[ci];
            params.forward_values(&row.x, ws)?;
            let u_hat = ws.output()[1];
            let e = u_hat - row.xs_nd - row.yd_nd;
            sums[0] += e * e * inv_n;
            let mut ybar = [0.0f64; 2];
            ybar[1] = 2.0 * scale * e * inv_n;
            params.backprop_values(ws, &ybar[..m], grad);
            Ok(())
        })
    }

    fn nugget_pass(&self, params: &NetworkParams, fade: f64, grad_len: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.data.nugget.len();
        let inv_n = 1.0 / n as f64;
        let m = self.spec.output_dim;
        let t_liq_nd = self.weld.scales.temp_nd_from(self.mat.phase.t_liq, self.weld.refs.offset_c);
        let scale = fade * self.weights.nugget;
        par_chunks(n, 1, grad_len, &self.spec, 1, |ci, ws, sums, grad| {
            let x = &self.data.nugget[ci];
            params.forward_values(x, ws)?;
            let t_hat = ws.output()[0];
            // Masked goal: gradient flows only through sub-liquidus points.
            if t_hat < t_liq_nd {
                let e = t_hat - t_liq_nd;
                sums[0] += e * e * inv_n;
                let mut ybar = [0.0f64; 2];
                ybar[0] = 2.0 * scale * e * inv_n;
                params.backprop_values(ws, &ybar[..m], grad);
            }
            Ok(())
        })
    }
}

fn add(acc: &mut [f64], other: &[f64]) {
    for (a, b) in acc.iter_mut().zip(other) {
        *a += b;
    }
}

/// Deterministic chunked parallel accumulation: fixed chunk boundaries,
/// per-chunk sequential work, chunks reduced in index order.
fn par_chunks<F>(
    n: usize,
    n_sums: usize,
    grad_len: usize,
    spec: &NetworkSpec,
    jet_dims: usize,
    f: F,
) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: Fn(usize, &mut Workspace, &mut [f64], &mut [f64]) -> Result<()> + Sync,
{
    let n_chunks = n.div_ceil(CHUNK);
    let parts: Result<Vec<(Vec<f64>, Vec<f64>)>> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut ws = Workspace::with_jet_dims(spec, jet_dims);
            let mut sums = vec![0.0; n_sums];
            let mut grad = vec![0.0; grad_len];
            let end = ((chunk + 1) * CHUNK).min(n);
            for i in chunk * CHUNK..end {
                f(i, &mut ws, &mut sums, &mut grad)?;
            }
            Ok((sums, grad))
        })
        .collect();
    let parts = parts?;
    let mut sums = vec![0.0; n_sums];
    let mut grad = vec![0.0; grad_len];
    for (s, g) in parts {
        add(&mut sums, &s);
        add(&mut grad, &g);
    }
    Ok((sums, grad))
}

/// Evaluate the network on a batch of inputs, returning (T̂, û) pairs in
/// nondimensional units (û = 0 for single-output specs).
pub fn eval_network(params: &NetworkParams, xs: &[Vec<f64>]) -> Result<Vec<(f64, f64)>> {
    let spec = params.spec().clone();
    let out: Result<Vec<Vec<(f64, f64)>>> = xs
        .par_chunks(CHUNK.max(1))
        .map(|chunk| {
            let mut ws = Workspace::new(&spec);
            let mut vals = Vec::with_capacity(chunk.len());
            for x in chunk {
                params.forward_values(x, &mut ws)?;
                let t = ws.output()[0];
                let u = if spec.output_dim > 1 { ws.output()[1] } else { 0.0 };
                vals.push((t, u));
            }
            Ok(vals)
        })
        .collect();
    Ok(out?.into_iter().flatten().collect())
}
