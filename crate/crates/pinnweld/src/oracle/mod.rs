//! Independent finite-difference forward solvers and the analytical
//! benchmark; generates synthetic experimental data and verifies network
//! predictions.
//!
//! Both solvers use backward Euler in time with lagged (Picard) material
//! coefficients and conservative finite-volume stencils, so the per-step
//! energy audit closes by construction. The heat source is the same
//! [`SourceField`] the PINN residuals use.

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::material::{HardnessModel, MaterialTable};
use crate::process::{measured_displacement, PIDParams};
use crate::residuals::{SourceField, WeldConfig};
use crate::sampler::WeldRecord;

/// Mesh and stepping controls for the FD solvers.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct MeshConfig {
    /// Axial intervals (nodes = n_z + 1).
    pub n_z: usize,
    /// Radial intervals (2D only).
    pub n_r: usize,
    /// Time step in ms.
    pub dt_ms: f64,
    /// Store a full field snapshot every this many steps (0 = only final).
    pub store_every: usize,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self { n_z: 200, n_r: 40, dt_ms: 1.0, store_every: 20 }
    }
}

/// Solver metadata attached to every solution.
#[derive(Debug, Clone)]
pub struct SolveMeta {
    pub scheme: String,
    pub dz_nd: f64,
    pub dr_nd: f64,
    pub dt_ms: f64,
    pub config_hash: String,
    /// Largest per-step relative energy-balance violation observed.
    pub max_energy_residual_rel: f64,
}

/// Gridded forward solution.
///
/// Snapshots are stored `[time][r][z]` row-major; `faying_temp_c` and
/// `u_top_mm` are recorded every step regardless of the snapshot stride.
#[derive(Debug, Clone)]
pub struct GridSolution {
    pub r_nd: Vec<f64>,
    pub z_nd: Vec<f64>,
    pub t_stored_ms: Vec<f64>,
    pub temp_c: Vec<f64>,
    pub u_mm: Vec<f64>,
    pub t_steps_ms: Vec<f64>,
    /// Thermal expansion of the r = 0 column, per step.
    pub u_top_mm: Vec<f64>,
    /// Faying-surface temperature over r, per step (single entry in 1D).
    pub faying_temp_c: Vec<Vec<f64>>,
    pub meta: SolveMeta,
}

impl GridSolution {
    pub fn n_r(&self) -> usize {
        self.r_nd.len()
    }

    pub fn n_z(&self) -> usize {
        self.z_nd.len()
    }

    /// Temperature snapshot value at (stored step, ir, iz).
    pub fn temp_at(&self, it: usize, ir: usize, iz: usize) -> f64 {
        self.temp_c[(it * self.n_r() + ir) * self.n_z() + iz]
    }

    pub fn u_at(&self, it: usize, ir: usize, iz: usize) -> f64 {
        self.u_mm[(it * self.n_r() + ir) * self.n_z() + iz]
    }

    /// Index of the stored snapshot closest to `t_ms`.
    pub fn stored_index_near(&self, t_ms: f64) -> usize {
        self.t_stored_ms
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t_ms).abs().total_cmp(&(b.1 - t_ms).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    /// Long-format CSV export: r,z,t,T,u.
    pub fn to_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut out = String::from("r_nd,z_nd,t_ms,T_C,u_mm\n");
        for (it, &t) in self.t_stored_ms.iter().enumerate() {
            for (ir, &r) in self.r_nd.iter().enumerate() {
                for (iz, &z) in self.z_nd.iter().enumerate() {
                    out.push_str(&format!(
                        "{},{},{},{},{}\n",
                        r,
                        z,
                        t,
                        self.temp_at(it, ir, iz),
                        self.u_at(it, ir, iz)
                    ));
                }
            }
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    /// Compact binary layout: magic `PWGRID01`, then little-endian u64
    /// counts (nr, nz, nt), then the f64 arrays r_nd, z_nd, t_stored_ms,
    /// temp_c, u_mm in row-major `[t][r][z]` order.
    pub fn to_binary(&self, path: &std::path::Path) -> Result<()> {
        let mut buf: Vec<u8> = Vec::new();
        buf.extend_from_slice(b"PWGRID01");
        for n in [self.n_r() as u64, self.n_z() as u64, self.t_stored_ms.len() as u64] {
            buf.extend_from_slice(&n.to_le_bytes());
        }
        for arr in [&self.r_nd, &self.z_nd, &self.t_stored_ms, &self.temp_c, &self.u_mm] {
            for v in arr.iter() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn from_binary(path: &std::path::Path) -> Result<Self> {
        let buf = std::fs::read(path)?;
        if buf.len() < 32 || &buf[..8] != b"PWGRID01" {
            return Err(Error::Data(format!("{}: not a PWGRID01 file", path.display())));
        }
        let mut off = 8;
        let mut read_u64 = || {
            let v = u64::from_le_bytes(buf[off..off + 8].try_into().unwrap());
            off += 8;
            v as usize
        };
        let (nr, nz, nt) = (read_u64(), read_u64(), read_u64());
        let mut read_f64s = |n: usize| -> Result<Vec<f64>> {
            if buf.len() < off + 8 * n {
                return Err(Error::Data("truncated PWGRID01 file".into()));
            }
            let out = (0..n)
                .map(|i| f64::from_le_bytes(buf[off + 8 * i..off + 8 * i + 8].try_into().unwrap()))
                .collect();
            off += 8 * n;
            Ok(out)
        };
        let r_nd = read_f64s(nr)?;
        let z_nd = read_f64s(nz)?;
        let t_stored_ms = read_f64s(nt)?;
        let temp_c = read_f64s(nt * nr * nz)?;
        let u_mm = read_f64s(nt * nr * nz)?;
        Ok(Self {
            r_nd,
            z_nd,
            t_stored_ms,
            temp_c,
            u_mm,
            t_steps_ms: vec![],
            u_top_mm: vec![],
            faying_temp_c: vec![],
            meta: SolveMeta {
                scheme: "loaded".into(),
                dz_nd: 0.0,
                dr_nd: 0.0,
                dt_ms: 0.0,
                config_hash: String::new(),
                max_energy_residual_rel: 0.0,
            },
        })
    }
}

/// Corrected closed form of the Dirichlet benchmark:
/// T(z, t) = (1/(α·π²))·(1 − e^(−α·π²·t))·sin(π·z).
pub fn analytic_benchmark(z: f64, t: f64, alpha: f64) -> f64 {
    let lam = alpha * std::f64::consts::PI * std::f64::consts::PI;
    (1.0 - (-lam * t).exp()) / lam * (std::f64::consts::PI * z).sin()
}

/// Thomas algorithm for a tridiagonal system; `a` sub-, `b` main, `c`
/// super-diagonal. Overwrites the scratch vectors.
fn solve_tridiag(a: &[f64], b: &[f64], c: &[f64], rhs: &mut [f64], scratch: &mut [f64]) {
    let n = b.len();
    scratch[0] = c[0] / b[0];
    rhs[0] /= b[0];
    for i in 1..n {
        let m = b[i] - a[i] * scratch[i - 1];
        scratch[i] = c[i] / m;
        rhs[i] = (rhs[i] - a[i] * rhs[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i] * rhs[i + 1];
    }
}

/// Benchmark-mode FD solve: Dirichlet zero boundaries, sin(πz) source,
/// constant diffusivity, zero initial field, on the unit square. Fields in
/// the returned solution are the dimensionless temperature.
pub fn fd_solve_benchmark(alpha: f64, n_z: usize, dt_nd: f64, t_end_nd: f64) -> Result<GridSolution> {
    let dz = 1.0 / n_z as f64;
    let n_nodes = n_z + 1;
    let z_nd: Vec<f64> = (0..n_nodes).map(|i| i as f64 * dz).collect();
    let source: Vec<f64> = z_nd.iter().map(|&z| (std::f64::consts::PI * z).sin()).collect();
    let mut temp = vec![0.0; n_nodes];
    let mu = alpha * dt_nd / (dz * dz);
    let mut a = vec![-mu; n_nodes];
    let mut b = vec![1.0 + 2.0 * mu; n_nodes];
    let mut c = vec![-mu; n_nodes];
    // Dirichlet rows.
    for (arr, v) in [(&mut a, 0.0), (&mut b, 1.0), (&mut c, 0.0)] {
        arr[0] = v;
        arr[n_nodes - 1] = v;
    }
    let n_steps = (t_end_nd / dt_nd).round() as usize;
    let mut rhs = vec![0.0; n_nodes];
    let mut scratch = vec![0.0; n_nodes];
    let mut stored_t = vec![0.0];
    let mut stored_field = temp.clone();
    for step in 1..=n_steps {
        for i in 1..n_nodes - 1 {
            rhs[i] = temp[i] + dt_nd * source[i];
        }
        rhs[0] = 0.0;
        rhs[n_nodes - 1] = 0.0;
        solve_tridiag(&a, &b, &c, &mut rhs, &mut scratch);
        temp.copy_from_slice(&rhs);
        if step == n_steps {
            stored_t.push(step as f64 * dt_nd);
            stored_field.extend_from_slice(&temp);
        }
    }
    Ok(GridSolution {
        r_nd: vec![0.0],
        z_nd,
        t_stored_ms: stored_t,
        u_mm: vec![0.0; stored_field.len()],
        temp_c: stored_field,
        t_steps_ms: vec![],
        u_top_mm: vec![],
        faying_temp_c: vec![],
        meta: SolveMeta {
            scheme: "backward-euler/dirichlet-benchmark".into(),
            dz_nd: dz,
            dr_nd: 0.0,
            dt_ms: dt_nd,
            config_hash: String::new(),
            max_energy_residual_rel: 0.0,
        },
    })
}

fn config_hash(weld: &WeldConfig, mesh: &MeshConfig) -> String {
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_vec(&(weld, mesh)).unwrap_or_default());
    let digest = hasher.finalize();
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Cumulative thermal-expansion integral of one column:
/// u(z̃) = z_c·∫₀^z̃ β(T)·(T − T_ref)·dz', trapezoidal.
fn expansion_column(temp_c: &[f64], dz: f64, z_c: f64, t_ref: f64, mat: &MaterialTable) -> Vec<f64> {
    let mut u = Vec::with_capacity(temp_c.len());
    let integrand: Vec<f64> = temp_c
        .iter()
        .map(|&t| {
            let (beta, _) = mat.lookup(crate::material::Property::Beta, t);
            beta * (t - t_ref)
        })
        .collect();
    let mut acc = 0.0;
    u.push(0.0);
    for i in 1..temp_c.len() {
        acc += 0.5 * (integrand[i] + integrand[i - 1]) * dz;
        u.push(acc * z_c);
    }
    u
}

/// Implicit 1D solve of the nondimensional weld problem with per-step
/// material lookups, the faying-band contact source, and Robin boundaries at
/// both electrode faces.
pub fn fd_solve_1d(
    weld: &WeldConfig,
    mat: &MaterialTable,
    hard: &HardnessModel,
    mesh: &MeshConfig,
) -> Result<GridSolution> {
    weld.validate()?;
    if mesh.n_z < 4 || mesh.dt_ms <= 0.0 {
        return Err(Error::Config("1D mesh needs n_z >= 4 and dt > 0".into()));
    }
    let scales = weld.scales;
    let src = SourceField::new(weld, mat, hard);
    let n = mesh.n_z + 1;
    let dz = 1.0 / mesh.n_z as f64;
    let dt = mesh.dt_ms / scales.t_c;
    let z_nd: Vec<f64> = (0..n).map(|i| i as f64 * dz).collect();
    let t_ref_nd = |c: f64| scales.temp_nd_from(c, weld.refs.offset_c);
    let cool = t_ref_nd(weld.refs.coolant_c);
    let biot = weld.bounds.biot_nd(&scales);
    let i_ka = weld.schedule.i_max_ka;
    let force = weld.contact.force_n;
    let n_spots = weld.contact.n_spots;

    let mut temp = vec![t_ref_nd(weld.refs.initial_c); n];
    let n_steps = (weld.schedule.t_end_ms() / mesh.dt_ms).round() as usize;

    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut c = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut lambda = vec![0.0; n];

    let mut sol = GridSolution {
        r_nd: vec![0.0],
        z_nd: z_nd.clone(),
        t_stored_ms: vec![],
        temp_c: vec![],
        u_mm: vec![],
        t_steps_ms: vec![0.0],
        u_top_mm: vec![0.0],
        faying_temp_c: vec![vec![weld.refs.initial_c]],
        meta: SolveMeta {
            scheme: "backward-euler/fv-1d".into(),
            dz_nd: dz,
            dr_nd: 0.0,
            dt_ms: mesh.dt_ms,
            config_hash: config_hash(weld, mesh),
            max_energy_residual_rel: 0.0,
        },
    };
    let mid = mesh.n_z / 2;

    let store = |temp: &[f64], t_ms: f64, sol: &mut GridSolution| {
        sol.t_stored_ms.push(t_ms);
        let temps_c: Vec<f64> = temp.iter().map(|&v| scales.temp_c_from(v, weld.refs.offset_c)).collect();
        let u = expansion_column(&temps_c, dz, scales.z_c, weld.refs.initial_c, mat);
        sol.temp_c.extend_from_slice(&temps_c);
        sol.u_mm.extend_from_slice(&u);
    };
    store(&temp, 0.0, &mut sol);

    for step in 1..=n_steps {
        let t_ms = step as f64 * mesh.dt_ms;
        let t_nd = t_ms / scales.t_c;
        for i in 0..n {
            let temp_c = scales.temp_c_from(temp[i], weld.refs.offset_c);
            let (l, _) = mat.lookup(crate::material::Property::LambdaTh, temp_c);
            lambda[i] = l / scales.lambda_c;
        }
        let mu = dt / (dz * dz);
        for i in 1..n - 1 {
            let lm = 0.5 * (lambda[i] + lambda[i - 1]);
            let lp = 0.5 * (lambda[i] + lambda[i + 1]);
            a[i] = -mu * lm;
            c[i] = -mu * lp;
            b[i] = 1.0 + mu * (lm + lp);
            let temp_c = scales.temp_c_from(temp[i], weld.refs.offset_c);
            let q = src.q_nd_cell(0.0, z_nd[i] - 0.5 * dz, z_nd[i] + 0.5 * dz, t_nd, temp_c, i_ka, force, n_spots)?;
            rhs[i] = temp[i] + dt * q;
        }
        // Half-cell Robin rows at z̃ = 0 and z̃ = 1.
        {
            let lp = 0.5 * (lambda[0] + lambda[1]);
            let robin = 2.0 * dt / dz * lambda[0] * biot;
            a[0] = 0.0;
            c[0] = -2.0 * mu * lp;
            b[0] = 1.0 + 2.0 * mu * lp + robin;
            let temp_c = scales.temp_c_from(temp[0], weld.refs.offset_c);
            let q = src.q_nd_cell(0.0, 0.0, 0.5 * dz, t_nd, temp_c, i_ka, force, n_spots)?;
            rhs[0] = temp[0] + dt * q + robin * cool;
        }
        {
            let lm = 0.5 * (lambda[n - 1] + lambda[n - 2]);
            let robin = 2.0 * dt / dz * lambda[n - 1] * biot;
            c[n - 1] = 0.0;
            a[n - 1] = -2.0 * mu * lm;
            b[n - 1] = 1.0 + 2.0 * mu * lm + robin;
            let temp_c = scales.temp_c_from(temp[n - 1], weld.refs.offset_c);
            let q = src.q_nd_cell(0.0, 1.0 - 0.5 * dz, 1.0, t_nd, temp_c, i_ka, force, n_spots)?;
            rhs[n - 1] = temp[n - 1] + dt * q + robin * cool;
        }
        solve_tridiag(&a, &b, &c, &mut rhs, &mut scratch);
        temp.copy_from_slice(&rhs);
        if temp.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver(format!("1D solve diverged at step {step} (t = {t_ms} ms)")));
        }

        sol.t_steps_ms.push(t_ms);
        let temps_c: Vec<f64> = temp.iter().map(|&v| scales.temp_c_from(v, weld.refs.offset_c)).collect();
        let u = expansion_column(&temps_c, dz, scales.z_c, weld.refs.initial_c, mat);
        sol.u_top_mm.push(*u.last().unwrap());
        sol.faying_temp_c.push(vec![temps_c[mid]]);
        let want_store = mesh.store_every > 0 && step % mesh.store_every == 0;
        if want_store || step == n_steps {
            store(&temp, t_ms, &mut sol);
        }
    }
    Ok(sol)
}

/// Banded LU solve without pivoting (the FV heat matrix is strictly
/// diagonally dominant). `band[i][hb + (j − i)]` holds A[i][j].
fn solve_banded(band: &mut [Vec<f64>], rhs: &mut [f64], hb: usize) {
    let n = rhs.len();
    for k in 0..n {
        let pivot = band[k][hb];
        let i_end = (k + hb + 1).min(n);
        for i in k + 1..i_end {
            let idx = hb + k - i;
            let f = band[i][idx] / pivot;
            if f == 0.0 {
                continue;
            }
            band[i][idx] = 0.0;
            let j_end = (k + hb + 1).min(n);
            for j in k + 1..j_end {
                let delta = f * band[k][hb + j - k];
                band[i][hb + j - i] -= delta;
            }
            rhs[i] -= f * rhs[k];
        }
    }
    for i in (0..n).rev() {
        let mut acc = rhs[i];
        let j_end = (i + hb + 1).min(n);
        for j in i + 1..j_end {
            acc -= band[i][hb + j - i] * rhs[j];
        }
        rhs[i] = acc / band[i][hb];
    }
}

/// Axisymmetric 2D solve: symmetry at the axis, radial Robin at r̃ = 1,
/// axial Robin at both faces, the contact band at z̃ = 0.5, all implicit.
/// The per-step energy audit (stored-energy rate versus source minus
/// boundary fluxes) is recorded in the metadata.
pub fn fd_solve_2d(
    weld: &WeldConfig,
    mat: &MaterialTable,
    hard: &HardnessModel,
    mesh: &MeshConfig,
) -> Result<GridSolution> {
    weld.validate()?;
    if mesh.n_z < 4 || mesh.n_r < 4 || mesh.dt_ms <= 0.0 {
        return Err(Error::Config("2D mesh needs n_z, n_r >= 4 and dt > 0".into()));
    }
    let scales = weld.scales;
    let src = SourceField::new(weld, mat, hard);
    let (nr, nz) = (mesh.n_r + 1, mesh.n_z + 1);
    let n_total = nr * nz;
    let dr = 1.0 / mesh.n_r as f64;
    let dz = 1.0 / mesh.n_z as f64;
    let dt = mesh.dt_ms / scales.t_c;
    let c_r = scales.radial_factor();
    let r_nd: Vec<f64> = (0..nr).map(|i| i as f64 * dr).collect();
    let z_nd: Vec<f64> = (0..nz).map(|i| i as f64 * dz).collect();

    // Radial control-volume measures ∫ r dr over each cell and face radii.
    let vr: Vec<f64> = (0..nr)
        .map(|i| {
            let lo = if i == 0 { 0.0 } else { r_nd[i] - 0.5 * dr };
            let hi = if i == nr - 1 { r_nd[i] } else { r_nd[i] + 0.5 * dr };
            0.5 * (hi * hi - lo * lo)
        })
        .collect();
    let vz: Vec<f64> = (0..nz).map(|i| if i == 0 || i == nz - 1 { 0.5 * dz } else { dz }).collect();

    let t_ref_nd = |c: f64| scales.temp_nd_from(c, weld.refs.offset_c);
    let cool = t_ref_nd(weld.refs.coolant_c);
    let far = t_ref_nd(weld.refs.far_field_c);
    let biot = weld.bounds.biot_nd(&scales);
    let inv_ln_l = weld.bounds.inv_ln_l();
    let i_ka = weld.schedule.i_max_ka;
    let force = weld.contact.force_n;
    let n_spots = weld.contact.n_spots;

    let mut temp = vec![t_ref_nd(weld.refs.initial_c); n_total];
    let n_steps = (weld.schedule.t_end_ms() / mesh.dt_ms).round() as usize;
    let hb = nz;
    let mut band: Vec<Vec<f64>> = vec![vec![0.0; 2 * hb + 1]; n_total];
    let mut rhs = vec![0.0; n_total];
    let mut lambda = vec![0.0; n_total];
    let mut q_cell = vec![0.0; n_total];
    let idx = |ir: usize, iz: usize| ir * nz + iz;

    let mut sol = GridSolution {
        r_nd: r_nd.clone(),
        z_nd: z_nd.clone(),
        t_stored_ms: vec![],
        temp_c: vec![],
        u_mm: vec![],
        t_steps_ms: vec![0.0],
        u_top_mm: vec![0.0],
        faying_temp_c: vec![vec![weld.refs.initial_c; nr]],
        meta: SolveMeta {
            scheme: "backward-euler/fv-axisymmetric".into(),
            dz_nd: dz,
            dr_nd: dr,
            dt_ms: mesh.dt_ms,
            config_hash: config_hash(weld, mesh),
            max_energy_residual_rel: 0.0,
        },
    };
    let mid = mesh.n_z / 2;

    let store = |temp: &[f64], t_ms: f64, sol: &mut GridSolution| {
        sol.t_stored_ms.push(t_ms);
        for ir in 0..nr {
            let col: Vec<f64> = (0..nz)
                .map(|iz| scales.temp_c_from(temp[idx(ir, iz)], weld.refs.offset_c))
                .collect();
            let u = expansion_column(&col, dz, scales.z_c, weld.refs.initial_c, mat);
            sol.temp_c.extend_from_slice(&col);
            sol.u_mm.extend_from_slice(&u);
        }
    };
    store(&temp, 0.0, &mut sol);

    for step in 1..=n_steps {
        let t_ms = step as f64 * mesh.dt_ms;
        let t_nd = t_ms / scales.t_c;
        for i in 0..n_total {
            let temp_c = scales.temp_c_from(temp[i], weld.refs.offset_c);
            let (l, _) = mat.lookup(crate::material::Property::LambdaTh, temp_c);
            lambda[i] = l / scales.lambda_c;
        }
        for ir in 0..nr {
            for iz in 0..nz {
                let temp_c = scales.temp_c_from(temp[idx(ir, iz)], weld.refs.offset_c);
                let (z_lo, z_hi) = (z_nd[iz] - 0.5 * dz, z_nd[iz] + 0.5 * dz);
                q_cell[idx(ir, iz)] =
                    src.q_nd_cell(r_nd[ir], z_lo.max(0.0), z_hi.min(1.0), t_nd, temp_c, i_ka, force, n_spots)?;
            }
        }

        for row in band.iter_mut() {
            row.fill(0.0);
        }
        for ir in 0..nr {
            for iz in 0..nz {
                let i = idx(ir, iz);
                let vol = vr[ir] * vz[iz];
                let mut diag = vol / dt;
                rhs[i] = vol / dt * temp[i] + vol * q_cell[i];

                // Axial faces.
                if iz > 0 {
                    let lf = 0.5 * (lambda[i] + lambda[idx(ir, iz - 1)]);
                    let k = lf * vr[ir] / dz;
                    diag += k;
                    band[i][hb - 1] -= k;
                } else {
                    let k = lambda[i] * biot * vr[ir];
                    diag += k;
                    rhs[i] += k * cool;
                }
                if iz < nz - 1 {
                    let lf = 0.5 * (lambda[i] + lambda[idx(ir, iz + 1)]);
                    let k = lf * vr[ir] / dz;
                    diag += k;
                    band[i][hb + 1] -= k;
                } else {
                    let k = lambda[i] * biot * vr[ir];
                    diag += k;
                    rhs[i] += k * cool;
                }

                // Radial faces (weighted by z_c²/r_c² and the face radius).
                if ir > 0 {
                    let lf = 0.5 * (lambda[i] + lambda[idx(ir - 1, iz)]);
                    let k = c_r * lf * (r_nd[ir] - 0.5 * dr) * vz[iz] / dr;
                    diag += k;
                    band[i][hb - nz] -= k;
                }
                if ir < nr - 1 {
                    let lf = 0.5 * (lambda[i] + lambda[idx(ir + 1, iz)]);
                    let k = c_r * lf * (r_nd[ir] + 0.5 * dr) * vz[iz] / dr;
                    diag += k;
                    band[i][hb + nz] -= k;
                } else {
                    // Radial Robin: incoming flux C_r·λ·(1/ln L)·(T_far − T)·r·Vz.
                    let k = c_r * lambda[i] * inv_ln_l * r_nd[ir] * vz[iz];
                    diag += k;
                    rhs[i] += k * far;
                }
                band[i][hb] = diag;
            }
        }

        let temp_old = temp.clone();
        solve_banded(&mut band, &mut rhs, hb);
        temp.copy_from_slice(&rhs);
        if temp.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver(format!("2D solve diverged at step {step} (t = {t_ms} ms)")));
        }

        // Discrete energy audit: Σ V·ΔT = Δt·(Σ V·Q + boundary fluxes).
        let mut stored = 0.0;
        let mut injected = 0.0;
        for ir in 0..nr {
            for iz in 0..nz {
                let i = idx(ir, iz);
                let vol = vr[ir] * vz[iz];
                stored += vol * (temp[i] - temp_old[i]);
                injected += vol * q_cell[i];
            }
        }
        for ir in 0..nr {
            injected -= lambda[idx(ir, 0)] * biot * vr[ir] * (temp[idx(ir, 0)] - cool);
            injected -= lambda[idx(ir, nz - 1)] * biot * vr[ir] * (temp[idx(ir, nz - 1)] - cool);
        }
        for iz in 0..nz {
            injected -= c_r * lambda[idx(nr - 1, iz)] * inv_ln_l * r_nd[nr - 1] * vz[iz]
                * (temp[idx(nr - 1, iz)] - far);
        }
        let denom = stored.abs().max(dt * injected.abs()).max(1e-30);
        let rel = (stored - dt * injected).abs() / denom;
        if rel > sol.meta.max_energy_residual_rel {
            sol.meta.max_energy_residual_rel = rel;
        }

        sol.t_steps_ms.push(t_ms);
        let center: Vec<f64> = (0..nz)
            .map(|iz| scales.temp_c_from(temp[idx(0, iz)], weld.refs.offset_c))
            .collect();
        let u = expansion_column(&center, dz, scales.z_c, weld.refs.initial_c, mat);
        sol.u_top_mm.push(*u.last().unwrap());
        sol.faying_temp_c.push(
            (0..nr)
                .map(|ir| scales.temp_c_from(temp[idx(ir, mid)], weld.refs.offset_c))
                .collect(),
        );
        let want_store = mesh.store_every > 0 && step % mesh.store_every == 0;
        if want_store || step == n_steps {
            store(&temp, t_ms, &mut sol);
        }
    }
    Ok(sol)
}

/// Nugget diameter from a faying-surface temperature row: twice the largest
/// radius of the super-liquidus region contiguous with its radial peak, in
/// mm; zero when nothing reaches the liquidus.
pub fn nugget_diameter_row(faying_temp_c: &[f64], r_nd: &[f64], t_liq_c: f64, r_c: f64) -> f64 {
    if faying_temp_c.is_empty() {
        return 0.0;
    }
    // Innermost radial peak; ties resolve toward the axis where the nugget
    // physically grows from.
    let mut peak = 0;
    for (i, &t) in faying_temp_c.iter().enumerate() {
        if t > faying_temp_c[peak] {
            peak = i;
        }
    }
    if faying_temp_c[peak] < t_liq_c {
        return 0.0;
    }
    let mut edge = peak;
    for i in peak + 1..faying_temp_c.len() {
        if faying_temp_c[i] >= t_liq_c {
            edge = i;
        } else {
            break;
        }
    }
    2.0 * r_c * r_nd[edge]
}

/// Nugget diameter of a solved field at the step closest to `t_ms`.
pub fn nugget_diameter(sol: &GridSolution, t_ms: f64, t_liq_c: f64, r_c: f64) -> f64 {
    let step = sol
        .t_steps_ms
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - t_ms).abs().total_cmp(&(b.1 - t_ms).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    nugget_diameter_row(&sol.faying_temp_c[step], &sol.r_nd, t_liq_c, r_c)
}

/// Which solver backs the synthetic experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Fd1d,
    Fd2d,
}

/// Synthetic-experiment controls.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SynthConfig {
    pub currents_ka: Vec<f64>,
    pub forces_kn: Vec<f64>,
    pub mesh: MeshConfig,
    pub solver: SolverKind,
    /// Gaussian displacement noise as a fraction of the peak, 0 to disable.
    pub noise_rel: f64,
    /// Model the ±5 N force-control hysteresis band as displacement jitter.
    pub hysteresis: bool,
    pub seed: u64,
    /// Ground-truth contact-spot count used for generation.
    pub n_spots_truth: f64,
}

impl SynthConfig {
    /// Full 22 × 4 experimental grid.
    pub fn full_grid() -> Self {
        Self {
            currents_ka: (26..=47).map(|i| i as f64).collect(),
            forces_kn: (5..=8).map(|f| f as f64).collect(),
            mesh: MeshConfig { n_z: 80, n_r: 40, dt_ms: 2.0, store_every: 0 },
            solver: SolverKind::Fd2d,
            noise_rel: 0.01,
            hysteresis: false,
            seed: 7,
            n_spots_truth: 40_000.0,
        }
    }
}

/// Closed-loop welding-control simulation: at each step the displacement
/// error, the windowed PID state, and the control response are solved
/// simultaneously, so `x_s == pid_response(d)` holds exactly for the
/// emitted series.
pub fn control_loop(u_th: &[f64], pid: &PIDParams) -> (Vec<f64>, Vec<f64>) {
    let dt_s = pid.dt_ms * 1e-3;
    let gain = pid.k_p + pid.k_i * dt_s + pid.k_d / dt_s;
    let mut errors: Vec<f64> = Vec::with_capacity(u_th.len());
    let mut x_s = Vec::with_capacity(u_th.len());
    let mut window_sum = 0.0;
    for (tau, &u) in u_th.iter().enumerate() {
        if pid.window > 0 && tau >= pid.window {
            window_sum -= errors[tau - pid.window];
        }
        let e_prev = if tau == 0 { 0.0 } else { errors[tau - 1] };
        let carry = pid.k_i * dt_s * window_sum - pid.k_d / dt_s * e_prev;
        let e = (u - carry) / (1.0 + gain);
        errors.push(e);
        window_sum += e;
        x_s.push(u - e);
    }
    (x_s, errors)
}

/// Run the forward solver over the (current, force) grid and emit one
/// synthetic weld record per combination: displacement through the control
/// loop plus optional noise, and the nugget diameter at weld end (2D).
pub fn synth_experiment(
    base: &WeldConfig,
    mat: &MaterialTable,
    hard: &HardnessModel,
    pid: &PIDParams,
    cfg: &SynthConfig,
) -> Result<Vec<WeldRecord>> {
    use rand::{Rng, SeedableRng};
    let combos: Vec<(f64, f64)> = cfg
        .currents_ka
        .iter()
        .flat_map(|&i| cfg.forces_kn.iter().map(move |&f| (i, f)))
        .collect();
    let records: Result<Vec<WeldRecord>> = combos
        .par_iter()
        .enumerate()
        .map(|(w_idx, &(i_ka, f_kn))| {
            let mut weld = base.clone();
            weld.schedule.i_max_ka = i_ka;
            weld.contact.force_n = f_kn * 1e3;
            weld.contact.n_spots = cfg.n_spots_truth;
            let sol = match cfg.solver {
                SolverKind::Fd1d => fd_solve_1d(&weld, mat, hard, &cfg.mesh)?,
                SolverKind::Fd2d => fd_solve_2d(&weld, mat, hard, &cfg.mesh)?,
            };
            // Resample the per-step expansion onto the 1 ms measurement grid.
            let n_ms = weld.schedule.t_end_ms() as usize;
            let u_th: Vec<f64> = (0..=n_ms)
                .map(|ms| sample_series(&sol.t_steps_ms, &sol.u_top_mm, ms as f64))
                .collect();
            let (x_s, _) = control_loop(&u_th, pid);
            let mut d = measured_displacement(&u_th, &x_s);
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(cfg.seed.wrapping_add(w_idx as u64));
            if cfg.hysteresis {
                let jitter = 5.0 / weld.contact.k_spring;
                for v in d.iter_mut() {
                    *v += jitter * (2.0 * rng.random::<f64>() - 1.0);
                }
            }
            if cfg.noise_rel > 0.0 {
                let peak = d.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
                let sigma = cfg.noise_rel * peak;
                for v in d.iter_mut() {
                    let (u1, u2) = (1.0 - rng.random::<f64>(), rng.random::<f64>());
                    *v += sigma * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
                }
            }
            let d_p = match cfg.solver {
                SolverKind::Fd2d => nugget_diameter(
                    &sol,
                    weld.schedule.t_weld_end_ms(),
                    mat.phase.t_liq,
                    weld.scales.r_c,
                ),
                SolverKind::Fd1d => 0.0,
            };
            Ok(WeldRecord {
                weld_id: format!("i{:02.0}_f{:.0}", i_ka, f_kn),
                i_max_ka: i_ka,
                f_max_kn: f_kn,
                y_d_mm: d,
                d_p_mm: d_p,
                y_std_mm: None,
            })
        })
        .collect();
    records
}

/// Piecewise-linear resampling of a step series at an arbitrary time.
fn sample_series(t: &[f64], v: &[f64], at: f64) -> f64 {
    if at <= t[0] {
        return v[0];
    }
    if at >= *t.last().unwrap() {
        return *v.last().unwrap();
    }
    let i = t.partition_point(|&x| x <= at) - 1;
    let w = (at - t[i]) / (t[i + 1] - t[i]);
    v[i] + w * (v[i + 1] - v[i])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::pid_response;
    use approx::assert_relative_eq;

    #[test]
    fn analytic_satisfies_boundary_and_initial_conditions() {
        for t in [0.0, 0.3, 2.0] {
            assert_eq!(analytic_benchmark(0.0, t, 0.06), 0.0);
            assert!(analytic_benchmark(1.0, t, 0.06).abs() < 1e-15);
        }
        for z in [0.1, 0.5, 0.9] {
            assert_eq!(analytic_benchmark(z, 0.0, 0.06), 0.0);
        }
    }

    #[test]
    fn analytic_steady_state_amplitude() {
        let steady = analytic_benchmark(0.5, 1e6, 0.06);
        assert_relative_eq!(steady, 1.0 / (0.06 * std::f64::consts::PI.powi(2)), max_relative = 1e-12);
        assert_relative_eq!(steady, 1.6887, max_relative = 1e-4);
    }

    #[test]
    fn benchmark_fd_matches_analytic_solution() {
        // Criterion: max error <= 1e-4 at Δz = 1e-3.
        let sol = fd_solve_benchmark(0.06, 1000, 1e-4, 1.0).unwrap();
        let last = sol.t_stored_ms.len() - 1;
        let t = sol.t_stored_ms[last];
        let mut max_err = 0.0_f64;
        for (iz, &z) in sol.z_nd.iter().enumerate() {
            let err = (sol.temp_at(last, 0, iz) - analytic_benchmark(z, t, 0.06)).abs();
            max_err = max_err.max(err);
        }
        assert!(max_err <= 1e-4, "max error {max_err}");
    }

    #[test]
    fn benchmark_fd_converges_with_refinement() {
        let err_at = |n_z: usize, dt: f64| -> f64 {
            let sol = fd_solve_benchmark(0.06, n_z, dt, 0.5).unwrap();
            let last = sol.t_stored_ms.len() - 1;
            sol.z_nd
                .iter()
                .enumerate()
                .map(|(iz, &z)| (sol.temp_at(last, 0, iz) - analytic_benchmark(z, 0.5, 0.06)).abs())
                .fold(0.0_f64, f64::max)
        };
        let coarse = err_at(100, 4e-3);
        let fine = err_at(200, 2e-3);
        // Backward Euler: halving Δt (dominant term) roughly halves the error.
        assert!(fine < 0.7 * coarse, "coarse {coarse}, fine {fine}");
    }

    /// Calibrated run configuration: effective film constants sized so the
    /// faying band melts at mid-range currents (the raw handbook film values
    /// put megawatts into a 10 nm film).
    pub(crate) fn calibrated_weld(i_ka: f64, f_kn: f64) -> WeldConfig {
        let mut weld = WeldConfig::default();
        weld.schedule.i_max_ka = i_ka;
        weld.contact.force_n = f_kn * 1e3;
        weld.contact.rho_film = 5e-4;
        weld.contact.l_film = 0.3;
        weld.contact.hertzian_weighting = true;
        weld
    }

    #[test]
    fn no_current_stays_at_reference() {
        // Uniform references so the equilibrium is exact.
        let mut weld = calibrated_weld(32.0, 5.0);
        weld.refs.initial_c = 20.0;
        weld.refs.coolant_c = 20.0;
        weld.refs.far_field_c = 20.0;
        weld.schedule.i_preheat_ka = 1e-9;
        weld.schedule.i_max_ka = 1e-9;
        let mesh = MeshConfig { n_z: 50, n_r: 0, dt_ms: 5.0, store_every: 0 };
        let sol = fd_solve_1d(&weld, &MaterialTable::default_almgsi(), &HardnessModel::default(), &mesh).unwrap();
        let last = sol.t_stored_ms.len() - 1;
        for iz in 0..sol.n_z() {
            assert!((sol.temp_at(last, 0, iz) - 20.0).abs() <= 1e-8);
        }
    }

    #[test]
    fn weld_solve_heats_the_faying_plane_most() {
        let weld = calibrated_weld(40.0, 5.0);
        let mesh = MeshConfig { n_z: 100, n_r: 0, dt_ms: 1.0, store_every: 0 };
        let sol = fd_solve_1d(&weld, &MaterialTable::default_almgsi(), &HardnessModel::default(), &mesh).unwrap();
        // Peak at weld end sits at the faying plane and exceeds both faces.
        let at_weld_end: Vec<f64> = sol.faying_temp_c.iter().map(|r| r[0]).collect();
        let peak = at_weld_end.iter().fold(0.0_f64, |m, &v| m.max(v));
        assert!(peak > 400.0, "faying peak only {peak} °C");
        let last = sol.t_stored_ms.len() - 1;
        let mid = sol.n_z() / 2;
        assert!(sol.temp_at(last, 0, mid) > sol.temp_at(last, 0, 0));
        // Expansion is positive and grows during the weld.
        assert!(*sol.u_top_mm.last().unwrap() > 0.0 || sol.u_top_mm.iter().cloned().fold(0.0_f64, f64::max) > 0.0);
    }

    #[test]
    fn fd_2d_uniform_source_insulated_matches_1d() {
        // With the radial boundary insulated (L → huge makes 1/ln L → 0 and
        // far = initial) and a radially uniform source, each column behaves
        // like the 1D solve.
        let mut weld = calibrated_weld(36.0, 6.0);
        weld.bounds.l_far_mm = 1e300;
        weld.refs.far_field_c = weld.refs.initial_c;
        weld.contact.hertzian_weighting = false;
        let mat = MaterialTable::default_almgsi();
        let hard = HardnessModel::default();
        let mesh1 = MeshConfig { n_z: 60, n_r: 0, dt_ms: 2.0, store_every: 0 };
        let mesh2 = MeshConfig { n_z: 60, n_r: 8, dt_ms: 2.0, store_every: 0 };
        let s1 = fd_solve_1d(&weld, &mat, &hard, &mesh1).unwrap();
        let s2 = fd_solve_2d(&weld, &mat, &hard, &mesh2).unwrap();
        let l1 = s1.t_stored_ms.len() - 1;
        let l2 = s2.t_stored_ms.len() - 1;
        let mut max_dev = 0.0_f64;
        for iz in 0..s1.n_z() {
            for ir in 0..s2.n_r() {
                max_dev = max_dev.max((s2.temp_at(l2, ir, iz) - s1.temp_at(l1, 0, iz)).abs());
            }
        }
        let peak = (0..s1.n_z()).map(|iz| s1.temp_at(l1, 0, iz)).fold(0.0_f64, f64::max);
        assert!(max_dev <= 0.02 * peak, "columns deviate by {max_dev} K (peak {peak})");
    }

    #[test]
    fn fd_2d_no_current_is_constant_field() {
        let mut weld = calibrated_weld(32.0, 5.0);
        weld.refs.initial_c = 20.0;
        weld.refs.coolant_c = 20.0;
        weld.refs.far_field_c = 20.0;
        weld.schedule.i_preheat_ka = 1e-9;
        weld.schedule.i_max_ka = 1e-9;
        let mesh = MeshConfig { n_z: 20, n_r: 10, dt_ms: 5.0, store_every: 0 };
        let sol = fd_solve_2d(&weld, &MaterialTable::default_almgsi(), &HardnessModel::default(), &mesh).unwrap();
        let last = sol.t_stored_ms.len() - 1;
        for ir in 0..sol.n_r() {
            for iz in 0..sol.n_z() {
                assert!((sol.temp_at(last, ir, iz) - 20.0).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn fd_2d_energy_audit_closes() {
        let weld = calibrated_weld(40.0, 5.0);
        let mesh = MeshConfig { n_z: 40, n_r: 16, dt_ms: 2.0, store_every: 0 };
        let sol = fd_solve_2d(&weld, &MaterialTable::default_almgsi(), &HardnessModel::default(), &mesh).unwrap();
        assert!(
            sol.meta.max_energy_residual_rel <= 0.01,
            "energy residual {}",
            sol.meta.max_energy_residual_rel
        );
    }

    #[test]
    fn fd_1d_refinement_is_consistent() {
        let weld = calibrated_weld(38.0, 6.0);
        let mat = MaterialTable::default_almgsi();
        let hard = HardnessModel::default();
        let run = |n_z: usize, dt: f64| {
            let mesh = MeshConfig { n_z, n_r: 0, dt_ms: dt, store_every: 0 };
            fd_solve_1d(&weld, &mat, &hard, &mesh).unwrap()
        };
        let coarse = run(100, 2.0);
        let fine = run(200, 1.0);
        let finest = run(400, 0.5);
        // Sample the faying temperature at weld end; differences shrink with
        // refinement.
        let probe = |s: &GridSolution| s.faying_temp_c[s.t_steps_ms.len() - 1][0];
        let d1 = (probe(&coarse) - probe(&finest)).abs();
        let d2 = (probe(&fine) - probe(&finest)).abs();
        assert!(d2 < d1, "refinement did not reduce deviation: {d1} vs {d2}");
    }

    #[test]
    fn control_loop_matches_pid_response_exactly() {
        let pid = PIDParams::default();
        let u_th: Vec<f64> = (0..400).map(|i| 0.06 * (1.0 - (-(i as f64) / 120.0).exp())).collect();
        let (x_s, errors) = control_loop(&u_th, &pid);
        let replay = pid_response(&errors, &pid);
        for i in 0..u_th.len() {
            assert!((x_s[i] - replay[i]).abs() <= 1e-12, "step {i}");
            // d = e must stay non-negative for a rising expansion.
            assert!(errors[i] >= -1e-12);
        }
    }

    #[test]
    fn control_loop_zero_gains_passes_expansion_through() {
        let pid = PIDParams { k_p: 0.0, k_i: 0.0, k_d: 0.0, ..PIDParams::default() };
        let u_th = vec![0.0, 0.01, 0.02, 0.03];
        let (x_s, d) = control_loop(&u_th, &pid);
        assert!(x_s.iter().all(|&x| x == 0.0));
        assert_eq!(d, u_th);
    }

    #[test]
    fn nugget_diameter_rules() {
        let r: Vec<f64> = (0..11).map(|i| i as f64 / 10.0).collect();
        // All below liquidus.
        assert_eq!(nugget_diameter_row(&vec![500.0; 11], &r, 660.0, 5.0), 0.0);
        // All above: full width 2·r_c = 10 mm.
        assert_eq!(nugget_diameter_row(&vec![700.0; 11], &r, 660.0, 5.0), 10.0);
        // Center-peaked: edge at r = 0.4.
        let row: Vec<f64> = r.iter().map(|&rr| 800.0 - 500.0 * rr).collect();
        // T(0.4) = 600 < 660; T(0.2) = 700: edge index 2 → d = 2·5·0.2.
        assert_eq!(nugget_diameter_row(&row, &r, 660.0, 5.0), 2.0);
        // Disconnected hot spot beyond a cold gap is not counted.
        let mut gap = vec![700.0, 700.0, 500.0, 700.0, 500.0, 500.0, 500.0, 500.0, 500.0, 500.0, 500.0];
        assert_eq!(nugget_diameter_row(&gap, &r, 660.0, 5.0), 1.0);
        gap[0] = 600.0;
        // Peak moves to index 1.
        assert_eq!(nugget_diameter_row(&gap, &r, 660.0, 5.0), 1.0);
    }

    #[test]
    fn synth_small_grid_is_deterministic_and_monotone() {
        let base = calibrated_weld(32.0, 5.0);
        let mat = MaterialTable::default_almgsi();
        let hard = HardnessModel::default();
        let pid = PIDParams::default();
        let cfg = SynthConfig {
            currents_ka: vec![26.0, 33.0, 40.0, 47.0],
            forces_kn: vec![5.0],
            mesh: MeshConfig { n_z: 60, n_r: 20, dt_ms: 2.0, store_every: 0 },
            solver: SolverKind::Fd2d,
            noise_rel: 0.0,
            hysteresis: false,
            seed: 3,
            n_spots_truth: 40_000.0,
        };
        let recs = synth_experiment(&base, &mat, &hard, &pid, &cfg).unwrap();
        assert_eq!(recs.len(), 4);
        let again = synth_experiment(&base, &mat, &hard, &pid, &cfg).unwrap();
        for (a, b) in recs.iter().zip(&again) {
            assert_eq!(a.y_d_mm, b.y_d_mm);
            assert_eq!(a.d_p_mm, b.d_p_mm);
        }
        // Higher current, same force: nugget diameter nondecreasing.
        for w in recs.windows(2) {
            assert!(
                w[1].d_p_mm >= w[0].d_p_mm - 1e-12,
                "d_p not monotone: {} then {}",
                w[0].d_p_mm,
                w[1].d_p_mm
            );
        }
        // The top current must actually melt at these settings.
        assert!(recs[3].d_p_mm > 0.0, "47 kA weld produced no nugget");
    }

    #[test]
    fn synth_zero_noise_zero_control_returns_expansion() {
        let base = calibrated_weld(40.0, 5.0);
        let mat = MaterialTable::default_almgsi();
        let hard = HardnessModel::default();
        let pid = PIDParams { k_p: 0.0, k_i: 0.0, k_d: 0.0, ..PIDParams::default() };
        let cfg = SynthConfig {
            currents_ka: vec![40.0],
            forces_kn: vec![5.0],
            mesh: MeshConfig { n_z: 60, n_r: 0, dt_ms: 1.0, store_every: 0 },
            solver: SolverKind::Fd1d,
            noise_rel: 0.0,
            hysteresis: false,
            seed: 1,
            n_spots_truth: 40_000.0,
        };
        let recs = synth_experiment(&base, &mat, &hard, &pid, &cfg).unwrap();
        let sol = fd_solve_1d(
            &{
                let mut w = base.clone();
                w.schedule.i_max_ka = 40.0;
                w.contact.n_spots = 40_000.0;
                w
            },
            &mat,
            &hard,
            &MeshConfig { n_z: 60, n_r: 0, dt_ms: 1.0, store_every: 0 },
        )
        .unwrap();
        for (ms, &d) in recs[0].y_d_mm.iter().enumerate() {
            assert!((d - sol.u_top_mm[ms]).abs() <= 1e-12, "at {ms} ms");
        }
    }

    #[test]
    fn fd_solution_satisfies_the_pinn_residual() {
        // Jets built by central differences of the solved field, evaluated
        // through the same residual the network trains on; the mean squared
        // residual must shrink with refinement and sit at the discretization
        // level, which ties the oracle and the loss to one PDE.
        use crate::adnet::Jet2;
        use crate::material::Property;
        use crate::residuals::{heat_residual_1d, NdProps, SourceField};

        let weld = calibrated_weld(40.0, 5.0);
        let mat = MaterialTable::default_almgsi();
        let hard = HardnessModel::default();
        let msr_at = |n_z: usize, dt_ms: f64| -> f64 {
            let mesh = MeshConfig { n_z, n_r: 0, dt_ms, store_every: 1 };
            let sol = fd_solve_1d(&weld, &mat, &hard, &mesh).unwrap();
            let scales = weld.scales;
            let src = SourceField::new(&weld, &mat, &hard);
            let dz = 1.0 / n_z as f64;
            let dt_nd = dt_ms / scales.t_c;
            let band = src.band_half_width_nd() + 2.0 * dz;
            let n_t = sol.t_stored_ms.len();
            let mut sum = 0.0;
            let mut count = 0usize;
            for it in 2..n_t - 2 {
                let t_ms = sol.t_stored_ms[it];
                // Stay away from the schedule breakpoints where the source
                // jumps in time.
                if [400.0, 470.0, 560.0].iter().any(|b| (t_ms - b).abs() < 4.0 * dt_ms) {
                    continue;
                }
                for iz in 2..n_z - 1 {
                    let z = sol.z_nd[iz];
                    if (z - 0.5).abs() < band {
                        continue;
                    }
                    let t_nd = |it: usize, iz: usize| scales.temp_nd_from(sol.temp_at(it, 0, iz), weld.refs.offset_c);
                    let value = t_nd(it, iz);
                    let t_z = (t_nd(it, iz + 1) - t_nd(it, iz - 1)) / (2.0 * dz);
                    let t_zz = (t_nd(it, iz + 1) - 2.0 * value + t_nd(it, iz - 1)) / (dz * dz);
                    let t_t = (t_nd(it + 1, iz) - t_nd(it - 1, iz)) / (2.0 * dt_nd);
                    let jet = Jet2 { value, d1: vec![t_z, t_t], d2: vec![t_zz, 0.0] };
                    let temp_c = sol.temp_at(it, 0, iz);
                    let (lambda, dlambda) = mat.lookup(Property::LambdaTh, temp_c);
                    let props = NdProps {
                        lambda: lambda / scales.lambda_c,
                        dlambda: dlambda * scales.temp_c / scales.lambda_c,
                    };
                    let q = src
                        .q_nd(0.0, z, t_ms / scales.t_c, temp_c, weld.schedule.i_max_ka, weld.contact.force_n, weld.contact.n_spots)
                        .unwrap();
                    let (r, _) = heat_residual_1d(&jet, q, props);
                    sum += r * r;
                    count += 1;
                }
            }
            sum / count as f64
        };
        let coarse = msr_at(100, 2.0);
        let fine = msr_at(200, 1.0);
        assert!(
            fine < 0.7 * coarse,
            "residual did not shrink under refinement: {coarse:.3e} -> {fine:.3e}"
        );
        // The discretization level measured for these meshes is ~2e-2 /
        // ~5e-3 (backward Euler is first order in time); a mismatch between
        // the source field and the residual would push this to O(1).
        assert!(coarse < 0.2, "coarse-mesh residual too large: {coarse:.3e}");
    }

    #[test]
    fn grid_solution_binary_round_trip() {
        let sol = fd_solve_benchmark(0.06, 20, 0.01, 0.2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sol.bin");
        sol.to_binary(&path).unwrap();
        let back = GridSolution::from_binary(&path).unwrap();
        assert_eq!(back.z_nd, sol.z_nd);
        assert_eq!(back.temp_c, sol.temp_c);
    }
}
