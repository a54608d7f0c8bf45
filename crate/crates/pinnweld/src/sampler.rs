//! Latin hypercube collocation sampling, dataset assembly, and weld-level
//! train/validation/test splitting.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process::{pid_response, PIDParams};
use crate::residuals::WeldConfig;

/// Process-parameter ranges of the experimental design; network inputs are
/// normalized to [0,1] over these regardless of the sampled sub-range.
pub const I_RANGE_KA: (f64, f64) = (26.0, 47.0);
pub const F_RANGE_KN: (f64, f64) = (5.0, 8.0);

pub fn norm_current(i_ka: f64) -> f64 {
    (i_ka - I_RANGE_KA.0) / (I_RANGE_KA.1 - I_RANGE_KA.0)
}

pub fn norm_force(f_kn: f64) -> f64 {
    (f_kn - F_RANGE_KN.0) / (F_RANGE_KN.1 - F_RANGE_KN.0)
}

/// Which model the datasets are built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelMode {
    /// Dirichlet benchmark with sinusoidal source; inputs (z, t).
    Benchmark1d,
    /// 1D weld model with learnable contact-spot count; inputs (z, t, Ĩ, F̂).
    Rsw1dInverse,
    /// 1D weld model with the forward contact model.
    Rsw1dForward,
    /// Axisymmetric 2D weld model; inputs (r, z, t, Ĩ, F̂).
    Rsw2d,
}

impl ModelMode {
    pub fn input_dim(self) -> usize {
        match self {
            ModelMode::Benchmark1d => 2,
            ModelMode::Rsw1dInverse | ModelMode::Rsw1dForward => 4,
            ModelMode::Rsw2d => 5,
        }
    }

    pub fn output_dim(self) -> usize {
        match self {
            ModelMode::Benchmark1d => 1,
            _ => 2,
        }
    }

    pub fn is_2d(self) -> bool {
        self == ModelMode::Rsw2d
    }

    pub fn is_inverse(self) -> bool {
        self == ModelMode::Rsw1dInverse
    }

    pub fn is_benchmark(self) -> bool {
        self == ModelMode::Benchmark1d
    }

    /// Index of z̃ in the network input.
    pub fn z_index(self) -> usize {
        if self.is_2d() {
            1
        } else {
            0
        }
    }

    /// Index of t̃ in the network input.
    pub fn t_index(self) -> usize {
        if self.is_2d() {
            2
        } else {
            1
        }
    }

    /// Number of leading input coordinates the residuals differentiate
    /// along (space and time; never the process parameters).
    pub fn jet_dims(self) -> usize {
        match self {
            ModelMode::Benchmark1d => 2,
            ModelMode::Rsw1dInverse | ModelMode::Rsw1dForward => 2,
            ModelMode::Rsw2d => 3,
        }
    }
}

/// Sampling bounds per axis. `r` is present only for the 2D model; its lower
/// bound stays strictly positive to keep 1/r̃ finite, with the axis itself
/// covered by the symmetry loss.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Domain {
    pub r_nd: Option<(f64, f64)>,
    pub z_nd: (f64, f64),
    pub t_nd: (f64, f64),
    pub i_ka: (f64, f64),
    pub f_kn: (f64, f64),
}

impl Domain {
    pub fn for_mode(mode: ModelMode, weld: &WeldConfig) -> Self {
        let t_end = weld.t_end_nd();
        Self {
            r_nd: if mode.is_2d() { Some((0.02, 1.0)) } else { None },
            z_nd: (0.0, 1.0),
            t_nd: (0.0, t_end),
            i_ka: I_RANGE_KA,
            f_kn: F_RANGE_KN,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut spans = vec![self.z_nd, self.t_nd, self.i_ka, self.f_kn];
        if let Some(r) = self.r_nd {
            spans.push(r);
        }
        for (lo, hi) in spans {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Config(format!("domain bounds ({lo}, {hi}) invalid")));
            }
        }
        Ok(())
    }
}

/// Network input vector for a physical point: leading spatial/time
/// coordinates per mode, then the normalized process parameters.
pub fn network_input(mode: ModelMode, r_nd: f64, z_nd: f64, t_nd: f64, i_ka: f64, f_kn: f64) -> Vec<f64> {
    match mode {
        ModelMode::Benchmark1d => vec![z_nd, t_nd],
        ModelMode::Rsw1dInverse | ModelMode::Rsw1dForward => {
            vec![z_nd, t_nd, norm_current(i_ka), norm_force(f_kn)]
        }
        ModelMode::Rsw2d => vec![r_nd, z_nd, t_nd, norm_current(i_ka), norm_force(f_kn)],
    }
}

/// Latin hypercube sample: one point per axis-aligned stratum per dimension,
/// deterministic per seed.
pub fn lhs_sample(bounds: &[(f64, f64)], n: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(n >= 1, "need at least one sample");
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let dims = bounds.len();
    // Per dimension: a permutation of strata and an intra-stratum offset.
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(dims);
    for &(lo, hi) in bounds {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(&mut rng);
        let col = strata
            .into_iter()
            .map(|s| lo + (hi - lo) * ((s as f64 + rng.random::<f64>()) / n as f64))
            .collect();
        columns.push(col);
    }
    (0..n).map(|i| (0..dims).map(|d| columns[d][i]).collect()).collect()
}

/// One synthetic or measured weld experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeldRecord {
    pub weld_id: String,
    pub i_max_ka: f64,
    pub f_max_kn: f64,
    /// Dynamic displacement in mm on the 1 ms grid (761 samples for the
    /// default schedule).
    pub y_d_mm: Vec<f64>,
    /// Nugget diameter at weld end in mm.
    pub d_p_mm: f64,
    /// Optional per-sample standard deviation in mm.
    pub y_std_mm: Option<Vec<f64>>,
}

impl WeldRecord {
    pub fn validate(&self) -> Result<()> {
        if self.y_d_mm.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data(format!("weld {}: non-finite displacement", self.weld_id)));
        }
        if !(self.d_p_mm >= 0.0) {
            return Err(Error::Data(format!("weld {}: negative nugget diameter", self.weld_id)));
        }
        Ok(())
    }
}

/// Write records as per-weld CSVs plus a manifest.
pub fn save_weld_records(records: &[WeldRecord], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut manifest = String::from("weld_id,I_kA,F_kN,d_p_mm,file\n");
    for rec in records {
        let fname = format!("{}.csv", rec.weld_id);
        let mut body = String::from(if rec.y_std_mm.is_some() {
            "t_ms,disp_mm,std_mm\n"
        } else {
            "t_ms,disp_mm\n"
        });
        for (i, &d) in rec.y_d_mm.iter().enumerate() {
            match &rec.y_std_mm {
                Some(std) => body.push_str(&format!("{},{},{}\n", i, d, std[i])),
                None => body.push_str(&format!("{},{}\n", i, d)),
            }
        }
        std::fs::write(dir.join(&fname), body)?;
        manifest.push_str(&format!(
            "{},{},{},{},{}\n",
            rec.weld_id, rec.i_max_ka, rec.f_max_kn, rec.d_p_mm, fname
        ));
    }
    std::fs::write(dir.join("manifest.csv"), manifest)?;
    Ok(())
}

/// Load weld records from a manifest, skipping any weld id on the exclusion
/// list (e.g. a first weld with electrical contact irregularities).
pub fn load_weld_records(manifest_path: &Path, exclude: &[String]) -> Result<Vec<WeldRecord>> {
    let dir = manifest_path.parent().map(PathBuf::from).unwrap_or_default();
    let mut rdr = csv::Reader::from_path(manifest_path)
        .map_err(|e| Error::Config(format!("manifest {}: {e}", manifest_path.display())))?;
    let mut records = Vec::new();
    for (idx, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| Error::Data(format!("manifest row {}: {e}", idx + 2)))?;
        if row.len() != 5 {
            return Err(Error::Data(format!("manifest row {}: expected 5 columns", idx + 2)));
        }
        let weld_id = row[0].trim().to_string();
        if exclude.iter().any(|x| x == &weld_id) {
            continue;
        }
        let parse = |i: usize| -> Result<f64> {
            row[i].trim().parse().map_err(|_| {
                Error::Data(format!("manifest row {}: bad number {:?}", idx + 2, &row[i]))
            })
        };
        let (i_ka, f_kn, d_p) = (parse(1)?, parse(2)?, parse(3)?);
        let file = dir.join(row[4].trim());
        let (y_d, y_std) = load_displacement_csv(&file)?;
        let rec = WeldRecord {
            weld_id,
            i_max_ka: i_ka,
            f_max_kn: f_kn,
            y_d_mm: y_d,
            d_p_mm: d_p,
            y_std_mm: y_std,
        };
        rec.validate()?;
        records.push(rec);
    }
    Ok(records)
}

fn load_displacement_csv(path: &Path) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| Error::Config(format!("weld file {}: {e}", path.display())))?;
    let has_std = rdr
        .headers()
        .map_err(|e| Error::Data(format!("weld file {}: {e}", path.display())))?
        .iter()
        .any(|h| h.trim() == "std_mm");
    let mut y = Vec::new();
    let mut std = Vec::new();
    for (idx, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| Error::Data(format!("{} row {}: {e}", path.display(), idx + 2)))?;
        let parse = |i: usize| -> Result<f64> {
            row[i].trim().parse().map_err(|_| {
                Error::Data(format!("{} row {}: bad number {:?}", path.display(), idx + 2, &row[i]))
            })
        };
        y.push(parse(1)?);
        if has_std {
            std.push(parse(2)?);
        }
    }
    Ok((y, if has_std { Some(std) } else { None }))
}

/// Partition records at weld granularity: ⌊0.2·N⌋ each for validation and
/// test, remainder train, after a deterministic seeded shuffle.
pub fn split_by_weld(records: &[WeldRecord], seed: u64) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    let n = records.len();
    if n < 5 {
        return Err(Error::Data(format!("need at least 5 welds to split, got {n}")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    let n_val = n / 5;
    let n_test = n / 5;
    let test = idx[..n_test].to_vec();
    let val = idx[n_test..n_test + n_val].to_vec();
    let train = idx[n_test + n_val..].to_vec();
    Ok((train, val, test))
}

/// Dataset sizes and sampling controls.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub n_pde: usize,
    /// PDE points pinned to the faying plane z̃ = 0.5; the contact-heat band
    /// is far thinner than any practical stratum, so a dedicated subset is
    /// the only way collocation ever sees the contact source.
    pub n_pde_band: usize,
    pub n_ic: usize,
    /// Points per boundary face.
    pub n_bc: usize,
    pub n_sym: usize,
    /// Stride in ms over the displacement measurement grid.
    pub disp_stride_ms: usize,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self { n_pde: 10_000, n_pde_band: 1_000, n_ic: 200, n_bc: 100, n_sym: 100, disp_stride_ms: 2, seed: 0 }
    }
}

/// One displacement target row: network input at (z̃=1, t̃) plus the
/// reconstructed control response x̃_s and the measured ỹ_d, both
/// nondimensional.
#[derive(Debug, Clone)]
pub struct DispRow {
    pub x: Vec<f64>,
    pub xs_nd: f64,
    pub yd_nd: f64,
}

/// Assembled collocation and target sets for one training run.
#[derive(Debug, Clone, Default)]
pub struct Datasets {
    pub pde: Vec<Vec<f64>>,
    pub ic: Vec<Vec<f64>>,
    /// Axial boundary points, z̃ ∈ {0, 1}.
    pub bc_axial: Vec<Vec<f64>>,
    /// Radial boundary points, r̃ = 1 (2D only).
    pub bc_radial: Vec<Vec<f64>>,
    /// Faying-plane symmetry points, z̃ = 0.5.
    pub sym_plane: Vec<Vec<f64>>,
    /// Axis symmetry points, r̃ = 0 (2D only).
    pub sym_axis: Vec<Vec<f64>>,
    pub disp: Vec<DispRow>,
    /// Nugget goal points at (r_i, 0.5, t_weld_end) inside the measured
    /// nugget radius.
    pub nugget: Vec<Vec<f64>>,
}

/// Build every dataset for the given mode from the training-split welds.
///
/// The PDE set is a Latin hypercube over the full input box (r̃ > 0); IC,
/// boundary, and symmetry sets pin one coordinate each; the goal sets come
/// from the weld records. The control response x̃_s is reconstructed from
/// the measured displacement through the PID model.
pub fn build_datasets(
    mode: ModelMode,
    domain: &Domain,
    welds: &[WeldRecord],
    cfg: &DatasetConfig,
    weld_cfg: &WeldConfig,
    pid: &PIDParams,
) -> Result<Datasets> {
    domain.validate()?;
    if mode.is_benchmark() {
        return build_benchmark_datasets(domain, cfg);
    }
    if welds.is_empty() {
        return Err(Error::Data("cannot build datasets from an empty weld list".into()));
    }

    let mut out = Datasets::default();
    let free_bounds = free_axis_bounds(mode, domain);

    // Network input from sampled physical coordinates.
    let assemble = |r: f64, z: f64, t: f64, i_ka: f64, f_kn: f64| -> Vec<f64> {
        let mut x = Vec::with_capacity(mode.input_dim());
        if mode.is_2d() {
            x.push(r);
        }
        x.push(z);
        x.push(t);
        x.push(norm_current(i_ka));
        x.push(norm_force(f_kn));
        x
    };

    out.pde = lhs_sample(&free_bounds, cfg.n_pde, cfg.seed)
        .into_iter()
        .map(|p| from_free(mode, &p, None, None, assemble))
        .collect();
    if cfg.n_pde_band > 0 {
        let band_bounds = drop_axis(&free_bounds, z_axis(mode));
        out.pde.extend(
            lhs_sample(&band_bounds, cfg.n_pde_band, cfg.seed.wrapping_add(7))
                .into_iter()
                .map(|p| from_free(mode, &p, Some((z_axis(mode), 0.5)), None, assemble)),
        );
    }

    // IC: t̃ = 0.
    let ic_bounds = drop_axis(&free_bounds, time_axis(mode));
    out.ic = lhs_sample(&ic_bounds, cfg.n_ic, cfg.seed.wrapping_add(1))
        .into_iter()
        .map(|p| from_free(mode, &p, Some((time_axis(mode), 0.0)), None, assemble))
        .collect();

    // Axial boundaries.
    let bc_bounds = drop_axis(&free_bounds, z_axis(mode));
    for (face, seed_off) in [(0.0, 2u64), (1.0, 3u64)] {
        out.bc_axial.extend(
            lhs_sample(&bc_bounds, cfg.n_bc, cfg.seed.wrapping_add(seed_off))
                .into_iter()
                .map(|p| from_free(mode, &p, Some((z_axis(mode), face)), None, assemble)),
        );
    }

    // Faying-plane symmetry set.
    out.sym_plane = lhs_sample(&bc_bounds, cfg.n_sym, cfg.seed.wrapping_add(4))
        .into_iter()
        .map(|p| from_free(mode, &p, Some((z_axis(mode), 0.5)), None, assemble))
        .collect();

    if mode.is_2d() {
        let r_bounds = drop_axis(&free_bounds, 0);
        out.bc_radial = lhs_sample(&r_bounds, cfg.n_bc, cfg.seed.wrapping_add(5))
            .into_iter()
            .map(|p| from_free(mode, &p, Some((0, 1.0)), None, assemble))
            .collect();
        out.sym_axis = lhs_sample(&r_bounds, cfg.n_sym, cfg.seed.wrapping_add(6))
            .into_iter()
            .map(|p| from_free(mode, &p, Some((0, 0.0)), None, assemble))
            .collect();
    }

    // Goal datasets from the weld records.
    let scales = &weld_cfg.scales;
    let stride = cfg.disp_stride_ms.max(1);
    for rec in welds {
        rec.validate()?;
        let x_s = pid_response(&rec.y_d_mm, pid);
        for (ms, (&yd, &xs)) in rec.y_d_mm.iter().zip(&x_s).enumerate() {
            if ms % stride != 0 {
                continue;
            }
            let t_nd = scales.t_nd(ms as f64);
            out.disp.push(DispRow {
                x: assemble(0.0, 1.0, t_nd, rec.i_max_ka, rec.f_max_kn),
                xs_nd: scales.u_nd(xs),
                yd_nd: scales.u_nd(yd),
            });
        }

        if mode.is_2d() {
            if rec.d_p_mm > 2.0 * scales.r_c {
                return Err(Error::Data(format!(
                    "weld {}: nugget diameter {} mm exceeds the domain width {}",
                    rec.weld_id,
                    rec.d_p_mm,
                    2.0 * scales.r_c
                )));
            }
            let r_max = rec.d_p_mm / (2.0 * scales.r_c);
            let t_end = scales.t_nd(weld_cfg.schedule.t_weld_end_ms());
            for i in 0..=10 {
                let r = i as f64 / 10.0;
                if r <= r_max + 1e-12 && rec.d_p_mm > 0.0 {
                    out.nugget.push(assemble(r, 0.5, t_end, rec.i_max_ka, rec.f_max_kn));
                }
            }
        }
    }

    Ok(out)
}

fn build_benchmark_datasets(domain: &Domain, cfg: &DatasetConfig) -> Result<Datasets> {
    let mut out = Datasets::default();
    let bounds = [domain.z_nd, domain.t_nd];
    out.pde = lhs_sample(&bounds, cfg.n_pde, cfg.seed);
    out.ic = lhs_sample(&[domain.z_nd], cfg.n_ic, cfg.seed.wrapping_add(1))
        .into_iter()
        .map(|p| vec![p[0], 0.0])
        .collect();
    for (face, s) in [(0.0, 2u64), (1.0, 3u64)] {
        out.bc_axial.extend(
            lhs_sample(&[domain.t_nd], cfg.n_bc, cfg.seed.wrapping_add(s))
                .into_iter()
                .map(|p| vec![face, p[0]]),
        );
    }
    Ok(out)
}

/// Axis index of t̃ within the free (physical) coordinate list.
fn time_axis(mode: ModelMode) -> usize {
    if mode.is_2d() {
        2
    } else {
        1
    }
}

fn z_axis(mode: ModelMode) -> usize {
    if mode.is_2d() {
        1
    } else {
        0
    }
}

/// Bounds of the free coordinates in physical order (r̃?, z̃, t̃, I, F).
fn free_axis_bounds(mode: ModelMode, domain: &Domain) -> Vec<(f64, f64)> {
    let mut b = Vec::new();
    if mode.is_2d() {
        b.push(domain.r_nd.unwrap_or((0.02, 1.0)));
    }
    b.push(domain.z_nd);
    b.push(domain.t_nd);
    b.push(domain.i_ka);
    b.push(domain.f_kn);
    b
}

fn drop_axis(bounds: &[(f64, f64)], axis: usize) -> Vec<(f64, f64)> {
    bounds
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != axis)
        .map(|(_, &b)| b)
        .collect()
}

/// Reassemble a full coordinate vector from a sample with one axis pinned.
fn from_free(
    mode: ModelMode,
    sample: &[f64],
    pinned: Option<(usize, f64)>,
    _unused: Option<()>,
    assemble: impl Fn(f64, f64, f64, f64, f64) -> Vec<f64>,
) -> Vec<f64> {
    let n_phys = if mode.is_2d() { 5 } else { 4 };
    let mut coords = vec![0.0; n_phys];
    let mut si = 0;
    for (axis, slot) in coords.iter_mut().enumerate() {
        if let Some((pin_axis, value)) = pinned {
            if axis == pin_axis {
                *slot = value;
                continue;
            }
        }
        *slot = sample[si];
        si += 1;
    }
    if mode.is_2d() {
        assemble(coords[0], coords[1], coords[2], coords[3], coords[4])
    } else {
        assemble(0.0, coords[0], coords[1], coords[2], coords[3])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::PIDParams;

    #[test]
    fn lhs_each_bin_holds_exactly_one_point() {
        let pts = lhs_sample(&[(0.0, 1.0), (0.0, 1.0)], 4, 9);
        for d in 0..2 {
            let mut counts = [0usize; 4];
            for p in &pts {
                let bin = ((p[d] * 4.0).floor() as usize).min(3);
                counts[bin] += 1;
            }
            assert_eq!(counts, [1, 1, 1, 1], "dimension {d}");
        }
    }

    #[test]
    fn lhs_same_seed_is_identical() {
        let a = lhs_sample(&[(0.0, 2.0), (-1.0, 1.0), (0.0, 760.0)], 100, 1234);
        let b = lhs_sample(&[(0.0, 2.0), (-1.0, 1.0), (0.0, 760.0)], 100, 1234);
        assert_eq!(a, b);
        let c = lhs_sample(&[(0.0, 2.0), (-1.0, 1.0), (0.0, 760.0)], 100, 1235);
        assert_ne!(a, c);
    }

    #[test]
    fn lhs_handles_paper_scale_count() {
        let pts = lhs_sample(&[(0.0, 1.0), (0.0, 5.6)], 10_000, 7);
        assert_eq!(pts.len(), 10_000);
        assert!(pts.iter().all(|p| p[0] >= 0.0 && p[0] <= 1.0 && p[1] >= 0.0 && p[1] <= 5.6));
    }

    #[test]
    fn lhs_stratification_property_holds_per_dimension() {
        for n in [3usize, 17, 64] {
            let pts = lhs_sample(&[(2.0, 5.0), (-4.0, -1.0)], n, 42);
            for d in 0..2 {
                let (lo, hi) = [(2.0, 5.0), (-4.0, -1.0)][d];
                let mut counts = vec![0usize; n];
                for p in &pts {
                    let u = (p[d] - lo) / (hi - lo);
                    let bin = ((u * n as f64).floor() as usize).min(n - 1);
                    counts[bin] += 1;
                }
                assert!(counts.iter().all(|&c| c == 1), "n={n} d={d}: {counts:?}");
            }
        }
    }

    fn fake_records(n: usize) -> Vec<WeldRecord> {
        (0..n)
            .map(|i| WeldRecord {
                weld_id: format!("w{i:03}"),
                i_max_ka: 26.0 + (i % 22) as f64,
                f_max_kn: 5.0 + (i % 4) as f64,
                y_d_mm: vec![0.0; 761],
                d_p_mm: 4.0,
                y_std_mm: None,
            })
            .collect()
    }

    #[test]
    fn split_88_welds_gives_54_17_17() {
        let recs = fake_records(88);
        let (train, val, test) = split_by_weld(&recs, 3).unwrap();
        assert_eq!((train.len(), val.len(), test.len()), (54, 17, 17));
    }

    #[test]
    fn split_5_welds_gives_3_1_1() {
        let recs = fake_records(5);
        let (train, val, test) = split_by_weld(&recs, 3).unwrap();
        assert_eq!((train.len(), val.len(), test.len()), (3, 1, 1));
    }

    #[test]
    fn split_is_a_partition_and_reproducible() {
        let recs = fake_records(23);
        let (train, val, test) = split_by_weld(&recs, 11).unwrap();
        let mut all: Vec<usize> = train.iter().chain(&val).chain(&test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        let again = split_by_weld(&recs, 11).unwrap();
        assert_eq!((train, val, test), again);
    }

    #[test]
    fn split_rejects_tiny_sets() {
        assert!(split_by_weld(&fake_records(4), 0).is_err());
    }

    fn small_cfg() -> DatasetConfig {
        DatasetConfig { n_pde: 64, n_pde_band: 8, n_ic: 16, n_bc: 8, n_sym: 8, disp_stride_ms: 100, seed: 5 }
    }

    #[test]
    fn datasets_pin_the_right_coordinates() {
        let weld_cfg = WeldConfig::default();
        let recs = fake_records(3);
        let domain = Domain::for_mode(ModelMode::Rsw2d, &weld_cfg);
        let ds = build_datasets(ModelMode::Rsw2d, &domain, &recs, &small_cfg(), &weld_cfg, &PIDParams::default()).unwrap();
        assert!(ds.ic.iter().all(|p| p[2] == 0.0), "IC points must sit at t̃ = 0");
        assert!(ds.bc_axial.iter().all(|p| p[1] == 0.0 || p[1] == 1.0));
        assert!(ds.bc_radial.iter().all(|p| p[0] == 1.0));
        assert!(ds.sym_plane.iter().all(|p| p[1] == 0.5));
        assert!(ds.sym_axis.iter().all(|p| p[0] == 0.0));
        assert!(ds.pde.iter().all(|p| p[0] > 0.0), "axis excluded from the PDE set");
        // Nugget rows at z̃ = 0.5 and weld-end time.
        let t_end = weld_cfg.scales.t_nd(560.0);
        assert!(!ds.nugget.is_empty());
        assert!(ds.nugget.iter().all(|p| p[1] == 0.5 && (p[2] - t_end).abs() < 1e-12));
        // d_p = 4 mm → r̃ ≤ 0.4 → 5 of the 11 grid points per weld.
        assert_eq!(ds.nugget.len(), 3 * 5);
    }

    #[test]
    fn displacement_rows_sit_at_top_surface() {
        let weld_cfg = WeldConfig::default();
        let recs = fake_records(2);
        let domain = Domain::for_mode(ModelMode::Rsw1dInverse, &weld_cfg);
        let mut cfg = small_cfg();
        cfg.disp_stride_ms = 1;
        let ds = build_datasets(ModelMode::Rsw1dInverse, &domain, &recs, &cfg, &weld_cfg, &PIDParams::default()).unwrap();
        // One row per millisecond per weld at z̃ = 1.
        assert_eq!(ds.disp.len(), 2 * 761);
        assert!(ds.disp.iter().all(|row| row.x[0] == 1.0));
    }

    #[test]
    fn empty_weld_list_is_a_data_error() {
        let weld_cfg = WeldConfig::default();
        let domain = Domain::for_mode(ModelMode::Rsw1dInverse, &weld_cfg);
        assert!(build_datasets(
            ModelMode::Rsw1dInverse,
            &domain,
            &[],
            &small_cfg(),
            &weld_cfg,
            &PIDParams::default()
        )
        .is_err());
    }

    #[test]
    fn collocation_points_respect_bounds() {
        let weld_cfg = WeldConfig::default();
        let recs = fake_records(2);
        for mode in [ModelMode::Rsw1dInverse, ModelMode::Rsw2d] {
            let domain = Domain::for_mode(mode, &weld_cfg);
            let ds = build_datasets(mode, &domain, &recs, &small_cfg(), &weld_cfg, &PIDParams::default()).unwrap();
            let t_end = weld_cfg.t_end_nd();
            for p in &ds.pde {
                let (z, t) = (p[mode.z_index()], p[mode.t_index()]);
                assert!((0.0..=1.0).contains(&z) && t >= 0.0 && t <= t_end);
                let (i_n, f_n) = (p[mode.input_dim() - 2], p[mode.input_dim() - 1]);
                assert!((0.0..=1.0).contains(&i_n) && (0.0..=1.0).contains(&f_n));
            }
        }
    }

    #[test]
    fn weld_record_round_trip_and_exclusion() {
        let dir = tempfile::tempdir().unwrap();
        let mut recs = fake_records(4);
        recs[1].y_std_mm = Some(vec![0.01; 761]);
        save_weld_records(&recs, dir.path()).unwrap();
        let back = load_weld_records(&dir.path().join("manifest.csv"), &[]).unwrap();
        assert_eq!(back.len(), 4);
        assert_eq!(back[1].y_std_mm.as_ref().unwrap().len(), 761);
        assert_eq!(back[3].weld_id, "w003");
        let filtered = load_weld_records(&dir.path().join("manifest.csv"), &["w000".into()]).unwrap();
        assert_eq!(filtered.len(), 3);
        assert!(filtered.iter().all(|r| r.weld_id != "w000"));
    }
}
