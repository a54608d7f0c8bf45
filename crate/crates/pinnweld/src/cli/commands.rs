//! Command implementations: each returns the process exit code.

use std::path::Path;

use crate::adnet::Workspace;
use crate::checkpoint;
use crate::cli::svg::{HeatmapPanels, LineChart, Series, PALETTE};
use crate::cli::RunConfig;
use crate::error::{Error, Result};
use crate::material::{HardnessModel, MaterialTable};
use crate::oracle;
use crate::process::{fit_pid, pid_response};
use crate::sampler::{
    build_datasets, load_weld_records, network_input, save_weld_records, split_by_weld, Domain,
    ModelMode, WeldRecord,
};
use crate::trainer::{train, Objective, TrainArtifacts};

pub fn load_material(cfg: &RunConfig) -> Result<MaterialTable> {
    match &cfg.material_table {
        Some(path) => MaterialTable::from_csv(path),
        None => Ok(MaterialTable::default_almgsi()),
    }
}

/// Pooled coefficient of determination.
pub fn r_squared(pred: &[f64], target: &[f64]) -> f64 {
    assert_eq!(pred.len(), target.len());
    let n = target.len() as f64;
    let mean = target.iter().sum::<f64>() / n;
    let ss_tot: f64 = target.iter().map(|t| (t - mean) * (t - mean)).sum();
    let ss_res: f64 = pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum();
    1.0 - ss_res / ss_tot.max(1e-300)
}

/// Predicted dynamic displacement of one weld: the network's total expansion
/// at the top surface minus the control response reconstructed from the
/// measured series.
pub fn predict_displacement(
    params: &crate::adnet::NetworkParams,
    mode: ModelMode,
    cfg: &RunConfig,
    rec: &WeldRecord,
) -> Result<Vec<f64>> {
    let scales = &cfg.weld.scales;
    let x_s = pid_response(&rec.y_d_mm, &cfg.pid);
    let xs: Vec<Vec<f64>> = (0..rec.y_d_mm.len())
        .map(|ms| network_input(mode, 0.0, 1.0, scales.t_nd(ms as f64), rec.i_max_ka, rec.f_max_kn))
        .collect();
    let outs = crate::trainer::eval_network(params, &xs)?;
    Ok(outs
        .iter()
        .zip(&x_s)
        .map(|((_, u_nd), &xs_mm)| scales.u_mm(*u_nd) - xs_mm)
        .collect())
}

fn write_manifest(cfg: &RunConfig, extra: &str) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    let manifest = format!(
        "{{\n\"version\":\"{}\",\n\"config_hash\":\"{}\",\n\"seed\":{},\n\"timestamp_unix\":{},\n{extra}\"config\":{}\n}}\n",
        env!("CARGO_PKG_VERSION"),
        cfg.config_hash(),
        cfg.seed,
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        serde_json::to_string_pretty(cfg).map_err(|e| Error::Config(e.to_string()))?,
    );
    std::fs::write(cfg.out_dir.join("run_manifest.json"), manifest)?;
    Ok(())
}

fn run_training(cfg: &RunConfig, mode: ModelMode, records: &[WeldRecord]) -> Result<TrainArtifacts> {
    let mat = load_material(cfg)?;
    let hard = HardnessModel::default();
    let domain = Domain::for_mode(mode, &cfg.weld);
    let data = build_datasets(mode, &domain, records, &cfg.datasets, &cfg.weld, &cfg.pid)?;
    let spec = {
        let mut s = cfg.network_for_mode();
        s.input_dim = mode.input_dim();
        s.output_dim = mode.output_dim();
        s
    };
    let mut weld = cfg.weld.clone();
    if mode == ModelMode::Rsw1dForward {
        weld.contact.model = crate::process::ContactModel::BForward;
    }
    let mut objective = Objective::new(
        mode,
        spec.clone(),
        &data,
        &weld,
        &mat,
        &hard,
        cfg.train.weights,
        cfg.train.batch_size,
        cfg.train.seed,
    );
    objective.bench_alpha = cfg.bench_alpha;
    train(&objective, &spec, &cfg.train, Some(&cfg.out_dir))
}

/// Train the Dirichlet benchmark; exit 0 iff the total loss reaches the
/// acceptance threshold of 1e-5 within the epoch budget.
pub fn cmd_benchmark(cfg: &RunConfig) -> Result<i32> {
    cfg.validate()?;
    let mut cfg = cfg.clone();
    cfg.mode = ModelMode::Benchmark1d;
    // The benchmark network follows the reference setup: two hidden layers
    // of 50 on (z, t).
    cfg.network.hidden_layers = 2;
    cfg.network.hidden_width = 50;
    write_manifest(&cfg, "")?;
    let art = run_training(&cfg, ModelMode::Benchmark1d, &[])?;
    let final_loss = art.final_bundle.total;

    // Max pointwise error against the corrected analytic solution.
    let spec = art.params.spec().clone();
    let mut ws = Workspace::new(&spec);
    let mut max_err = 0.0f64;
    for iz in 0..=60 {
        for it in 0..=60 {
            let z = iz as f64 / 60.0;
            let t = it as f64 / 60.0;
            let y = art.params.forward(&[z, t], &mut ws)?;
            max_err = max_err.max((y[0] - oracle::analytic_benchmark(z, t, cfg.bench_alpha)).abs());
        }
    }
    let reference = cfg.train.reference_loss;
    println!(
        "benchmark: final loss {final_loss:.3e} (reference {reference:.3e}), max |T - analytic| {max_err:.3e}, stopped after epoch {} ({:?})",
        art.state.epoch, art.stop_reason
    );
    let metrics = format!(
        "{{\"final_loss\":{final_loss:e},\"reference_loss\":{reference:e},\"max_pointwise_error\":{max_err:e},\"epochs\":{}}}\n",
        art.state.epoch + 1
    );
    std::fs::write(cfg.out_dir.join("metrics.json"), metrics)?;
    if final_loss <= 1e-5 && max_err <= 1e-2 {
        Ok(0)
    } else {
        println!("benchmark: not converged (loss target 1e-5, error target 1e-2)");
        Ok(1)
    }
}

/// Generate synthetic weld records over the configured grid.
pub fn cmd_synth_data(cfg: &RunConfig) -> Result<i32> {
    cfg.validate()?;
    let mat = load_material(cfg)?;
    let hard = HardnessModel::default();
    let records = oracle::synth_experiment(&cfg.weld, &mat, &hard, &cfg.pid, &cfg.synth)?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    save_weld_records(&records, &cfg.out_dir)?;
    mat.to_csv(&cfg.out_dir.join("material_table.csv"))?;
    write_manifest(cfg, &format!("\"n_welds\":{},\n", records.len()))?;
    println!(
        "synth-data: wrote {} weld records to {} ({} currents x {} forces)",
        records.len(),
        cfg.out_dir.display(),
        cfg.synth.currents_ka.len(),
        cfg.synth.forces_kn.len()
    );
    Ok(0)
}

/// Train the configured model on loaded weld records and report per-split
/// displacement accuracy.
pub fn cmd_train(cfg: &RunConfig) -> Result<i32> {
    cfg.validate()?;
    let mode = cfg.mode;
    if mode == ModelMode::Benchmark1d {
        return cmd_benchmark(cfg);
    }
    let manifest = cfg
        .data_manifest
        .as_ref()
        .ok_or_else(|| Error::Config("training needs a weld-record manifest (--data)".into()))?;
    let records = load_weld_records(manifest, &cfg.exclude_welds)?;
    let (train_idx, val_idx, test_idx) = split_by_weld(&records, cfg.seed)?;
    let train_set: Vec<WeldRecord> = train_idx.iter().map(|&i| records[i].clone()).collect();
    write_manifest(cfg, &format!("\"n_train\":{},\"n_val\":{},\"n_test\":{},\n", train_idx.len(), val_idx.len(), test_idx.len()))?;

    let art = run_training(cfg, mode, &train_set)?;

    // Per-split displacement R².
    let mut report = String::from("{");
    for (name, idx) in [("train", &train_idx), ("val", &val_idx), ("test", &test_idx)] {
        let mut preds = Vec::new();
        let mut targets = Vec::new();
        for &i in idx.iter() {
            let p = predict_displacement(&art.params, mode, cfg, &records[i])?;
            preds.extend(p);
            targets.extend(records[i].y_d_mm.iter().copied());
        }
        let r2 = r_squared(&preds, &targets);
        report.push_str(&format!("\"r2_{name}\":{r2:.6},"));
        println!("train: displacement R² on {name} split = {r2:.4}");
    }
    report.push_str(&format!(
        "\"final_loss\":{:e},\"epochs\":{},\"stop\":\"{:?}\"",
        art.final_bundle.total,
        art.state.epoch + 1,
        art.stop_reason
    ));
    if let Some(n) = art.state.n_spots() {
        report.push_str(&format!(",\"n_spots\":{n:.1}"));
        println!("train: learnable contact-spot count n = {n:.0}");
    }
    report.push_str("}\n");
    std::fs::write(cfg.out_dir.join("metrics.json"), report)?;
    println!(
        "train: final loss {:.3e} after {} epochs ({:?})",
        art.final_bundle.total,
        art.state.epoch + 1,
        art.stop_reason
    );
    Ok(0)
}

/// Evaluate a checkpoint on a regular grid and export r,z,t,T,u rows.
#[allow(clippy::too_many_arguments)]
pub fn cmd_predict(
    cfg: &RunConfig,
    checkpoint_path: &Path,
    nr: usize,
    nz: usize,
    nt: usize,
    i_ka: f64,
    f_kn: f64,
    nugget_curve: bool,
) -> Result<i32> {
    let ck = checkpoint::load(checkpoint_path)?;
    let mode = match ck.params.spec().input_dim {
        2 => ModelMode::Benchmark1d,
        4 => cfg.mode,
        5 => ModelMode::Rsw2d,
        d => return Err(Error::Config(format!("checkpoint input dim {d} matches no mode"))),
    };
    if mode.input_dim() != ck.params.spec().input_dim {
        return Err(Error::Config(format!(
            "mode {:?} needs {} inputs but checkpoint has {}",
            mode,
            mode.input_dim(),
            ck.params.spec().input_dim
        )));
    }
    let scales = &cfg.weld.scales;
    let t_end = cfg.weld.schedule.t_end_ms();
    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut out = String::from("r_nd,z_nd,t_ms,T_C,u_mm\n");
    let mut xs = Vec::new();
    let mut coords = Vec::new();
    for it in 0..nt.max(1) {
        let t_ms = t_end * it as f64 / (nt.max(2) - 1) as f64;
        for ir in 0..nr.max(1) {
            let r = if nr > 1 { ir as f64 / (nr - 1) as f64 } else { 0.0 };
            for iz in 0..nz.max(1) {
                let z = iz as f64 / (nz.max(2) - 1) as f64;
                xs.push(network_input(mode, r, z, scales.t_nd(t_ms), i_ka, f_kn));
                coords.push((r, z, t_ms));
            }
        }
    }
    let vals = crate::trainer::eval_network(&ck.params, &xs)?;
    for ((r, z, t_ms), (t_nd, u_nd)) in coords.iter().zip(&vals) {
        let temp = if mode.is_benchmark() { *t_nd } else { scales.temp_c_from(*t_nd, cfg.weld.refs.offset_c) };
        out.push_str(&format!("{r},{z},{t_ms},{temp},{}\n", scales.u_mm(*u_nd)));
    }
    let path = cfg.out_dir.join("prediction.csv");
    std::fs::write(&path, out)?;
    println!("predict: wrote {} rows to {}", coords.len(), path.display());

    if nugget_curve {
        if !mode.is_2d() {
            return Err(Error::Config("nugget curve extraction needs a 2D checkpoint".into()));
        }
        let mat = load_material(cfg)?;
        let r_grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let mut curve = String::from("t_ms,d_p_mm\n");
        for ms in (0..=t_end as usize).step_by(5) {
            let t_nd = scales.t_nd(ms as f64);
            let xs: Vec<Vec<f64>> = r_grid
                .iter()
                .map(|&r| network_input(mode, r, 0.5, t_nd, i_ka, f_kn))
                .collect();
            let vals = crate::trainer::eval_network(&ck.params, &xs)?;
            let row: Vec<f64> = vals
                .iter()
                .map(|(t_nd, _)| scales.temp_c_from(*t_nd, cfg.weld.refs.offset_c))
                .collect();
            let d_p = oracle::nugget_diameter_row(&row, &r_grid, mat.phase.t_liq, scales.r_c);
            curve.push_str(&format!("{ms},{d_p}\n"));
        }
        let path = cfg.out_dir.join("nugget_growth.csv");
        std::fs::write(&path, curve)?;
        println!("predict: wrote nugget growth curve to {}", path.display());
    }
    Ok(0)
}

fn load_series_csv(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (idx, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| Error::Data(format!("{} row {}: {e}", path.display(), idx + 2)))?;
        if row.len() < 2 {
            return Err(Error::Data(format!("{} row {}: expected t,value columns", path.display(), idx + 2)));
        }
        let v: f64 = row[1]
            .trim()
            .parse()
            .map_err(|_| Error::Data(format!("{} row {}: bad number {:?}", path.display(), idx + 2, &row[1])))?;
        out.push(v);
    }
    Ok(out)
}

/// Fit PID constants from torque/displacement CSVs (columns `t_ms,value`),
/// then report recovery stability under added torque noise.
pub fn cmd_fit_pid(cfg: &RunConfig, torque_path: &Path, disp_path: &Path, f0: f64, k_spring: f64) -> Result<i32> {
    let torque = load_series_csv(torque_path)?;
    let disp = load_series_csv(disp_path)?;
    let fit = fit_pid(&torque, &disp, f0, k_spring, &cfg.pid)?;
    let errors: Vec<f64> = disp.iter().map(|&x| f0 - k_spring * x).collect();
    let replay = pid_response(&errors, &fit);
    let mse: f64 = torque
        .iter()
        .zip(&replay)
        .map(|(t, r)| (t - r) * (t - r))
        .sum::<f64>()
        / torque.len() as f64;
    println!("fit-pid: K_p = {:.6}, K_i = {:.6} 1/s, K_d = {:.6} s, fit MSE = {mse:.3e}", fit.k_p, fit.k_i, fit.k_d);

    // Noise sweep: refit after perturbing the torque with Gaussian noise.
    use rand::{Rng, SeedableRng};
    let mut report = String::from("noise_rel,k_p,k_i,k_d,mse\n");
    report.push_str(&format!("0,{},{},{},{mse:e}\n", fit.k_p, fit.k_i, fit.k_d));
    let peak = torque.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    for noise_rel in [0.005, 0.01, 0.02] {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(cfg.seed.wrapping_add((noise_rel * 1e4) as u64));
        let noisy: Vec<f64> = torque
            .iter()
            .map(|&t| {
                let (u1, u2) = (1.0 - rng.random::<f64>(), rng.random::<f64>());
                t + noise_rel * peak * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            })
            .collect();
        match fit_pid(&noisy, &disp, f0, k_spring, &cfg.pid) {
            Ok(f) => {
                let replay = pid_response(&errors, &f);
                let mse: f64 = noisy.iter().zip(&replay).map(|(t, r)| (t - r) * (t - r)).sum::<f64>() / noisy.len() as f64;
                report.push_str(&format!("{noise_rel},{},{},{},{mse:e}\n", f.k_p, f.k_i, f.k_d));
            }
            Err(e) => report.push_str(&format!("{noise_rel},nan,nan,nan,\"{e}\"\n")),
        }
    }
    std::fs::create_dir_all(&cfg.out_dir)?;
    std::fs::write(cfg.out_dir.join("fit_pid_report.csv"), report)?;
    Ok(0)
}

fn read_csv_columns(path: &Path, required: &[&str]) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    for col in required {
        if !headers.iter().any(|h| h == col) {
            return Err(Error::Data(format!(
                "{}: missing required column {col:?} (found {headers:?})",
                path.display()
            )));
        }
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| Error::Data(format!("{} row {}: {e}", path.display(), idx + 2)))?;
        let vals: Result<Vec<f64>> = row
            .iter()
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Data(format!("{} row {}: bad number {v:?}", path.display(), idx + 2)))
            })
            .collect();
        rows.push(vals?);
    }
    Ok((headers, rows))
}

/// Render SVG plots from run artifacts.
pub fn cmd_plot(
    cfg: &RunConfig,
    loss_log: Option<&Path>,
    weld: Option<&Path>,
    prediction: Option<&Path>,
    field: Option<&Path>,
    nugget: Option<&Path>,
) -> Result<i32> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut wrote_any = false;

    if let Some(path) = loss_log {
        let (headers, rows) = read_csv_columns(path, &["epoch", "total", "l_pde_t", "l_bc_t"])?;
        let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
        let traces = [
            ("total", "total"),
            ("l_pde_t", "PDE (T)"),
            ("l_bc_t", "BC (T)"),
            ("l_ic_t", "IC (T)"),
            ("l_d", "displacement"),
            ("l_neg", "negative-T"),
        ];
        let mut series = Vec::new();
        for (i, (name, label)) in traces.iter().enumerate() {
            if !headers.iter().any(|h| h == name) {
                continue;
            }
            let c = col(name);
            let e = col("epoch");
            let points: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r[c] > 0.0)
                .map(|r| (r[e], r[c]))
                .collect();
            if points.is_empty() {
                continue;
            }
            series.push(Series {
                label: label.to_string(),
                points,
                color: PALETTE[i % PALETTE.len()].into(),
                band: None,
                dashed: *name != "total",
            });
        }
        let chart = LineChart {
            title: "Loss convergence".into(),
            x_label: "epoch".into(),
            y_label: "loss".into(),
            log_y: true,
            series,
        };
        let out = cfg.out_dir.join("loss_convergence.svg");
        std::fs::write(&out, chart.render())?;
        println!("plot: wrote {}", out.display());
        wrote_any = true;
    }

    if let Some(path) = weld {
        let (headers, rows) = read_csv_columns(path, &["t_ms", "disp_mm"])?;
        let has_std = headers.iter().any(|h| h == "std_mm");
        let t_col = headers.iter().position(|h| h == "t_ms").unwrap();
        let d_col = headers.iter().position(|h| h == "disp_mm").unwrap();
        let mut series = vec![Series {
            label: "measured".into(),
            points: rows.iter().map(|r| (r[t_col], r[d_col])).collect(),
            color: PALETTE[0].into(),
            band: has_std.then(|| {
                let s_col = headers.iter().position(|h| h == "std_mm").unwrap();
                rows.iter().map(|r| r[s_col]).collect()
            }),
            dashed: false,
        }];
        if let Some(pred_path) = prediction {
            let (ph, prows) = read_csv_columns(pred_path, &["t_ms", "disp_mm"])?;
            let pt = ph.iter().position(|h| h == "t_ms").unwrap();
            let pd = ph.iter().position(|h| h == "disp_mm").unwrap();
            series.push(Series {
                label: "prediction".into(),
                points: prows.iter().map(|r| (r[pt], r[pd])).collect(),
                color: PALETTE[1].into(),
                band: None,
                dashed: true,
            });
        }
        let chart = LineChart {
            title: "Dynamic displacement".into(),
            x_label: "t [ms]".into(),
            y_label: "displacement [mm]".into(),
            log_y: false,
            series,
        };
        let out = cfg.out_dir.join("displacement_overlay.svg");
        std::fs::write(&out, chart.render())?;
        println!("plot: wrote {}", out.display());
        wrote_any = true;
    }

    if let Some(path) = field {
        let (headers, rows) = read_csv_columns(path, &["r_nd", "z_nd", "t_ms", "T_C"])?;
        let col = |n: &str| headers.iter().position(|h| h == n).unwrap();
        let (rc, zc, tc, temp_c) = (col("r_nd"), col("z_nd"), col("t_ms"), col("T_C"));
        let mut r_vals: Vec<f64> = rows.iter().map(|r| r[rc]).collect();
        let mut z_vals: Vec<f64> = rows.iter().map(|r| r[zc]).collect();
        dedup_sorted(&mut r_vals);
        dedup_sorted(&mut z_vals);
        let mut t_vals: Vec<f64> = rows.iter().map(|r| r[tc]).collect();
        dedup_sorted(&mut t_vals);
        // Panels at the schedule breakpoints (or all stored times if few).
        let wanted: Vec<f64> = if t_vals.len() <= 4 {
            t_vals.clone()
        } else {
            [400.0, 470.0, 560.0, 760.0]
                .iter()
                .map(|w| {
                    *t_vals
                        .iter()
                        .min_by(|a, b| (*a - w).abs().total_cmp(&(*b - w).abs()))
                        .unwrap()
                })
                .collect()
        };
        let (mut v_min, mut v_max) = (f64::INFINITY, f64::NEG_INFINITY);
        for r in &rows {
            v_min = v_min.min(r[temp_c]);
            v_max = v_max.max(r[temp_c]);
        }
        let mut panels = Vec::new();
        for w in wanted {
            let mut fld = vec![0.0; r_vals.len() * z_vals.len()];
            for row in rows.iter().filter(|r| r[tc] == w) {
                let ir = r_vals.iter().position(|&v| v == row[rc]).unwrap();
                let iz = z_vals.iter().position(|&v| v == row[zc]).unwrap();
                fld[ir * z_vals.len() + iz] = row[temp_c];
            }
            panels.push((format!("t = {w:.0} ms"), fld));
        }
        let hm = HeatmapPanels {
            title: "Temperature field [°C]".into(),
            r_nd: r_vals,
            z_nd: z_vals,
            panels,
            v_min,
            v_max,
        };
        let out = cfg.out_dir.join("temperature_field.svg");
        std::fs::write(&out, hm.render())?;
        println!("plot: wrote {}", out.display());
        wrote_any = true;
    }

    if let Some(path) = nugget {
        let (headers, rows) = read_csv_columns(path, &["t_ms", "d_p_mm"])?;
        let t = headers.iter().position(|h| h == "t_ms").unwrap();
        let d = headers.iter().position(|h| h == "d_p_mm").unwrap();
        let chart = LineChart {
            title: "Nugget growth".into(),
            x_label: "t [ms]".into(),
            y_label: "d_p [mm]".into(),
            log_y: false,
            series: vec![Series {
                label: "d_p".into(),
                points: rows.iter().map(|r| (r[t], r[d])).collect(),
                color: PALETTE[2].into(),
                band: None,
                dashed: false,
            }],
        };
        let out = cfg.out_dir.join("nugget_growth.svg");
        std::fs::write(&out, chart.render())?;
        println!("plot: wrote {}", out.display());
        wrote_any = true;
    }

    if !wrote_any {
        return Err(Error::Config("plot: no input given (see --help)".into()));
    }
    Ok(0)
}

fn dedup_sorted(v: &mut Vec<f64>) {
    v.sort_by(f64::total_cmp);
    v.dedup();
}
