use pinnweld::adnet::{Activation, InitScheme, NetworkSpec};
use pinnweld::material::{HardnessModel, MaterialTable};
use pinnweld::oracle::*;
use pinnweld::process::PIDParams;
use pinnweld::residuals::WeldConfig;
use pinnweld::sampler::*;
use pinnweld::trainer::*;
use std::time::Instant;

fn main() {
    let mat = MaterialTable::default_almgsi();
    let hard = HardnessModel::default();
    let pid = PIDParams::default();
    let mut weld = WeldConfig::default();
    weld.contact.rho_film = 5e-4;
    weld.contact.l_film = 0.03;
    weld.contact.hertzian_weighting = true;

    // Synthetic records: 6 currents x 2 forces via the 1D solver.
    let synth = SynthConfig {
        currents_ka: vec![26.0, 30.0, 34.0, 38.0, 43.0, 47.0],
        forces_kn: vec![5.0, 8.0],
        mesh: MeshConfig { n_z: 120, n_r: 0, dt_ms: 1.0, store_every: 0 },
        solver: SolverKind::Fd1d,
        noise_rel: 0.01,
        hysteresis: false,
        seed: 11,
        n_spots_truth: 40_000.0,
    };
    let t0 = Instant::now();
    let records = synth_experiment(&weld, &mat, &hard, &pid, &synth).unwrap();
    println!("synth {} records in {:.1}s", records.len(), t0.elapsed().as_secs_f64());

    let (train_idx, _val_idx, test_idx) = split_by_weld(&records, 3).unwrap();
    let train_set: Vec<WeldRecord> = train_idx.iter().map(|&i| records[i].clone()).collect();
    println!("split train {:?} test {:?}", train_idx, test_idx);

    let mode = ModelMode::Rsw1dInverse;
    let domain = Domain::for_mode(mode, &weld);
    let dcfg = DatasetConfig { n_pde: 1200, n_pde_band: 120, n_ic: 150, n_bc: 100, n_sym: 100, disp_stride_ms: 4, seed: 5 };
    let data = build_datasets(mode, &domain, &train_set, &dcfg, &weld, &pid).unwrap();
    println!("datasets: pde {} disp {} ", data.pde.len(), data.disp.len());

    let spec = NetworkSpec {
        input_dim: 4, output_dim: 2, hidden_layers: 3, hidden_width: 32,
        activation: Activation::Tanh, init: InitScheme::XavierNormal, seed: 1,
    };
    let obj = Objective::new(mode, spec.clone(), &data, &weld, &mat, &hard, Default::default(), 0, 0);
    let tcfg = TrainConfig { max_epochs: 20_000, ..TrainConfig::default() };
    let t0 = Instant::now();
    let art = train(&obj, &spec, &tcfg, None).unwrap();
    println!("train {:.0}s: {} epochs, final {:.3e}, stop {:?}", t0.elapsed().as_secs_f64(), art.state.epoch+1, art.final_bundle.total, art.stop_reason);
    for (e, b) in art.bundles.iter().enumerate() {
        if e % 2000 == 0 { println!("  ep {e}: total {:.2e} pde_t {:.2e} pde_u {:.2e} bc {:.2e} d {:.2e} fade {:.2} gate {}", b.total, b.pde_t, b.pde_u, b.bc_t, b.disp, b.fade, b.gate_experimental as u8); }
    }
    if let Some(sr) = art.state.epoch_ref { println!("gate opened at {sr}"); }
    if let Some(n) = art.state.n_spots() { println!("final n = {n:.0} (start 120000)"); }

    // Test R^2 on displacement.
    let scales = &weld.scales;
    let mut preds = vec![];
    let mut targs = vec![];
    for &i in &test_idx {
        let rec = &records[i];
        let x_s = pinnweld::process::pid_response(&rec.y_d_mm, &pid);
        let xs: Vec<Vec<f64>> = (0..761).map(|ms| network_input(mode, 0.0, 1.0, scales.t_nd(ms as f64), rec.i_max_ka, rec.f_max_kn)).collect();
        let outs = eval_network(&art.params, &xs).unwrap();
        for (ms, (_, u_nd)) in outs.iter().enumerate() {
            preds.push(scales.u_mm(*u_nd) - x_s[ms]);
            targs.push(rec.y_d_mm[ms]);
        }
    }
    let n = targs.len() as f64;
    let mean = targs.iter().sum::<f64>() / n;
    let sst: f64 = targs.iter().map(|t| (t-mean)*(t-mean)).sum();
    let ssr: f64 = preds.iter().zip(&targs).map(|(p,t)| (p-t)*(p-t)).sum();
    println!("test R^2 = {:.4}", 1.0 - ssr/sst);

    // Temperature field error vs FD for one test weld.
    let rec = &records[test_idx[0]];
    let mut w2 = weld.clone();
    w2.schedule.i_max_ka = rec.i_max_ka;
    w2.contact.force_n = rec.f_max_kn * 1e3;
    w2.contact.n_spots = 40_000.0;
    let sol = fd_solve_1d(&w2, &mat, &hard, &MeshConfig { n_z: 120, n_r: 0, dt_ms: 1.0, store_every: 10 }).unwrap();
    let mut max_err = 0.0f64;
    let mut max_t = 0.0f64;
    for (it, &t_ms) in sol.t_stored_ms.iter().enumerate() {
        let xs: Vec<Vec<f64>> = sol.z_nd.iter().map(|&z| network_input(mode, 0.0, z, scales.t_nd(t_ms), rec.i_max_ka, rec.f_max_kn)).collect();
        let outs = eval_network(&art.params, &xs).unwrap();
        for (iz, (t_nd, _)) in outs.iter().enumerate() {
            let t_pred = scales.temp_c_from(*t_nd, 0.0);
            let t_fd = sol.temp_at(it, 0, iz);
            max_err = max_err.max((t_pred - t_fd).abs());
            max_t = max_t.max(t_fd.abs());
        }
    }
    println!("field: max|dT| = {max_err:.1} K of peak {max_t:.1} K -> rel {:.3}", max_err/max_t);
}
