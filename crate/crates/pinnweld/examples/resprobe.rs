use pinnweld::adnet::Jet2;
use pinnweld::material::{HardnessModel, MaterialTable, Property};
use pinnweld::oracle::*;
use pinnweld::residuals::{heat_residual_1d, NdProps, SourceField, WeldConfig};

fn main() {
    let mut weld = WeldConfig::default();
    weld.schedule.i_max_ka = 40.0;
    weld.contact.force_n = 5000.0;
    weld.contact.rho_film = 5e-4;
    weld.contact.l_film = 0.3;
    weld.contact.hertzian_weighting = true;
    let mat = MaterialTable::default_almgsi();
    let hard = HardnessModel::default();
    for (n_z, dt_ms) in [(100usize, 2.0f64), (200, 1.0), (400, 0.5)] {
        let mesh = MeshConfig { n_z, n_r: 0, dt_ms, store_every: 1 };
        let sol = fd_solve_1d(&weld, &mat, &hard, &mesh).unwrap();
        let scales = weld.scales;
        let src = SourceField::new(&weld, &mat, &hard);
        let dz = 1.0 / n_z as f64;
        let dt_nd = dt_ms / scales.t_c;
        let band = src.band_half_width_nd() + 2.0 * dz;
        let n_t = sol.t_stored_ms.len();
        let mut sum = 0.0; let mut count = 0usize;
        let mut worst = (0.0f64, 0.0, 0.0);
        for it in 2..n_t - 2 {
            let t_ms = sol.t_stored_ms[it];
            if [400.0, 470.0, 560.0].iter().any(|b| (t_ms - b).abs() < 4.0 * dt_ms) { continue; }
            for iz in 2..n_z - 1 {
                let z = sol.z_nd[iz];
                if (z - 0.5).abs() < band { continue; }
                let tn = |it: usize, iz: usize| scales.temp_nd_from(sol.temp_at(it, 0, iz), 0.0);
                let value = tn(it, iz);
                let t_z = (tn(it, iz + 1) - tn(it, iz - 1)) / (2.0 * dz);
                let t_zz = (tn(it, iz + 1) - 2.0 * value + tn(it, iz - 1)) / (dz * dz);
                let t_t = (tn(it + 1, iz) - tn(it - 1, iz)) / (2.0 * dt_nd);
                let jet = Jet2 { value, d1: vec![t_z, t_t], d2: vec![t_zz, 0.0] };
                let temp_c = sol.temp_at(it, 0, iz);
                let (lambda, dlambda) = mat.lookup(Property::LambdaTh, temp_c);
                let props = NdProps { lambda: lambda / scales.lambda_c, dlambda: dlambda * scales.temp_c / scales.lambda_c };
                let q = src.q_nd(0.0, z, t_ms / scales.t_c, temp_c, 40.0, 5000.0, weld.contact.n_spots).unwrap();
                let (r, _) = heat_residual_1d(&jet, q, props);
                sum += r * r; count += 1;
                if r * r > worst.0 { worst = (r * r, z, t_ms); }
            }
        }
        println!("n_z={n_z} dt={dt_ms}: msr {:.3e} over {count} pts; worst r^2 {:.2e} at z={:.3} t={:.0}", sum / count as f64, worst.0, worst.1, worst.2);
    }
}
