use pinnweld::adnet::*;
use std::time::Instant;

fn main() {
    let spec = NetworkSpec {
        input_dim: 2, output_dim: 1, hidden_layers: 2, hidden_width: 50,
        activation: Activation::Tanh, init: InitScheme::XavierNormal, seed: 0,
    };
    let params = init_network(&spec).unwrap();
    let mut ws = Workspace::new(&spec);
    let mut grad = vec![0.0; spec.param_count()];
    let x = [0.3, 0.7];
    let ybar = [1.0];
    let ybar_d = [0.1, 0.2];
    let ybar_dd = [0.3, 0.4];
    let n = 100_000;

    let t0 = Instant::now();
    for _ in 0..n {
        params.forward_jets(&x, &mut ws).unwrap();
    }
    let fwd = t0.elapsed().as_secs_f64() / n as f64 * 1e6;

    let t0 = Instant::now();
    for _ in 0..n {
        params.forward_jets(&x, &mut ws).unwrap();
        params.backprop_jets(&mut ws, &ybar, &ybar_d, &ybar_dd, &mut grad);
    }
    let both = t0.elapsed().as_secs_f64() / n as f64 * 1e6;

    let t0 = Instant::now();
    for _ in 0..n {
        params.forward_values(&x, &mut ws).unwrap();
    }
    let fv = t0.elapsed().as_secs_f64() / n as f64 * 1e6;

    let t0 = Instant::now();
    let mut acc = 0.0;
    for i in 0..n*100 {
        acc += (i as f64 * 1e-5).tanh();
    }
    let tanh_ns = t0.elapsed().as_secs_f64() / (n as f64 * 100.0) * 1e9;
    println!("fwd_jets {fwd:.2} us/pt, fwd+bwd {both:.2} us/pt, fwd_values {fv:.2} us/pt, tanh {tanh_ns:.1} ns (acc {acc:.1})");
}
