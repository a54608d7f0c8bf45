//! Dense feed-forward network with exact forward evaluation, first and pure
//! second input derivatives (jets), and reverse-mode parameter gradients of
//! losses built from those jets.
//!
//! The jet carries, per output, the value together with ∂/∂x_k and ∂²/∂x_k²
//! for every input coordinate k; mixed second derivatives are never needed
//! by the residuals and are not propagated. The reverse pass differentiates
//! the whole jet computation, so losses may depend on values and on first
//! and second derivatives simultaneously.

mod activation;

pub use activation::Activation;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weight initialization scheme. Biases are always zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitScheme {
    XavierNormal,
    XavierUniform,
    KaimingNormal,
    KaimingUniform,
}

/// Architecture and initialization description of the network.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_dim: usize,
    pub output_dim: usize,
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub activation: Activation,
    pub init: InitScheme,
    pub seed: u64,
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim < 1 || self.output_dim < 1 || self.hidden_layers < 1 || self.hidden_width < 1 {
            return Err(Error::Config(format!(
                "network dims must be >= 1 (in {}, out {}, layers {}, width {})",
                self.input_dim, self.output_dim, self.hidden_layers, self.hidden_width
            )));
        }
        Ok(())
    }

    /// Layer widths including input and output.
    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.hidden_layers + 2);
        dims.push(self.input_dim);
        dims.extend(std::iter::repeat(self.hidden_width).take(self.hidden_layers));
        dims.push(self.output_dim);
        dims
    }

    pub fn param_count(&self) -> usize {
        self.layer_dims().windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }
}

/// Trainable weights and biases, stored flat in layer order (W¹, b¹, W², b², …)
/// with row-major weight matrices of shape (out, in).
#[derive(Debug, Clone)]
pub struct NetworkParams {
    spec: NetworkSpec,
    data: Vec<f64>,
}

/// Value plus first and pure second derivatives of one network output with
/// respect to every input coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

/// Deterministic standard normal via Box–Muller; stable across platforms and
/// library versions.
fn draw_normal(rng: &mut impl rand::Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Initialize a network: weights drawn per the chosen scheme from the seeded
/// generator, biases zero. Bit-identical for identical specs.
pub fn init_network(spec: &NetworkSpec) -> Result<NetworkParams> {
    use rand::{Rng, SeedableRng};
    spec.validate()?;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(spec.seed);
    let dims = spec.layer_dims();
    let mut data = Vec::with_capacity(spec.param_count());
    for w in dims.windows(2) {
        let (fan_in, fan_out) = (w[0] as f64, w[1] as f64);
        let n_weights = w[0] * w[1];
        match spec.init {
            InitScheme::XavierNormal => {
                let std = (2.0 / (fan_in + fan_out)).sqrt();
                data.extend((0..n_weights).map(|_| std * draw_normal(&mut rng)));
            }
            InitScheme::XavierUniform => {
                let a = (6.0 / (fan_in + fan_out)).sqrt();
                data.extend((0..n_weights).map(|_| a * (2.0 * rng.random::<f64>() - 1.0)));
            }
            InitScheme::KaimingNormal => {
                let std = (2.0 / fan_in).sqrt();
                data.extend((0..n_weights).map(|_| std * draw_normal(&mut rng)));
            }
            InitScheme::KaimingUniform => {
                let a = (6.0 / fan_in).sqrt();
                data.extend((0..n_weights).map(|_| a * (2.0 * rng.random::<f64>() - 1.0)));
            }
        }
        data.extend(std::iter::repeat(0.0).take(w[1]));
    }
    Ok(NetworkParams { spec: spec.clone(), data })
}

impl NetworkParams {
    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn from_flat(spec: NetworkSpec, data: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if data.len() != spec.param_count() {
            return Err(Error::Config(format!(
                "parameter vector length {} does not match spec ({} expected)",
                data.len(),
                spec.param_count()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite network parameter".into()));
        }
        Ok(Self { spec, data })
    }

    /// Offsets of (weights, biases) for layer `l` in the flat vector, with
    /// the matrix shape (rows, cols).
    fn layer_offsets(&self) -> Vec<(usize, usize, usize, usize)> {
        let dims = self.spec.layer_dims();
        let mut out = Vec::with_capacity(dims.len() - 1);
        let mut off = 0;
        for w in dims.windows(2) {
            let (cols, rows) = (w[0], w[1]);
            out.push((off, off + rows * cols, rows, cols));
            off += rows * cols + rows;
        }
        out
    }

    /// Weight matrix and bias slice of layer `l` (0-based).
    pub fn layer(&self, l: usize) -> (&[f64], &[f64], usize, usize) {
        let (w_off, b_off, rows, cols) = self.layer_offsets()[l];
        (&self.data[w_off..w_off + rows * cols], &self.data[b_off..b_off + rows], rows, cols)
    }

    /// Evaluate the network at `x` (allocating convenience wrapper).
    pub fn forward(&self, x: &[f64], ws: &mut Workspace) -> Result<Vec<f64>> {
        self.forward_values(x, ws)?;
        Ok(ws.output().to_vec())
    }

    /// Jet evaluation at `x` (allocating convenience wrapper). The returned
    /// jets carry derivatives for every input coordinate, so the workspace
    /// must not restrict its jet dimensions.
    pub fn jet_forward(&self, x: &[f64], ws: &mut Workspace) -> Result<Vec<Jet2>> {
        assert_eq!(ws.jet_dims, self.spec.input_dim, "jet_forward needs a full-width workspace");
        self.forward_jets(x, ws)?;
        let k = self.spec.input_dim;
        let m = self.spec.output_dim;
        Ok((0..m)
            .map(|o| Jet2 {
                value: ws.output()[o],
                d1: (0..k).map(|kk| ws.output_d1()[kk * m + o]).collect(),
                d2: (0..k).map(|kk| ws.output_d2()[kk * m + o]).collect(),
            })
            .collect())
    }

    /// Value-only forward pass; leaves the output in the workspace. Stores
    /// activations and σ' so [`Self::backprop_values`] can run afterwards.
    pub fn forward_values(&self, x: &[f64], ws: &mut Workspace) -> Result<()> {
        self.check_input(x)?;
        ws.act[0][..x.len()].copy_from_slice(x);
        let offs = self.layer_offsets();
        let n_layers = offs.len();
        for l in 0..n_layers {
            let (w_off, b_off, rows, cols) = offs[l];
            let w = &self.data[w_off..w_off + rows * cols];
            let b = &self.data[b_off..b_off + rows];
            let (prev, rest) = ws.act.split_at_mut(l + 1);
            let h = &prev[l][..cols];
            let a = &mut rest[0][..rows];
            matvec(w, rows, cols, h, a);
            for (ai, bi) in a.iter_mut().zip(b) {
                *ai += bi;
            }
            if l < n_layers - 1 {
                let act = self.spec.activation;
                let s1 = &mut ws.s1[l][..rows];
                for i in 0..rows {
                    let (v, d1) = act.eval1(a[i]);
                    s1[i] = d1;
                    a[i] = v;
                }
            }
        }
        ws.jets_valid = false;
        Ok(())
    }

    /// Full jet forward pass: value plus first/second derivative streams for
    /// the workspace's leading `jet_dims` input coordinates. Stores
    /// everything the jet reverse pass needs.
    pub fn forward_jets(&self, x: &[f64], ws: &mut Workspace) -> Result<()> {
        self.check_input(x)?;
        let k = ws.jet_dims;
        ws.act[0][..x.len()].copy_from_slice(x);
        // Input jets: d1 is the coordinate basis, d2 is zero.
        let in_dim = self.spec.input_dim;
        ws.act_d[0].fill(0.0);
        ws.act_dd[0].fill(0.0);
        for kk in 0..k {
            ws.act_d[0][kk * in_dim + kk] = 1.0;
        }
        let offs = self.layer_offsets();
        let n_layers = offs.len();
        for l in 0..n_layers {
            let (w_off, b_off, rows, cols) = offs[l];
            let w = &self.data[w_off..w_off + rows * cols];
            let b = &self.data[b_off..b_off + rows];
            {
                let (prev, rest) = ws.act.split_at_mut(l + 1);
                let a = &mut rest[0][..rows];
                matvec(w, rows, cols, &prev[l][..cols], a);
                for (ai, bi) in a.iter_mut().zip(b) {
                    *ai += bi;
                }
            }
            for kk in 0..k {
                let (prev, rest) = ws.act_d.split_at_mut(l + 1);
                matvec(w, rows, cols, &prev[l][kk * cols..kk * cols + cols], &mut rest[0][kk * rows..kk * rows + rows]);
                let (prev, rest) = ws.act_dd.split_at_mut(l + 1);
                matvec(w, rows, cols, &prev[l][kk * cols..kk * cols + cols], &mut rest[0][kk * rows..kk * rows + rows]);
            }
            if l < n_layers - 1 {
                // Save pre-activation jets, then apply the activation to all
                // streams in place.
                ws.pre_d[l][..k * rows].copy_from_slice(&ws.act_d[l + 1][..k * rows]);
                ws.pre_dd[l][..k * rows].copy_from_slice(&ws.act_dd[l + 1][..k * rows]);
                let act = self.spec.activation;
                for i in 0..rows {
                    let (v, d1, d2, d3) = act.eval3(ws.act[l + 1][i]);
                    ws.act[l + 1][i] = v;
                    ws.s1[l][i] = d1;
                    ws.s2[l][i] = d2;
                    ws.s3[l][i] = d3;
                }
                for kk in 0..k {
                    for i in 0..rows {
                        let ad = ws.pre_d[l][kk * rows + i];
                        let add = ws.pre_dd[l][kk * rows + i];
                        ws.act_d[l + 1][kk * rows + i] = ws.s1[l][i] * ad;
                        ws.act_dd[l + 1][kk * rows + i] = ws.s2[l][i] * ad * ad + ws.s1[l][i] * add;
                    }
                }
            }
        }
        ws.jets_valid = true;
        Ok(())
    }

    /// Reverse pass through the jet computation. `ybar`, `ybar_d1`, `ybar_d2`
    /// are the loss partials with respect to the output jets (`ybar_d*` laid
    /// out k-major like the workspace streams). Accumulates into `grad`.
    ///
    /// Requires a preceding [`Self::forward_jets`] on the same workspace.
    pub fn backprop_jets(&self, ws: &mut Workspace, ybar: &[f64], ybar_d1: &[f64], ybar_d2: &[f64], grad: &mut [f64]) {
        debug_assert!(ws.jets_valid, "backprop_jets requires forward_jets");
        let k = ws.jet_dims;
        let offs = self.layer_offsets();
        let n_layers = offs.len();
        let m = self.spec.output_dim;
        ws.bar[..m].copy_from_slice(ybar);
        ws.bar_d[..k * m].copy_from_slice(ybar_d1);
        ws.bar_dd[..k * m].copy_from_slice(ybar_d2);

        for l in (0..n_layers).rev() {
            let (w_off, b_off, rows, cols) = offs[l];
            if l < n_layers - 1 {
                // Adjoint through the activation: incoming bar/bar_d/bar_dd
                // refer to post-activation streams of layer l; convert to
                // pre-activation adjoints in place.
                let s1 = &ws.s1[l][..rows];
                let s2 = &ws.s2[l][..rows];
                let s3 = &ws.s3[l][..rows];
                let pre_d = &ws.pre_d[l];
                let pre_dd = &ws.pre_dd[l];
                for i in 0..rows {
                    let mut acc = ws.bar[i] * s1[i];
                    for kk in 0..k {
                        let ad = pre_d[kk * rows + i];
                        let add = pre_dd[kk * rows + i];
                        acc += ws.bar_d[kk * rows + i] * s2[i] * ad
                            + ws.bar_dd[kk * rows + i] * (s3[i] * ad * ad + s2[i] * add);
                    }
                    ws.abar[i] = acc;
                }
                for kk in 0..k {
                    for i in 0..rows {
                        let ad = pre_d[kk * rows + i];
                        ws.abar_d[kk * rows + i] =
                            ws.bar_d[kk * rows + i] * s1[i] + ws.bar_dd[kk * rows + i] * 2.0 * s2[i] * ad;
                        ws.abar_dd[kk * rows + i] = ws.bar_dd[kk * rows + i] * s1[i];
                    }
                }
            } else {
                // Output layer is affine: adjoints pass through unchanged.
                ws.abar[..rows].copy_from_slice(&ws.bar[..rows]);
                ws.abar_d[..k * rows].copy_from_slice(&ws.bar_d[..k * rows]);
                ws.abar_dd[..k * rows].copy_from_slice(&ws.bar_dd[..k * rows]);
            }

            // Parameter gradients of the affine map a = W h + b.
            let h = &ws.act[l];
            let h_d = &ws.act_d[l];
            let h_dd = &ws.act_dd[l];
            let gw = &mut grad[w_off..w_off + rows * cols];
            rank1_acc(gw, rows, cols, &ws.abar[..rows], &h[..cols]);
            for kk in 0..k {
                rank1_acc(gw, rows, cols, &ws.abar_d[kk * rows..kk * rows + rows], &h_d[kk * cols..kk * cols + cols]);
                rank1_acc(gw, rows, cols, &ws.abar_dd[kk * rows..kk * rows + rows], &h_dd[kk * cols..kk * cols + cols]);
            }
            for i in 0..rows {
                grad[b_off + i] += ws.abar[i];
            }

            // Propagate adjoints to the previous layer's streams.
            if l > 0 {
                let w = &self.data[w_off..w_off + rows * cols];
                matvec_t(w, rows, cols, &ws.abar[..rows], &mut ws.bar[..cols]);
                for kk in 0..k {
                    matvec_t(w, rows, cols, &ws.abar_d[kk * rows..kk * rows + rows], &mut ws.bar_d[kk * cols..kk * cols + cols]);
                    matvec_t(w, rows, cols, &ws.abar_dd[kk * rows..kk * rows + rows], &mut ws.bar_dd[kk * cols..kk * cols + cols]);
                }
            }
        }
    }

    /// Reverse pass for value-only losses. `ybar` holds ∂L/∂y. Accumulates
    /// into `grad`. Requires a preceding forward pass on this workspace.
    pub fn backprop_values(&self, ws: &mut Workspace, ybar: &[f64], grad: &mut [f64]) {
        let offs = self.layer_offsets();
        let n_layers = offs.len();
        ws.bar[..ybar.len()].copy_from_slice(ybar);
        for l in (0..n_layers).rev() {
            let (w_off, b_off, rows, cols) = offs[l];
            if l < n_layers - 1 {
                let s1 = &ws.s1[l][..rows];
                for i in 0..rows {
                    ws.abar[i] = ws.bar[i] * s1[i];
                }
            } else {
                ws.abar[..rows].copy_from_slice(&ws.bar[..rows]);
            }
            let gw = &mut grad[w_off..w_off + rows * cols];
            rank1_acc(gw, rows, cols, &ws.abar[..rows], &ws.act[l][..cols]);
            for i in 0..rows {
                grad[b_off + i] += ws.abar[i];
            }
            if l > 0 {
                let w = &self.data[w_off..w_off + rows * cols];
                matvec_t(w, rows, cols, &ws.abar[..rows], &mut ws.bar[..cols]);
            }
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.spec.input_dim {
            return Err(Error::Numeric(format!(
                "input length {} does not match input_dim {}",
                x.len(),
                self.spec.input_dim
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite network input".into()));
        }
        Ok(())
    }
}

/// Reusable per-thread evaluation scratch. All derivative streams are laid
/// out k-major: stream k of layer l occupies `[k*width, (k+1)*width)`.
#[derive(Debug, Clone)]
pub struct Workspace {
    act: Vec<Vec<f64>>,
    act_d: Vec<Vec<f64>>,
    act_dd: Vec<Vec<f64>>,
    pre_d: Vec<Vec<f64>>,
    pre_dd: Vec<Vec<f64>>,
    s1: Vec<Vec<f64>>,
    s2: Vec<Vec<f64>>,
    s3: Vec<Vec<f64>>,
    bar: Vec<f64>,
    bar_d: Vec<f64>,
    bar_dd: Vec<f64>,
    abar: Vec<f64>,
    abar_d: Vec<f64>,
    abar_dd: Vec<f64>,
    jets_valid: bool,
    output_dim: usize,
    input_dim: usize,
    /// Number of leading input coordinates that carry derivative streams.
    jet_dims: usize,
}

impl Workspace {
    /// Workspace with derivative streams for every input coordinate.
    pub fn new(spec: &NetworkSpec) -> Self {
        Self::with_jet_dims(spec, spec.input_dim)
    }

    /// Workspace carrying jets only for the first `jet_dims` coordinates;
    /// the residuals never differentiate along the process-parameter inputs,
    /// which saves a third of the jet work.
    pub fn with_jet_dims(spec: &NetworkSpec, jet_dims: usize) -> Self {
        assert!(jet_dims >= 1 && jet_dims <= spec.input_dim);
        let dims = spec.layer_dims();
        let k = jet_dims;
        let max_w = *dims.iter().max().unwrap();
        let n_hidden = spec.hidden_layers;
        Self {
            act: dims.iter().map(|&d| vec![0.0; d]).collect(),
            act_d: dims.iter().map(|&d| vec![0.0; k * d]).collect(),
            act_dd: dims.iter().map(|&d| vec![0.0; k * d]).collect(),
            pre_d: (0..n_hidden).map(|_| vec![0.0; k * spec.hidden_width]).collect(),
            pre_dd: (0..n_hidden).map(|_| vec![0.0; k * spec.hidden_width]).collect(),
            s1: (0..n_hidden).map(|_| vec![0.0; spec.hidden_width]).collect(),
            s2: (0..n_hidden).map(|_| vec![0.0; spec.hidden_width]).collect(),
            s3: (0..n_hidden).map(|_| vec![0.0; spec.hidden_width]).collect(),
            bar: vec![0.0; max_w],
            bar_d: vec![0.0; k * max_w],
            bar_dd: vec![0.0; k * max_w],
            abar: vec![0.0; max_w],
            abar_d: vec![0.0; k * max_w],
            abar_dd: vec![0.0; k * max_w],
            jets_valid: false,
            output_dim: spec.output_dim,
            input_dim: spec.input_dim,
            jet_dims,
        }
    }

    /// Network output values after a forward pass.
    pub fn output(&self) -> &[f64] {
        self.act.last().unwrap()
    }

    /// First-derivative stream of the output layer, k-major.
    pub fn output_d1(&self) -> &[f64] {
        self.act_d.last().unwrap()
    }

    /// Second-derivative stream of the output layer, k-major.
    pub fn output_d2(&self) -> &[f64] {
        self.act_dd.last().unwrap()
    }

    /// ∂(output o)/∂x_k after `forward_jets`.
    pub fn d1(&self, o: usize, k: usize) -> f64 {
        self.output_d1()[k * self.output_dim + o]
    }

    /// ∂²(output o)/∂x_k² after `forward_jets`.
    pub fn d2(&self, o: usize, k: usize) -> f64 {
        self.output_d2()[k * self.output_dim + o]
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }
}

/// Adjoints of one output's jet, mirroring [`Jet2`].
#[derive(Debug, Clone)]
pub struct JetAdjoint {
    pub value: f64,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl JetAdjoint {
    pub fn zero(k: usize) -> Self {
        Self { value: 0.0, d1: vec![0.0; k], d2: vec![0.0; k] }
    }
}

fn matvec(w: &[f64], rows: usize, cols: usize, x: &[f64], y: &mut [f64]) {
    // Four independent accumulators break the sequential dependency chain so
    // the dot products vectorize.
    for r in 0..rows {
        let row = &w[r * cols..r * cols + cols];
        let mut acc = [0.0f64; 4];
        let chunks = cols / 4 * 4;
        let mut c = 0;
        while c < chunks {
            acc[0] += row[c] * x[c];
            acc[1] += row[c + 1] * x[c + 1];
            acc[2] += row[c + 2] * x[c + 2];
            acc[3] += row[c + 3] * x[c + 3];
            c += 4;
        }
        let mut tail = 0.0;
        while c < cols {
            tail += row[c] * x[c];
            c += 1;
        }
        y[r] = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail;
    }
}

/// y = Wᵀ a (overwrites y).
fn matvec_t(w: &[f64], rows: usize, cols: usize, a: &[f64], y: &mut [f64]) {
    y.fill(0.0);
    for r in 0..rows {
        let row = &w[r * cols..r * cols + cols];
        let ar = a[r];
        for c in 0..cols {
            y[c] += row[c] * ar;
        }
    }
}

/// W̄ += a ⊗ h.
fn rank1_acc(gw: &mut [f64], rows: usize, cols: usize, a: &[f64], h: &[f64]) {
    for r in 0..rows {
        let row = &mut gw[r * cols..r * cols + cols];
        let ar = a[r];
        for c in 0..cols {
            row[c] += ar * h[c];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;

    fn small_spec(act: Activation, seed: u64) -> NetworkSpec {
        NetworkSpec {
            input_dim: 3,
            output_dim: 2,
            hidden_layers: 2,
            hidden_width: 7,
            activation: act,
            init: InitScheme::XavierNormal,
            seed,
        }
    }

    #[test]
    fn init_is_deterministic() {
        let spec = small_spec(Activation::Tanh, 7);
        let a = init_network(&spec).unwrap();
        let b = init_network(&spec).unwrap();
        assert_eq!(a.data(), b.data());
    }

    #[test]
    fn xavier_uniform_respects_bound() {
        let spec = NetworkSpec {
            input_dim: 66,
            output_dim: 1,
            hidden_layers: 1,
            hidden_width: 66,
            activation: Activation::Tanh,
            init: InitScheme::XavierUniform,
            seed: 3,
        };
        let params = init_network(&spec).unwrap();
        let (w, b, _, _) = params.layer(0);
        let bound = (6.0_f64 / (66.0 + 66.0)).sqrt();
        assert!(w.iter().all(|&v| v.abs() <= bound));
        assert!(b.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn param_count_formula() {
        let spec = NetworkSpec {
            input_dim: 2,
            output_dim: 1,
            hidden_layers: 3,
            hidden_width: 66,
            activation: Activation::Tanh,
            init: InitScheme::XavierNormal,
            seed: 0,
        };
        let expect = 66 * 2 + 66 + 2 * (66 * 66 + 66) + 66 + 1;
        assert_eq!(spec.param_count(), expect);
        assert_eq!(init_network(&spec).unwrap().data().len(), expect);
    }

    #[test]
    fn invalid_dims_rejected() {
        let mut spec = small_spec(Activation::Tanh, 0);
        spec.hidden_layers = 0;
        assert!(init_network(&spec).is_err());
    }

    #[test]
    fn zero_weights_forward_returns_output_bias() {
        let spec = small_spec(Activation::Tanh, 1);
        let mut params = init_network(&spec).unwrap();
        params.data_mut().fill(0.0);
        let offs = params.layer_offsets();
        let (_, b_off, rows, _) = offs[offs.len() - 1];
        for i in 0..rows {
            params.data_mut()[b_off + i] = 0.25 + i as f64;
        }
        let mut ws = Workspace::new(&spec);
        let y = params.forward(&[0.3, -0.7, 2.0], &mut ws).unwrap();
        assert_eq!(y, vec![0.25, 1.25]);
    }

    #[test]
    fn constant_network_value() {
        // One hidden tanh layer with W1 = 0: output = W2·tanh(b1) + b2.
        let spec = NetworkSpec {
            input_dim: 2,
            output_dim: 1,
            hidden_layers: 1,
            hidden_width: 4,
            activation: Activation::Tanh,
            init: InitScheme::XavierNormal,
            seed: 5,
        };
        let mut params = init_network(&spec).unwrap();
        let offs = params.layer_offsets();
        let (w0, b0, rows0, cols0) = offs[0];
        for i in 0..rows0 * cols0 {
            params.data_mut()[w0 + i] = 0.0;
        }
        for i in 0..rows0 {
            params.data_mut()[b0 + i] = 0.1 * (i as f64 + 1.0);
        }
        let (w1_off, b1_off, _, cols1) = offs[1];
        let w1: Vec<f64> = (0..cols1).map(|i| params.data()[w1_off + i]).collect();
        let b1 = params.data()[b1_off];
        let expect: f64 = (0..cols1).map(|i| w1[i] * (0.1 * (i as f64 + 1.0)).tanh()).sum::<f64>() + b1;
        let mut ws = Workspace::new(&spec);
        for x in [[0.0, 0.0], [1.0, -3.0], [0.5, 0.5]] {
            let y = params.forward(&x, &mut ws).unwrap();
            assert_relative_eq!(y[0], expect, max_relative = 1e-15);
            let jets = params.jet_forward(&x, &mut ws).unwrap();
            assert!(jets[0].d1.iter().chain(&jets[0].d2).all(|&d| d == 0.0));
        }
    }

    /// Direct re-implementation of the layer recursion, independent of the
    /// engine's buffers and loop structure.
    fn naive_forward(params: &NetworkParams, x: &[f64]) -> Vec<f64> {
        let n_layers = params.spec().hidden_layers + 1;
        let mut h = x.to_vec();
        for l in 0..n_layers {
            let (w, b, rows, cols) = params.layer(l);
            let mut next = vec![0.0; rows];
            for r in 0..rows {
                let mut acc = b[r];
                for c in 0..cols {
                    acc += w[r * cols + c] * h[c];
                }
                next[r] = if l < n_layers - 1 { params.spec().activation.value(acc) } else { acc };
            }
            h = next;
        }
        h
    }

    #[test]
    fn forward_matches_naive_recursion() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(99);
        for act in [Activation::Tanh, Activation::Gelu, Activation::Elu] {
            for seed in 0..5 {
                let spec = small_spec(act, seed);
                let params = init_network(&spec).unwrap();
                let mut ws = Workspace::new(&spec);
                let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.5..1.5)).collect();
                let y = params.forward(&x, &mut ws).unwrap();
                let y_ref = naive_forward(&params, &x);
                for (a, b) in y.iter().zip(&y_ref) {
                    assert!((a - b).abs() <= 1e-12, "{act:?}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn jet_value_equals_forward() {
        let spec = small_spec(Activation::Gelu, 11);
        let params = init_network(&spec).unwrap();
        let mut ws = Workspace::new(&spec);
        let x = [0.4, -0.2, 1.1];
        let y = params.forward(&x, &mut ws).unwrap();
        let jets = params.jet_forward(&x, &mut ws).unwrap();
        for (o, jet) in jets.iter().enumerate() {
            assert_eq!(jet.value, y[o]);
        }
    }

    #[test]
    fn jet_derivatives_match_finite_differences() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(42);
        for act in [Activation::Tanh, Activation::Gelu, Activation::Elu] {
            for trial in 0..12 {
                let spec = small_spec(act, 1000 + trial);
                let params = init_network(&spec).unwrap();
                let mut ws = Workspace::new(&spec);
                let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
                let jets = params.jet_forward(&x, &mut ws).unwrap();
                let h = 1e-4;
                for k in 0..3 {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[k] += h;
                    xm[k] -= h;
                    let yp = params.forward(&xp, &mut ws).unwrap();
                    let ym = params.forward(&xm, &mut ws).unwrap();
                    let y0 = params.forward(&x, &mut ws).unwrap();
                    for o in 0..2 {
                        let fd1 = (yp[o] - ym[o]) / (2.0 * h);
                        let fd2 = (yp[o] - 2.0 * y0[o] + ym[o]) / (h * h);
                        assert!(
                            (jets[o].d1[k] - fd1).abs() <= 1e-6 * (1.0 + fd1.abs()),
                            "{act:?} d1 o={o} k={k}: {} vs {}",
                            jets[o].d1[k],
                            fd1
                        );
                        assert!(
                            (jets[o].d2[k] - fd2).abs() <= 1e-4 * (1.0 + fd2.abs()),
                            "{act:?} d2 o={o} k={k}: {} vs {}",
                            jets[o].d2[k],
                            fd2
                        );
                    }
                }
            }
        }
    }

    /// Scalar test loss over a small batch touching values, first and second
    /// jet derivatives: L = Σ_p (y0² + Σ_k d1_k·c_k + Σ_k d2_k²)/P.
    fn jet_loss_and_grad(params: &NetworkParams, xs: &[Vec<f64>]) -> (f64, Vec<f64>) {
        let spec = params.spec();
        let (k, m) = (spec.input_dim, spec.output_dim);
        let mut ws = Workspace::new(spec);
        let mut grad = vec![0.0; spec.param_count()];
        let mut loss = 0.0;
        let scale = 1.0 / xs.len() as f64;
        for x in xs {
            params.forward_jets(x, &mut ws).unwrap();
            let mut ybar = vec![0.0; m];
            let mut ybar_d1 = vec![0.0; k * m];
            let mut ybar_d2 = vec![0.0; k * m];
            for o in 0..m {
                let v = ws.output()[o];
                loss += scale * v * v;
                ybar[o] = scale * 2.0 * v;
                for kk in 0..k {
                    let d1 = ws.d1(o, kk);
                    let d2 = ws.d2(o, kk);
                    let c = 0.3 + 0.1 * kk as f64;
                    loss += scale * (d1 * c + d2 * d2);
                    ybar_d1[kk * m + o] = scale * c;
                    ybar_d2[kk * m + o] = scale * 2.0 * d2;
                }
            }
            params.backprop_jets(&mut ws, &ybar, &ybar_d1, &ybar_d2, &mut grad);
        }
        (loss, grad)
    }

    #[test]
    fn param_gradient_matches_finite_differences() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        for act in [Activation::Tanh, Activation::Gelu, Activation::Elu] {
            let spec = small_spec(act, 21);
            let params = init_network(&spec).unwrap();
            let xs: Vec<Vec<f64>> =
                (0..4).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let (_, grad) = jet_loss_and_grad(&params, &xs);
            let h = 1e-6;
            for _ in 0..20 {
                let idx = rng.random_range(0..spec.param_count());
                let mut pp = params.clone();
                pp.data_mut()[idx] += h;
                let (lp, _) = jet_loss_and_grad(&pp, &xs);
                let mut pm = params.clone();
                pm.data_mut()[idx] -= h;
                let (lm, _) = jet_loss_and_grad(&pm, &xs);
                let fd = (lp - lm) / (2.0 * h);
                assert!(
                    (grad[idx] - fd).abs() <= 1e-4 * (1.0 + fd.abs()),
                    "{act:?} param {idx}: analytic {} vs fd {}",
                    grad[idx],
                    fd
                );
            }
        }
    }

    #[test]
    fn zero_adjoints_give_zero_gradient() {
        let spec = small_spec(Activation::Tanh, 3);
        let params = init_network(&spec).unwrap();
        let mut ws = Workspace::new(&spec);
        let mut grad = vec![0.0; spec.param_count()];
        params.forward_jets(&[0.1, 0.2, 0.3], &mut ws).unwrap();
        let ybar = vec![0.0; 2];
        let ybar_d = vec![0.0; 6];
        params.backprop_jets(&mut ws, &ybar, &ybar_d, &ybar_d.clone(), &mut grad);
        assert!(grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn gradient_scales_linearly_with_loss_scale() {
        let spec = small_spec(Activation::Tanh, 17);
        let params = init_network(&spec).unwrap();
        let mut ws = Workspace::new(&spec);
        let x = [0.3, -0.4, 0.9];
        let mut g1 = vec![0.0; spec.param_count()];
        let mut g3 = vec![0.0; spec.param_count()];
        params.forward_jets(&x, &mut ws).unwrap();
        let ybar = [1.0, -0.5];
        let ybar_d: Vec<f64> = (0..6).map(|i| 0.1 * i as f64).collect();
        let ybar_dd: Vec<f64> = (0..6).map(|i| -0.05 * i as f64).collect();
        params.backprop_jets(&mut ws, &ybar, &ybar_d, &ybar_dd, &mut g1);
        let c = 3.0;
        let yb3: Vec<f64> = ybar.iter().map(|v| c * v).collect();
        let ybd3: Vec<f64> = ybar_d.iter().map(|v| c * v).collect();
        let ybdd3: Vec<f64> = ybar_dd.iter().map(|v| c * v).collect();
        params.forward_jets(&x, &mut ws).unwrap();
        params.backprop_jets(&mut ws, &yb3, &ybd3, &ybdd3, &mut g3);
        for (a, b) in g1.iter().zip(&g3) {
            assert_relative_eq!(c * a, *b, max_relative = 1e-12);
        }
    }

    #[test]
    fn backprop_values_matches_finite_differences() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(31);
        let spec = small_spec(Activation::Gelu, 13);
        let params = init_network(&spec).unwrap();
        let x = [0.4, 0.1, -0.6];
        // L = Σ_o y_o²
        let eval = |p: &NetworkParams| -> f64 {
            let mut ws = Workspace::new(p.spec());
            let y = p.forward(&x, &mut ws).unwrap();
            y.iter().map(|v| v * v).sum()
        };
        let mut ws = Workspace::new(&spec);
        params.forward_values(&x, &mut ws).unwrap();
        let ybar: Vec<f64> = ws.output().iter().map(|v| 2.0 * v).collect();
        let mut grad = vec![0.0; spec.param_count()];
        params.backprop_values(&mut ws, &ybar, &mut grad);
        let h = 1e-6;
        for _ in 0..15 {
            let idx = rng.random_range(0..spec.param_count());
            let mut pp = params.clone();
            pp.data_mut()[idx] += h;
            let mut pm = params.clone();
            pm.data_mut()[idx] -= h;
            let fd = (eval(&pp) - eval(&pm)) / (2.0 * h);
            assert!((grad[idx] - fd).abs() <= 1e-5 * (1.0 + fd.abs()), "param {idx}");
        }
    }

    #[test]
    fn non_finite_input_is_numeric_error() {
        let spec = small_spec(Activation::Tanh, 5);
        let params = init_network(&spec).unwrap();
        let mut ws = Workspace::new(&spec);
        assert!(params.forward(&[f64::NAN, 0.0, 0.0], &mut ws).is_err());
    }
}
