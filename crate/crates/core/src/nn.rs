//! Reference neural-network implementations and hot-spot profiling.
//!
//! Everything here is an oracle: the feedforward pass with exact sigmoid is
//! the single numerical ground truth that the tiled engine and the cycle
//! simulator are measured against. The inference path accumulates in f32
//! with ascending-index order, matching the accelerator arithmetic exactly.
//! The training references (contrastive divergence, backpropagation) do
//! their internal math in f64 so gradient checks are limited by the method,
//! not by f32 rounding; results are rounded to f32 once on return.

use crate::error::{Error, Result};
use crate::prng::SplitMix64;
use crate::pwl::{pwl_slope, Activation};
use crate::tensor::Tensor2D;

/// Exact logistic sigmoid 1/(1+e^-x). Saturates gracefully at extreme
/// inputs (0 for very negative x, 1 for very positive x).
pub fn sigmoid_exact(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Untiled reference product: `out[j] = sum_i W[i][j] * x[i]`, summed in
/// ascending `i` order so cross-implementation comparisons are exact.
pub fn matvec_naive(w: &Tensor2D, x: &[f32]) -> Result<Vec<f32>> {
    if x.len() != w.rows() {
        return Err(Error::DimensionMismatch(format!(
            "matvec: weight matrix has {} rows but input vector has length {}",
            w.rows(),
            x.len()
        )));
    }
    let mut out = Vec::with_capacity(w.cols());
    for j in 0..w.cols() {
        let mut acc = 0.0_f32;
        for (i, &xv) in x.iter().enumerate() {
            acc += w.at(i, j) * xv;
        }
        out.push(acc);
    }
    Ok(out)
}

/// Layer sizes plus the activation applied after every weight layer.
///
/// There are no bias terms on this path; the accelerated computation is a
/// pure weights-times-activations chain.
#[derive(Debug, Clone)]
pub struct NetworkSpec {
    layer_sizes: Vec<usize>,
    activation: Activation,
}

impl NetworkSpec {
    pub fn new(layer_sizes: Vec<usize>, activation: Activation) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::DimensionMismatch(format!(
                "a network needs at least 2 layers, got {}",
                layer_sizes.len()
            )));
        }
        if let Some(layer) = layer_sizes.iter().position(|&s| s == 0) {
            return Err(Error::LayerShape {
                layer,
                detail: "layer size must be >= 1".into(),
            });
        }
        Ok(Self {
            layer_sizes,
            activation,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn activation(&self) -> &Activation {
        &self.activation
    }
}

fn check_weight_chain(spec: &NetworkSpec, weights: &[Tensor2D], input: &Tensor2D) -> Result<()> {
    let sizes = spec.layer_sizes();
    if weights.len() != sizes.len() - 1 {
        return Err(Error::DimensionMismatch(format!(
            "{} weight matrices for a {}-layer network",
            weights.len(),
            sizes.len()
        )));
    }
    if input.cols() != sizes[0] {
        return Err(Error::LayerShape {
            layer: 0,
            detail: format!(
                "input has {} columns, layer 0 has {}",
                input.cols(),
                sizes[0]
            ),
        });
    }
    for (layer, w) in weights.iter().enumerate() {
        if w.rows() != sizes[layer] || w.cols() != sizes[layer + 1] {
            return Err(Error::LayerShape {
                layer,
                detail: format!(
                    "expected {}x{} weights, got {}x{}",
                    sizes[layer],
                    sizes[layer + 1],
                    w.rows(),
                    w.cols()
                ),
            });
        }
    }
    Ok(())
}

/// Full forward pass. Returns the activations of every layer, input first.
///
/// Per layer: `act[l+1] = f(act[l] * W[l])` with f32 ascending-index
/// accumulation, so a single layer is bit-identical to
/// `activation(matvec_naive(...))` per batch row.
pub fn feedforward_ref(
    spec: &NetworkSpec,
    weights: &[Tensor2D],
    input: &Tensor2D,
) -> Result<Vec<Tensor2D>> {
    check_weight_chain(spec, weights, input)?;
    let mut acts = Vec::with_capacity(weights.len() + 1);
    acts.push(input.clone());
    for w in weights {
        let prev = acts.last().expect("at least the input activation");
        let mut next = Tensor2D::zeros(prev.rows(), w.cols());
        for n in 0..prev.rows() {
            for j in 0..w.cols() {
                let mut acc = 0.0_f32;
                for i in 0..w.rows() {
                    acc += w.at(i, j) * prev.at(n, i);
                }
                next.set(n, j, spec.activation().apply_f32(acc));
            }
        }
        acts.push(next);
    }
    Ok(acts)
}

// ---------------------------------------------------------------------------
// f64 training engine with exact operation tallies
// ---------------------------------------------------------------------------

/// Exact per-category operation counters, incremented at the operation sites
/// inside the reference loops (no formulas, no sampling).
#[derive(Debug, Default, Clone, Copy)]
struct OpTally {
    mm: u64,
    act: u64,
    vec: u64,
}

#[derive(Debug, Clone)]
struct MatF64 {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl MatF64 {
    fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    fn from_tensor(t: &Tensor2D) -> Self {
        Self {
            rows: t.rows(),
            cols: t.cols(),
            data: t.data().iter().map(|&v| v as f64).collect(),
        }
    }

    fn to_tensor(&self) -> Tensor2D {
        Tensor2D::from_vec(
            self.rows,
            self.cols,
            self.data.iter().map(|&v| v as f32).collect(),
        )
        .expect("internal matrices stay finite")
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }
}

struct ForwardTrace {
    /// Pre-activations per weight layer.
    pre: Vec<MatF64>,
    /// Activations per layer, input first (length = pre.len() + 1).
    act: Vec<MatF64>,
}

fn activation_eval(act: &Activation, z: f64, tally: &mut OpTally) -> f64 {
    match act {
        Activation::Linear => z,
        _ => {
            tally.act += 1;
            act.apply_f64(z)
        }
    }
}

/// Derivative of the activation at pre-activation `z` whose output was `a`.
fn activation_derivative(act: &Activation, z: f64, a: f64, tally: &mut OpTally) -> f64 {
    match act {
        Activation::Linear => 1.0,
        Activation::ExactSigmoid => {
            tally.vec += 2;
            a * (1.0 - a)
        }
        Activation::PwlSigmoid(t) => {
            tally.vec += 1;
            pwl_slope(t, z)
        }
    }
}

fn forward_f64(
    activation: &Activation,
    weights: &[Tensor2D],
    input: &MatF64,
    tally: &mut OpTally,
) -> ForwardTrace {
    let mut trace = ForwardTrace {
        pre: Vec::with_capacity(weights.len()),
        act: Vec::with_capacity(weights.len() + 1),
    };
    trace.act.push(input.clone());
    for w in weights {
        let prev = trace.act.last().expect("input activation present");
        let mut z = MatF64::zeros(prev.rows, w.cols());
        let mut a = MatF64::zeros(prev.rows, w.cols());
        for n in 0..prev.rows {
            for j in 0..w.cols() {
                let mut acc = 0.0_f64;
                for i in 0..w.rows() {
                    acc += w.at(i, j) as f64 * prev.at(n, i);
                    tally.mm += 1;
                }
                z.set(n, j, acc);
                a.set(n, j, activation_eval(activation, acc, tally));
            }
        }
        trace.pre.push(z);
        trace.act.push(a);
    }
    trace
}

/// Analytic gradient of the mean-squared-error loss
/// `L = 1/(2*batch) * sum_{n,j} (out[n][j] - target[n][j])^2`
/// through the network, in f64. Returns dL/dW per layer.
fn backprop_f64(
    activation: &Activation,
    weights: &[Tensor2D],
    input: &MatF64,
    target: &MatF64,
    tally: &mut OpTally,
) -> Vec<MatF64> {
    let trace = forward_f64(activation, weights, input, tally);
    let batch = input.rows;
    let inv_batch = 1.0 / batch as f64;
    let layers = weights.len();

    // Output delta: (a - t) * f'(z) / batch.
    let out = &trace.act[layers];
    let mut delta = MatF64::zeros(batch, out.cols);
    for n in 0..batch {
        for j in 0..out.cols {
            let diff = out.at(n, j) - target.at(n, j);
            tally.vec += 1;
            let d = activation_derivative(
                activation,
                trace.pre[layers - 1].at(n, j),
                out.at(n, j),
                tally,
            );
            delta.set(n, j, diff * d * inv_batch);
            tally.vec += 2;
        }
    }

    let mut grads = vec![MatF64::zeros(0, 0); layers];
    for l in (0..layers).rev() {
        // dW[l] = act[l]^T * delta  (a matrix product over the batch).
        let prev = &trace.act[l];
        let mut dw = MatF64::zeros(weights[l].rows(), weights[l].cols());
        for i in 0..dw.rows {
            for j in 0..dw.cols {
                let mut acc = 0.0_f64;
                for n in 0..batch {
                    acc += prev.at(n, i) * delta.at(n, j);
                    tally.mm += 1;
                }
                dw.set(i, j, acc);
            }
        }
        grads[l] = dw;

        if l > 0 {
            // delta_prev = (delta * W[l]^T) .* f'(z[l-1]).
            let w = &weights[l];
            let mut prev_delta = MatF64::zeros(batch, w.rows());
            for n in 0..batch {
                for i in 0..w.rows() {
                    let mut acc = 0.0_f64;
                    for j in 0..w.cols() {
                        acc += delta.at(n, j) * w.at(i, j) as f64;
                        tally.mm += 1;
                    }
                    let a = trace.act[l].at(n, i);
                    let d = activation_derivative(activation, trace.pre[l - 1].at(n, i), a, tally);
                    prev_delta.set(n, i, acc * d);
                    tally.vec += 1;
                }
            }
            delta = prev_delta;
        }
    }
    grads
}

/// Gradient of the mean-squared-error loss, one tensor per weight layer.
///
/// Deterministic; internal arithmetic is f64 so the result agrees with a
/// central finite-difference oracle to the method's truncation error.
pub fn backprop_ref(
    spec: &NetworkSpec,
    weights: &[Tensor2D],
    input: &Tensor2D,
    target: &Tensor2D,
) -> Result<Vec<Tensor2D>> {
    check_weight_chain(spec, weights, input)?;
    let last = *spec.layer_sizes().last().expect("validated");
    if target.rows() != input.rows() || target.cols() != last {
        return Err(Error::DimensionMismatch(format!(
            "target is {}x{}, expected {}x{}",
            target.rows(),
            target.cols(),
            input.rows(),
            last
        )));
    }
    let mut tally = OpTally::default();
    let grads = backprop_f64(
        spec.activation(),
        weights,
        &MatF64::from_tensor(input),
        &MatF64::from_tensor(target),
        &mut tally,
    );
    Ok(grads.iter().map(MatF64::to_tensor).collect())
}

/// Gradients produced by one step of contrastive divergence.
#[derive(Debug, Clone)]
pub struct RbmGradients {
    pub d_weights: Tensor2D,
    pub d_visible_bias: Vec<f32>,
    pub d_hidden_bias: Vec<f32>,
}

fn rbm_cd1_f64(
    w: &Tensor2D,
    vbias: &[f32],
    hbias: &[f32],
    v0: &MatF64,
    rng: &mut SplitMix64,
    tally: &mut OpTally,
) -> (MatF64, Vec<f64>, Vec<f64>) {
    let (nv, nh) = (w.rows(), w.cols());
    let batch = v0.rows;

    // Positive phase: h0 = sigmoid(v0 W + hbias).
    let mut h0p = MatF64::zeros(batch, nh);
    for n in 0..batch {
        for (j, &hb) in hbias.iter().enumerate() {
            let mut acc = 0.0_f64;
            for i in 0..nv {
                acc += v0.at(n, i) * w.at(i, j) as f64;
                tally.mm += 1;
            }
            acc += hb as f64;
            tally.vec += 1;
            tally.act += 1;
            h0p.set(n, j, sigmoid_exact(acc));
        }
    }

    // Bernoulli samples, drawn row-major so the stream is unambiguous.
    let mut h0s = MatF64::zeros(batch, nh);
    for n in 0..batch {
        for j in 0..nh {
            let u = rng.next_f64_unit();
            tally.vec += 1;
            h0s.set(n, j, if u < h0p.at(n, j) { 1.0 } else { 0.0 });
        }
    }

    // Reconstruction: v1 = sigmoid(h0s W^T + vbias), probabilities (no sample).
    let mut v1 = MatF64::zeros(batch, nv);
    for n in 0..batch {
        for (i, &vb) in vbias.iter().enumerate() {
            let mut acc = 0.0_f64;
            for j in 0..nh {
                acc += h0s.at(n, j) * w.at(i, j) as f64;
                tally.mm += 1;
            }
            acc += vb as f64;
            tally.vec += 1;
            tally.act += 1;
            v1.set(n, i, sigmoid_exact(acc));
        }
    }

    // Negative phase: h1 = sigmoid(v1 W + hbias).
    let mut h1 = MatF64::zeros(batch, nh);
    for n in 0..batch {
        for (j, &hb) in hbias.iter().enumerate() {
            let mut acc = 0.0_f64;
            for i in 0..nv {
                acc += v1.at(n, i) * w.at(i, j) as f64;
                tally.mm += 1;
            }
            acc += hb as f64;
            tally.vec += 1;
            tally.act += 1;
            h1.set(n, j, sigmoid_exact(acc));
        }
    }

    // dW = (v0^T h0p - v1^T h1) / batch: two outer products over the batch.
    let inv_batch = 1.0 / batch as f64;
    let mut dw = MatF64::zeros(nv, nh);
    for i in 0..nv {
        for j in 0..nh {
            let mut pos = 0.0_f64;
            let mut neg = 0.0_f64;
            for n in 0..batch {
                pos += v0.at(n, i) * h0p.at(n, j);
                tally.mm += 1;
                neg += v1.at(n, i) * h1.at(n, j);
                tally.mm += 1;
            }
            dw.set(i, j, (pos - neg) * inv_batch);
            tally.vec += 2;
        }
    }

    let mut dvbias = vec![0.0_f64; nv];
    for n in 0..batch {
        for (i, dv) in dvbias.iter_mut().enumerate() {
            *dv += v0.at(n, i) - v1.at(n, i);
            tally.vec += 2;
        }
    }
    for dv in &mut dvbias {
        *dv *= inv_batch;
        tally.vec += 1;
    }

    let mut dhbias = vec![0.0_f64; nh];
    for n in 0..batch {
        for (j, dh) in dhbias.iter_mut().enumerate() {
            *dh += h0p.at(n, j) - h1.at(n, j);
            tally.vec += 2;
        }
    }
    for dh in &mut dhbias {
        *dh *= inv_batch;
        tally.vec += 1;
    }

    (dw, dvbias, dhbias)
}

/// One step of contrastive divergence (single Gibbs step) on a
/// visible/hidden layer pair.
///
/// The positive phase uses hidden probabilities; only the propagation to the
/// reconstruction uses the Bernoulli sample. All sampling comes from the
/// caller's generator, so identical seeds give bit-identical gradients.
pub fn rbm_cd1_ref(
    w: &Tensor2D,
    vbias: &[f32],
    hbias: &[f32],
    v0: &Tensor2D,
    rng: &mut SplitMix64,
) -> Result<RbmGradients> {
    if vbias.len() != w.rows() || hbias.len() != w.cols() {
        return Err(Error::DimensionMismatch(format!(
            "biases ({}, {}) do not match a {}x{} weight matrix",
            vbias.len(),
            hbias.len(),
            w.rows(),
            w.cols()
        )));
    }
    if v0.cols() != w.rows() {
        return Err(Error::DimensionMismatch(format!(
            "visible batch has {} columns, weight matrix has {} rows",
            v0.cols(),
            w.rows()
        )));
    }
    let mut tally = OpTally::default();
    let (dw, dv, dh) = rbm_cd1_f64(w, vbias, hbias, &MatF64::from_tensor(v0), rng, &mut tally);
    Ok(RbmGradients {
        d_weights: dw.to_tensor(),
        d_visible_bias: dv.iter().map(|&v| v as f32).collect(),
        d_hidden_bias: dh.iter().map(|&v| v as f32).collect(),
    })
}

// ---------------------------------------------------------------------------
// Hot-spot profiling
// ---------------------------------------------------------------------------

/// Which reference computation to instrument.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Workload {
    Feedforward,
    Rbm,
    Backprop,
}

impl std::str::FromStr for Workload {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "feedforward" => Ok(Workload::Feedforward),
            "rbm" => Ok(Workload::Rbm),
            "bp" => Ok(Workload::Backprop),
            other => Err(format!(
                "unknown workload \"{other}\" (expected feedforward, rbm, or bp)"
            )),
        }
    }
}

/// Exact operation counts per category plus their shares of the total.
///
/// MM counts multiply-accumulates inside matrix products, Activation counts
/// activation-function evaluations, Vector counts the remaining elementwise
/// operations (bias adds, sampling compares, gradient post-processing).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpCountReport {
    pub mm_ops: u64,
    pub activation_ops: u64,
    pub vector_ops: u64,
    pub mm_share: f64,
    pub activation_share: f64,
    pub vector_share: f64,
}

impl OpCountReport {
    fn from_tally(t: OpTally) -> Self {
        let total = (t.mm + t.act + t.vec) as f64;
        Self {
            mm_ops: t.mm,
            activation_ops: t.act,
            vector_ops: t.vec,
            mm_share: t.mm as f64 / total,
            activation_share: t.act as f64 / total,
            vector_share: t.vec as f64 / total,
        }
    }

    pub fn total_ops(&self) -> u64 {
        self.mm_ops + self.activation_ops + self.vector_ops
    }
}

fn synth_mat(rows: usize, cols: usize, rng: &mut SplitMix64) -> Tensor2D {
    let data = (0..rows * cols).map(|_| rng.next_f32_centered()).collect();
    Tensor2D::from_vec(rows, cols, data).expect("generator values are finite")
}

/// Runs the requested reference workload on seeded synthetic data and tallies
/// every operation it performs. Counts are data-independent, so the internal
/// seed is fixed.
///
/// The RBM workload runs one contrastive-divergence step per adjacent layer
/// pair; backprop runs a full forward and backward pass.
pub fn profile_ops(workload: Workload, spec: &NetworkSpec, batch: usize) -> OpCountReport {
    assert!(batch >= 1, "batch must be >= 1");
    let sizes = spec.layer_sizes();
    let mut rng = SplitMix64::new(0xC0DE);
    let mut tally = OpTally::default();
    match workload {
        Workload::Feedforward => {
            let weights: Vec<_> = (0..sizes.len() - 1)
                .map(|l| synth_mat(sizes[l], sizes[l + 1], &mut rng))
                .collect();
            let input = MatF64::from_tensor(&synth_mat(batch, sizes[0], &mut rng));
            forward_f64(spec.activation(), &weights, &input, &mut tally);
        }
        Workload::Backprop => {
            let weights: Vec<_> = (0..sizes.len() - 1)
                .map(|l| synth_mat(sizes[l], sizes[l + 1], &mut rng))
                .collect();
            let input = MatF64::from_tensor(&synth_mat(batch, sizes[0], &mut rng));
            let target = MatF64::from_tensor(&synth_mat(
                batch,
                *sizes.last().expect("validated"),
                &mut rng,
            ));
            backprop_f64(spec.activation(), &weights, &input, &target, &mut tally);
        }
        Workload::Rbm => {
            for l in 0..sizes.len() - 1 {
                let w = synth_mat(sizes[l], sizes[l + 1], &mut rng);
                let vbias = vec![0.0_f32; sizes[l]];
                let hbias = vec![0.0_f32; sizes[l + 1]];
                let v0 = MatF64::from_tensor(&synth_mat(batch, sizes[l], &mut rng));
                rbm_cd1_f64(&w, &vbias, &hbias, &v0, &mut rng, &mut tally);
            }
        }
    }
    OpCountReport::from_tally(tally)
}
