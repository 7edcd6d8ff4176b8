//! Reverse-mode automatic differentiation on small dense vectors, the
//! preference-conditioned hypernetwork built on it, and its optimizers.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A dense tensor with an optional accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    values: Vec<f64>,
    gradient: Option<Vec<f64>>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != values.len() {
            return Err(invalid(format!(
                "shape {shape:?} needs {expected} values, got {}",
                values.len()
            )));
        }
        Ok(Self {
            shape,
            values,
            gradient: None,
        })
    }

    pub fn vector(values: Vec<f64>) -> Self {
        Self {
            shape: vec![values.len()],
            values,
            gradient: None,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn gradient(&self) -> Option<&[f64]> {
        self.gradient.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug, Clone, Copy)]
enum Op {
    Leaf,
    MatVec(usize, usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Scale(usize, f64),
    Shift(usize),
    Tanh(usize),
    Sigmoid(usize),
    Exp(usize),
    Sin(usize),
    Cos(usize),
    Sqrt(usize),
    Powf(usize, f64),
    Square(usize),
    Sum(usize),
    Index(usize, usize),
    Slice(usize, usize),
}

/// Records a computation so that gradients of any node can be propagated
/// back to every node it depends on.
///
/// Binary operations broadcast a length-1 operand. Shape mismatches are
/// programming errors and panic.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    ops: Vec<Op>,
    tensors: Vec<Tensor>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    fn push(&mut self, op: Op, tensor: Tensor) -> Var {
        self.ops.push(op);
        self.tensors.push(tensor);
        Var(self.ops.len() - 1)
    }

    pub fn leaf(&mut self, tensor: Tensor) -> Var {
        self.push(Op::Leaf, tensor)
    }

    pub fn vector(&mut self, values: Vec<f64>) -> Var {
        self.leaf(Tensor::vector(values))
    }

    pub fn tensor(&self, v: Var) -> &Tensor {
        &self.tensors[v.0]
    }

    pub fn values(&self, v: Var) -> &[f64] {
        &self.tensors[v.0].values
    }

    /// Scalar value of a length-1 node.
    pub fn scalar(&self, v: Var) -> f64 {
        let t = &self.tensors[v.0];
        assert_eq!(t.len(), 1, "node {} is not a scalar", v.0);
        t.values[0]
    }

    /// Gradient left on `v` by the latest [`Tape::backward`] call.
    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.tensors[v.0].gradient()
    }

    /// `w x` for a matrix `w` of shape `[rows, cols]` and a vector `x`.
    pub fn matvec(&mut self, w: Var, x: Var) -> Var {
        let (wt, xt) = (&self.tensors[w.0], &self.tensors[x.0]);
        assert_eq!(wt.shape.len(), 2, "matvec needs a matrix");
        let (rows, cols) = (wt.shape[0], wt.shape[1]);
        assert_eq!(cols, xt.len(), "matvec column mismatch");
        let out = (0..rows)
            .map(|r| {
                wt.values[r * cols..(r + 1) * cols]
                    .iter()
                    .zip(&xt.values)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        self.push(Op::MatVec(w.0, x.0), Tensor::vector(out))
    }

    fn binary(&mut self, a: Var, b: Var, op: Op, f: impl Fn(f64, f64) -> f64) -> Var {
        let (x, y) = (&self.tensors[a.0].values, &self.tensors[b.0].values);
        let n = broadcast_len(x.len(), y.len());
        let out = (0..n).map(|k| f(at(x, k), at(y, k))).collect();
        self.push(op, Tensor::vector(out))
    }

    fn unary(&mut self, a: Var, op: Op, f: impl Fn(f64) -> f64) -> Var {
        let out = self.tensors[a.0].values.iter().map(|&x| f(x)).collect();
        self.push(op, Tensor::vector(out))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, Op::Add(a.0, b.0), |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, Op::Sub(a.0, b.0), |x, y| x - y)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, Op::Mul(a.0, b.0), |x, y| x * y)
    }

    pub fn div(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, Op::Div(a.0, b.0), |x, y| x / y)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        self.unary(a, Op::Scale(a.0, c), |x| x * c)
    }

    pub fn shift(&mut self, a: Var, c: f64) -> Var {
        self.unary(a, Op::Shift(a.0), |x| x + c)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, Op::Tanh(a.0), f64::tanh)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, Op::Sigmoid(a.0), sigmoid)
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.unary(a, Op::Exp(a.0), f64::exp)
    }

    pub fn sin(&mut self, a: Var) -> Var {
        self.unary(a, Op::Sin(a.0), f64::sin)
    }

    pub fn cos(&mut self, a: Var) -> Var {
        self.unary(a, Op::Cos(a.0), f64::cos)
    }

    pub fn sqrt(&mut self, a: Var) -> Var {
        self.unary(a, Op::Sqrt(a.0), f64::sqrt)
    }

    pub fn powf(&mut self, a: Var, p: f64) -> Var {
        self.unary(a, Op::Powf(a.0, p), |x| x.powf(p))
    }

    pub fn square(&mut self, a: Var) -> Var {
        self.unary(a, Op::Square(a.0), |x| x * x)
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.tensors[a.0].values.iter().sum();
        self.push(Op::Sum(a.0), Tensor::vector(vec![s]))
    }

    pub fn index(&mut self, a: Var, k: usize) -> Var {
        let v = self.tensors[a.0].values[k];
        self.push(Op::Index(a.0, k), Tensor::vector(vec![v]))
    }

    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Var {
        let v = self.tensors[a.0].values[start..start + len].to_vec();
        self.push(Op::Slice(a.0, start), Tensor::vector(v))
    }

    /// Propagates `upstream` (one entry per value of `out`) back through the
    /// tape. Gradients from any earlier call are discarded first; afterwards
    /// every node that `out` depends on carries `d<upstream, out>/d node`.
    pub fn backward(&mut self, out: Var, upstream: &[f64]) -> Result<()> {
        if upstream.len() != self.tensors[out.0].len() {
            return Err(invalid(format!(
                "upstream has {} entries, node has {}",
                upstream.len(),
                self.tensors[out.0].len()
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; out.0 + 1];
        grads[out.0] = Some(upstream.to_vec());
        for i in (0..=out.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            self.propagate(i, &g, &mut grads);
            grads[i] = Some(g);
        }
        for (t, g) in self.tensors.iter_mut().zip(grads.into_iter().chain(std::iter::repeat(None))) {
            t.gradient = g;
        }
        Ok(())
    }

    fn propagate(&self, node: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let t = &self.tensors;
        let y = &t[node].values;
        let mut acc = |child: usize, k: usize, v: f64| {
            let slot = grads[child].get_or_insert_with(|| vec![0.0; t[child].len()]);
            let len = slot.len();
            slot[if len == 1 { 0 } else { k }] += v;
        };
        match self.ops[node] {
            Op::Leaf => {}
            Op::MatVec(w, x) => {
                let cols = t[w].shape[1];
                let (wv, xv) = (&t[w].values, &t[x].values);
                for (r, &gr) in g.iter().enumerate() {
                    for c in 0..cols {
                        acc(w, r * cols + c, gr * xv[c]);
                        acc(x, c, gr * wv[r * cols + c]);
                    }
                }
            }
            Op::Add(a, b) => {
                for (k, &gk) in g.iter().enumerate() {
                    acc(a, k, gk);
                    acc(b, k, gk);
                }
            }
            Op::Sub(a, b) => {
                for (k, &gk) in g.iter().enumerate() {
                    acc(a, k, gk);
                    acc(b, k, -gk);
                }
            }
            Op::Mul(a, b) => {
                let (av, bv) = (&t[a].values, &t[b].values);
                for (k, &gk) in g.iter().enumerate() {
                    acc(a, k, gk * at(bv, k));
                    acc(b, k, gk * at(av, k));
                }
            }
            Op::Div(a, b) => {
                let (av, bv) = (&t[a].values, &t[b].values);
                for (k, &gk) in g.iter().enumerate() {
                    let d = at(bv, k);
                    acc(a, k, gk / d);
                    acc(b, k, -gk * at(av, k) / (d * d));
                }
            }
            Op::Scale(a, c) => g.iter().enumerate().for_each(|(k, &gk)| acc(a, k, gk * c)),
            Op::Shift(a) => g.iter().enumerate().for_each(|(k, &gk)| acc(a, k, gk)),
            Op::Tanh(a) => g
                .iter()
                .enumerate()
                .for_each(|(k, &gk)| acc(a, k, gk * (1.0 - y[k] * y[k]))),
            Op::Sigmoid(a) => g
                .iter()
                .enumerate()
                .for_each(|(k, &gk)| acc(a, k, gk * y[k] * (1.0 - y[k]))),
            Op::Exp(a) => g.iter().enumerate().for_each(|(k, &gk)| acc(a, k, gk * y[k])),
            Op::Sin(a) => {
                let x = &t[a].values;
                g.iter().enumerate().for_each(|(k, &gk)| acc(a, k, gk * x[k].cos()))
            }
            Op::Cos(a) => {
                let x = &t[a].values;
                g.iter().enumerate().for_each(|(k, &gk)| acc(a, k, -gk * x[k].sin()))
            }
            Op::Sqrt(a) => g
                .iter()
                .enumerate()
                .for_each(|(k, &gk)| acc(a, k, gk * 0.5 / y[k])),
            Op::Powf(a, p) => {
                let x = &t[a].values;
                g.iter()
                    .enumerate()
                    .for_each(|(k, &gk)| acc(a, k, gk * p * x[k].powf(p - 1.0)))
            }
            Op::Square(a) => {
                let x = &t[a].values;
                g.iter().enumerate().for_each(|(k, &gk)| acc(a, k, gk * 2.0 * x[k]))
            }
            Op::Sum(a) => (0..t[a].len()).for_each(|k| acc(a, k, g[0])),
            Op::Index(a, i) => acc(a, i, g[0]),
            Op::Slice(a, start) => g.iter().enumerate().for_each(|(k, &gk)| acc(a, start + k, gk)),
        }
    }
}

fn broadcast_len(a: usize, b: usize) -> usize {
    match (a, b) {
        _ if a == b => a,
        (1, n) | (n, 1) => n,
        _ => panic!("cannot broadcast lengths {a} and {b}"),
    }
}

#[inline]
fn at(v: &[f64], k: usize) -> f64 {
    if v.len() == 1 {
        v[0]
    } else {
        v[k]
    }
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Hidden-layer nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Tanh,
    Identity,
}

/// Map from the last affine layer to the decision vector.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutputHead {
    #[default]
    Identity,
    /// `lower + (upper - lower) * sigmoid(raw)`, per coordinate.
    Logistic { lower: f64, upper: f64 },
}

impl OutputHead {
    pub fn apply(&self, raw: f64) -> f64 {
        match *self {
            OutputHead::Identity => raw,
            OutputHead::Logistic { lower, upper } => lower + (upper - lower) * sigmoid(raw),
        }
    }

    /// Raw output mapping to `value`; `None` outside the open interval.
    pub fn invert(&self, value: f64) -> Option<f64> {
        match *self {
            OutputHead::Identity => Some(value),
            OutputHead::Logistic { lower, upper } => {
                let s = (value - lower) / (upper - lower);
                (s > 0.0 && s < 1.0).then(|| (s / (1.0 - s)).ln())
            }
        }
    }
}

/// Layer sizes and nonlinearities of a [`HyperNet`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetShape {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default)]
    pub head: OutputHead,
}

impl NetShape {
    pub fn new(input: usize, hidden: usize, output: usize) -> Self {
        Self {
            input,
            hidden,
            output,
            activation: Activation::Tanh,
            head: OutputHead::Identity,
        }
    }

    /// `(fan_in, fan_out)` of the three affine layers.
    pub fn layers(&self) -> [(usize, usize); 3] {
        [
            (self.input, self.hidden),
            (self.hidden, self.hidden),
            (self.hidden, self.output),
        ]
    }

    /// `(J+1)H + (H+1)H + (H+1)d`.
    pub fn param_count(&self) -> usize {
        self.layers().iter().map(|(i, o)| (i + 1) * o).sum()
    }

    fn validate(&self) -> Result<()> {
        if self.input == 0 || self.hidden == 0 || self.output == 0 {
            return Err(invalid(format!("network sizes must be positive: {self:?}")));
        }
        if let OutputHead::Logistic { lower, upper } = self.head {
            if !(lower.is_finite() && upper.is_finite() && lower < upper) {
                return Err(invalid(format!("bad output interval [{lower}, {upper}]")));
            }
        }
        Ok(())
    }
}

struct Recording {
    tape: Tape,
    params: [Var; 6],
    output: Var,
}

/// Two-hidden-layer perceptron from a preference ray to a decision vector.
///
/// Parameters are stored flat as `W1, b1, W2, b2, W3, b3` with row-major
/// `[fan_out, fan_in]` weight matrices. Each [`HyperNet::forward`] queues its
/// recorded graph; [`HyperNet::backward`] consumes the oldest one and adds
/// into the gradient buffer.
pub struct HyperNet {
    shape: NetShape,
    params: Vec<f64>,
    grad: Vec<f64>,
    pending: VecDeque<Recording>,
}

impl std::fmt::Debug for HyperNet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HyperNet")
            .field("shape", &self.shape)
            .field("params", &self.params.len())
            .field("pending", &self.pending.len())
            .finish()
    }
}

impl Clone for HyperNet {
    /// Clones parameters and gradient; pending recordings are not copied.
    fn clone(&self) -> Self {
        Self {
            shape: self.shape,
            params: self.params.clone(),
            grad: self.grad.clone(),
            pending: VecDeque::new(),
        }
    }
}

impl HyperNet {
    /// Uniform `±1/sqrt(fan_in)` initialization for weights and biases.
    pub fn new(shape: NetShape, seed: u64) -> Result<Self> {
        shape.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(shape.param_count());
        for (fan_in, fan_out) in shape.layers() {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for _ in 0..(fan_in + 1) * fan_out {
                params.push(rng.random_range(-bound..bound));
            }
        }
        Self::from_params(shape, params)
    }

    pub fn from_params(shape: NetShape, params: Vec<f64>) -> Result<Self> {
        shape.validate()?;
        if params.len() != shape.param_count() {
            return Err(invalid(format!(
                "expected {} parameters, got {}",
                shape.param_count(),
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(invalid("parameters must be finite"));
        }
        Ok(Self {
            grad: vec![0.0; params.len()],
            shape,
            params,
            pending: VecDeque::new(),
        })
    }

    pub fn shape(&self) -> &NetShape {
        &self.shape
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Overwrites the output-layer bias `b3`.
    pub fn set_output_bias(&mut self, bias: &[f64]) -> Result<()> {
        if bias.len() != self.shape.output {
            return Err(invalid(format!(
                "output bias needs {} values, got {}",
                self.shape.output,
                bias.len()
            )));
        }
        let start = self.params.len() - self.shape.output;
        self.params[start..].copy_from_slice(bias);
        Ok(())
    }

    /// Accumulated parameter gradient.
    pub fn gradient(&self) -> &[f64] {
        &self.grad
    }

    /// Returns the accumulated gradient and resets the buffer to zero.
    pub fn take_gradient(&mut self) -> Vec<f64> {
        std::mem::replace(&mut self.grad, vec![0.0; self.params.len()])
    }

    pub fn zero_grad(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = 0.0);
    }

    /// Number of recorded forward passes awaiting a backward call.
    pub fn pending(&self) -> usize {
        self.pending.len()
    }

    pub fn clear_pending(&mut self) {
        self.pending.clear();
    }

    fn record(&self, ray: &[f64]) -> Result<Recording> {
        if ray.len() != self.shape.input {
            return Err(invalid(format!(
                "ray has {} coordinates, network expects {}",
                ray.len(),
                self.shape.input
            )));
        }
        if ray.iter().any(|v| !v.is_finite()) {
            return Err(invalid("ray must be finite"));
        }
        let mut tape = Tape::new();
        let mut slots = [Var(0); 6];
        let mut offset = 0;
        for (l, (fan_in, fan_out)) in self.shape.layers().into_iter().enumerate() {
            let w = &self.params[offset..offset + fan_in * fan_out];
            slots[2 * l] = tape.leaf(Tensor {
                shape: vec![fan_out, fan_in],
                values: w.to_vec(),
                gradient: None,
            });
            offset += fan_in * fan_out;
            slots[2 * l + 1] = tape.vector(self.params[offset..offset + fan_out].to_vec());
            offset += fan_out;
        }
        let mut h = tape.vector(ray.to_vec());
        for l in 0..3 {
            let z = tape.matvec(slots[2 * l], h);
            h = tape.add(z, slots[2 * l + 1]);
            if l < 2 && self.shape.activation == Activation::Tanh {
                h = tape.tanh(h);
            }
        }
        let output = match self.shape.head {
            OutputHead::Identity => h,
            OutputHead::Logistic { lower, upper } => {
                let s = tape.sigmoid(h);
                let s = tape.scale(s, upper - lower);
                tape.shift(s, lower)
            }
        };
        Ok(Recording {
            tape,
            params: slots,
            output,
        })
    }

    /// Computes the decision vector for `ray` and queues the recorded graph
    /// for a later [`HyperNet::backward`].
    pub fn forward(&mut self, ray: &[f64]) -> Result<Vec<f64>> {
        let rec = self.record(ray)?;
        let out = rec.tape.values(rec.output).to_vec();
        self.pending.push_back(rec);
        Ok(out)
    }

    /// Like [`HyperNet::forward`] without recording.
    pub fn predict(&self, ray: &[f64]) -> Result<Vec<f64>> {
        let rec = self.record(ray)?;
        Ok(rec.tape.values(rec.output).to_vec())
    }

    /// Adds `d<upstream, theta>/d params` for the oldest queued forward pass
    /// into the gradient buffer.
    pub fn backward(&mut self, upstream: &[f64]) -> Result<()> {
        if upstream.len() != self.shape.output {
            return Err(invalid(format!(
                "upstream has {} entries, network outputs {}",
                upstream.len(),
                self.shape.output
            )));
        }
        let mut rec = self
            .pending
            .pop_front()
            .ok_or_else(|| Error::State("backward called without a recorded forward pass".into()))?;
        rec.tape.backward(rec.output, upstream)?;
        let mut offset = 0;
        for v in rec.params {
            let n = rec.tape.tensor(v).len();
            if let Some(g) = rec.tape.grad(v) {
                for (acc, gi) in self.grad[offset..offset + n].iter_mut().zip(g) {
                    *acc += gi;
                }
            }
            offset += n;
        }
        Ok(())
    }

    /// Applies one optimizer update from the accumulated gradient, then
    /// clears it.
    pub fn step(&mut self, optimizer: &mut Optimizer) -> Result<()> {
        let grad = self.take_gradient();
        optimizer.step(&mut self.params, &grad)
    }
}

/// Update rule used by [`Optimizer`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    #[default]
    Adam,
    /// Plain gradient descent: `phi -= lr * g`.
    Sgd,
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// First-order optimizer state.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    steps: usize,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64) -> Result<Self> {
        if !(lr.is_finite() && lr > 0.0) {
            return Err(invalid(format!("learning rate must be positive, got {lr}")));
        }
        Ok(Self {
            kind,
            lr,
            m: Vec::new(),
            v: Vec::new(),
            steps: 0,
        })
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        if params.len() != grad.len() {
            return Err(invalid(format!(
                "gradient has {} entries, expected {}",
                grad.len(),
                params.len()
            )));
        }
        if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::Diverged {
                iteration: self.steps,
                reason: format!("non-finite gradient entry {i}"),
            });
        }
        self.steps += 1;
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= self.lr * g;
                }
            }
            OptimizerKind::Adam => {
                if self.m.len() != params.len() {
                    self.m = vec![0.0; params.len()];
                    self.v = vec![0.0; params.len()];
                }
                let t = self.steps as i32;
                let c1 = 1.0 - ADAM_BETA1.powi(t);
                let c2 = 1.0 - ADAM_BETA2.powi(t);
                for ((p, g), (m, v)) in params
                    .iter_mut()
                    .zip(grad)
                    .zip(self.m.iter_mut().zip(self.v.iter_mut()))
                {
                    *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                    *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                    *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
                }
            }
        }
        Ok(())
    }
}
