//! Minimal reverse-mode automatic differentiation over dense matrices.
//!
//! A [`Tape`] records every operation as it is evaluated. Calling
//! [`Tape::backward`] on a scalar node walks the record in reverse and
//! returns gradients for every leaf created with `requires_grad`. Nodes
//! that depend only on constants are never differentiated, so frozen
//! networks cost one transposed product per layer and no weight gradients.
//!
//! The operation set is closed: anything the tape can build, it can
//! differentiate. Shape mismatches are programming errors and panic.

use ndarray::{s, Array2, Axis, Zip};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone, Copy)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    /// `[n, m] + [1, m]` broadcast over rows.
    AddBias(Var, Var),
    /// `x·w + b`, optionally followed by ReLU, stored as one node.
    Dense { x: Var, w: Var, b: Var, relu: bool },
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Offset(Var),
    Relu(Var),
    Tanh(Var),
    Exp(Var),
    Log(Var),
    Square(Var),
    Clamp(Var, f64, f64),
    Min(Var, Var),
    /// Row sums, `[n, m] -> [n, 1]`.
    SumCols(Var),
    Sum(Var),
    Mean(Var),
    Columns(Var, usize, usize),
    Concat(Var, Var),
    GaussianLogDensity { x: Var, mean: Var, log_std: Var },
}

struct Node {
    value: Array2<f64>,
    op: Op,
    needs_grad: bool,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of one backward pass, indexed by leaf.
pub struct Gradients {
    grads: Vec<Option<Array2<f64>>>,
}

impl Gradients {
    pub fn get(&self, var: Var) -> Option<&Array2<f64>> {
        self.grads[var.0].as_ref()
    }

    /// Gradient of `var`, or zeros of `shape` when the loss does not depend on it.
    pub fn take_or_zeros(&mut self, var: Var, shape: (usize, usize)) -> Array2<f64> {
        self.grads[var.0].take().unwrap_or_else(|| Array2::zeros(shape))
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Array2<f64> {
        &self.nodes[v.0].value
    }

    /// Scalar value of a `[1, 1]` node.
    pub fn scalar(&self, v: Var) -> f64 {
        let x = self.value(v);
        assert_eq!(x.dim(), (1, 1), "scalar() on a non-scalar node");
        x[[0, 0]]
    }

    fn push(&mut self, value: Array2<f64>, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    /// A differentiable input.
    pub fn param(&mut self, value: Array2<f64>) -> Var {
        self.push(value, Op::Leaf, true)
    }

    pub fn constant(&mut self, value: Array2<f64>) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn leaf(&mut self, value: Array2<f64>, requires_grad: bool) -> Var {
        self.push(value, Op::Leaf, requires_grad)
    }

    fn unary(&mut self, a: Var, op: Op, f: impl Fn(f64) -> f64) -> Var {
        let value = self.value(a).mapv(f);
        let needs = self.needs(a);
        self.push(value, op, needs)
    }

    fn binary(&mut self, a: Var, b: Var, op: Op, f: impl Fn(f64, f64) -> f64) -> Var {
        let (x, y) = (self.value(a), self.value(b));
        assert_eq!(x.dim(), y.dim(), "shape mismatch in elementwise op {op:?}");
        let value = Zip::from(x).and(y).map_collect(|&p, &q| f(p, q));
        let needs = self.needs(a) || self.needs(b);
        self.push(value, op, needs)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).dot(self.value(b));
        let needs = self.needs(a) || self.needs(b);
        self.push(value, Op::MatMul(a, b), needs)
    }

    pub fn add_bias(&mut self, a: Var, bias: Var) -> Var {
        let (x, b) = (self.value(a), self.value(bias));
        assert_eq!(b.nrows(), 1, "bias must be a row vector");
        assert_eq!(x.ncols(), b.ncols(), "bias width mismatch");
        let value = x + b;
        let needs = self.needs(a) || self.needs(bias);
        self.push(value, Op::AddBias(a, bias), needs)
    }

    /// Fused dense layer `relu?(x·w + b)`; equivalent to `matmul`,
    /// `add_bias` and `relu` but keeps a single intermediate.
    pub fn dense(&mut self, x: Var, w: Var, b: Var, relu: bool) -> Var {
        let mut value = self.value(x).dot(self.value(w));
        let bias = self.value(b);
        assert_eq!(bias.nrows(), 1, "bias must be a row vector");
        assert_eq!(value.ncols(), bias.ncols(), "bias width mismatch");
        if relu {
            value.zip_mut_with(&bias.broadcast(value.dim()).expect("row broadcast"), |v, &c| {
                *v = (*v + c).max(0.0)
            });
        } else {
            value += bias;
        }
        let needs = self.needs(x) || self.needs(w) || self.needs(b);
        self.push(value, Op::Dense { x, w, b, relu }, needs)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, Op::Add(a, b), |p, q| p + q)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, Op::Sub(a, b), |p, q| p - q)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, Op::Mul(a, b), |p, q| p * q)
    }

    pub fn min(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, Op::Min(a, b), f64::min)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        self.unary(a, Op::Scale(a, c), |x| x * c)
    }

    pub fn offset(&mut self, a: Var, c: f64) -> Var {
        self.unary(a, Op::Offset(a), |x| x + c)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(a, Op::Relu(a), |x| x.max(0.0))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, Op::Tanh(a), f64::tanh)
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.unary(a, Op::Exp(a), f64::exp)
    }

    pub fn ln(&mut self, a: Var) -> Var {
        self.unary(a, Op::Log(a), f64::ln)
    }

    pub fn square(&mut self, a: Var) -> Var {
        self.unary(a, Op::Square(a), |x| x * x)
    }

    pub fn clamp(&mut self, a: Var, lo: f64, hi: f64) -> Var {
        self.unary(a, Op::Clamp(a, lo, hi), |x| x.clamp(lo, hi))
    }

    pub fn sum_cols(&mut self, a: Var) -> Var {
        let value = self.value(a).sum_axis(Axis(1)).insert_axis(Axis(1));
        let needs = self.needs(a);
        self.push(value, Op::SumCols(a), needs)
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let value = Array2::from_elem((1, 1), self.value(a).sum());
        let needs = self.needs(a);
        self.push(value, Op::Sum(a), needs)
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let value = Array2::from_elem((1, 1), x.sum() / x.len() as f64);
        let needs = self.needs(a);
        self.push(value, Op::Mean(a), needs)
    }

    /// Columns `start..end`.
    pub fn columns(&mut self, a: Var, start: usize, end: usize) -> Var {
        let value = self.value(a).slice(s![.., start..end]).to_owned();
        let needs = self.needs(a);
        self.push(value, Op::Columns(a, start, end), needs)
    }

    /// Column-wise concatenation `[a | b]`.
    pub fn concat(&mut self, a: Var, b: Var) -> Var {
        let value = ndarray::concatenate(Axis(1), &[self.value(a).view(), self.value(b).view()])
            .expect("concat requires equal row counts");
        let needs = self.needs(a) || self.needs(b);
        self.push(value, Op::Concat(a, b), needs)
    }

    /// Elementwise log-density of `x` under N(mean, exp(log_std)²).
    pub fn gaussian_log_density(&mut self, x: Var, mean: Var, log_std: Var) -> Var {
        let (xv, mv, sv) = (self.value(x), self.value(mean), self.value(log_std));
        assert!(xv.dim() == mv.dim() && xv.dim() == sv.dim(), "gaussian shape mismatch");
        let value = Zip::from(xv).and(mv).and(sv).map_collect(|&x, &m, &s| {
            let z = (x - m) * (-s).exp();
            -0.5 * z * z - s - HALF_LN_2PI
        });
        let needs = self.needs(x) || self.needs(mean) || self.needs(log_std);
        self.push(value, Op::GaussianLogDensity { x, mean, log_std }, needs)
    }

    /// Reverse pass from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Gradients {
        assert_eq!(self.value(loss).dim(), (1, 1), "backward needs a scalar loss");
        let mut grads: Vec<Option<Array2<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Array2::ones((1, 1)));

        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            if let Op::Leaf = node.op {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            let mut emit = |v: Var, delta: Array2<f64>| {
                if self.nodes[v.0].needs_grad {
                    accumulate(&mut grads[v.0], delta);
                }
            };
            match node.op {
                Op::Leaf => unreachable!(),
                Op::MatMul(a, b) => {
                    if self.needs(a) {
                        emit(a, g.dot(&self.value(b).t()));
                    }
                    if self.needs(b) {
                        emit(b, self.value(a).t().dot(&g));
                    }
                }
                Op::AddBias(a, b) => {
                    if self.needs(b) {
                        emit(b, g.sum_axis(Axis(0)).insert_axis(Axis(0)));
                    }
                    emit(a, g);
                }
                Op::Dense { x, w, b, relu } => {
                    let mut d = g;
                    if relu {
                        Zip::from(&mut d)
                            .and(&node.value)
                            .for_each(|d, &y| if y <= 0.0 { *d = 0.0 });
                    }
                    if self.needs(b) {
                        emit(b, d.sum_axis(Axis(0)).insert_axis(Axis(0)));
                    }
                    if self.needs(w) {
                        emit(w, self.value(x).t().dot(&d));
                    }
                    if self.needs(x) {
                        emit(x, d.dot(&self.value(w).t()));
                    }
                }
                Op::Add(a, b) => {
                    if self.needs(b) {
                        emit(b, g.clone());
                    }
                    emit(a, g);
                }
                Op::Sub(a, b) => {
                    if self.needs(b) {
                        emit(b, g.mapv(|x| -x));
                    }
                    emit(a, g);
                }
                Op::Mul(a, b) => {
                    if self.needs(a) {
                        emit(a, &g * self.value(b));
                    }
                    if self.needs(b) {
                        emit(b, &g * self.value(a));
                    }
                }
                Op::Scale(a, c) => emit(a, g * c),
                Op::Offset(a) => emit(a, g),
                Op::Relu(a) => {
                    let mut d = g;
                    Zip::from(&mut d)
                        .and(&node.value)
                        .for_each(|d, &y| if y <= 0.0 { *d = 0.0 });
                    emit(a, d);
                }
                Op::Tanh(a) => {
                    let mut d = g;
                    Zip::from(&mut d)
                        .and(&node.value)
                        .for_each(|d, &y| *d *= 1.0 - y * y);
                    emit(a, d);
                }
                Op::Exp(a) => emit(a, g * &node.value),
                Op::Log(a) => emit(a, g / self.value(a)),
                Op::Square(a) => {
                    let mut d = g;
                    Zip::from(&mut d)
                        .and(self.value(a))
                        .for_each(|d, &x| *d *= 2.0 * x);
                    emit(a, d);
                }
                Op::Clamp(a, lo, hi) => {
                    let mut d = g;
                    Zip::from(&mut d)
                        .and(self.value(a))
                        .for_each(|d, &x| if x < lo || x > hi { *d = 0.0 });
                    emit(a, d);
                }
                Op::Min(a, b) => {
                    let (x, y) = (self.value(a), self.value(b));
                    if self.needs(a) {
                        let d = Zip::from(&g).and(x).and(y).map_collect(|&g, &x, &y| {
                            if x <= y {
                                g
                            } else {
                                0.0
                            }
                        });
                        emit(a, d);
                    }
                    if self.needs(b) {
                        let d = Zip::from(&g).and(x).and(y).map_collect(|&g, &x, &y| {
                            if x <= y {
                                0.0
                            } else {
                                g
                            }
                        });
                        emit(b, d);
                    }
                }
                Op::SumCols(a) => {
                    let shape = self.value(a).dim();
                    emit(a, g.broadcast(shape).expect("row broadcast").to_owned());
                }
                Op::Sum(a) => {
                    let shape = self.value(a).dim();
                    emit(a, Array2::from_elem(shape, g[[0, 0]]));
                }
                Op::Mean(a) => {
                    let x = self.value(a);
                    emit(a, Array2::from_elem(x.dim(), g[[0, 0]] / x.len() as f64));
                }
                Op::Columns(a, start, end) => {
                    let mut d = Array2::zeros(self.value(a).dim());
                    d.slice_mut(s![.., start..end]).assign(&g);
                    emit(a, d);
                }
                Op::Concat(a, b) => {
                    let split = self.value(a).ncols();
                    if self.needs(b) {
                        emit(b, g.slice(s![.., split..]).to_owned());
                    }
                    if self.needs(a) {
                        emit(a, g.slice(s![.., ..split]).to_owned());
                    }
                }
                Op::GaussianLogDensity { x, mean, log_std } => {
                    let (xv, mv, sv) = (self.value(x), self.value(mean), self.value(log_std));
                    // z = (x - mean) / std; d/dx = -z/std, d/dmean = z/std, d/dlog_std = z² - 1.
                    let dz = Zip::from(&g).and(xv).and(mv).and(sv).map_collect(|&g, &x, &m, &s| {
                        let inv = (-s).exp();
                        g * (x - m) * inv * inv
                    });
                    if self.needs(log_std) {
                        let d = Zip::from(&g).and(xv).and(mv).and(sv).map_collect(|&g, &x, &m, &s| {
                            let z = (x - m) * (-s).exp();
                            g * (z * z - 1.0)
                        });
                        emit(log_std, d);
                    }
                    if self.needs(mean) {
                        emit(mean, dz.clone());
                    }
                    if self.needs(x) {
                        emit(x, -dz);
                    }
                }
            }
        }
        Gradients { grads }
    }
}

fn accumulate(slot: &mut Option<Array2<f64>>, delta: Array2<f64>) {
    match slot {
        Some(acc) => *acc += &delta,
        None => *slot = Some(delta),
    }
}
