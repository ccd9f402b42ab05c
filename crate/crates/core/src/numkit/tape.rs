//! Tape-based reverse-mode differentiation over [`Matrix`] values.
//!
//! Operations are recorded in evaluation order; [`Tape::backward`] walks the
//! tape once in reverse, accumulating adjoints. Shape mismatches and
//! non-finite intermediate values are recorded on the tape (first one wins)
//! instead of panicking, so a program can be written as plain straight-line
//! code and checked once at the end.

use super::matrix::{gemm_tn_acc, relu, sigmoid, tanh};
use super::{Matrix, Objective, ParamSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone, Copy)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Square(Var),
    Sum(Var),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::MatMul(..) => "matmul",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::AddRow(..) => "add_row",
            Op::Scale(..) => "scale",
            Op::Sigmoid(_) => "sigmoid",
            Op::Tanh(_) => "tanh",
            Op::Relu(_) => "relu",
            Op::Square(_) => "square",
            Op::Sum(_) => "sum",
        }
    }
}

#[derive(Debug)]
struct Node {
    op: Op,
    value: Matrix,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    failure: Option<Error>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn leaf(&mut self, value: Matrix) -> Var {
        self.push(Op::Leaf, Ok(value))
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    /// First recorded failure, if any.
    pub fn failure(&self) -> Option<&Error> {
        self.failure.as_ref()
    }

    fn push(&mut self, op: Op, value: Result<Matrix>) -> Var {
        let value = match value {
            Ok(m) => {
                if !m.is_finite() && self.failure.is_none() {
                    self.failure = Some(Error::numeric(op.name()));
                }
                m
            }
            Err(e) => {
                if self.failure.is_none() {
                    self.failure = Some(e);
                }
                Matrix::zeros(1, 1)
            }
        };
        self.nodes.push(Node { op, value });
        Var(self.nodes.len() - 1)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).matmul(self.value(b));
        self.push(Op::MatMul(a, b), v)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).add(self.value(b));
        self.push(Op::Add(a, b), v)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).sub(self.value(b));
        self.push(Op::Sub(a, b), v)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).hadamard(self.value(b));
        self.push(Op::Mul(a, b), v)
    }

    /// `a + 1·bias`, broadcasting a `1 x n` row over the rows of `a`.
    pub fn add_row(&mut self, a: Var, bias: Var) -> Var {
        let v = self.value(a).add_row(self.value(bias));
        self.push(Op::AddRow(a, bias), v)
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let v = Ok(self.value(a).scale(s));
        self.push(Op::Scale(a, s), v)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = Ok(sigmoid(self.value(a)));
        self.push(Op::Sigmoid(a), v)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = Ok(tanh(self.value(a)));
        self.push(Op::Tanh(a), v)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = Ok(relu(self.value(a)));
        self.push(Op::Relu(a), v)
    }

    pub fn square(&mut self, a: Var) -> Var {
        let v = Ok(self.value(a).map(|x| x * x));
        self.push(Op::Square(a), v)
    }

    /// Sum of all entries as a 1x1 value.
    pub fn sum(&mut self, a: Var) -> Var {
        let v = Ok(Matrix::scalar(self.value(a).sum()));
        self.push(Op::Sum(a), v)
    }

    /// Adjoints of `root` (which must be 1x1) with respect to every node.
    pub fn backward(&self, root: Var) -> Result<Vec<Matrix>> {
        if let Some(e) = &self.failure {
            return Err(clone_error(e));
        }
        if self.value(root).shape() != (1, 1) {
            return Err(Error::Shape("backward root must be a scalar".into()));
        }
        let mut adj: Vec<Matrix> = self
            .nodes
            .iter()
            .map(|n| Matrix::zeros(n.value.rows(), n.value.cols()))
            .collect();
        adj[root.0] = Matrix::scalar(1.0);

        for i in (0..=root.0).rev() {
            let g = std::mem::replace(&mut adj[i], Matrix::zeros(0, 0));
            if g.data().iter().all(|&v| v == 0.0) {
                adj[i] = g;
                continue;
            }
            let out = &self.nodes[i].value;
            match self.nodes[i].op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let av = self.value(a);
                    let bv = self.value(b);
                    let ga = g.matmul_t(bv)?;
                    adj[a.0].add_assign(&ga);
                    gemm_tn_acc(av, &g, &mut adj[b.0]);
                }
                Op::Add(a, b) => {
                    adj[a.0].add_assign(&g);
                    adj[b.0].add_assign(&g);
                }
                Op::Sub(a, b) => {
                    adj[a.0].add_assign(&g);
                    adj[b.0].add_assign(&g.scale(-1.0));
                }
                Op::Mul(a, b) => {
                    let ga = g.hadamard(self.value(b))?;
                    let gb = g.hadamard(self.value(a))?;
                    adj[a.0].add_assign(&ga);
                    adj[b.0].add_assign(&gb);
                }
                Op::AddRow(a, bias) => {
                    adj[a.0].add_assign(&g);
                    adj[bias.0].add_assign(&g.col_sums());
                }
                Op::Scale(a, s) => adj[a.0].add_assign(&g.scale(s)),
                Op::Sigmoid(a) => {
                    let d = out.map(|s| s * (1.0 - s)).hadamard(&g)?;
                    adj[a.0].add_assign(&d);
                }
                Op::Tanh(a) => {
                    let d = out.map(|t| 1.0 - t * t).hadamard(&g)?;
                    adj[a.0].add_assign(&d);
                }
                Op::Relu(a) => {
                    let mask = self.value(a).map(|x| if x > 0.0 { 1.0 } else { 0.0 });
                    adj[a.0].add_assign(&mask.hadamard(&g)?);
                }
                Op::Square(a) => {
                    let d = self.value(a).scale(2.0).hadamard(&g)?;
                    adj[a.0].add_assign(&d);
                }
                Op::Sum(a) => {
                    let s = g.item();
                    let (r, c) = self.value(a).shape();
                    adj[a.0].add_assign(&Matrix::filled(r, c, s));
                }
            }
            adj[i] = g;
        }
        Ok(adj)
    }
}

fn clone_error(e: &Error) -> Error {
    match e {
        Error::Shape(s) => Error::Shape(s.clone()),
        Error::Numeric { op, epoch } => Error::Numeric {
            op: op.clone(),
            epoch: *epoch,
        },
        other => Error::Data(other.to_string()),
    }
}

/// A scalar program written against a [`Tape`]. The closure receives one leaf
/// per parameter tensor, in [`ParamSet`] order, and returns the 1x1 output.
pub struct TapeProgram<F> {
    body: F,
}

impl<F> TapeProgram<F>
where
    F: Fn(&mut Tape, &[Var]) -> Var,
{
    pub fn new(body: F) -> Self {
        TapeProgram { body }
    }

    fn record(&self, params: &ParamSet) -> (Tape, Vec<Var>, Var) {
        let mut tape = Tape::new();
        let leaves: Vec<Var> = params
            .tensors()
            .iter()
            .map(|t| tape.leaf(t.clone()))
            .collect();
        let out = (self.body)(&mut tape, &leaves);
        (tape, leaves, out)
    }
}

impl<F> Objective for TapeProgram<F>
where
    F: Fn(&mut Tape, &[Var]) -> Var,
{
    fn value(&self, params: &ParamSet) -> Result<f64> {
        let (tape, _, out) = self.record(params);
        if let Some(e) = tape.failure() {
            return Err(clone_error(e));
        }
        Ok(tape.value(out).item())
    }

    fn value_and_grad(&self, params: &ParamSet) -> Result<(f64, ParamSet)> {
        let (tape, leaves, out) = self.record(params);
        let adj = tape.backward(out)?;
        let mut grads = params.zeros_like();
        for (i, leaf) in leaves.iter().enumerate() {
            *grads.get_mut(i) = adj[leaf.0].clone();
        }
        Ok((tape.value(out).item(), grads))
    }
}
