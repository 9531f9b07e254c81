//! Append-only scalar tape with reverse-mode sweeps.
//!
//! Every arithmetic operation on a [`Var`] pushes one node holding its value
//! and the local partials with respect to its operands. Operands always refer
//! to earlier nodes, so the node order is a topological order and the reverse
//! sweep is a single backwards pass.

use std::cell::RefCell;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::network::ParameterStore;
use crate::scalar::Scalar;

pub type NodeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Constant,
    /// Trainable slot of the active parameter store.
    Parameter(usize),
    /// Free leaf whose adjoint is read back after the sweep (for example
    /// the jet coefficients of a network output).
    InputCoefficient,
    Unary,
    Binary,
}

#[derive(Clone, Copy, Debug)]
struct Node<S> {
    kind: NodeKind,
    args: [NodeId; 2],
    partials: [S; 2],
    value: S,
}

pub struct Tape<S> {
    nodes: RefCell<Vec<Node<S>>>,
    fault: RefCell<Option<String>>,
}

impl<S: Scalar> Default for Tape<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> fmt::Debug for Tape<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tape").field("len", &self.len()).finish()
    }
}

impl<S: Scalar> Tape<S> {
    pub fn new() -> Self {
        Self {
            nodes: RefCell::new(Vec::new()),
            fault: RefCell::new(None),
        }
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            nodes: RefCell::new(Vec::with_capacity(n)),
            fault: RefCell::new(None),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self, id: NodeId) -> NodeKind {
        self.nodes.borrow()[id].kind
    }

    pub fn value(&self, id: NodeId) -> S {
        self.nodes.borrow()[id].value
    }

    fn push(&self, kind: NodeKind, args: [NodeId; 2], partials: [S; 2], value: S) -> Var<'_, S> {
        let mut nodes = self.nodes.borrow_mut();
        let id = nodes.len();
        nodes.push(Node {
            kind,
            args,
            partials,
            value,
        });
        Var { tape: self, id, value }
    }

    pub fn constant(&self, value: S) -> Var<'_, S> {
        self.push(NodeKind::Constant, [0, 0], [S::zero(); 2], value)
    }

    pub fn parameter(&self, slot: usize, value: S) -> Var<'_, S> {
        self.push(NodeKind::Parameter(slot), [0, 0], [S::zero(); 2], value)
    }

    pub fn input_coefficient(&self, value: S) -> Var<'_, S> {
        self.push(NodeKind::InputCoefficient, [0, 0], [S::zero(); 2], value)
    }

    /// Puts every slot of `store` on the tape: as parameter nodes when the
    /// store is trainable, as plain constants when it is frozen.
    pub fn parameters(&self, store: &ParameterStore<S>) -> Vec<Var<'_, S>> {
        let values = store.as_slice();
        if store.is_trainable() {
            values
                .iter()
                .enumerate()
                .map(|(slot, &v)| self.parameter(slot, v))
                .collect()
        } else {
            values.iter().map(|&v| self.constant(v)).collect()
        }
    }

    pub(crate) fn unary(&self, arg: &Var<'_, S>, value: S, partial: S) -> Var<'_, S> {
        self.push(NodeKind::Unary, [arg.id, 0], [partial, S::zero()], value)
    }

    pub(crate) fn binary(&self, lhs: &Var<'_, S>, rhs: &Var<'_, S>, value: S, dlhs: S, drhs: S) -> Var<'_, S> {
        self.push(NodeKind::Binary, [lhs.id, rhs.id], [dlhs, drhs], value)
    }

    fn record_fault(&self, msg: String) {
        let mut fault = self.fault.borrow_mut();
        if fault.is_none() {
            *fault = Some(msg);
        }
    }

    /// First arithmetic fault recorded while building the tape, if any.
    pub fn fault(&self) -> Option<String> {
        self.fault.borrow().clone()
    }

    pub fn check(&self) -> Result<()> {
        match self.fault() {
            Some(msg) => Err(Error::Arithmetic(msg)),
            None => Ok(()),
        }
    }

    fn owns(&self, var: &Var<'_, S>) -> bool {
        std::ptr::eq(var.tape, self) && var.id < self.len()
    }

    /// Reverse sweep from `output`: adjoint of every node with respect to it.
    pub fn adjoints(&self, output: &Var<'_, S>) -> Result<Adjoints<S>> {
        if !self.owns(output) {
            return Err(Error::usage("output variable does not belong to this tape"));
        }
        self.check()?;
        let nodes = self.nodes.borrow();
        let mut adj = vec![S::zero(); output.id + 1];
        adj[output.id] = S::one();
        for id in (0..=output.id).rev() {
            let a = adj[id];
            if a == S::zero() {
                continue;
            }
            let node = &nodes[id];
            match node.kind {
                NodeKind::Unary => {
                    let arg = node.args[0];
                    adj[arg] = adj[arg] + a * node.partials[0];
                }
                NodeKind::Binary => {
                    let [l, r] = node.args;
                    adj[l] = adj[l] + a * node.partials[0];
                    adj[r] = adj[r] + a * node.partials[1];
                }
                _ => {}
            }
        }
        Ok(Adjoints { values: adj })
    }

    /// Gradient of `loss` with respect to the slots of `store`.
    ///
    /// A frozen store contributes no parameter nodes, so its gradient is the
    /// empty vector.
    pub fn gradient(&self, loss: &Var<'_, S>, store: &ParameterStore<S>) -> Result<Vec<S>> {
        let adj = self.adjoints(loss)?;
        if !store.is_trainable() {
            return Ok(Vec::new());
        }
        let mut grad = vec![S::zero(); store.len()];
        let nodes = self.nodes.borrow();
        for (id, node) in nodes.iter().enumerate().take(adj.values.len()) {
            if let NodeKind::Parameter(slot) = node.kind {
                if slot >= grad.len() {
                    return Err(Error::usage(format!(
                        "parameter slot {slot} outside store of length {}",
                        grad.len()
                    )));
                }
                grad[slot] = grad[slot] + adj.values[id];
            }
        }
        Ok(grad)
    }
}

/// Result of a reverse sweep.
#[derive(Clone, Debug)]
pub struct Adjoints<S> {
    values: Vec<S>,
}

impl<S: Scalar> Adjoints<S> {
    /// Adjoint of `var`; nodes pushed after the swept output have adjoint zero.
    pub fn of(&self, var: &Var<'_, S>) -> S {
        self.values.get(var.id).copied().unwrap_or_else(S::zero)
    }
}

/// Handle to a tape node. Cheap to copy; carries its forward value.
#[derive(Clone, Copy)]
pub struct Var<'t, S> {
    tape: &'t Tape<S>,
    id: NodeId,
    value: S,
}

impl<S: fmt::Debug> fmt::Debug for Var<'_, S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Var#{}({:?})", self.id, self.value)
    }
}

impl<'t, S: Scalar> Var<'t, S> {
    #[inline]
    pub fn value(&self) -> S {
        self.value
    }

    #[inline]
    pub fn id(&self) -> NodeId {
        self.id
    }

    #[inline]
    pub fn tape(&self) -> &'t Tape<S> {
        self.tape
    }

    pub fn constant(&self, value: S) -> Var<'t, S> {
        self.tape.constant(value)
    }

    #[inline]
    fn map(&self, value: S, partial: S) -> Var<'t, S> {
        self.tape.unary(self, value, partial)
    }

    pub fn exp(&self) -> Self {
        let e = self.value.exp();
        self.map(e, e)
    }

    pub fn ln(&self) -> Self {
        if self.value <= S::zero() {
            self.tape
                .record_fault(format!("ln of non-positive value {}", self.value));
        }
        self.map(self.value.ln(), self.value.recip())
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.map(s, c)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.map(c, -s)
    }

    pub fn tanh(&self) -> Self {
        let t = self.value.tanh();
        self.map(t, S::one() - t * t)
    }

    pub fn sqrt(&self) -> Self {
        let r = self.value.sqrt();
        if r == S::zero() {
            self.tape.record_fault("derivative of sqrt at 0".to_string());
        }
        self.map(r, S::lit(0.5) / r)
    }

    pub fn atan(&self) -> Self {
        let v = self.value;
        self.map(v.atan(), (S::one() + v * v).recip())
    }

    pub fn erf(&self) -> Self {
        let v = self.value;
        let slope = S::FRAC_2_SQRT_PI() * (-v * v).exp();
        self.map(v.erf(), slope)
    }

    pub fn powf(&self, p: S) -> Self {
        let v = self.value;
        self.map(v.powf(p), p * v.powf(p - S::one()))
    }

    pub fn powi(&self, n: i32) -> Self {
        let v = self.value;
        let slope = if n == 0 {
            S::zero()
        } else {
            S::lit(n as f64) * v.powi(n - 1)
        };
        self.map(v.powi(n), slope)
    }

    pub fn square(&self) -> Self {
        let v = self.value;
        self.map(v * v, v + v)
    }

    pub fn recip(&self) -> Self {
        if self.value == S::zero() {
            self.tape.record_fault("reciprocal of zero".to_string());
        }
        let r = self.value.recip();
        self.map(r, -r * r)
    }

    pub fn scale(&self, c: S) -> Self {
        self.map(self.value * c, c)
    }
}

impl<'t, S: Scalar> Add for Var<'t, S> {
    type Output = Var<'t, S>;
    fn add(self, rhs: Self) -> Self {
        self.tape
            .binary(&self, &rhs, self.value + rhs.value, S::one(), S::one())
    }
}

impl<'t, S: Scalar> Sub for Var<'t, S> {
    type Output = Var<'t, S>;
    fn sub(self, rhs: Self) -> Self {
        self.tape
            .binary(&self, &rhs, self.value - rhs.value, S::one(), -S::one())
    }
}

impl<'t, S: Scalar> Mul for Var<'t, S> {
    type Output = Var<'t, S>;
    fn mul(self, rhs: Self) -> Self {
        self.tape
            .binary(&self, &rhs, self.value * rhs.value, rhs.value, self.value)
    }
}

impl<'t, S: Scalar> Div for Var<'t, S> {
    type Output = Var<'t, S>;
    fn div(self, rhs: Self) -> Self {
        if rhs.value == S::zero() {
            self.tape.record_fault("division by zero".to_string());
        }
        let inv = rhs.value.recip();
        let q = self.value * inv;
        self.tape.binary(&self, &rhs, q, inv, -q * inv)
    }
}

impl<'t, S: Scalar> Neg for Var<'t, S> {
    type Output = Var<'t, S>;
    fn neg(self) -> Self {
        self.map(-self.value, -S::one())
    }
}

impl<'t, S: Scalar> Add<S> for Var<'t, S> {
    type Output = Var<'t, S>;
    fn add(self, rhs: S) -> Self {
        self.map(self.value + rhs, S::one())
    }
}

impl<'t, S: Scalar> Sub<S> for Var<'t, S> {
    type Output = Var<'t, S>;
    fn sub(self, rhs: S) -> Self {
        self.map(self.value - rhs, S::one())
    }
}

impl<'t, S: Scalar> Mul<S> for Var<'t, S> {
    type Output = Var<'t, S>;
    fn mul(self, rhs: S) -> Self {
        self.map(self.value * rhs, rhs)
    }
}

impl<'t, S: Scalar> Div<S> for Var<'t, S> {
    type Output = Var<'t, S>;
    fn div(self, rhs: S) -> Self {
        if rhs == S::zero() {
            self.tape.record_fault("division by zero".to_string());
        }
        let inv = rhs.recip();
        self.map(self.value * inv, inv)
    }
}

macro_rules! scalar_lhs_ops {
    ($($t:ty),*) => {$(
        impl<'t> Add<Var<'t, $t>> for $t {
            type Output = Var<'t, $t>;
            fn add(self, rhs: Var<'t, $t>) -> Var<'t, $t> {
                rhs + self
            }
        }

        impl<'t> Sub<Var<'t, $t>> for $t {
            type Output = Var<'t, $t>;
            fn sub(self, rhs: Var<'t, $t>) -> Var<'t, $t> {
                rhs.map(self - rhs.value, -1.0)
            }
        }

        impl<'t> Mul<Var<'t, $t>> for $t {
            type Output = Var<'t, $t>;
            fn mul(self, rhs: Var<'t, $t>) -> Var<'t, $t> {
                rhs * self
            }
        }

        impl<'t> Div<Var<'t, $t>> for $t {
            type Output = Var<'t, $t>;
            fn div(self, rhs: Var<'t, $t>) -> Var<'t, $t> {
                rhs.recip() * self
            }
        }
    )*};
}

scalar_lhs_ops!(f32, f64);

/// Sum of `terms` accumulated left to right.
pub fn sum<'t, S: Scalar>(tape: &'t Tape<S>, terms: impl IntoIterator<Item = Var<'t, S>>) -> Var<'t, S> {
    terms
        .into_iter()
        .reduce(|acc, t| acc + t)
        .unwrap_or_else(|| tape.constant(S::zero()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_tape() {
        let tape = Tape::<f64>::new();
        assert_eq!(tape.len(), 0);
        assert!(tape.is_empty());
    }

    #[test]
    fn constants_are_distinct_nodes() {
        let tape = Tape::<f64>::new();
        let a = tape.constant(3.0);
        let b = tape.constant(3.0);
        assert_eq!(tape.len(), 2);
        assert_ne!(a.id(), b.id());
        assert_eq!(a.value(), 3.0);
        assert_eq!(b.value(), 3.0);
    }

    #[test]
    fn parameter_slot_receives_gradient() {
        let store = ParameterStore::from_values(vec![0.0; 8]);
        let tape = Tape::new();
        let p = tape.parameter(7, 2.5);
        let loss = p * 4.0;
        let g = tape.gradient(&loss, &store).unwrap();
        assert_eq!(g.len(), 8);
        assert_eq!(g[7], 4.0);
        assert!(g[..7].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn square_gradient() {
        let store = ParameterStore::from_values(vec![3.0]);
        let tape = Tape::new();
        let theta = tape.parameters(&store);
        let loss = theta[0] * theta[0];
        assert_eq!(tape.gradient(&loss, &store).unwrap(), vec![6.0]);
    }

    #[test]
    fn constant_loss_has_zero_gradient() {
        let store = ParameterStore::from_values(vec![1.0, 2.0]);
        let tape = Tape::new();
        let _theta = tape.parameters(&store);
        let loss = tape.constant(5.0);
        assert_eq!(tape.gradient(&loss, &store).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn frozen_store_gets_no_entries() {
        let mut store = ParameterStore::from_values(vec![1.0, 2.0]);
        store.freeze();
        let tape = Tape::new();
        let theta = tape.parameters(&store);
        assert!(theta.iter().all(|v| tape.kind(v.id()) == NodeKind::Constant));
        let loss = theta[0] * theta[1];
        assert!(tape.gradient(&loss, &store).unwrap().is_empty());
    }

    #[test]
    fn foreign_output_is_a_usage_error() {
        let a = Tape::<f64>::new();
        let b = Tape::<f64>::new();
        let x = b.constant(1.0);
        let _ = a.constant(1.0);
        assert!(matches!(a.adjoints(&x), Err(Error::Usage(_))));
    }

    #[test]
    fn division_by_zero_surfaces_as_error() {
        let store = ParameterStore::from_values(vec![1.0]);
        let tape = Tape::new();
        let p = tape.parameters(&store)[0];
        let zero = tape.constant(0.0);
        let q = p / zero;
        assert!(matches!(tape.gradient(&q, &store), Err(Error::Arithmetic(_))));
    }

    #[test]
    fn unary_partials_match_finite_differences() {
        type F = for<'t> fn(Var<'t, f64>) -> Var<'t, f64>;
        let cases: [(F, fn(f64) -> f64); 8] = [
            (|v| v.exp(), f64::exp),
            (|v| v.ln(), f64::ln),
            (|v| v.sin(), f64::sin),
            (|v| v.cos(), f64::cos),
            (|v| v.sqrt(), f64::sqrt),
            (|v| v.atan(), f64::atan),
            (|v| v.erf(), libm::erf),
            (|v| v.powf(2.5), |x| x.powf(2.5)),
        ];
        let h = 1e-6;
        for x in [0.3, 0.9, 1.7] {
            for (g, f) in cases {
                let tape = Tape::new();
                let v = tape.input_coefficient(x);
                let y = g(v);
                let d = tape.adjoints(&y).unwrap().of(&v);
                let fd = (f(x + h) - f(x - h)) / (2.0 * h);
                assert!((d - fd).abs() < 1e-8 * fd.abs().max(1.0));
            }
        }
    }

    #[test]
    fn scalar_on_left() {
        let tape = Tape::<f64>::new();
        let x = tape.input_coefficient(2.0);
        let y = 1.0 - x;
        let z = 6.0 / x;
        assert_eq!(y.value(), -1.0);
        assert_eq!(z.value(), 3.0);
        let adj = tape.adjoints(&z).unwrap();
        assert_eq!(adj.of(&x), -1.5);
    }
}
