//! Lazily evaluated scalar fields over (x1, x2, t) with exact jets.
//!
//! A [`Field`] is an immutable expression graph. Leaves are DSL expressions,
//! constants or sampled 2-D interpolants; interior nodes are arithmetic,
//! partial derivatives and time integrals. Jets propagate through every node,
//! so coefficients built from generating functions keep exact derivatives.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use thiserror::Error;

use super::expr::{EvalError, Expr, Var};
use super::jet::{coeff_count, multi_index, Jet, MAX_ORDER};
use super::quadrature::composite_nodes;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("domain violation in `{node}` at {point:?}: {reason}")]
    Domain { node: String, point: [f64; 3], reason: String },
    #[error("jet order {0} exceeds the supported maximum {MAX_ORDER}")]
    OrderTooHigh(usize),
    #[error("point {point:?} lies outside the sampled region of `{node}`")]
    OutsideSample { node: String, point: [f64; 3] },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Op {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Fun {
    Neg,
    Exp,
    Ln,
    Sin,
    Cos,
    Abs,
}

enum Node {
    Const(f64),
    Expr(Expr),
    Unary(Fun, Field),
    Binary(Op, Field, Field),
    Pow(Field, f64),
    Partial(usize, Field),
    TimeIntegral { integrand: Field, t0: f64 },
    AtTime { field: Field, t0: f64 },
    Sampled(Arc<Interp2>),
}

/// Shared handle to an immutable field graph.
#[derive(Clone)]
pub struct Field(Arc<Node>);

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Field({self})")
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const AXES: [&str; 3] = ["x1", "x2", "t"];
        match &*self.0 {
            Node::Const(v) => write!(f, "{v:?}"),
            Node::Expr(e) => write!(f, "{e}"),
            Node::Unary(Fun::Neg, a) => write!(f, "(-{a})"),
            Node::Unary(fun, a) => {
                let name = match fun {
                    Fun::Exp => "exp",
                    Fun::Ln => "ln",
                    Fun::Sin => "sin",
                    Fun::Cos => "cos",
                    Fun::Abs => "abs",
                    Fun::Neg => unreachable!(),
                };
                write!(f, "{name}({a})")
            }
            Node::Binary(op, a, b) => {
                let s = match op {
                    Op::Add => "+",
                    Op::Sub => "-",
                    Op::Mul => "*",
                    Op::Div => "/",
                };
                write!(f, "({a} {s} {b})")
            }
            Node::Pow(a, p) => write!(f, "({a} ^ {p:?})"),
            Node::Partial(axis, a) => write!(f, "d{}({a})", AXES[*axis]),
            Node::TimeIntegral { integrand, t0 } => write!(f, "int[{t0:?}, t]({integrand})"),
            Node::AtTime { field, t0 } => write!(f, "({field})|t={t0:?}"),
            Node::Sampled(s) => write!(f, "sampled<{}x{}>", s.x1.len(), s.x2.len()),
        }
    }
}

const TIME_PANEL: f64 = 0.25;

impl Field {
    fn node(n: Node) -> Self {
        Field(Arc::new(n))
    }

    pub fn constant(v: f64) -> Self {
        Self::node(Node::Const(v))
    }

    pub fn expr(e: Expr) -> Self {
        Self::node(Node::Expr(e))
    }

    /// Coordinate field x1, x2 or t (axis 0, 1, 2).
    pub fn coordinate(axis: usize) -> Self {
        let v = [Var::X1, Var::X2, Var::T][axis];
        Self::expr(Expr::Var(v))
    }

    pub fn sampled(interp: Interp2) -> Self {
        Self::node(Node::Sampled(Arc::new(interp)))
    }

    /// Constant value if the field is a literal constant.
    pub fn as_constant(&self) -> Option<f64> {
        match &*self.0 {
            Node::Const(v) => Some(*v),
            Node::Expr(Expr::Const(v)) => Some(*v),
            _ => None,
        }
    }

    pub fn exp(&self) -> Self {
        Self::node(Node::Unary(Fun::Exp, self.clone()))
    }
    pub fn ln(&self) -> Self {
        Self::node(Node::Unary(Fun::Ln, self.clone()))
    }
    pub fn sin(&self) -> Self {
        Self::node(Node::Unary(Fun::Sin, self.clone()))
    }
    pub fn cos(&self) -> Self {
        Self::node(Node::Unary(Fun::Cos, self.clone()))
    }
    pub fn abs(&self) -> Self {
        Self::node(Node::Unary(Fun::Abs, self.clone()))
    }
    pub fn powf(&self, p: f64) -> Self {
        Self::node(Node::Pow(self.clone(), p))
    }
    pub fn powi(&self, n: i32) -> Self {
        self.powf(n as f64)
    }
    pub fn sqrt(&self) -> Self {
        self.powf(0.5)
    }

    /// ∂/∂x1, ∂/∂x2 or ∂/∂t (axis 0, 1, 2).
    pub fn partial(&self, axis: usize) -> Self {
        assert!(axis < 3);
        if let (2, Node::TimeIntegral { integrand, .. }) = (axis, &*self.0) {
            return integrand.clone();
        }
        Self::node(Node::Partial(axis, self.clone()))
    }

    /// F(x, t) = ∫_{t0}^{t} self(x, s) ds.
    pub fn time_integral(&self, t0: f64) -> Self {
        Self::node(Node::TimeIntegral { integrand: self.clone(), t0 })
    }

    /// G(x, t) = self(x, t0), constant in t.
    pub fn at_time(&self, t0: f64) -> Self {
        Self::node(Node::AtTime { field: self.clone(), t0 })
    }

    pub fn value(&self, p: [f64; 3]) -> Result<f64, FieldError> {
        Ok(self.jet(p, 0)?.value())
    }

    pub fn jet(&self, p: [f64; 3], order: usize) -> Result<Jet, FieldError> {
        if order > MAX_ORDER {
            return Err(FieldError::OrderTooHigh(order));
        }
        let domain = |reason: String| FieldError::Domain { node: self.to_string(), point: p, reason };
        Ok(match &*self.0 {
            Node::Const(v) => Jet::constant(*v, order),
            Node::Expr(e) => e.jet(p, order)?,
            Node::Unary(fun, a) => {
                let x = a.jet(p, order)?;
                match fun {
                    Fun::Neg => -x,
                    Fun::Exp => x.exp(),
                    Fun::Ln => {
                        if x.value() <= 0.0 {
                            return Err(domain(format!("ln of non-positive value {}", x.value())));
                        }
                        x.ln()
                    }
                    Fun::Sin => x.sin(),
                    Fun::Cos => x.cos(),
                    Fun::Abs => x.abs(),
                }
            }
            Node::Binary(op, a, b) => {
                let x = a.jet(p, order)?;
                let y = b.jet(p, order)?;
                match op {
                    Op::Add => x + y,
                    Op::Sub => x - y,
                    Op::Mul => x * y,
                    Op::Div => {
                        if y.value() == 0.0 {
                            return Err(domain("division by zero".into()));
                        }
                        x / y
                    }
                }
            }
            Node::Pow(a, e) => {
                let x = a.jet(p, order)?;
                let x0 = x.value();
                if e.fract() == 0.0 && e.abs() <= 64.0 {
                    if x0 == 0.0 && *e < 0.0 {
                        return Err(domain("zero raised to a negative power".into()));
                    }
                    x.powi(*e as i32)
                } else {
                    if x0 < 0.0 || (x0 == 0.0 && (*e < 0.0 || order > 0)) {
                        return Err(domain(format!("non-integer power of {x0}")));
                    }
                    x.powf(*e)
                }
            }
            Node::Partial(axis, a) => {
                if order + 1 > MAX_ORDER {
                    return Err(FieldError::OrderTooHigh(order + 1));
                }
                a.jet(p, order + 1)?.derivative(*axis)
            }
            Node::TimeIntegral { integrand, t0 } => time_integral_jet(integrand, *t0, p, order)?,
            Node::AtTime { field, t0 } => {
                let j = field.jet([p[0], p[1], *t0], order)?;
                let mut out = Jet::zero(order);
                for i in 0..coeff_count(order) {
                    let m = multi_index(i);
                    if m[2] == 0 {
                        out.set_taylor(m, j.taylor(m));
                    }
                }
                out
            }
            Node::Sampled(s) => {
                s.jet(p, order).ok_or_else(|| FieldError::OutsideSample { node: self.to_string(), point: p })?
            }
        })
    }
}

/// Jet of ∫_{t0}^{t} f ds: pure-x coefficients by quadrature of the
/// integrand jets, coefficients with a t power shifted from the integrand.
fn time_integral_jet(f: &Field, t0: f64, p: [f64; 3], order: usize) -> Result<Jet, FieldError> {
    let mut out = Jet::zero(order);
    let n = coeff_count(order);
    if p[2] != t0 {
        let mut acc = vec![0.0; n];
        for (s, w) in composite_nodes(t0, p[2], TIME_PANEL) {
            let j = f.jet([p[0], p[1], s], order)?;
            let c = j.coeffs();
            for (i, a) in acc.iter_mut().enumerate() {
                if multi_index(i)[2] == 0 {
                    *a += w * c[i];
                }
            }
        }
        for (i, a) in acc.iter().enumerate() {
            if multi_index(i)[2] == 0 {
                out.set_taylor(multi_index(i), *a);
            }
        }
    }
    if order >= 1 {
        let g = f.jet(p, order - 1)?;
        for i in 0..n {
            let m = multi_index(i);
            if m[2] >= 1 {
                let src = [m[0], m[1], m[2] - 1];
                out.set_taylor(m, g.taylor(src) / m[2] as f64);
            }
        }
    }
    Ok(out)
}

macro_rules! field_binop {
    ($trait:ident, $method:ident, $op:expr) => {
        impl $trait<Field> for Field {
            type Output = Field;
            fn $method(self, rhs: Field) -> Field {
                Field::node(Node::Binary($op, self, rhs))
            }
        }
        impl $trait<&Field> for &Field {
            type Output = Field;
            fn $method(self, rhs: &Field) -> Field {
                Field::node(Node::Binary($op, self.clone(), rhs.clone()))
            }
        }
        impl $trait<f64> for Field {
            type Output = Field;
            fn $method(self, rhs: f64) -> Field {
                Field::node(Node::Binary($op, self, Field::constant(rhs)))
            }
        }
        impl $trait<f64> for &Field {
            type Output = Field;
            fn $method(self, rhs: f64) -> Field {
                Field::node(Node::Binary($op, self.clone(), Field::constant(rhs)))
            }
        }
        impl $trait<Field> for f64 {
            type Output = Field;
            fn $method(self, rhs: Field) -> Field {
                Field::node(Node::Binary($op, Field::constant(self), rhs))
            }
        }
        impl $trait<&Field> for f64 {
            type Output = Field;
            fn $method(self, rhs: &Field) -> Field {
                Field::node(Node::Binary($op, Field::constant(self), rhs.clone()))
            }
        }
    };
}

field_binop!(Add, add, Op::Add);
field_binop!(Sub, sub, Op::Sub);
field_binop!(Mul, mul, Op::Mul);
field_binop!(Div, div, Op::Div);

impl Neg for Field {
    type Output = Field;
    fn neg(self) -> Field {
        Field::node(Node::Unary(Fun::Neg, self))
    }
}

impl Neg for &Field {
    type Output = Field;
    fn neg(self) -> Field {
        Field::node(Node::Unary(Fun::Neg, self.clone()))
    }
}

impl From<Expr> for Field {
    fn from(e: Expr) -> Self {
        Field::expr(e)
    }
}

impl From<f64> for Field {
    fn from(v: f64) -> Self {
        Field::constant(v)
    }
}

/// Tensor-product Lagrange interpolant of data sampled on a rectangle in
/// (x1, x2). Uses a local stencil of up to six nodes per axis, so jets up to
/// fifth order are consistent with the interpolating polynomial.
pub struct Interp2 {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    /// Row-major: `values[i * x2.len() + j]`.
    pub values: Vec<f64>,
}

const STENCIL: usize = 6;

fn stencil_start(nodes: &[f64], x: f64) -> usize {
    let m = STENCIL.min(nodes.len());
    let k = nodes.partition_point(|&v| v <= x).saturating_sub(1);
    let half = m / 2;
    k.saturating_sub(half - 1).min(nodes.len() - m)
}

fn lagrange_jets(nodes: &[f64], x: f64, var: usize, order: usize) -> (usize, Vec<Jet>) {
    let m = STENCIL.min(nodes.len());
    let s = stencil_start(nodes, x);
    let xv = Jet::variable(var, x, order);
    let mut basis = Vec::with_capacity(m);
    for i in s..s + m {
        let mut l = Jet::constant(1.0, order);
        for j in s..s + m {
            if i != j {
                l = l * ((xv - nodes[j]) / (nodes[i] - nodes[j]));
            }
        }
        basis.push(l);
    }
    (s, basis)
}

impl Interp2 {
    pub fn new(x1: Vec<f64>, x2: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), x1.len() * x2.len());
        assert!(x1.len() >= 2 && x2.len() >= 2);
        Interp2 { x1, x2, values }
    }

    fn contains(&self, p: [f64; 3]) -> bool {
        let tol1 = 1e-12 * (self.x1[self.x1.len() - 1] - self.x1[0]).abs().max(1.0);
        let tol2 = 1e-12 * (self.x2[self.x2.len() - 1] - self.x2[0]).abs().max(1.0);
        p[0] >= self.x1[0] - tol1
            && p[0] <= self.x1[self.x1.len() - 1] + tol1
            && p[1] >= self.x2[0] - tol2
            && p[1] <= self.x2[self.x2.len() - 1] + tol2
    }

    pub fn jet(&self, p: [f64; 3], order: usize) -> Option<Jet> {
        if !self.contains(p) {
            return None;
        }
        let (s1, b1) = lagrange_jets(&self.x1, p[0], 0, order);
        let (s2, b2) = lagrange_jets(&self.x2, p[1], 1, order);
        let n2 = self.x2.len();
        let mut out = Jet::zero(order);
        for (a, la) in b1.iter().enumerate() {
            let mut row = Jet::zero(order);
            for (b, lb) in b2.iter().enumerate() {
                row += lb.scale(self.values[(s1 + a) * n2 + s2 + b]);
            }
            out += *la * row;
        }
        Some(out)
    }
}
