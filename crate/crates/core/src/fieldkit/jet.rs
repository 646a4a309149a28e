//! Truncated multivariate Taylor jets over (x1, x2, t).
//!
//! A jet of order `k` stores the Taylor coefficients `c_α = ∂^α f / α!` for
//! every multi-index `|α| ≤ k`. Arithmetic truncates at the smaller order of
//! the operands, and differentiation lowers the order by one.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::sync::OnceLock;

/// Number of jet variables: x1, x2, t.
pub const NVARS: usize = 3;
/// Highest order a jet can carry. The public evaluators cap requests at 3,
/// internal consumers (nested partials, connection derivatives) use the rest.
pub const MAX_ORDER: usize = 5;
/// Number of multi-indices with total degree ≤ MAX_ORDER in three variables.
pub const MAX_COEFFS: usize = 56;

type MulEntry = (u8, u8, u8);

struct Tables {
    monos: Vec<[u8; NVARS]>,
    count: [usize; MAX_ORDER + 1],
    index: [[[u8; MAX_ORDER + 1]; MAX_ORDER + 1]; MAX_ORDER + 1],
    mul: Vec<Vec<MulEntry>>,
    // deriv[var][i] = (source index with one more power of var, factor)
    deriv: [[(u8, f64); MAX_COEFFS]; NVARS],
}

fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let mut monos = Vec::with_capacity(MAX_COEFFS);
        let mut count = [0usize; MAX_ORDER + 1];
        for deg in 0..=MAX_ORDER {
            for a in (0..=deg).rev() {
                for b in (0..=deg - a).rev() {
                    let c = deg - a - b;
                    monos.push([a as u8, b as u8, c as u8]);
                }
            }
            count[deg] = monos.len();
        }
        assert_eq!(monos.len(), MAX_COEFFS);
        let mut index = [[[u8::MAX; MAX_ORDER + 1]; MAX_ORDER + 1]; MAX_ORDER + 1];
        for (i, m) in monos.iter().enumerate() {
            index[m[0] as usize][m[1] as usize][m[2] as usize] = i as u8;
        }
        let mut mul = Vec::with_capacity(MAX_ORDER + 1);
        for order in 0..=MAX_ORDER {
            let mut entries = Vec::new();
            for i in 0..count[order] {
                for j in 0..count[order] {
                    let (a, b) = (monos[i], monos[j]);
                    let s = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
                    if (s[0] + s[1] + s[2]) as usize <= order {
                        let k = index[s[0] as usize][s[1] as usize][s[2] as usize];
                        entries.push((i as u8, j as u8, k));
                    }
                }
            }
            mul.push(entries);
        }
        let mut deriv = [[(u8::MAX, 0.0); MAX_COEFFS]; NVARS];
        for (var, table) in deriv.iter_mut().enumerate() {
            for (i, m) in monos.iter().enumerate() {
                let mut up = *m;
                up[var] += 1;
                if (up[0] + up[1] + up[2]) as usize <= MAX_ORDER {
                    let src = index[up[0] as usize][up[1] as usize][up[2] as usize];
                    table[i] = (src, up[var] as f64);
                }
            }
        }
        Tables { monos, count, index, mul, deriv }
    })
}

/// Number of coefficients of a jet of the given order.
pub fn coeff_count(order: usize) -> usize {
    tables().count[order]
}

/// Multi-index (powers of x1, x2, t) stored at coefficient slot `i`.
pub fn multi_index(i: usize) -> [u8; NVARS] {
    tables().monos[i]
}

/// Slot of a multi-index, if it fits under MAX_ORDER.
pub fn slot(alpha: [u8; NVARS]) -> Option<usize> {
    let deg = alpha.iter().map(|&a| a as usize).sum::<usize>();
    if deg > MAX_ORDER {
        return None;
    }
    Some(tables().index[alpha[0] as usize][alpha[1] as usize][alpha[2] as usize] as usize)
}

fn factorial(n: u8) -> f64 {
    (1..=n as u64).product::<u64>() as f64
}

#[derive(Clone, Copy, PartialEq)]
pub struct Jet {
    order: u8,
    c: [f64; MAX_COEFFS],
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("order", &self.order)
            .field("coeffs", &&self.c[..coeff_count(self.order as usize)])
            .finish()
    }
}

impl Jet {
    pub fn constant(value: f64, order: usize) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        let mut c = [0.0; MAX_COEFFS];
        c[0] = value;
        Jet { order: order as u8, c }
    }

    pub fn zero(order: usize) -> Self {
        Self::constant(0.0, order)
    }

    /// The coordinate function `var` expanded at `value`.
    pub fn variable(var: usize, value: f64, order: usize) -> Self {
        let mut j = Self::constant(value, order);
        if order >= 1 {
            let mut alpha = [0u8; NVARS];
            alpha[var] = 1;
            j.c[slot(alpha).unwrap()] = 1.0;
        }
        j
    }

    pub fn order(&self) -> usize {
        self.order as usize
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c[..coeff_count(self.order as usize)]
    }

    /// Taylor coefficient `∂^α f / α!`.
    pub fn taylor(&self, alpha: [u8; NVARS]) -> f64 {
        match slot(alpha) {
            Some(i) if i < coeff_count(self.order as usize) => self.c[i],
            _ => panic!("multi-index {alpha:?} not available in jet of order {}", self.order),
        }
    }

    /// Partial derivative `∂^α f` at the expansion point.
    pub fn partial(&self, alpha: [u8; NVARS]) -> f64 {
        self.taylor(alpha) * alpha.iter().map(|&a| factorial(a)).product::<f64>()
    }

    pub fn set_taylor(&mut self, alpha: [u8; NVARS], value: f64) {
        let i = slot(alpha).expect("multi-index beyond MAX_ORDER");
        assert!(i < coeff_count(self.order as usize));
        self.c[i] = value;
    }

    /// Same jet truncated to a lower order.
    pub fn truncate(&self, order: usize) -> Self {
        if order >= self.order as usize {
            return *self;
        }
        let mut out = Self::zero(order);
        let n = coeff_count(order);
        out.c[..n].copy_from_slice(&self.c[..n]);
        out
    }

    /// Jet of `∂f/∂var`, one order lower. Order-0 input yields an order-0
    /// zero, which callers must not rely on.
    pub fn derivative(&self, var: usize) -> Self {
        let order = self.order as usize;
        if order == 0 {
            return Self::zero(0);
        }
        let t = tables();
        let mut out = Self::zero(order - 1);
        for i in 0..coeff_count(order - 1) {
            let (src, factor) = t.deriv[var][i];
            out.c[i] = factor * self.c[src as usize];
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs().iter().all(|v| v.is_finite())
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        let n = coeff_count(self.order as usize);
        for v in &mut out.c[..n] {
            *v *= s;
        }
        out
    }

    /// `f(self)` given `derivs[k] = f^(k)(self.value())` for k = 0..=order.
    pub fn compose(&self, derivs: &[f64]) -> Self {
        let order = self.order as usize;
        debug_assert!(derivs.len() > order);
        let mut delta = *self;
        delta.c[0] = 0.0;
        let mut out = Self::constant(derivs[0], order);
        let mut power = Self::constant(1.0, order);
        let mut kfact = 1.0;
        for (k, d) in derivs.iter().enumerate().take(order + 1).skip(1) {
            power = power * delta;
            kfact *= k as f64;
            let w = d / kfact;
            if w != 0.0 {
                let n = coeff_count(order);
                for i in 1..n {
                    out.c[i] += w * power.c[i];
                }
            }
        }
        out
    }

    pub fn recip(&self) -> Self {
        let a = self.c[0];
        let order = self.order as usize;
        let mut d = Vec::with_capacity(order + 1);
        let mut v = 1.0 / a;
        for k in 0..=order {
            d.push(v);
            v *= -((k + 1) as f64) / a;
        }
        self.compose(&d)
    }

    pub fn exp(&self) -> Self {
        let e = self.c[0].exp();
        self.compose(&vec![e; self.order as usize + 1])
    }

    /// Natural log; caller guarantees a positive value.
    pub fn ln(&self) -> Self {
        let a = self.c[0];
        let order = self.order as usize;
        let mut d = vec![a.ln()];
        let mut v = 1.0 / a;
        for k in 1..=order {
            d.push(v);
            v *= -(k as f64) / a;
        }
        self.compose(&d)
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.c[0].sin_cos();
        let cycle = [s, c, -s, -c];
        let d: Vec<f64> = (0..=self.order as usize).map(|k| cycle[k % 4]).collect();
        self.compose(&d)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.c[0].sin_cos();
        let cycle = [c, -s, -c, s];
        let d: Vec<f64> = (0..=self.order as usize).map(|k| cycle[k % 4]).collect();
        self.compose(&d)
    }

    /// `|f|` with the derivative at a zero value taken as 0.
    pub fn abs(&self) -> Self {
        let a = self.c[0];
        if a > 0.0 {
            *self
        } else if a < 0.0 {
            -*self
        } else {
            Self::zero(self.order as usize)
        }
    }

    /// Integer power, valid for any base value (nonzero when n < 0).
    pub fn powi(&self, n: i32) -> Self {
        if n == 0 {
            return Self::constant(1.0, self.order as usize);
        }
        if n < 0 {
            return self.recip().powi(-n);
        }
        let mut result = Self::constant(1.0, self.order as usize);
        let mut base = *self;
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = result * base;
            }
            e >>= 1;
            if e > 0 {
                base = base * base;
            }
        }
        result
    }

    /// Real power `f^p` for a positive base value.
    pub fn powf(&self, p: f64) -> Self {
        let a = self.c[0];
        let order = self.order as usize;
        let mut d = Vec::with_capacity(order + 1);
        let mut falling = 1.0;
        for k in 0..=order {
            d.push(if falling == 0.0 { 0.0 } else { falling * a.powf(p - k as f64) });
            falling *= p - k as f64;
        }
        self.compose(&d)
    }

    pub fn sqrt(&self) -> Self {
        self.powf(0.5)
    }

    fn binary_order(&self, other: &Self) -> usize {
        self.order.min(other.order) as usize
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let order = self.binary_order(&rhs);
        let mut out = Jet::zero(order);
        for i in 0..coeff_count(order) {
            out.c[i] = self.c[i] + rhs.c[i];
        }
        out
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        let order = self.binary_order(&rhs);
        let mut out = Jet::zero(order);
        for i in 0..coeff_count(order) {
            out.c[i] = self.c[i] - rhs.c[i];
        }
        out
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let order = self.binary_order(&rhs);
        let mut out = Jet::zero(order);
        for &(i, j, k) in &tables().mul[order] {
            out.c[k as usize] += self.c[i as usize] * rhs.c[j as usize];
        }
        out
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Jet) -> Jet {
        self * rhs.recip()
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.c[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.c[0] -= rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, rhs: f64) -> Jet {
        self.scale(1.0 / rhs)
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        rhs.scale(self)
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self = *self + rhs;
    }
}

impl SubAssign for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        *self = *self - rhs;
    }
}
