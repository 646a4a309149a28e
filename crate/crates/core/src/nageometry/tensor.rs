//! Small fixed-size jet tensors in four dimensions.
//!
//! Index convention for coordinates: 0 = x1, 1 = x2, 2 = y3, 3 = t. The y3
//! direction is Killing, so coordinate derivatives along it vanish.

use crate::fieldkit::Jet;

pub type M4 = [[Jet; 4]; 4];
pub type T3 = [[[Jet; 4]; 4]; 4];

pub fn zeros2(order: usize) -> M4 {
    [[Jet::zero(order); 4]; 4]
}

pub fn zeros3(order: usize) -> T3 {
    [[[Jet::zero(order); 4]; 4]; 4]
}

pub fn identity(order: usize) -> M4 {
    std::array::from_fn(|i| std::array::from_fn(|j| Jet::constant(if i == j { 1.0 } else { 0.0 }, order)))
}

/// Coordinate derivative ∂_μ of a jet.
pub fn d(f: &Jet, mu: usize) -> Jet {
    match mu {
        0 => f.derivative(0),
        1 => f.derivative(1),
        2 => Jet::zero(f.order().saturating_sub(1)),
        3 => f.derivative(2),
        _ => panic!("coordinate index {mu} out of range"),
    }
}

pub fn values2(m: &M4) -> [[f64; 4]; 4] {
    std::array::from_fn(|i| std::array::from_fn(|j| m[i][j].value()))
}

pub fn values3(t: &T3) -> [[[f64; 4]; 4]; 4] {
    std::array::from_fn(|i| std::array::from_fn(|j| std::array::from_fn(|k| t[i][j][k].value())))
}

pub fn truncate2(m: &M4, order: usize) -> M4 {
    std::array::from_fn(|i| std::array::from_fn(|j| m[i][j].truncate(order)))
}

pub fn matmul(a: &M4, b: &M4) -> M4 {
    let order = a[0][0].order().min(b[0][0].order());
    let mut out = zeros2(order);
    for i in 0..4 {
        for j in 0..4 {
            let mut s = Jet::zero(order);
            for k in 0..4 {
                s += a[i][k] * b[k][j];
            }
            out[i][j] = s;
        }
    }
    out
}

/// Determinant of the value part (LU with partial pivoting).
pub fn det_values(m: &[[f64; 4]; 4]) -> f64 {
    let mut a = *m;
    let mut det = 1.0;
    for col in 0..4 {
        let piv = (col..4).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
        if a[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            a.swap(piv, col);
            det = -det;
        }
        det *= a[col][col];
        for r in col + 1..4 {
            let f = a[r][col] / a[col][col];
            for c in col..4 {
                a[r][c] -= f * a[col][c];
            }
        }
    }
    det
}

/// Jet inverse by Gauss–Jordan elimination, pivoting on values. The caller
/// checks non-degeneracy first.
pub fn inverse(m: &M4) -> M4 {
    let order = m[0][0].order();
    let mut a = *m;
    let mut inv = identity(order);
    for col in 0..4 {
        let piv = (col..4).max_by(|&x, &y| a[x][col].value().abs().total_cmp(&a[y][col].value().abs())).unwrap();
        a.swap(piv, col);
        inv.swap(piv, col);
        let r = a[col][col].recip();
        for c in 0..4 {
            a[col][c] = a[col][c] * r;
            inv[col][c] = inv[col][c] * r;
        }
        for row in 0..4 {
            if row != col {
                let f = a[row][col];
                if f.coeffs().iter().all(|v| *v == 0.0) {
                    continue;
                }
                for c in 0..4 {
                    a[row][c] -= f * a[col][c];
                    inv[row][c] -= f * inv[col][c];
                }
            }
        }
    }
    inv
}

/// Inverse of a 2×2 jet block.
pub fn inverse2(m: [[Jet; 2]; 2]) -> [[Jet; 2]; 2] {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let r = det.recip();
    [[m[1][1] * r, -(m[0][1] * r)], [-(m[1][0] * r), m[0][0] * r]]
}
