//! Adaptive Dormand–Prince 5(4) integration with output at requested nodes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrajectoryError {
    #[error("independent variable is not strictly monotone at sample {0}")]
    NotMonotone(usize),
    #[error("sample {index} has {got} components, expected {expected}")]
    Width { index: usize, got: usize, expected: usize },
}

/// Ordered samples of a named state vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub names: Vec<String>,
    pub s: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn empty(names: Vec<String>) -> Self {
        Trajectory { names, s: Vec::new(), states: Vec::new() }
    }

    pub fn new(names: Vec<String>, s: Vec<f64>, states: Vec<Vec<f64>>) -> Result<Self, TrajectoryError> {
        let traj = Trajectory { names, s, states };
        traj.validate()?;
        Ok(traj)
    }

    pub fn validate(&self) -> Result<(), TrajectoryError> {
        let sign = if self.s.len() >= 2 { (self.s[1] - self.s[0]).signum() } else { 1.0 };
        for i in 1..self.s.len() {
            if (self.s[i] - self.s[i - 1]).signum() != sign || self.s[i] == self.s[i - 1] {
                return Err(TrajectoryError::NotMonotone(i));
            }
        }
        for (index, st) in self.states.iter().enumerate() {
            if st.len() != self.names.len() {
                return Err(TrajectoryError::Width { index, got: st.len(), expected: self.names.len() });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.states.iter().map(|st| st[i]).collect())
    }

    pub fn last(&self) -> Option<&[f64]> {
        self.states.last().map(|v| v.as_slice())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdeControl {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; chosen automatically when `None`.
    pub h0: Option<f64>,
    /// Smallest admissible |h| relative to max(1, |s|).
    pub h_min: f64,
    pub max_steps: usize,
    /// Stop with `Blowup` once the max-norm of the state exceeds this.
    pub max_norm: Option<f64>,
}

impl Default for OdeControl {
    fn default() -> Self {
        OdeControl { rtol: 1e-9, atol: 1e-12, h0: None, h_min: 1e-13, max_steps: 1_000_000, max_norm: None }
    }
}

impl OdeControl {
    pub fn with_tolerance(rtol: f64, atol: f64) -> Self {
        OdeControl { rtol, atol, ..Self::default() }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeErrorKind {
    #[error("step size underflow (h = {h:e})")]
    StepUnderflow { h: f64 },
    #[error("non-finite state or derivative")]
    NonFinite,
    #[error("state norm {norm:e} exceeded the blow-up limit")]
    Blowup { norm: f64 },
    #[error("step budget exhausted")]
    MaxSteps,
    #[error("output nodes must be strictly monotone and start at s0")]
    BadNodes,
}

/// Integration failure with its location and the samples produced so far.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("integration stopped at s = {at}: {kind}")]
pub struct IvpError {
    pub kind: OdeErrorKind,
    pub at: f64,
    pub partial: Trajectory,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// Integrate y' = rhs(s, y) from `nodes[0]` through every node in `nodes`
/// (increasing or decreasing). Steps are clamped to land on each node.
pub fn integrate_ivp<F>(
    rhs: F,
    y0: &[f64],
    names: &[&str],
    nodes: &[f64],
    control: OdeControl,
) -> Result<Trajectory, IvpError>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let names: Vec<String> = names.iter().map(|s| s.to_string()).collect();
    let n = y0.len();
    assert_eq!(names.len(), n, "one name per state component");
    let mut traj = Trajectory::empty(names);
    let fail = |kind, at, traj: Trajectory| Err(IvpError { kind, at, partial: traj });
    if nodes.is_empty() {
        return fail(OdeErrorKind::BadNodes, f64::NAN, traj);
    }
    let dir = if nodes.len() >= 2 { (nodes[1] - nodes[0]).signum() } else { 1.0 };
    for w in nodes.windows(2) {
        if (w[1] - w[0]).signum() != dir || w[1] == w[0] {
            return fail(OdeErrorKind::BadNodes, nodes[0], traj);
        }
    }

    let mut s = nodes[0];
    let mut y = y0.to_vec();
    traj.s.push(s);
    traj.states.push(y.clone());
    if nodes.len() == 1 {
        return Ok(traj);
    }

    let mut k = vec![vec![0.0; n]; 7];
    rhs(s, &y, &mut k[0]);
    if k[0].iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
        return fail(OdeErrorKind::NonFinite, s, traj);
    }
    let span = (nodes[nodes.len() - 1] - nodes[0]).abs();
    let mut h = control.h0.unwrap_or_else(|| {
        let d0 = y.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let d1 = k[0].iter().map(|v| v.abs()).fold(0.0, f64::max);
        let guess = if d1 > 0.0 { 0.01 * (d0.max(control.atol) / d1) } else { 1e-3 * span };
        guess.clamp(1e-10 * span, 0.1 * span)
    });
    h = h.abs();

    let mut ytmp = vec![0.0; n];
    let mut y5 = vec![0.0; n];
    let mut steps = 0usize;
    for &target in &nodes[1..] {
        while (target - s) * dir > 0.0 {
            steps += 1;
            if steps > control.max_steps {
                return fail(OdeErrorKind::MaxSteps, s, traj);
            }
            let remaining = (target - s).abs();
            let mut landing = false;
            let mut step = h;
            if step >= remaining {
                step = remaining;
                landing = true;
            }
            let hs = step * dir;
            for stage in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for (j, kj) in k.iter().enumerate().take(stage) {
                        acc += hs * A[stage][j] * kj[i];
                    }
                    ytmp[i] = acc;
                }
                let (_, tail) = k.split_at_mut(stage);
                rhs(s + C[stage] * hs, &ytmp, &mut tail[0]);
            }
            let mut err_acc = 0.0;
            let mut finite = true;
            for i in 0..n {
                let mut hi5 = y[i];
                let mut hi4 = y[i];
                for j in 0..7 {
                    hi5 += hs * B5[j] * k[j][i];
                    hi4 += hs * B4[j] * k[j][i];
                }
                y5[i] = hi5;
                if !hi5.is_finite() || !hi4.is_finite() {
                    finite = false;
                }
                let sc = control.atol + control.rtol * y[i].abs().max(hi5.abs());
                let e = (hi5 - hi4) / sc;
                err_acc += e * e;
            }
            let err = if finite { (err_acc / n as f64).sqrt() } else { f64::INFINITY };
            if err <= 1.0 {
                s = if landing { target } else { s + hs };
                y.copy_from_slice(&y5);
                // FSAL: stage 7 was evaluated at the new point.
                let last = k[6].clone();
                k[0].copy_from_slice(&last);
                if let Some(limit) = control.max_norm {
                    let norm = y.iter().map(|v| v.abs()).fold(0.0, f64::max);
                    if norm > limit {
                        return fail(OdeErrorKind::Blowup { norm }, s, traj);
                    }
                }
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // a truncated landing step says nothing about the next step size
                if !landing || (step == h && factor < 1.0) {
                    h = step * factor;
                }
            } else {
                let factor = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
                h = step * factor;
                if h < control.h_min * s.abs().max(1.0) {
                    let kind = if finite { OdeErrorKind::StepUnderflow { h } } else { OdeErrorKind::NonFinite };
                    return fail(kind, s, traj);
                }
            }
        }
        traj.s.push(s);
        traj.states.push(y.clone());
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn exponential_decay() {
        let tr = integrate_ivp(|_, y, d| d[0] = -y[0], &[1.0], &["y"], &linspace(0.0, 1.0, 11), OdeControl::default())
            .unwrap();
        assert_eq!(tr.len(), 11);
        assert!((tr.last().unwrap()[0] - (-1f64).exp()).abs() < 1e-9);
        assert_eq!(*tr.s.last().unwrap(), 1.0);
    }

    #[test]
    fn backward_integration() {
        let tr = integrate_ivp(|_, y, d| d[0] = y[0], &[1.0], &["y"], &[0.0, -1.0], OdeControl::default()).unwrap();
        assert!((tr.last().unwrap()[0] - (-1f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn blowup_detected_before_singularity() {
        let err = integrate_ivp(|_, y, d| d[0] = y[0] * y[0], &[1.0], &["y"], &[0.0, 2.0], OdeControl::default())
            .unwrap_err();
        assert!(err.at < 1.0 && err.at > 0.99, "{err}");
        assert!(matches!(err.kind, OdeErrorKind::StepUnderflow { .. } | OdeErrorKind::NonFinite));
    }

    #[test]
    fn rejects_bad_nodes() {
        let err =
            integrate_ivp(|_, _, d| d[0] = 0.0, &[1.0], &["y"], &[0.0, 1.0, 0.5], OdeControl::default()).unwrap_err();
        assert_eq!(err.kind, OdeErrorKind::BadNodes);
    }
}
