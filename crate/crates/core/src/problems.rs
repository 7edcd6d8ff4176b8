//! The toy multi-objective benchmarks: loss evaluation, loss Jacobians with
//! respect to the decision vector, bound handling and analytic front data.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::nn::{OutputHead, Tape, Var};

/// Tolerance when checking that a decision vector lies inside its bounds.
const BOUND_SLACK: f64 = 1e-12;

/// Exponent of the DTLZ4 meta-variable mapping.
pub const DTLZ4_ALPHA: f64 = 100.0;

/// Anything that maps a decision vector to `J` losses with a Jacobian.
pub trait MultiObjective {
    fn objectives(&self) -> usize;

    fn decision_dim(&self) -> usize;

    /// Map from raw network outputs to the feasible decision space.
    fn output_head(&self) -> OutputHead {
        OutputHead::Identity
    }

    fn evaluate(&self, theta: &[f64]) -> Result<Vec<f64>>;

    /// Losses and their Jacobian (`J` rows of length `d`).
    fn value_and_jacobian(&self, theta: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    Pro1,
    Pro2,
    Dtlz2,
    Dtlz4,
    Zdt1,
    Zdt2,
    Vlmop1,
    Vlmop2Printed,
    Vlmop2Canonical,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 9] = [
        ProblemKind::Pro1,
        ProblemKind::Pro2,
        ProblemKind::Dtlz2,
        ProblemKind::Dtlz4,
        ProblemKind::Zdt1,
        ProblemKind::Zdt2,
        ProblemKind::Vlmop1,
        ProblemKind::Vlmop2Printed,
        ProblemKind::Vlmop2Canonical,
    ];

    /// The eight benchmark problems in table order (the printed Problem 8).
    pub const SUITE: [ProblemKind; 8] = [
        ProblemKind::Pro1,
        ProblemKind::Pro2,
        ProblemKind::Dtlz2,
        ProblemKind::Dtlz4,
        ProblemKind::Zdt1,
        ProblemKind::Zdt2,
        ProblemKind::Vlmop1,
        ProblemKind::Vlmop2Printed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Pro1 => "pro1",
            ProblemKind::Pro2 => "pro2",
            ProblemKind::Dtlz2 => "dtlz2",
            ProblemKind::Dtlz4 => "dtlz4",
            ProblemKind::Zdt1 => "zdt1",
            ProblemKind::Zdt2 => "zdt2",
            ProblemKind::Vlmop1 => "vlmop1",
            ProblemKind::Vlmop2Printed => "vlmop2-printed",
            ProblemKind::Vlmop2Canonical => "vlmop2-canonical",
        }
    }

    pub fn valid_names() -> String {
        Self::ALL.map(Self::name).join(", ")
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownName {
                kind: "problem",
                name: s.to_string(),
                valid: Self::valid_names(),
            })
    }
}

/// One of the named toy benchmarks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyProblem {
    kind: ProblemKind,
    dim: usize,
    objectives: usize,
    bounds: Option<(f64, f64)>,
}

impl ToyProblem {
    pub fn new(kind: ProblemKind) -> Self {
        let (dim, objectives, bounds) = match kind {
            ProblemKind::Pro1 => (1, 2, None),
            ProblemKind::Pro2 => (100, 2, None),
            ProblemKind::Dtlz2 | ProblemKind::Dtlz4 => (10, 3, Some((0.0, 1.0))),
            ProblemKind::Zdt1 | ProblemKind::Zdt2 => (2, 2, Some((0.0, 1.0))),
            ProblemKind::Vlmop1 => (30, 2, None),
            ProblemKind::Vlmop2Printed => (10, 2, Some((-2.0, 2.0))),
            ProblemKind::Vlmop2Canonical => (2, 2, Some((-2.0, 2.0))),
        };
        Self {
            kind,
            dim,
            objectives,
            bounds,
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        Ok(Self::new(name.parse()?))
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    /// Per-coordinate feasible interval, `None` when unbounded.
    pub fn bounds(&self) -> Option<(f64, f64)> {
        self.bounds
    }

    /// Decision vector the network output should start from, when the
    /// problem needs one: DTLZ4 starts at `theta_i = 0.5^(1/alpha)` so every
    /// meta-variable `theta_i^alpha` sits at 0.5 instead of vanishing.
    pub fn initial_decision(&self) -> Option<Vec<f64>> {
        match self.kind {
            ProblemKind::Dtlz4 => Some(vec![0.5f64.powf(1.0 / DTLZ4_ALPHA); self.dim]),
            _ => None,
        }
    }

    /// Default penalty weight. ZDT losses start with the distance function
    /// near 5.5, far outside the reference box, and a weak penalty lets every
    /// ray slide to the `l_1 = 0` end before `g` shrinks.
    pub fn default_lambda(&self) -> f64 {
        match self.kind {
            ProblemKind::Zdt1 | ProblemKind::Zdt2 => 0.7,
            _ => 0.3,
        }
    }

    /// Logistic map of raw outputs onto the bounds; identity when unbounded.
    pub fn squash(&self, raw: &[f64]) -> Vec<f64> {
        let head = self.output_head();
        raw.iter().map(|&r| head.apply(r)).collect()
    }

    fn check(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dim {
            return Err(invalid(format!(
                "{} expects {} decision variables, got {}",
                self.name(),
                self.dim,
                theta.len()
            )));
        }
        if let Some(i) = theta.iter().position(|t| !t.is_finite()) {
            return Err(Error::Domain(format!("theta[{i}] is not finite")));
        }
        if let Some((lo, hi)) = self.bounds {
            if let Some(i) = theta
                .iter()
                .position(|&t| t < lo - BOUND_SLACK || t > hi + BOUND_SLACK)
            {
                return Err(Error::Domain(format!(
                    "theta[{i}] = {} outside [{lo}, {hi}] for {}",
                    theta[i],
                    self.name()
                )));
            }
        }
        Ok(())
    }

    /// `dl_j / dtheta`.
    pub fn gradient(&self, theta: &[f64], j: usize) -> Result<Vec<f64>> {
        if j >= self.objectives {
            return Err(invalid(format!("objective {j} out of range for {}", self.name())));
        }
        let (_, mut jac) = self.value_and_jacobian(theta)?;
        Ok(jac.swap_remove(j))
    }

    pub fn jacobian(&self, theta: &[f64]) -> Result<Vec<Vec<f64>>> {
        Ok(self.value_and_jacobian(theta)?.1)
    }

    /// Hypervolume of the continuous Pareto front where it has a closed form:
    /// `pro1` (`R1 R2 - 1/6`) and `dtlz2` (`R1 R2 R3 - pi/6`), valid when
    /// every reference coordinate is at least 1.
    pub fn analytic_max_hv(&self, reference: &[f64]) -> Option<f64> {
        if reference.len() != self.objectives || reference.iter().any(|&r| !(r >= 1.0)) {
            return None;
        }
        let volume: f64 = reference.iter().product();
        match self.kind {
            ProblemKind::Pro1 => Some(volume - 1.0 / 6.0),
            ProblemKind::Dtlz2 => Some(volume - PI / 6.0),
            _ => None,
        }
    }

    fn tape_losses(&self, tape: &mut Tape, theta: Var) -> Vec<Var> {
        match self.kind {
            ProblemKind::Dtlz2 => dtlz(tape, theta),
            ProblemKind::Dtlz4 => {
                let x = tape.powf(theta, DTLZ4_ALPHA);
                dtlz(tape, x)
            }
            ProblemKind::Zdt1 | ProblemKind::Zdt2 => {
                let m = self.dim as f64;
                let f1 = tape.index(theta, 0);
                let tail = tape.slice(theta, 1, self.dim - 1);
                let s = tape.sum(tail);
                let s = tape.scale(s, 9.0 / (m - 1.0));
                let g = tape.shift(s, 1.0);
                let ratio = tape.div(f1, g);
                let h = if self.kind == ProblemKind::Zdt1 {
                    tape.sqrt(ratio)
                } else {
                    tape.square(ratio)
                };
                let h = tape.scale(h, -1.0);
                let h = tape.shift(h, 1.0);
                let f2 = tape.mul(g, h);
                vec![f1, f2]
            }
            _ => unreachable!("{} has an analytic Jacobian", self.name()),
        }
    }
}

/// DTLZ objectives on meta-variables `x` (already raised to `alpha` for DTLZ4).
fn dtlz(tape: &mut Tape, x: Var) -> Vec<Var> {
    let n = tape.values(x).len();
    let a1 = tape.index(x, 0);
    let a1 = tape.scale(a1, FRAC_PI_2);
    let a2 = tape.index(x, 1);
    let a2 = tape.scale(a2, FRAC_PI_2);
    let tail = tape.slice(x, 2, n - 2);
    let dev = tape.shift(tail, -0.5);
    let sq = tape.square(dev);
    let s = tape.sum(sq);
    let g = tape.shift(s, 1.0);
    let (c1, s1) = (tape.cos(a1), tape.sin(a1));
    let (c2, s2) = (tape.cos(a2), tape.sin(a2));
    let c1g = tape.mul(c1, g);
    let l1 = tape.mul(c1g, c2);
    let l2 = tape.mul(c1g, s2);
    let l3 = tape.mul(s1, g);
    vec![l1, l2, l3]
}

/// `(1/(4n)) |theta - c|^2` and its gradient.
fn scaled_sq_dist(theta: &[f64], c: f64) -> (f64, Vec<f64>) {
    let k = 1.0 / (4.0 * theta.len() as f64);
    let v = theta.iter().map(|t| (t - c) * (t - c)).sum::<f64>() * k;
    (v, theta.iter().map(|t| 2.0 * k * (t - c)).collect())
}

/// `1 - exp(-|theta - c 1|^2)` and its gradient.
fn gaussian_well(theta: &[f64], c: f64) -> (f64, Vec<f64>) {
    let e = (-theta.iter().map(|t| (t - c) * (t - c)).sum::<f64>()).exp();
    (1.0 - e, theta.iter().map(|t| 2.0 * (t - c) * e).collect())
}

impl MultiObjective for ToyProblem {
    fn objectives(&self) -> usize {
        self.objectives
    }

    fn decision_dim(&self) -> usize {
        self.dim
    }

    fn output_head(&self) -> OutputHead {
        match self.bounds {
            Some((lower, upper)) => OutputHead::Logistic { lower, upper },
            None => OutputHead::Identity,
        }
    }

    fn evaluate(&self, theta: &[f64]) -> Result<Vec<f64>> {
        Ok(self.value_and_jacobian(theta)?.0)
    }

    fn value_and_jacobian(&self, theta: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        self.check(theta)?;
        let pairs = match self.kind {
            ProblemKind::Pro1 => {
                let t = theta[0];
                vec![(t * t, vec![2.0 * t]), ((t - 1.0).powi(2), vec![2.0 * (t - 1.0)])]
            }
            ProblemKind::Pro2 | ProblemKind::Vlmop2Canonical => {
                let c = 1.0 / (self.dim as f64).sqrt();
                vec![gaussian_well(theta, c), gaussian_well(theta, -c)]
            }
            ProblemKind::Vlmop1 | ProblemKind::Vlmop2Printed => {
                vec![scaled_sq_dist(theta, 0.0), scaled_sq_dist(theta, 2.0)]
            }
            _ => {
                let mut tape = Tape::new();
                let x = tape.vector(theta.to_vec());
                let losses = self.tape_losses(&mut tape, x);
                let mut out = Vec::with_capacity(losses.len());
                for l in losses {
                    let v = tape.scalar(l);
                    tape.backward(l, &[1.0])?;
                    let g = tape.grad(x).map_or_else(|| vec![0.0; self.dim], <[f64]>::to_vec);
                    out.push((v, g));
                }
                out
            }
        };
        let (values, jac): (Vec<f64>, Vec<Vec<f64>>) = pairs.into_iter().unzip();
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("{} loss {j} is not finite", self.name())));
        }
        Ok((values, jac))
    }
}
