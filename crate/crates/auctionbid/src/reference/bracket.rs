//! Piecewise-linear functions on dyadic knot grids, and exhaustive
//! enumeration of the bracket family for shaded 1-Lipschitz bidding
//! strategies.
//!
//! The admissible class is `F0`: 1-Lipschitz functions `f: [0,1] -> [0,1]`
//! with `f(v) <= v` (bidding above the value is never useful). The bracket
//! with resolution `eps = 2^-e` enumerates every piecewise-linear function
//! with knots at multiples of `eps`, knot values in `eps·Z ∩ [0,1]`, adjacent
//! knot differences in `{-eps, 0, +eps}`, and `f(k·eps) <= k·eps`. Every
//! member lies in `F0`, and every `f ∈ F0` is covered from above by some
//! member within `2·eps`.

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// A piecewise-linear function sampled on the uniform dyadic grid with step
/// `2^-grid_log2`. All arithmetic on dyadic inputs is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct PwLinear {
    grid_log2: u32,
    values: Vec<f64>,
}

impl PwLinear {
    pub fn new(grid_log2: u32, values: Vec<f64>) -> Result<Self> {
        let expect = (1usize << grid_log2) + 1;
        if values.len() != expect {
            return Err(Error::LengthMismatch {
                expected: expect,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("knot values".into()));
        }
        Ok(PwLinear { grid_log2, values })
    }

    /// The constant-zero function on a trivial grid.
    pub fn zero() -> Self {
        PwLinear {
            grid_log2: 0,
            values: vec![0.0, 0.0],
        }
    }

    pub fn grid_log2(&self) -> u32 {
        self.grid_log2
    }

    pub fn knot_values(&self) -> &[f64] {
        &self.values
    }

    pub fn segments(&self) -> usize {
        self.values.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.segments() as f64;
        let t = (x * n).clamp(0.0, n);
        let k = (t.floor() as usize).min(self.segments() - 1);
        let frac = t - k as f64;
        self.values[k] + (self.values[k + 1] - self.values[k]) * frac
    }

    /// Resamples onto a finer grid by repeated exact midpoint subdivision.
    pub fn refined(&self, grid_log2: u32) -> PwLinear {
        assert!(grid_log2 >= self.grid_log2);
        let mut values = self.values.clone();
        for _ in self.grid_log2..grid_log2 {
            let mut next = Vec::with_capacity(values.len() * 2 - 1);
            for k in 0..values.len() - 1 {
                next.push(values[k]);
                next.push(0.5 * (values[k] + values[k + 1]));
            }
            next.push(*values.last().unwrap());
            values = next;
        }
        PwLinear {
            grid_log2,
            values,
        }
    }

    /// Sup-norm distance; exact because the difference of two piecewise
    /// linears on a common grid attains its extremes at knots.
    pub fn sup_dist(&self, other: &PwLinear) -> f64 {
        let q = self.grid_log2.max(other.grid_log2);
        let a = self.refined(q);
        let b = other.refined(q);
        a.values
            .iter()
            .zip(b.values.iter())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    /// Pointwise maximum of a family. The output grid is one step finer than
    /// the finest input so every pairwise crossing lands on a knot, making
    /// the envelope exact.
    pub fn pointwise_max(fns: &[&PwLinear]) -> PwLinear {
        assert!(!fns.is_empty());
        let q = fns.iter().map(|f| f.grid_log2).max().unwrap() + 1;
        let refined: Vec<PwLinear> = fns.iter().map(|f| f.refined(q)).collect();
        let len = refined[0].values.len();
        let values = (0..len)
            .map(|k| {
                refined
                    .iter()
                    .map(|f| f.values[k])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        PwLinear {
            grid_log2: q,
            values,
        }
    }

    pub fn is_one_lipschitz(&self) -> bool {
        let step = 1.0 / self.segments() as f64;
        self.values
            .windows(2)
            .all(|w| (w[1] - w[0]).abs() <= step)
    }

    /// `f <= identity` pointwise. For 1-Lipschitz members it suffices to
    /// check the knots.
    pub fn leq_identity(&self) -> bool {
        let n = self.segments() as f64;
        self.values
            .iter()
            .enumerate()
            .all(|(k, &v)| v <= k as f64 / n)
    }

    pub fn in_unit_range(&self) -> bool {
        self.values.iter().all(|&v| (0.0..=1.0).contains(&v))
    }

    /// Lexicographic order on knot values over a common grid; a reproducible
    /// total order for tie-breaking.
    pub fn lex_cmp(&self, other: &PwLinear) -> Ordering {
        let q = self.grid_log2.max(other.grid_log2);
        let a = self.refined(q);
        let b = other.refined(q);
        for (x, y) in a.values.iter().zip(b.values.iter()) {
            match x.partial_cmp(y).expect("finite knot values") {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        Ordering::Equal
    }

    /// Serializes the knot values as one text line: `q; v0 v1 ... vn`.
    pub fn to_text(&self) -> String {
        let vals: Vec<String> = self.values.iter().map(|v| v.to_string()).collect();
        format!("{}; {}", self.grid_log2, vals.join(" "))
    }
}

/// The enumerated bracket family at resolution `eps = 2^-eps_log2`.
#[derive(Debug, Clone)]
pub struct LipschitzBracket {
    pub epsilon: f64,
    pub members: Vec<PwLinear>,
}

impl LipschitzBracket {
    /// Dump as text fixture, one member per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("epsilon {}\n", self.epsilon);
        for m in &self.members {
            out.push_str(&m.to_text());
            out.push('\n');
        }
        out
    }
}

/// Enumerates the bracket at `eps = 2^-eps_log2`. The family size grows
/// exponentially; resolutions finer than 1/8 are rejected.
pub fn build_bracket(eps_log2: u32) -> Result<LipschitzBracket> {
    if eps_log2 > 3 {
        return Err(Error::InvalidParam(format!(
            "bracket resolution 2^-{eps_log2} exceeds the enumeration budget (min eps = 1/8)"
        )));
    }
    let n = 1usize << eps_log2;
    let eps = 1.0 / n as f64;
    let mut members = Vec::new();
    let mut units = vec![0i64; n + 1];
    // depth-first over knot values in units of eps: 0 <= u_k <= min(k, n),
    // |u_{k+1} - u_k| <= 1; ascending order yields lexicographic output
    fn rec(k: usize, n: usize, units: &mut Vec<i64>, eps: f64, out: &mut Vec<PwLinear>) {
        if k == n + 1 {
            let values = units.iter().map(|&u| u as f64 * eps).collect();
            out.push(PwLinear::new(n.trailing_zeros(), values).unwrap());
            return;
        }
        let cap = (k as i64).min(n as i64);
        for step in [-1i64, 0, 1] {
            let u = units[k - 1] + step;
            if u < 0 || u > cap {
                continue;
            }
            units[k] = u;
            rec(k + 1, n, units, eps, out);
        }
    }
    if n == 1 {
        // single segment: f(0) = 0, f(1) in {0, 1}
        for u in [0i64, 1] {
            units[1] = u;
            let values = units.iter().map(|&x| x as f64 * eps).collect();
            members.push(PwLinear::new(0, values)?);
        }
    } else {
        rec(1, n, &mut units, eps, &mut members);
        members.sort_by(|a, b| a.lex_cmp(b));
    }
    for m in &members {
        debug_assert!(m.is_one_lipschitz() && m.leq_identity() && m.in_unit_range());
    }
    Ok(LipschitzBracket {
        epsilon: eps,
        members,
    })
}
