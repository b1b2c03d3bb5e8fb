use rand::Rng as _;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game_model::joint::{for_each_joint, joint_count, joint_index};
use crate::rng;

use super::repair::repair_components;

/// Real function on a finite product set, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let count =
            joint_count(&dims).ok_or_else(|| Error::Dimension("tensor too large".into()))?;
        if count == 0 {
            return Err(Error::Dimension("empty tensor".into()));
        }
        if data.len() != count {
            return Err(Error::Dimension(format!(
                "tensor needs {count} entries, got {}",
                data.len()
            )));
        }
        Ok(DenseTensor { dims, data })
    }

    pub fn from_fn(dims: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let mut data = Vec::new();
        for_each_joint(&dims, |x| data.push(f(x)));
        DenseTensor::new(dims, data)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn get(&self, x: &[usize]) -> f64 {
        self.data[joint_index(&self.dims, x)]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// `f(x) − f(x with x_q → 0)` is non-zero for a coordinate outside the set.
    Dependence {
        coordinate: usize,
        point: Vec<usize>,
        value: f64,
    },
    /// `f(x) − f(x_p → 0) − f(x_q → 0) + f(x_p, x_q → 0)` is non-zero.
    MixedDifference {
        coordinates: (usize, usize),
        point: Vec<usize>,
        value: f64,
    },
}

impl Witness {
    pub fn value(&self) -> f64 {
        match self {
            Witness::Dependence { value, .. } | Witness::MixedDifference { value, .. } => *value,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Coverage {
    Exhaustive { points: usize },
    Sampled { probes: usize, points: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub decomposable: bool,
    /// Coordinates the components refer to, in order.
    pub coordinates: Vec<usize>,
    /// `components[k][x]` is the function of coordinate `coordinates[k]`.
    pub components: Vec<Vec<f64>>,
    /// Value of the constant function when the coordinate set is empty.
    pub constant: Option<f64>,
    pub max_residual: f64,
    pub witness: Option<Witness>,
    pub coverage: Coverage,
}

impl DecompositionReport {
    /// Shifts constants between components so every component is
    /// non-negative, keeping the sum unchanged.
    pub fn into_nonnegative(mut self) -> Result<Self> {
        if !self.decomposable {
            return Err(Error::Decomposition("function is not decomposable".into()));
        }
        if let Some(c) = self.constant {
            if c < 0.0 {
                return Err(Error::Decomposition(format!(
                    "constant function is negative ({c})"
                )));
            }
            return Ok(self);
        }
        repair_components(&mut self.components)?;
        Ok(self)
    }

    /// `Σ_k f_k(x_k)` at a full input point.
    pub fn reconstruct(&self, x: &[usize]) -> f64 {
        match self.constant {
            Some(c) => c,
            None => self
                .coordinates
                .iter()
                .zip(&self.components)
                .map(|(&c, f)| f[x[c]])
                .sum(),
        }
    }
}

pub const ENUMERATION_CAP: usize = 1_000_000;
pub const PROBES: usize = 10_000;

/// Decides whether `f(x) = Σ_{i ∈ coords} f_i(x_i)` with the baseline
/// anchored at index 0 of every coordinate.
pub fn check_additive(f: &DenseTensor, coords: &[usize], tol: f64) -> Result<DecompositionReport> {
    check_additive_capped(f, coords, tol, ENUMERATION_CAP)
}

pub fn check_additive_capped(
    f: &DenseTensor,
    coords: &[usize],
    tol: f64,
    cap: usize,
) -> Result<DecompositionReport> {
    let m = f.dims.len();
    if f.is_empty() {
        return Err(Error::Dimension("empty tensor".into()));
    }
    if let Some(&c) = coords.iter().find(|&&c| c >= m) {
        return Err(Error::Dimension(format!("coordinate {c} out of range")));
    }
    let mut sorted = coords.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != coords.len() {
        return Err(Error::Dimension("repeated coordinate".into()));
    }

    let base = vec![0usize; m];
    let f0 = f.get(&base);
    let (components, constant) = if coords.is_empty() {
        (Vec::new(), Some(f0))
    } else {
        let d = coords.len() as f64;
        let share = f0 * (d - 1.0) / d;
        let comps = coords
            .iter()
            .map(|&c| {
                (0..f.dims[c])
                    .map(|v| {
                        let mut x = base.clone();
                        x[c] = v;
                        f.get(&x) - share
                    })
                    .collect()
            })
            .collect();
        (comps, None)
    };
    let mut report = DecompositionReport {
        decomposable: true,
        coordinates: coords.to_vec(),
        components,
        constant,
        max_residual: 0.0,
        witness: None,
        coverage: Coverage::Exhaustive { points: f.len() },
    };

    let points = sample_points(f, cap);
    if let Some(n) = points.as_ref().map(Vec::len) {
        report.coverage = Coverage::Sampled {
            probes: n,
            points: f.len(),
        };
    }
    let mut residual: f64 = 0.0;
    visit(f, &points, |x| {
        residual = residual.max((f.get(x) - report.reconstruct(x)).abs());
    });
    report.max_residual = residual;
    if residual > tol {
        report.decomposable = false;
        report.witness = find_witness(f, coords, &points);
    }
    Ok(report)
}

fn sample_points(f: &DenseTensor, cap: usize) -> Option<Vec<Vec<usize>>> {
    if f.len() <= cap {
        return None;
    }
    let mut r = rng::stream(0, 0xadd1);
    Some(
        (0..PROBES)
            .map(|_| f.dims.iter().map(|&k| r.gen_range(0..k)).collect())
            .collect(),
    )
}

fn visit(f: &DenseTensor, points: &Option<Vec<Vec<usize>>>, mut g: impl FnMut(&[usize])) {
    match points {
        None => for_each_joint(&f.dims, g),
        Some(ps) => ps.iter().for_each(|x| g(x)),
    }
}

/// Largest anchored first difference (outside `coords`) or mixed second
/// difference (inside `coords`); the first maximum in enumeration order wins.
fn find_witness(
    f: &DenseTensor,
    coords: &[usize],
    points: &Option<Vec<Vec<usize>>>,
) -> Option<Witness> {
    let m = f.dims.len();
    let inside: Vec<bool> = (0..m).map(|c| coords.contains(&c)).collect();
    let mut best: Option<Witness> = None;
    let mut best_abs = 0.0;
    let mut offer = |w: Witness| {
        if w.value().abs() > best_abs {
            best_abs = w.value().abs();
            best = Some(w);
        }
    };
    visit(f, points, |x| {
        let fx = f.get(x);
        for q in 0..m {
            if x[q] == 0 {
                continue;
            }
            let mut xq = x.to_vec();
            xq[q] = 0;
            let fq = f.get(&xq);
            if !inside[q] {
                offer(Witness::Dependence {
                    coordinate: q,
                    point: x.to_vec(),
                    value: fx - fq,
                });
                continue;
            }
            for p in (0..q).filter(|&p| inside[p] && x[p] != 0) {
                let mut xp = x.to_vec();
                xp[p] = 0;
                let mut xpq = xp.clone();
                xpq[q] = 0;
                let v = fx - f.get(&xp) - fq + f.get(&xpq);
                offer(Witness::MixedDifference {
                    coordinates: (p, q),
                    point: x.to_vec(),
                    value: v,
                });
            }
        }
    });
    best
}
