//! Planner's problem: maximize aggregate net surplus over the triangle
//! `0 <= z_l <= z_h <= zbar`, then read off the delegation interval.
//!
//! The search is a coarse grid over the triangle (diagonal included, where the
//! objective is the single-reaction pooling surplus) followed by a local
//! refinement chosen by where the grid optimum sits: golden-section along the
//! `z_l = 0` edge or the diagonal, Nelder–Mead with projection in the interior.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::SenderDist;
use crate::error::Result;
use crate::model::ModelParams;
use crate::separating::SeparatingPath;
use crate::surplus::{pi_p, pi_s, pi_w, separating_part, SurplusBreakdown, TailMoments};
use crate::thresholds::{evaluate, pooled_root, tail_is_degenerate, EquilibriumClass, Thresholds};
use crate::EFFECTIVE_ZERO;

/// Gap between the best grid cell and a rival that counts as a flat objective.
const FLAT_GAP: f64 = 1e-10;
const GOLDEN: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Refinement {
    /// Golden-section on the boundaries, Nelder–Mead inside.
    Auto,
    /// Report the best grid cell.
    GridOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerOptions {
    /// Grid points per axis, boundaries included.
    pub grid: usize,
    /// Coordinate tolerance of the refinement stage.
    pub tol: f64,
    /// Surplus gap under which two candidates are considered tied.
    pub tie: f64,
    pub refinement: Refinement,
    pub max_iter: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            grid: 61,
            tol: 1e-6,
            tie: 1e-9,
            refinement: Refinement::Auto,
            max_iter: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMethod {
    Grid,
    GoldenEdge,
    GoldenDiagonal,
    NelderMead,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub grid: usize,
    pub grid_best: [f64; 2],
    pub grid_value: f64,
    pub method: SearchMethod,
    pub iterations: usize,
    pub evaluations: usize,
    /// A non-neighbouring grid cell came within `1e-10` of the best one.
    pub flat_objective: bool,
    /// A tie rule decided between candidates.
    pub tie_broken: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelegationOutcome {
    pub thresholds: Thresholds,
    /// Optimal reaction interval `[t_l, t_h]`.
    pub interval: [f64; 2],
    pub surplus: SurplusBreakdown,
    /// Surplus under full delegation.
    pub pi_s: f64,
    /// `G(z_h)`.
    pub percentile_zh: f64,
    pub diagnostics: Diagnostics,
}

/// Objective over the grid: `values[i][j - i]` is the surplus at
/// `(z_i, z_j)` for `j >= i`.
#[derive(Debug, Clone)]
pub struct SurplusGrid {
    pub nodes: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl SurplusGrid {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i][j - i]
    }

    /// Best cell by value, ties resolved toward the earliest `(i, j)`.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut best_value = f64::NEG_INFINITY;
        for (i, row) in self.values.iter().enumerate() {
            for (off, &v) in row.iter().enumerate() {
                if v > best_value {
                    best_value = v;
                    best = (i, i + off);
                }
            }
        }
        best
    }
}

/// Evaluate the surplus on a `n x n` triangular grid over `[0, zbar]`.
///
/// Rows share one separating path and accumulate the separating integral
/// segment by segment; columns share their tail moments.
pub fn surplus_grid(p: &ModelParams, d: &SenderDist, n: usize) -> Result<SurplusGrid> {
    let n = n.max(3);
    let zbar = d.zbar();
    let nodes: Vec<f64> = (0..n).map(|i| zbar * i as f64 / (n - 1) as f64).collect();

    let tails: Vec<Option<TailMoments>> = nodes
        .par_iter()
        .map(|&z| {
            if tail_is_degenerate(d, z) {
                Ok(None)
            } else {
                TailMoments::at(p, d, z).map(Some)
            }
        })
        .collect::<Result<_>>()?;

    let mut values: Vec<Vec<f64>> = (0..n - 1)
        .into_par_iter()
        .map(|i| grid_row(p, d, &nodes, &tails, i))
        .collect::<Result<_>>()?;
    // z_l = zbar admits nobody
    values.push(vec![0.0]);
    Ok(SurplusGrid { nodes, values })
}

fn grid_row(p: &ModelParams, d: &SenderDist, nodes: &[f64], tails: &[Option<TailMoments>], i: usize) -> Result<Vec<f64>> {
    let z_l = nodes[i];
    let path = SeparatingPath::new(p, d, z_l)?;
    let mut row = Vec::with_capacity(nodes.len() - i);
    row.push(pi_p(p, d, z_l)?);
    let mut sep = 0.0;
    for j in i + 1..nodes.len() {
        sep += separating_part(p, d, &path, nodes[j - 1], nodes[j])?;
        let pool = match &tails[j] {
            None => 0.0,
            Some(tail) => {
                let sigma = path.sigma_tilde(nodes[j])?;
                let s_h = pooled_root(p, nodes[j], sigma, tail.mean)?;
                tail.pooled_surplus(p, s_h)
            }
        };
        row.push(sep + pool);
    }
    Ok(row)
}

struct Objective<'a> {
    p: &'a ModelParams,
    d: &'a SenderDist,
    evaluations: usize,
}

impl Objective<'_> {
    fn at(&mut self, z_l: f64, z_h: f64) -> Result<f64> {
        self.evaluations += 1;
        let zbar = self.d.zbar();
        let z_l = z_l.clamp(0.0, zbar * (1.0 - 1e-12));
        let z_h = z_h.clamp(z_l, zbar);
        let path = SeparatingPath::new(self.p, self.d, z_l)?;
        Ok(pi_w(self.p, self.d, &path, z_h)?.total)
    }

    fn diagonal(&mut self, z: f64) -> Result<f64> {
        self.evaluations += 1;
        pi_p(self.p, self.d, z.clamp(0.0, self.d.zbar() * (1.0 - 1e-12)))
    }
}

/// Golden-section maximization on `[lo, hi]`, endpoints included.
fn golden_max<F: FnMut(f64) -> Result<f64>>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64, usize)> {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - GOLDEN * (b - a);
    let mut e = a + GOLDEN * (b - a);
    let mut fc = f(c)?;
    let mut fe = f(e)?;
    let mut iterations = 0;
    while b - a > tol && iterations < 200 {
        iterations += 1;
        if fc >= fe {
            b = e;
            e = c;
            fe = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + GOLDEN * (b - a);
            fe = f(e)?;
        }
    }
    let mut best = if fc >= fe { (c, fc) } else { (e, fe) };
    for x in [lo, hi] {
        let fx = f(x)?;
        if fx > best.1 {
            best = (x, fx);
        }
    }
    Ok((best.0, best.1, iterations))
}

/// Nelder–Mead maximization over the triangle, projecting trial points back
/// onto `0 <= x[0] <= x[1] <= zbar`.
fn nelder_mead_max<F: FnMut([f64; 2]) -> Result<f64>>(
    mut f: F,
    start: [f64; 2],
    step: f64,
    zbar: f64,
    tol: f64,
    max_iter: usize,
) -> Result<([f64; 2], f64, usize)> {
    let project = |x: [f64; 2]| {
        let z_l = x[0].clamp(0.0, zbar);
        [z_l, x[1].clamp(z_l, zbar)]
    };
    let mut simplex: Vec<([f64; 2], f64)> = Vec::with_capacity(3);
    for v in [start, [start[0] + step, start[1]], [start[0], start[1] + step]] {
        let v = project(v);
        simplex.push((v, f(v)?));
    }
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
        let diameter = simplex
            .iter()
            .flat_map(|a| simplex.iter().map(move |b| (a.0[0] - b.0[0]).abs().max((a.0[1] - b.0[1]).abs())))
            .fold(0.0, f64::max);
        if diameter <= tol {
            break;
        }
        let centroid = [
            0.5 * (simplex[0].0[0] + simplex[1].0[0]),
            0.5 * (simplex[0].0[1] + simplex[1].0[1]),
        ];
        let toward = |t: f64| {
            let w = simplex[2].0;
            project([centroid[0] + t * (centroid[0] - w[0]), centroid[1] + t * (centroid[1] - w[1])])
        };
        let reflected = toward(1.0);
        let f_r = f(reflected)?;
        if f_r > simplex[0].1 {
            let expanded = toward(2.0);
            let f_e = f(expanded)?;
            simplex[2] = if f_e > f_r { (expanded, f_e) } else { (reflected, f_r) };
        } else if f_r > simplex[1].1 {
            simplex[2] = (reflected, f_r);
        } else {
            let contracted = if f_r > simplex[2].1 { toward(0.5) } else { toward(-0.5) };
            let f_c = f(contracted)?;
            if f_c > simplex[2].1.max(f_r.min(simplex[2].1)) {
                simplex[2] = (contracted, f_c);
            } else {
                let best = simplex[0].0;
                for vertex in simplex.iter_mut().skip(1) {
                    let v = project([
                        best[0] + 0.5 * (vertex.0[0] - best[0]),
                        best[1] + 0.5 * (vertex.0[1] - best[1]),
                    ]);
                    *vertex = (v, f(v)?);
                }
            }
        }
    }
    simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok((simplex[0].0, simplex[0].1, iterations))
}

fn flat_objective(grid: &SurplusGrid, best: (usize, usize)) -> bool {
    let top = grid.value(best.0, best.1);
    grid.values.iter().enumerate().any(|(i, row)| {
        row.iter().enumerate().any(|(off, &v)| {
            let j = i + off;
            let far = i.abs_diff(best.0) > 1 || j.abs_diff(best.1) > 1;
            far && v >= top - FLAT_GAP
        })
    })
}

/// Solve the planner's problem and assemble the optimal delegation outcome.
pub fn optimize(p: &ModelParams, d: &SenderDist, opts: &OptimizerOptions) -> Result<DelegationOutcome> {
    p.validate()?;
    let zbar = d.zbar();
    let grid = surplus_grid(p, d, opts.grid)?;
    let n = grid.nodes.len();
    let h = grid.nodes[1];

    let mut best = grid.argmax();
    let best_value = grid.value(best.0, best.1);
    let flat = flat_objective(&grid, best);
    let mut tie_broken = false;

    // Prefer no exclusion when it is as good as the best cell.
    if best.0 != 0 {
        let edge = (0..n).max_by(|&a, &b| grid.value(0, a).total_cmp(&grid.value(0, b)).then(a.cmp(&b))).unwrap_or(0);
        if grid.value(0, edge) >= best_value - opts.tie {
            best = (0, edge);
            tie_broken = true;
        }
    }
    // Prefer separation over pooling when they tie.
    if best.0 == best.1 {
        let row = &grid.values[best.0];
        if let Some(off) = (1..row.len()).rev().find(|&off| row[off] >= row[0] - opts.tie) {
            best = (best.0, best.0 + off);
            tie_broken = true;
        }
    }
    let grid_point = [grid.nodes[best.0], grid.nodes[best.1]];
    let grid_value = grid.value(best.0, best.1);

    let mut objective = Objective { p, d, evaluations: 0 };
    let (mut point, mut method, mut iterations) = (grid_point, SearchMethod::Grid, 0);
    if opts.refinement == Refinement::Auto {
        let (candidate, candidate_value, m, it) = if best.0 == 0 && best.1 > 0 {
            let lo = grid.nodes[best.1 - 1];
            let hi = grid.nodes[(best.1 + 1).min(n - 1)];
            let (z, v, it) = golden_max(|z| objective.at(0.0, z), lo, hi, opts.tol)?;
            ([0.0, z], v, SearchMethod::GoldenEdge, it)
        } else if best.0 == best.1 {
            let lo = grid.nodes[best.0.saturating_sub(1)];
            let hi = grid.nodes[(best.0 + 1).min(n - 2)];
            let (z, v, it) = golden_max(|z| objective.diagonal(z), lo, hi, opts.tol)?;
            ([z, z], v, SearchMethod::GoldenDiagonal, it)
        } else {
            let (x, v, it) = nelder_mead_max(
                |x| objective.at(x[0], x[1]),
                grid_point,
                0.5 * h,
                zbar,
                opts.tol,
                opts.max_iter,
            )?;
            (x, v, SearchMethod::NelderMead, it)
        };
        if candidate_value >= grid_value {
            point = candidate;
            method = m;
            iterations = it;
        }
    }

    let z_l = if point[0] < EFFECTIVE_ZERO { 0.0 } else { point[0] };
    let path = SeparatingPath::new(p, d, z_l)?;
    let thresholds = evaluate(p, d, &path, point[1])?;
    let surplus = pi_w(p, d, &path, thresholds.z_h)?;
    let full = SeparatingPath::new(p, d, 0.0)?;
    let pi_full = pi_s(p, d, &full)?;

    Ok(DelegationOutcome {
        thresholds,
        interval: [thresholds.t_l, thresholds.t_h],
        surplus,
        pi_s: pi_full,
        percentile_zh: d.cdf(thresholds.z_h),
        diagnostics: Diagnostics {
            grid: n,
            grid_best: grid_point,
            grid_value,
            method,
            iterations,
            evaluations: objective.evaluations,
            flat_objective: flat,
            tie_broken,
        },
    })
}

impl DelegationOutcome {
    pub fn class(&self) -> EquilibriumClass {
        self.thresholds.class
    }
}
