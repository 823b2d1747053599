//! Evaluation of the interpolant pair `(f1, f2)`: sweep iteration of the
//! transfer operator on a grid, exact forward-orbit sampling, and the
//! recurrent chaos game. The orbit sampler and the chaos game serve as
//! independent oracles for the grid solution.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::construction::RifsModel;
use crate::error::{Error, Result};
use crate::model::DOMAIN_TOL;

/// Options for the grid solver.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Number of uniform base samples; must be a power of two plus one,
    /// at least 2^8 + 1.
    pub resolution: usize,
    /// Sup-norm residual at which iteration stops.
    pub tolerance: f64,
    pub max_iters: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            resolution: (1 << 12) + 1,
            tolerance: 1e-10,
            max_iters: 400,
        }
    }
}

/// The converged grid solution: sampled `(x, f1(x), f2(x))` in normalized
/// abscissas, with the iteration record.
#[derive(Debug, Clone)]
pub struct EvaluationGrid {
    pub xs: Vec<f64>,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub residual_history: Vec<f64>,
    pub tolerance: f64,
    /// Crude estimate of the piecewise-linear discretization error of the
    /// converged curve (midpoint second differences).
    pub interp_error_estimate: f64,
    /// Set when `tolerance` is finer than the estimated discretization floor,
    /// i.e. than `interp_error_estimate / (1 - S_bar)`.
    pub tolerance_below_grid_floor: bool,
}

impl EvaluationGrid {
    /// Linear interpolation of `f1` at a normalized abscissa.
    pub fn interp_f1(&self, x: f64) -> f64 {
        interp_sorted(&self.xs, &self.f1, x)
    }

    /// Linear interpolation of `f2` at a normalized abscissa.
    pub fn interp_f2(&self, x: f64) -> f64 {
        interp_sorted(&self.xs, &self.f2, x)
    }
}

/// Linear interpolation on a sorted abscissa array, exact at the samples
/// and clamped outside their range.
pub fn interp_sorted(xs: &[f64], vs: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return vs[0];
    }
    if x >= xs[n - 1] {
        return vs[n - 1];
    }
    let j = xs.partition_point(|&v| v <= x) - 1;
    if x == xs[j] {
        return vs[j];
    }
    let w = (x - xs[j]) / (xs[j + 1] - xs[j]);
    vs[j] + w * (vs[j + 1] - vs[j])
}

/// Builds the solver grid: the uniform dyadic samples merged with the node
/// abscissas, so every region and domain endpoint is a grid point exactly.
fn build_grid(model: &RifsModel, resolution: usize) -> Result<Vec<f64>> {
    if resolution < (1 << 8) + 1 || !(resolution - 1).is_power_of_two() {
        return Err(Error::InvalidResolution { resolution });
    }
    let base = resolution - 1;
    let mut pts: Vec<(f64, bool)> = (0..=base)
        .map(|j| (j as f64 / base as f64, false))
        .collect();
    pts.extend(model.dataset.unit_xs().iter().map(|&x| (x, true)));
    pts.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then_with(|| b.1.cmp(&a.1)) // nodes first among equals
    });
    let mut xs: Vec<f64> = Vec::with_capacity(pts.len());
    let merge_tol = 0.25 / base as f64;
    let mut last_is_node = false;
    for (x, is_node) in pts {
        match xs.last() {
            // collapse near-duplicates, preferring the node position
            Some(&prev) if x - prev < merge_tol * 1e-6 => {
                if is_node && !last_is_node {
                    *xs.last_mut().unwrap() = x;
                    last_is_node = true;
                }
            }
            _ => {
                xs.push(x);
                last_is_node = is_node;
            }
        }
    }
    Ok(xs)
}

struct SweepPlan {
    /// Per grid point: factor values at x.
    cs: Vec<f64>,
    csp: Vec<f64>,
    cst: Vec<f64>,
    cstp: Vec<f64>,
    /// Per grid point: shift values at the pre-image.
    q: Vec<f64>,
    qt: Vec<f64>,
    /// Per grid point: interpolation cell and weight for the pre-image.
    cell: Vec<usize>,
    weight: Vec<f64>,
}

fn build_plan(model: &RifsModel, xs: &[f64]) -> SweepPlan {
    let m = xs.len();
    let mut plan = SweepPlan {
        cs: Vec::with_capacity(m),
        csp: Vec::with_capacity(m),
        cst: Vec::with_capacity(m),
        cstp: Vec::with_capacity(m),
        q: Vec::with_capacity(m),
        qt: Vec::with_capacity(m),
        cell: Vec::with_capacity(m),
        weight: Vec::with_capacity(m),
    };
    for &x in xs {
        let r = model.region_of(x);
        let region = &model.regions[r];
        let dom = region.domain_interval();
        let t = dom.clamp(region.map.inverse_eval(x));
        plan.cs.push(region.factors.s.eval(x));
        plan.csp.push(region.factors.s_prime.eval(x));
        plan.cst.push(region.factors.s_tilde.eval(x));
        plan.cstp.push(region.factors.s_tilde_prime.eval(x));
        plan.q.push(region.eval_q(t));
        plan.qt.push(region.eval_q_tilde(t));
        let (cell, weight) = locate(xs, t);
        plan.cell.push(cell);
        plan.weight.push(weight);
    }
    plan
}

fn locate(xs: &[f64], t: f64) -> (usize, f64) {
    let n = xs.len();
    if t <= xs[0] {
        return (0, 0.0);
    }
    if t >= xs[n - 1] {
        return (n - 2, 1.0);
    }
    let j = xs.partition_point(|&v| v <= t) - 1;
    if t == xs[j] {
        return (j, 0.0);
    }
    ((j).min(n - 2), (t - xs[j]) / (xs[j + 1] - xs[j]))
}

/// Piecewise-linear interpolant of the node data on the grid; the starting
/// iterate, and the exact solution when all factors vanish.
fn node_interpolant(model: &RifsModel, xs: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let ds = &model.dataset;
    let nodes = ds.unit_xs();
    let ys: Vec<f64> = (0..ds.node_count()).map(|i| ds.y(i)).collect();
    let zs: Vec<f64> = (0..ds.node_count()).map(|i| ds.z(i)).collect();
    let f1 = xs.iter().map(|&x| interp_sorted(nodes, &ys, x)).collect();
    let f2 = xs.iter().map(|&x| interp_sorted(nodes, &zs, x)).collect();
    (f1, f2)
}

/// Iterates the transfer operator from the node interpolant until the
/// sup residual `|df1| + |df2|` drops below tolerance.
///
/// Pre-images are read off the previous iterate by linear interpolation
/// between grid samples; the interpolation weights are convex, so each sweep
/// contracts displacements by at least `S_bar` and the residual sequence is
/// geometric.
pub fn solve_fixed_point(model: &RifsModel, opts: &SolverOptions) -> Result<EvaluationGrid> {
    let xs = build_grid(model, opts.resolution)?;
    let plan = build_plan(model, &xs);
    let (mut f1, mut f2) = node_interpolant(model, &xs);
    let m = xs.len();
    let mut new_f1 = vec![0.0; m];
    let mut new_f2 = vec![0.0; m];
    let mut history = Vec::new();

    for iter in 1..=opts.max_iters {
        let mut residual: f64 = 0.0;
        for j in 0..m {
            let c = plan.cell[j];
            let w = plan.weight[j];
            let h1 = f1[c] + w * (f1[c + 1] - f1[c]);
            let h2 = f2[c] + w * (f2[c + 1] - f2[c]);
            let v1 = plan.cs[j] * h1 + plan.csp[j] * h2 + plan.q[j];
            let v2 = plan.cst[j] * h1 + plan.cstp[j] * h2 + plan.qt[j];
            residual = residual.max((v1 - f1[j]).abs() + (v2 - f2[j]).abs());
            new_f1[j] = v1;
            new_f2[j] = v2;
        }
        std::mem::swap(&mut f1, &mut new_f1);
        std::mem::swap(&mut f2, &mut new_f2);
        history.push(residual);
        if residual < opts.tolerance {
            let est = interp_error_estimate(&xs, &f1, &f2);
            let floor = est / (1.0 - model.s_bar);
            return Ok(EvaluationGrid {
                xs,
                f1,
                f2,
                iterations: iter,
                residual,
                residual_history: history,
                tolerance: opts.tolerance,
                interp_error_estimate: est,
                tolerance_below_grid_floor: opts.tolerance < floor,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iters,
        residual: *history.last().unwrap_or(&f64::NAN),
        history,
    })
}

/// Midpoint second-difference estimate of the piecewise-linear
/// representation error of the converged curve.
fn interp_error_estimate(xs: &[f64], f1: &[f64], f2: &[f64]) -> f64 {
    let mut est: f64 = 0.0;
    for j in 1..xs.len().saturating_sub(1) {
        let w = (xs[j] - xs[j - 1]) / (xs[j + 1] - xs[j - 1]);
        let p1 = f1[j - 1] + w * (f1[j + 1] - f1[j - 1]);
        let p2 = f2[j - 1] + w * (f2[j + 1] - f2[j - 1]);
        est = est.max((p1 - f1[j]).abs() + (p2 - f2[j]).abs());
    }
    est
}

/// A graph point produced by forward application of the region maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitSample {
    pub x: f64,
    pub f1: f64,
    pub f2: f64,
    /// Composition depth that produced the sample (0 for the nodes).
    pub depth: usize,
}

/// A set of exact graph points.
#[derive(Debug, Clone, Default)]
pub struct OrbitSampleSet {
    pub samples: Vec<OrbitSample>,
}

impl OrbitSampleSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Starting from the node triples, applies every region transformation to
/// every accumulated sample lying in that region's domain, up to
/// `max_depth` compositions. Values propagate through the vertical maps
/// exactly, so every sample is a graph point of the interpolant.
pub fn orbit_samples(model: &RifsModel, max_depth: usize) -> OrbitSampleSet {
    let ds = &model.dataset;
    let mut all = Vec::new();
    let mut frontier: Vec<OrbitSample> = (0..ds.node_count())
        .map(|i| OrbitSample {
            x: ds.unit_x(i),
            f1: ds.y(i),
            f2: ds.z(i),
            depth: 0,
        })
        .collect();
    all.extend(frontier.iter().copied());

    for depth in 1..=max_depth {
        let mut next = Vec::new();
        for sample in &frontier {
            for region in &model.regions {
                if region.domain_interval().contains(sample.x, DOMAIN_TOL) {
                    let x = region.map.eval(sample.x);
                    let (f1, f2) = region.eval_f_unchecked(sample.x, sample.f1, sample.f2);
                    next.push(OrbitSample { x, f1, f2, depth });
                }
            }
        }
        // collapse duplicate abscissas (endpoints are shared between regions)
        next.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap());
        next.dedup_by(|a, b| (a.x - b.x).abs() < 1e-15);
        all.extend(next.iter().copied());
        frontier = next;
    }
    OrbitSampleSet { samples: all }
}

/// Recurrent random iteration: starting from a node, repeatedly picks a
/// region whose domain contains the current region and applies its
/// transformation, emitting `n_points` samples after a 100-step burn-in.
/// Deterministic for a fixed seed.
pub fn chaos_game(model: &RifsModel, n_points: usize, seed: u64) -> Result<OrbitSampleSet> {
    let n = model.n_regions();
    // successors[s] = regions t whose domain contains region s
    let mut successors: Vec<Vec<usize>> = Vec::with_capacity(n);
    for s in 0..n {
        let succ = model.connection.support(s);
        if succ.is_empty() {
            return Err(Error::UnreachableRegion { region: s });
        }
        successors.push(succ);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ds = &model.dataset;
    let mut x = ds.unit_x(0);
    let mut f1 = ds.y(0);
    let mut f2 = ds.z(0);
    let mut current = 0usize;

    let burn_in = 100;
    let mut samples = Vec::with_capacity(n_points);
    for step in 0..burn_in + n_points {
        let succ = &successors[current];
        let t = succ[rng.gen_range(0..succ.len())];
        let region = &model.regions[t];
        let (g1, g2) = region.eval_f_unchecked(x, f1, f2);
        x = region.map.eval(x);
        f1 = g1;
        f2 = g2;
        current = t;
        if step >= burn_in {
            samples.push(OrbitSample {
                x,
                f1,
                f2,
                depth: step + 1,
            });
        }
    }
    Ok(OrbitSampleSet { samples })
}

/// A priori bound `B` with `sup|f1| + sup|f2| <= B`, from the fixed-point
/// equation and the contraction norm:
/// `B = (max_r sup|q_r| + max_r sup|q~_r|) / (1 - S_bar)`.
/// Returned for both components (each is bounded by the sum).
pub fn sup_norm_bound(model: &RifsModel) -> (f64, f64) {
    let q_max = model
        .regions
        .iter()
        .map(|r| r.shift.sup_q_bound)
        .fold(0.0, f64::max);
    let qt_max = model
        .regions
        .iter()
        .map(|r| r.shift.sup_q_tilde_bound)
        .fold(0.0, f64::max);
    let b = (q_max + qt_max) / (1.0 - model.s_bar);
    (b, b)
}
