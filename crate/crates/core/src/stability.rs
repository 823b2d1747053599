//! Stability of the interpolant under perturbation of the data: the
//! piecewise-affine abscissa rescaling, system conjugation, closed-form
//! sup-norm bounds for each perturbation kind, and a randomized harness that
//! certifies every bound on concrete perturbations.
//!
//! Bounds are stated for the first component `f1` in normalized abscissas.
//! The hidden-ordinate coefficient is `2 omega / (1 - omega - omega~)`: the
//! second shift function is built on the chord through the region-endpoint
//! hidden ordinates, so a hidden perturbation moves both that chord and the
//! domain chord, and each contributes one `omega` term to the recursion.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::construction::{assemble_with_maps, RifsModel};
use crate::error::{Error, Result};
use crate::evaluator::{solve_fixed_point, EvaluationGrid, SolverOptions};
use crate::map::{Map1D, PlMap};
use crate::model::{
    validate_dataset, validate_partition, ExtendedDataset, FactorQuad, FactorSet, Interval,
    Orientation, PartitionSpec,
};
use crate::smoothness::SmoothnessReport;

/// What was perturbed. Each kind maps to one of the four certified bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbationKind {
    Abscissa,
    Ordinate,
    Hidden,
    Combined,
}

impl PerturbationKind {
    /// Report label for the bound exercised by this kind.
    pub fn theorem_tag(self) -> u8 {
        match self {
            PerturbationKind::Abscissa => 4,
            PerturbationKind::Ordinate => 5,
            PerturbationKind::Hidden => 6,
            PerturbationKind::Combined => 7,
        }
    }

    pub fn from_theorem_tag(tag: u8) -> Option<Self> {
        match tag {
            4 => Some(PerturbationKind::Abscissa),
            5 => Some(PerturbationKind::Ordinate),
            6 => Some(PerturbationKind::Hidden),
            7 => Some(PerturbationKind::Combined),
            _ => None,
        }
    }
}

/// Per-node displacements, in raw data coordinates. Abscissa displacements
/// must fix both endpoints and preserve order.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub kind: PerturbationKind,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    pub dz: Vec<f64>,
}

impl Perturbation {
    pub fn zero(kind: PerturbationKind, node_count: usize) -> Self {
        Perturbation {
            kind,
            dx: vec![0.0; node_count],
            dy: vec![0.0; node_count],
            dz: vec![0.0; node_count],
        }
    }

    /// Largest displacement per coordinate, `(max|dx|, max|dy|, max|dz|)`.
    pub fn magnitudes(&self) -> (f64, f64, f64) {
        let m = |v: &[f64]| v.iter().map(|d| d.abs()).fold(0.0, f64::max);
        (m(&self.dx), m(&self.dy), m(&self.dz))
    }

    /// The same direction scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Perturbation {
        Perturbation {
            kind: self.kind,
            dx: self.dx.iter().map(|d| d * factor).collect(),
            dy: self.dy.iter().map(|d| d * factor).collect(),
            dz: self.dz.iter().map(|d| d * factor).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        let z = |v: &[f64]| v.iter().all(|&d| d == 0.0);
        z(&self.dx) && z(&self.dy) && z(&self.dz)
    }

    /// The displacement vectors allowed to be nonzero for this kind.
    pub fn kind_consistent(&self) -> bool {
        let z = |v: &[f64]| v.iter().all(|&d| d == 0.0);
        match self.kind {
            PerturbationKind::Abscissa => z(&self.dy) && z(&self.dz),
            PerturbationKind::Ordinate => z(&self.dx) && z(&self.dz),
            PerturbationKind::Hidden => z(&self.dx) && z(&self.dy),
            PerturbationKind::Combined => true,
        }
    }

    /// Applies the displacements to the dataset's raw nodes and re-validates.
    pub fn apply(&self, ds: &ExtendedDataset) -> Result<ExtendedDataset> {
        let nodes = ds.raw_nodes();
        let n_last = nodes.len() - 1;
        if self.dx[0] != 0.0 || self.dx[n_last] != 0.0 {
            return Err(Error::EndpointMoved);
        }
        let perturbed: Vec<(f64, f64, f64)> = nodes
            .iter()
            .enumerate()
            .map(|(i, &(x, y, z))| (x + self.dx[i], y + self.dy[i], z + self.dz[i]))
            .collect();
        for w in perturbed.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::OrderViolated);
            }
        }
        validate_dataset(&perturbed)
    }
}

/// The piecewise-affine change of abscissas carrying the original nodes onto
/// the perturbed ones (normalized coordinates). Affine on each region,
/// fixing both endpoints.
pub fn rescale_map(original: &ExtendedDataset, perturbed: &ExtendedDataset) -> Result<PlMap> {
    if original.node_count() != perturbed.node_count() {
        return Err(Error::Config(
            "rescale map needs equally sized node sets".into(),
        ));
    }
    let last = original.node_count() - 1;
    if original.raw_x(0) != perturbed.raw_x(0) || original.raw_x(last) != perturbed.raw_x(last) {
        return Err(Error::EndpointMoved);
    }
    let xs = original.unit_xs().to_vec();
    let ys = perturbed.unit_xs().to_vec();
    PlMap::new(xs, ys)
}

/// Builds the perturbed system for a model: the region maps conjugated by
/// the rescaling, the factors carried over by the per-region affine change
/// of variables, and the shift chords rebuilt on the perturbed data.
///
/// A perturbation that leaves every abscissa bit-identical reuses the
/// original maps and factors unchanged, so a zero perturbation reproduces
/// the model exactly.
pub fn perturbed_model(model: &RifsModel, pert: &Perturbation) -> Result<RifsModel> {
    let ds = &model.dataset;
    let pert_ds = pert.apply(ds)?;
    let spec = PartitionSpec {
        domains: model.partition.domains.clone(),
        domain_for_region: model.partition.domain_for_region.clone(),
        orientation: model.partition.orientation.clone(),
    };
    let partition = validate_partition(&pert_ds, &spec)?;

    let abscissas_moved = ds
        .unit_xs()
        .iter()
        .zip(pert_ds.unit_xs())
        .any(|(a, b)| a.to_bits() != b.to_bits());

    let n = model.n_regions();
    let (maps, factors) = if !abscissas_moved {
        let maps = model.regions.iter().map(|r| r.map.clone()).collect();
        let quads = model.regions.iter().map(|r| r.factors.clone()).collect();
        (maps, FactorSet::new(quads)?)
    } else {
        let rescale = rescale_map(ds, &pert_ds)?;
        let mut maps = Vec::with_capacity(n);
        let mut quads = Vec::with_capacity(n);
        for r in 0..n {
            maps.push(conjugate_region_map(model, &pert_ds, &rescale, r)?);
            quads.push(conjugate_quad(model, ds, &pert_ds, r));
        }
        (maps, FactorSet::new(quads)?)
    };

    assemble_with_maps(&pert_ds, &partition, &factors, maps)
}

/// Conjugates a model by an explicit abscissa rescaling, leaving ordinates
/// alone: the maps become `R . L . R^-1` and the factors compose with the
/// per-region inverse affine piece of `R`. An identity rescaling returns the
/// model unchanged.
pub fn conjugate_model(model: &RifsModel, rescale: &PlMap) -> Result<RifsModel> {
    let (xs, ys) = rescale.knots();
    if xs != model.dataset.unit_xs() {
        return Err(Error::Config(
            "rescale knots must be the model's node abscissas".into(),
        ));
    }
    let dx: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(&a, &b)| (b - a) * model.dataset.x_scale())
        .collect();
    let n = model.dataset.node_count();
    let pert = Perturbation {
        kind: PerturbationKind::Abscissa,
        dx,
        dy: vec![0.0; n],
        dz: vec![0.0; n],
    };
    perturbed_model(model, &pert)
}

/// The conjugated map `R . L . R^-1` for region `r`, represented by its
/// knots at the perturbed nodes spanning the domain. Endpoint images are
/// taken from the known node correspondence rather than evaluated, so the
/// endpoint conditions survive conjugation exactly.
fn conjugate_region_map(
    model: &RifsModel,
    pert_ds: &ExtendedDataset,
    rescale: &PlMap,
    r: usize,
) -> Result<Map1D> {
    let k = model.partition.domain_for_region[r];
    let (s_idx, e_idx) = model.partition.domains[k];
    let orientation = model.partition.orientation[r];
    let base_map = &model.regions[r].map;

    let mut knot_in = Vec::with_capacity(e_idx - s_idx + 1);
    let mut knot_out = Vec::with_capacity(e_idx - s_idx + 1);
    for j in s_idx..=e_idx {
        knot_in.push(pert_ds.unit_x(j));
        let out = if j == s_idx {
            match orientation {
                Orientation::Increasing => pert_ds.unit_x(r),
                Orientation::Decreasing => pert_ds.unit_x(r + 1),
            }
        } else if j == e_idx {
            match orientation {
                Orientation::Increasing => pert_ds.unit_x(r + 1),
                Orientation::Decreasing => pert_ds.unit_x(r),
            }
        } else {
            rescale.eval(base_map.eval(model.dataset.unit_x(j)))
        };
        knot_out.push(out);
    }
    Ok(Map1D::Piecewise(PlMap::new(knot_in, knot_out)?))
}

/// Carries region `r`'s factors onto the perturbed region by composing with
/// the inverse of the affine piece of the rescaling on that region.
fn conjugate_quad(
    model: &RifsModel,
    ds: &ExtendedDataset,
    pert_ds: &ExtendedDataset,
    r: usize,
) -> FactorQuad {
    let x_lo = ds.unit_x(r);
    let x_hi = ds.unit_x(r + 1);
    let p_lo = pert_ds.unit_x(r);
    let p_hi = pert_ds.unit_x(r + 1);
    // R^-1 restricted to the perturbed region: x = c + d x*
    let d = (x_hi - x_lo) / (p_hi - p_lo);
    let c = x_lo - d * p_lo;
    let iv = Interval::new(p_lo, p_hi);
    let quad = &model.regions[r].factors;
    FactorQuad {
        s: quad.s.compose_affine(c, d, iv),
        s_prime: quad.s_prime.compose_affine(c, d, iv),
        s_tilde: quad.s_tilde.compose_affine(c, d, iv),
        s_tilde_prime: quad.s_tilde_prime.compose_affine(c, d, iv),
    }
}

/// The constants entering the closed-form bounds.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StabilityConstants {
    pub omega: f64,
    pub omega_tilde: f64,
    /// Abscissa-coupling constant
    /// `N = 12 omega (|y|_max + |z|_max) / |I~|_min^2`, with `|I~|_min` the
    /// smallest domain length over the original and the perturbed systems.
    #[serde(rename = "N")]
    pub n_const: f64,
    pub tau: f64,
    #[serde(rename = "L1")]
    pub l1: f64,
    #[serde(rename = "L2")]
    pub l2: f64,
    pub itilde_min: f64,
}

impl StabilityConstants {
    /// The shared combined bound; the single-coordinate bounds are the
    /// restrictions with the other displacements zero, term by term.
    pub fn bound(&self, dx: f64, dy: f64, dz: f64) -> f64 {
        let denom = 1.0 - self.omega - self.omega_tilde;
        let cx = self.l1 * (1.0 + self.omega - self.omega_tilde)
            + 2.0 * self.omega * self.l2
            + self.omega * self.n_const;
        let cy = 1.0 + 2.0 * self.omega - self.omega_tilde;
        let cz = 2.0 * self.omega;
        let x_term = if dx == 0.0 { 0.0 } else { cx * dx.powf(self.tau) };
        (x_term + cy * dy + cz * dz) / denom
    }
}

/// Computes the bound constants for a model/perturbed-model pair.
///
/// Requires `omega + omega~ < ratio_min / ratio_max` (which also forces the
/// denominator `1 - omega - omega~` positive); both are asserted explicitly.
pub fn stability_constants(
    model: &RifsModel,
    perturbed: &RifsModel,
    smoothness: &SmoothnessReport,
) -> Result<StabilityConstants> {
    let omega = model.omega_max();
    let omega_tilde = model.omega_tilde_max();
    let limit = model.metadata.ratio_min / model.metadata.ratio_max;
    if omega + omega_tilde >= limit {
        return Err(Error::HypothesisViolated {
            region: None,
            value: omega + omega_tilde,
            limit,
        });
    }
    if omega + omega_tilde >= 1.0 {
        return Err(Error::HypothesisViolated {
            region: None,
            value: omega + omega_tilde,
            limit: 1.0,
        });
    }
    let itilde_min = model
        .metadata
        .domain_len_min
        .min(perturbed.metadata.domain_len_min);
    let y_max = model.dataset.max_abs_y();
    let z_max = model.dataset.max_abs_z();
    let n_const = 12.0 * omega * (y_max + z_max) / (itilde_min * itilde_min);
    Ok(StabilityConstants {
        omega,
        omega_tilde,
        n_const,
        tau: smoothness.tau1.min(smoothness.tau2),
        l1: smoothness.l1,
        l2: smoothness.l2,
        itilde_min,
    })
}

/// One certified comparison: the closed-form bound against the measured
/// sup-norm difference of the two grid solutions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityReport {
    pub theorem: u8,
    pub kind: PerturbationKind,
    pub magnitudes: (f64, f64, f64),
    pub theoretical_bound: f64,
    pub empirical_sup: f64,
    /// `theoretical_bound - empirical_sup`; the bound holds when this is at
    /// least `-tolerance_budget`.
    pub margin: f64,
    /// Comparison error allowance, twice the solver tolerance.
    pub tolerance_budget: f64,
    pub constants: StabilityConstants,
}

impl StabilityReport {
    pub fn within_bound(&self) -> bool {
        self.margin >= -self.tolerance_budget
    }
}

/// Sup of `|f1 - f1*|` over the union of the two grids, reading each curve
/// by linear interpolation where the abscissa sets differ.
pub fn sup_f1_difference(a: &EvaluationGrid, b: &EvaluationGrid) -> f64 {
    let mut sup: f64 = 0.0;
    for (&x, &v) in a.xs.iter().zip(&a.f1) {
        sup = sup.max((v - b.interp_f1(x)).abs());
    }
    for (&x, &v) in b.xs.iter().zip(&b.f1) {
        sup = sup.max((v - a.interp_f1(x)).abs());
    }
    sup
}

/// Certifies one perturbation: solves the perturbed system and compares the
/// measured deviation against the closed-form bound. Displacement magnitudes
/// enter the bound in normalized abscissa units.
pub fn certify(
    model: &RifsModel,
    base_grid: &EvaluationGrid,
    smoothness: &SmoothnessReport,
    pert: &Perturbation,
    opts: &SolverOptions,
) -> Result<StabilityReport> {
    if !pert.kind_consistent() {
        return Err(Error::Config(format!(
            "perturbation marked {:?} moves coordinates outside that kind",
            pert.kind
        )));
    }
    let perturbed = perturbed_model(model, pert)?;
    let pert_grid = solve_fixed_point(&perturbed, opts)?;
    let constants = stability_constants(model, &perturbed, smoothness)?;
    let (dx_raw, dy, dz) = pert.magnitudes();
    let dx = dx_raw / model.dataset.x_scale();
    let (bx, by, bz) = match pert.kind {
        PerturbationKind::Abscissa => (dx, 0.0, 0.0),
        PerturbationKind::Ordinate => (0.0, dy, 0.0),
        PerturbationKind::Hidden => (0.0, 0.0, dz),
        PerturbationKind::Combined => (dx, dy, dz),
    };
    let theoretical_bound = constants.bound(bx, by, bz);
    let empirical_sup = sup_f1_difference(base_grid, &pert_grid);
    Ok(StabilityReport {
        theorem: pert.kind.theorem_tag(),
        kind: pert.kind,
        magnitudes: (dx, dy, dz),
        theoretical_bound,
        empirical_sup,
        margin: theoretical_bound - empirical_sup,
        tolerance_budget: 2.0 * opts.tolerance,
        constants,
    })
}

/// Draws a random perturbation of the given kind with displacements uniform
/// in the requested boxes; abscissa draws are rejected until order, endpoint
/// and contraction constraints survive.
pub fn sample_perturbation(
    model: &RifsModel,
    kind: PerturbationKind,
    max_dx: f64,
    max_dy: f64,
    max_dz: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Perturbation> {
    let ds = &model.dataset;
    let n = ds.node_count();
    let attempts = 1000;
    for _ in 0..attempts {
        let mut pert = Perturbation::zero(kind, n);
        let draw = |rng: &mut ChaCha8Rng, m: f64| {
            if m == 0.0 {
                0.0
            } else {
                rng.gen_range(-m..=m)
            }
        };
        match kind {
            PerturbationKind::Abscissa | PerturbationKind::Combined => {
                for i in 1..n - 1 {
                    pert.dx[i] = draw(rng, max_dx);
                }
            }
            _ => {}
        }
        match kind {
            PerturbationKind::Ordinate | PerturbationKind::Combined => {
                for i in 0..n {
                    pert.dy[i] = draw(rng, max_dy);
                }
            }
            _ => {}
        }
        match kind {
            PerturbationKind::Hidden | PerturbationKind::Combined => {
                for i in 0..n {
                    pert.dz[i] = draw(rng, max_dz);
                }
            }
            _ => {}
        }
        // reject draws that break the perturbed system's validity
        match perturbed_model(model, &pert) {
            Ok(_) => return Ok(pert),
            Err(_) => continue,
        }
    }
    Err(Error::PerturbationRejected {
        attempts,
        reason: "perturbed system never validated at this magnitude".into(),
    })
}

/// One row of a harness sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub magnitudes: (f64, f64, f64),
    pub bound: f64,
    pub empirical: f64,
    pub margin: f64,
}

/// A randomized certification sweep for one bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HarnessReport {
    pub theorem: u8,
    pub kind: PerturbationKind,
    pub trials: Vec<TrialRow>,
    pub constants: StabilityConstants,
    pub tolerance_budget: f64,
    pub all_within: bool,
}

/// Runs `trials` seeded random perturbations of one kind and certifies each.
/// Trials cycle through the magnitudes list.
pub fn harness(
    model: &RifsModel,
    smoothness: &SmoothnessReport,
    kind: PerturbationKind,
    magnitudes: &[(f64, f64, f64)],
    trials: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<HarnessReport> {
    let base_grid = solve_fixed_point(model, opts)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(trials);
    let mut constants = None;
    let mut all_within = true;
    for trial in 0..trials {
        let (mx, my, mz) = magnitudes[trial % magnitudes.len()];
        let pert = sample_perturbation(model, kind, mx, my, mz, &mut rng)?;
        let report = certify(model, &base_grid, smoothness, &pert, opts)?;
        all_within &= report.within_bound();
        rows.push(TrialRow {
            trial,
            magnitudes: report.magnitudes,
            bound: report.theoretical_bound,
            empirical: report.empirical_sup,
            margin: report.margin,
        });
        constants.get_or_insert(report.constants);
    }
    let constants = match constants {
        Some(c) => c,
        None => {
            // no trials ran; compute constants against the unperturbed system
            stability_constants(model, model, smoothness)?
        }
    };
    Ok(HarnessReport {
        theorem: kind.theorem_tag(),
        kind,
        trials: rows,
        constants,
        tolerance_budget: 2.0 * opts.tolerance,
        all_within,
    })
}
