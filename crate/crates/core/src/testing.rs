//! Test support: canned systems and a seeded random-system generator,
//! shared by the crate's own tests, the integration suites and the
//! command-line acceptance checks.

use rand::Rng;

use crate::construction::{assemble, RifsModel};
use crate::model::{
    validate_dataset, validate_partition, FactorFamily, FactorFunction, FactorQuad, FactorSet,
    Orientation, PartitionSpec,
};

/// The standard five-node example data on the unit interval.
pub fn five_node_data() -> Vec<(f64, f64, f64)> {
    vec![
        (0.0, 0.0, 0.0),
        (0.25, 1.0, 0.5),
        (0.5, 0.0, -0.5),
        (0.75, 1.0, 0.5),
        (1.0, 0.0, 0.0),
    ]
}

/// Five-node system with two domains and the same constant factor quad on
/// every region.
pub fn five_node_model(c: [f64; 4]) -> RifsModel {
    let ds = validate_dataset(&five_node_data()).unwrap();
    let spec = PartitionSpec {
        domains: vec![(0, 2), (2, 4)],
        domain_for_region: vec![0, 1, 0, 1],
        orientation: vec![Orientation::Increasing; 4],
    };
    let partition = validate_partition(&ds, &spec).unwrap();
    let quads = (0..ds.n_regions())
        .map(|r| {
            let iv = ds.region_interval(r);
            let mk = |v| FactorFunction::new(FactorFamily::Constant { value: v }, iv).unwrap();
            FactorQuad {
                s: mk(c[0]),
                s_prime: mk(c[1]),
                s_tilde: mk(c[2]),
                s_tilde_prime: mk(c[3]),
            }
        })
        .collect();
    let factors = FactorSet::new(quads).unwrap();
    assemble(&ds, &partition, &factors).unwrap()
}

/// Draws a random valid system: random node data, a sliding-window domain
/// cover, per-region domain assignment among the windows containing the
/// region, random orientations, and constant/affine factors rescaled so the
/// contraction norm lands at `s_bar_target`.
///
/// Every draw assembles: regions always sit strictly inside their windows
/// and each region's own window keeps its transition row non-empty.
pub fn random_system<R: Rng>(rng: &mut R, n_range: (usize, usize), s_bar_target: f64) -> RifsModel {
    loop {
        if let Some(model) = try_random_system(rng, n_range, s_bar_target) {
            return model;
        }
    }
}

fn try_random_system<R: Rng>(
    rng: &mut R,
    (n_lo, n_hi): (usize, usize),
    s_bar_target: f64,
) -> Option<RifsModel> {
    let n = rng.gen_range(n_lo..=n_hi).max(3);
    // strictly increasing abscissas with a guaranteed minimum gap
    let mut xs = vec![0.0];
    for _ in 0..n {
        xs.push(xs.last().unwrap() + 0.2 + rng.gen_range(0.0..1.0));
    }
    let span = *xs.last().unwrap();
    let raw: Vec<(f64, f64, f64)> = xs
        .iter()
        .map(|&x| {
            (
                x / span,
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            )
        })
        .collect();
    let ds = validate_dataset(&raw).ok()?;

    // domains: all windows of w consecutive regions
    let w = rng.gen_range(2..=3.min(n - 1));
    let domains: Vec<(usize, usize)> = (0..=n - w).map(|s| (s, s + w)).collect();
    let mut domain_for_region = Vec::with_capacity(n);
    for r in 0..n {
        // windows containing region r: starts in [r.saturating_sub(w-1), r]
        let lo = r.saturating_sub(w - 1);
        let hi = r.min(n - w);
        let lo = lo.min(hi);
        domain_for_region.push(rng.gen_range(lo..=hi));
    }
    let orientation = (0..n)
        .map(|_| {
            if rng.gen_bool(0.25) {
                Orientation::Decreasing
            } else {
                Orientation::Increasing
            }
        })
        .collect();
    let spec = PartitionSpec {
        domains,
        domain_for_region,
        orientation,
    };
    let partition = validate_partition(&ds, &spec).ok()?;

    // raw factor draws, then a global rescale to the requested norm
    let mut quads = Vec::with_capacity(n);
    let mut raw_norm: f64 = 0.0;
    let mut draws: Vec<[FactorFunction; 4]> = Vec::with_capacity(n);
    for r in 0..n {
        let iv = ds.region_interval(r);
        // raw draws may exceed the contractivity limit; the rescale below
        // brings them under it, so build them without the constructor check
        let one = |rng: &mut R| {
            let family = if rng.gen_bool(0.5) {
                FactorFamily::Constant {
                    value: rng.gen_range(-1.0..1.0),
                }
            } else {
                FactorFamily::Affine {
                    offset: rng.gen_range(-0.7..0.7),
                    slope: rng.gen_range(-1.0..1.0) / iv.len(),
                }
            };
            FactorFunction {
                family,
                interval: iv,
            }
        };
        let quad = [one(rng), one(rng), one(rng), one(rng)];
        let c1 = quad[0].sup_abs() + quad[2].sup_abs();
        let c2 = quad[1].sup_abs() + quad[3].sup_abs();
        raw_norm = raw_norm.max(c1.max(c2));
        draws.push(quad);
    }
    if raw_norm == 0.0 {
        raw_norm = 1.0;
    }
    let target = s_bar_target * rng.gen_range(0.4..1.0);
    let scale = target / raw_norm;
    for quad in draws {
        let [s, sp, st, stp] = quad.map(|f| scale_factor(&f, scale));
        quads.push(FactorQuad {
            s,
            s_prime: sp,
            s_tilde: st,
            s_tilde_prime: stp,
        });
    }
    let factors = FactorSet::new(quads).ok()?;
    assemble(&ds, &partition, &factors).ok()
}

fn scale_factor(f: &FactorFunction, scale: f64) -> FactorFunction {
    let family = match &f.family {
        FactorFamily::Constant { value } => FactorFamily::Constant {
            value: value * scale,
        },
        FactorFamily::Affine { offset, slope } => FactorFamily::Affine {
            offset: offset * scale,
            slope: slope * scale,
        },
        FactorFamily::ScaledSinusoid {
            amplitude,
            frequency,
            phase,
        } => FactorFamily::ScaledSinusoid {
            amplitude: amplitude * scale,
            frequency: *frequency,
            phase: *phase,
        },
        FactorFamily::Table {
            xs,
            values,
            lipschitz,
        } => FactorFamily::Table {
            xs: xs.clone(),
            values: values.iter().map(|v| v * scale).collect(),
            lipschitz: lipschitz * scale.abs(),
        },
    };
    FactorFunction {
        family,
        interval: f.interval,
    }
}

/// A random model whose factors also satisfy the analysis hypothesis
/// `omega + omega~ < ratio_min / ratio_max` (retries until it holds).
pub fn random_analysis_system<R: Rng>(
    rng: &mut R,
    n_range: (usize, usize),
    s_bar_target: f64,
) -> RifsModel {
    loop {
        let model = random_system(rng, n_range, s_bar_target);
        let limit = model.metadata.ratio_min / model.metadata.ratio_max;
        if model.omega_max() + model.omega_tilde_max() < limit {
            return model;
        }
    }
}

/// Datasets for exercising all three smoothness regimes with the five-node
/// geometry: constants 0.2 (sub), 0.25 (critical), 0.3 (super).
pub fn regime_models() -> [(RifsModel, &'static str); 3] {
    [
        (five_node_model([0.2; 4]), "sub"),
        (five_node_model([0.25; 4]), "critical"),
        (five_node_model([0.3; 4]), "super"),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_systems_assemble_and_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..25 {
            let model = random_system(&mut rng, (4, 12), 0.8);
            assert!(model.s_bar < 0.8 + 1e-12);
            assert!(model.connection.is_row_stochastic());
        }
    }

    #[test]
    fn analysis_systems_satisfy_hypothesis() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let model = random_analysis_system(&mut rng, (4, 8), 0.5);
            let limit = model.metadata.ratio_min / model.metadata.ratio_max;
            assert!(model.omega_max() + model.omega_tilde_max() < limit);
        }
    }
}
