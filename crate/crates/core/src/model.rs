//! Interpolation data, the region/domain partition, and the contractivity
//! factor functions, with the validity checks the construction depends on.
//!
//! Abscissas are affinely normalized to the unit interval on validation; all
//! analysis runs in normalized coordinates and raw values are restored only
//! at the output boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when testing membership of a point in an interval.
pub const DOMAIN_TOL: f64 = 1e-12;

/// Closed interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo < hi, "interval endpoints out of order");
        Interval { lo, hi }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.max(self.lo).min(self.hi)
    }
}

/// The extended interpolation data: nodes `(x_i, y_i, z_i)` with the hidden
/// ordinates `z_i` included. `n` regions are spanned by `n + 1` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedDataset {
    nodes: Vec<[f64; 3]>,
    unit_xs: Vec<f64>,
    x_offset: f64,
    x_scale: f64,
}

/// Checks a raw node list and produces a validated dataset.
///
/// The node order is checked, never silently re-sorted.
pub fn validate_dataset(raw: &[(f64, f64, f64)]) -> Result<ExtendedDataset> {
    for (i, &(x, y, z)) in raw.iter().enumerate() {
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(Error::NonFiniteValue { index: i });
        }
    }
    for i in 1..raw.len() {
        if raw[i].0 <= raw[i - 1].0 {
            return Err(Error::NonIncreasingAbscissas {
                index: i,
                value: raw[i].0,
            });
        }
    }
    if raw.len() < 4 {
        return Err(Error::TooFewNodes { nodes: raw.len() });
    }
    let x_offset = raw[0].0;
    let x_scale = raw[raw.len() - 1].0 - x_offset;
    let unit_xs = raw.iter().map(|&(x, _, _)| (x - x_offset) / x_scale).collect();
    Ok(ExtendedDataset {
        nodes: raw.iter().map(|&(x, y, z)| [x, y, z]).collect(),
        unit_xs,
        x_offset,
        x_scale,
    })
}

impl ExtendedDataset {
    /// Number of regions (one fewer than the node count).
    pub fn n_regions(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Normalized abscissa of node `i`; the first node maps to 0, the last to 1.
    pub fn unit_x(&self, i: usize) -> f64 {
        self.unit_xs[i]
    }

    pub fn unit_xs(&self) -> &[f64] {
        &self.unit_xs
    }

    pub fn y(&self, i: usize) -> f64 {
        self.nodes[i][1]
    }

    pub fn z(&self, i: usize) -> f64 {
        self.nodes[i][2]
    }

    pub fn raw_x(&self, i: usize) -> f64 {
        self.nodes[i][0]
    }

    pub fn raw_nodes(&self) -> Vec<(f64, f64, f64)> {
        self.nodes.iter().map(|n| (n[0], n[1], n[2])).collect()
    }

    /// Maps a normalized abscissa back to raw coordinates.
    pub fn to_raw_x(&self, u: f64) -> f64 {
        self.x_offset + self.x_scale * u
    }

    /// Maps a raw abscissa into normalized coordinates.
    pub fn to_unit_x(&self, x: f64) -> f64 {
        (x - self.x_offset) / self.x_scale
    }

    pub fn x_scale(&self) -> f64 {
        self.x_scale
    }

    /// Region `r` as a normalized interval `[x_r, x_{r+1}]` (0-based regions).
    pub fn region_interval(&self, r: usize) -> Interval {
        Interval::new(self.unit_xs[r], self.unit_xs[r + 1])
    }

    /// The full normalized abscissa interval.
    pub fn interval(&self) -> Interval {
        Interval::new(0.0, 1.0)
    }

    pub fn max_abs_y(&self) -> f64 {
        self.nodes.iter().map(|n| n[1].abs()).fold(0.0, f64::max)
    }

    pub fn max_abs_z(&self) -> f64 {
        self.nodes.iter().map(|n| n[2].abs()).fold(0.0, f64::max)
    }
}

/// Orientation of the homeomorphism carrying a domain onto a region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Increasing,
    Decreasing,
}

/// Unvalidated partition input: domains as node-index pairs, the
/// region-to-domain assignment, and per-region map orientations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionSpec {
    /// Per domain `k`, the node-index pair `(s(k), e(k))`.
    pub domains: Vec<(usize, usize)>,
    /// Per region, the 0-based index of its source domain.
    pub domain_for_region: Vec<usize>,
    /// Per region, the orientation of its map.
    pub orientation: Vec<Orientation>,
}

/// A validated partition with derived interval lengths cached
/// (normalized coordinates).
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub domains: Vec<(usize, usize)>,
    pub domain_for_region: Vec<usize>,
    pub orientation: Vec<Orientation>,
    pub region_intervals: Vec<Interval>,
    pub domain_intervals: Vec<Interval>,
}

/// Checks every partition invariant against the dataset.
///
/// The standard recurrent setting has at least two domains; a single domain
/// covering the whole interval is also accepted and degenerates to a plain
/// iterated function system.
pub fn validate_partition(ds: &ExtendedDataset, spec: &PartitionSpec) -> Result<Partition> {
    let n = ds.n_regions();
    let l = spec.domains.len();
    if l < 1 || l > n {
        return Err(Error::IndexOutOfRange {
            what: format!("domain count {l} not in 1..={n}"),
        });
    }
    for (k, &(s, e)) in spec.domains.iter().enumerate() {
        if e > n || s >= e {
            return Err(Error::IndexOutOfRange {
                what: format!("domain {k} endpoints ({s}, {e}) out of range for {n} regions"),
            });
        }
        if e - s < 2 {
            return Err(Error::DomainTooSmall {
                domain: k,
                span: e - s,
            });
        }
    }
    if spec.domain_for_region.len() != n {
        return Err(Error::IndexOutOfRange {
            what: format!(
                "domain assignment has {} entries for {n} regions",
                spec.domain_for_region.len()
            ),
        });
    }
    if spec.orientation.len() != n {
        return Err(Error::IndexOutOfRange {
            what: format!(
                "orientation list has {} entries for {n} regions",
                spec.orientation.len()
            ),
        });
    }
    for (r, &k) in spec.domain_for_region.iter().enumerate() {
        if k >= l {
            return Err(Error::IndexOutOfRange {
                what: format!("region {r} assigned to domain {k}, but only {l} domains exist"),
            });
        }
    }
    let region_intervals: Vec<Interval> = (0..n).map(|r| ds.region_interval(r)).collect();
    let domain_intervals: Vec<Interval> = spec
        .domains
        .iter()
        .map(|&(s, e)| Interval::new(ds.unit_x(s), ds.unit_x(e)))
        .collect();
    for r in 0..n {
        let ri = region_intervals[r];
        let di = domain_intervals[spec.domain_for_region[r]];
        if ri.len() >= di.len() {
            return Err(Error::RegionNotSmallerThanDomain {
                region: r,
                region_len: ri.len(),
                domain_len: di.len(),
            });
        }
    }
    Ok(Partition {
        domains: spec.domains.clone(),
        domain_for_region: spec.domain_for_region.clone(),
        orientation: spec.orientation.clone(),
        region_intervals,
        domain_intervals,
    })
}

impl Partition {
    pub fn n_regions(&self) -> usize {
        self.domain_for_region.len()
    }

    pub fn n_domains(&self) -> usize {
        self.domains.len()
    }

    /// True when region `r` lies inside domain `k` (node-index inclusion).
    pub fn region_in_domain(&self, r: usize, k: usize) -> bool {
        let (s, e) = self.domains[k];
        s <= r && r < e
    }
}

/// The supported closed-form factor families, plus a sampled-table escape
/// hatch whose Lipschitz constant is caller-supplied and unverified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FactorFamily {
    /// `f(x) = value`
    Constant { value: f64 },
    /// `f(x) = offset + slope * (x - lo)` where `lo` is the interval start.
    Affine { offset: f64, slope: f64 },
    /// `f(x) = amplitude * sin(frequency * (x - lo) + phase)`
    ScaledSinusoid {
        amplitude: f64,
        frequency: f64,
        phase: f64,
    },
    /// Piecewise-linear table of samples; `lipschitz` is trusted, not checked.
    Table {
        xs: Vec<f64>,
        values: Vec<f64>,
        lipschitz: f64,
    },
}

/// A contractivity factor function on its region interval.
///
/// For the three closed-form families the sup of `|f|` and the Lipschitz
/// constant are exact; a table factor reports the sample maximum and the
/// user-supplied constant and is flagged unverified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorFunction {
    pub family: FactorFamily,
    pub interval: Interval,
}

impl FactorFunction {
    pub fn new(family: FactorFamily, interval: Interval) -> Result<Self> {
        let f = FactorFunction { family, interval };
        f.check()?;
        let sup = f.sup_abs();
        if sup >= 1.0 {
            return Err(Error::InvalidFactor {
                reason: format!("sup |value| = {sup} on the interval is not < 1"),
            });
        }
        Ok(f)
    }

    fn check(&self) -> Result<()> {
        let finite = |v: f64| v.is_finite();
        match &self.family {
            FactorFamily::Constant { value } => {
                if !finite(*value) {
                    return Err(Error::InvalidFactor {
                        reason: "non-finite constant".into(),
                    });
                }
            }
            FactorFamily::Affine { offset, slope } => {
                if !finite(*offset) || !finite(*slope) {
                    return Err(Error::InvalidFactor {
                        reason: "non-finite affine coefficient".into(),
                    });
                }
            }
            FactorFamily::ScaledSinusoid {
                amplitude,
                frequency,
                phase,
            } => {
                if !finite(*amplitude) || !finite(*frequency) || !finite(*phase) {
                    return Err(Error::InvalidFactor {
                        reason: "non-finite sinusoid coefficient".into(),
                    });
                }
            }
            FactorFamily::Table {
                xs,
                values,
                lipschitz,
            } => {
                if xs.len() < 2 || xs.len() != values.len() {
                    return Err(Error::InvalidFactor {
                        reason: "table needs at least two samples and matching lengths".into(),
                    });
                }
                if !xs.windows(2).all(|w| w[0] < w[1]) {
                    return Err(Error::InvalidFactor {
                        reason: "table abscissas must be strictly increasing".into(),
                    });
                }
                if xs[0] > self.interval.lo + DOMAIN_TOL
                    || xs[xs.len() - 1] < self.interval.hi - DOMAIN_TOL
                {
                    return Err(Error::InvalidFactor {
                        reason: "table samples must span the factor interval".into(),
                    });
                }
                if !values.iter().all(|v| v.is_finite()) || !lipschitz.is_finite() || *lipschitz < 0.0
                {
                    return Err(Error::InvalidFactor {
                        reason: "non-finite table values or Lipschitz constant".into(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.family {
            FactorFamily::Constant { value } => *value,
            FactorFamily::Affine { offset, slope } => offset + slope * (x - self.interval.lo),
            FactorFamily::ScaledSinusoid {
                amplitude,
                frequency,
                phase,
            } => amplitude * (frequency * (x - self.interval.lo) + phase).sin(),
            FactorFamily::Table { xs, values, .. } => {
                let x = x.max(xs[0]).min(xs[xs.len() - 1]);
                let j = xs.partition_point(|&v| v < x).max(1).min(xs.len() - 1);
                let (x0, x1) = (xs[j - 1], xs[j]);
                if x == x0 {
                    return values[j - 1];
                }
                let w = (x - x0) / (x1 - x0);
                values[j - 1] + w * (values[j] - values[j - 1])
            }
        }
    }

    /// Exact sup of `|f|` over the factor interval (sample maximum for tables).
    pub fn sup_abs(&self) -> f64 {
        match &self.family {
            FactorFamily::Constant { value } => value.abs(),
            FactorFamily::Affine { offset, slope } => {
                // An affine function attains its extremes at the endpoints.
                let end = offset + slope * self.interval.len();
                offset.abs().max(end.abs())
            }
            FactorFamily::ScaledSinusoid {
                amplitude,
                frequency,
                phase,
            } => {
                let t0 = *phase;
                let t1 = phase + frequency * self.interval.len();
                let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
                // |sin| peaks wherever the argument crosses pi/2 mod pi.
                let first_peak = ((lo - std::f64::consts::FRAC_PI_2) / std::f64::consts::PI).ceil();
                let last_peak = ((hi - std::f64::consts::FRAC_PI_2) / std::f64::consts::PI).floor();
                if first_peak <= last_peak {
                    amplitude.abs()
                } else {
                    amplitude.abs() * lo.sin().abs().max(hi.sin().abs())
                }
            }
            FactorFamily::Table { values, .. } => {
                values.iter().map(|v| v.abs()).fold(0.0, f64::max)
            }
        }
    }

    /// An upper bound on the Lipschitz constant over the interval
    /// (exact for the closed-form families, caller-supplied for tables).
    pub fn lipschitz(&self) -> f64 {
        match &self.family {
            FactorFamily::Constant { .. } => 0.0,
            FactorFamily::Affine { slope, .. } => slope.abs(),
            FactorFamily::ScaledSinusoid {
                amplitude,
                frequency,
                ..
            } => (amplitude * frequency).abs(),
            FactorFamily::Table { lipschitz, .. } => *lipschitz,
        }
    }

    /// False for table factors, whose metadata is user-supplied.
    pub fn is_verified(&self) -> bool {
        !matches!(self.family, FactorFamily::Table { .. })
    }

    /// The factor `x -> f(c + d * x)` on `interval`, staying in-family.
    ///
    /// Substituting an affine change of abscissas is what both internal
    /// normalization and system conjugation reduce to; sup metadata is
    /// preserved exactly because the substitution is a bijection between
    /// the intervals.
    pub fn compose_affine(&self, c: f64, d: f64, interval: Interval) -> FactorFunction {
        debug_assert!(d != 0.0);
        let old_lo = self.interval.lo;
        let family = match &self.family {
            FactorFamily::Constant { value } => FactorFamily::Constant { value: *value },
            FactorFamily::Affine { offset, slope } => FactorFamily::Affine {
                offset: offset + slope * (c + d * interval.lo - old_lo),
                slope: slope * d,
            },
            FactorFamily::ScaledSinusoid {
                amplitude,
                frequency,
                phase,
            } => FactorFamily::ScaledSinusoid {
                amplitude: *amplitude,
                frequency: frequency * d,
                phase: phase + frequency * (c + d * interval.lo - old_lo),
            },
            FactorFamily::Table {
                xs,
                values,
                lipschitz,
            } => {
                let mut pairs: Vec<(f64, f64)> = xs
                    .iter()
                    .zip(values)
                    .map(|(&x, &v)| ((x - c) / d, v))
                    .collect();
                if d < 0.0 {
                    pairs.reverse();
                }
                FactorFamily::Table {
                    xs: pairs.iter().map(|p| p.0).collect(),
                    values: pairs.iter().map(|p| p.1).collect(),
                    lipschitz: lipschitz * d.abs(),
                }
            }
        };
        FactorFunction { family, interval }
    }
}

/// Free-function spelling of [`FactorFunction::sup_abs`].
pub fn sup_abs(f: &FactorFunction) -> f64 {
    f.sup_abs()
}

/// The four contractivity factors of one region.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorQuad {
    pub s: FactorFunction,
    pub s_prime: FactorFunction,
    pub s_tilde: FactorFunction,
    pub s_tilde_prime: FactorFunction,
}

impl FactorQuad {
    /// Largest of the two column sums of sup values on this region:
    /// `max(s + s~, s' + s~')`.
    pub fn column_sum_max(&self) -> f64 {
        let c1 = self.s.sup_abs() + self.s_tilde.sup_abs();
        let c2 = self.s_prime.sup_abs() + self.s_tilde_prime.sup_abs();
        c1.max(c2)
    }

    /// `omega = max(sup|s|, sup|s'|)` for this region.
    pub fn omega(&self) -> f64 {
        self.s.sup_abs().max(self.s_prime.sup_abs())
    }

    /// `omega~ = max(sup|s~|, sup|s~'|)` for this region.
    pub fn omega_tilde(&self) -> f64 {
        self.s_tilde.sup_abs().max(self.s_tilde_prime.sup_abs())
    }

    fn check_contractive(&self, region: usize) -> Result<()> {
        for (which, f) in [
            ("s", &self.s),
            ("s'", &self.s_prime),
            ("s~", &self.s_tilde),
            ("s~'", &self.s_tilde_prime),
        ] {
            let sup = f.sup_abs();
            if sup >= 1.0 {
                return Err(Error::FactorNotContractive { region, which, sup });
            }
        }
        Ok(())
    }
}

/// Per-region factor quads for the whole system.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSet {
    quads: Vec<FactorQuad>,
}

impl FactorSet {
    /// Validates that every factor has sup |value| < 1 on its region.
    /// The system-level bound `S_bar < 1` is checked at assembly, not here,
    /// so that non-contractive systems can still be inspected.
    pub fn new(quads: Vec<FactorQuad>) -> Result<Self> {
        for (r, q) in quads.iter().enumerate() {
            q.check_contractive(r)?;
        }
        Ok(FactorSet { quads })
    }

    pub fn quads(&self) -> &[FactorQuad] {
        &self.quads
    }

    pub fn quad(&self, r: usize) -> &FactorQuad {
        &self.quads[r]
    }

    pub fn len(&self) -> usize {
        self.quads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quads.is_empty()
    }

    /// The mixed column-sum contraction norm
    /// `S_bar = max_r max(sup|s_r| + sup|s~_r|, sup|s'_r| + sup|s~'_r|)`.
    pub fn s_bar(&self) -> f64 {
        self.quads
            .iter()
            .map(|q| q.column_sum_max())
            .fold(0.0, f64::max)
    }

    pub fn is_contractive(&self) -> bool {
        self.s_bar() < 1.0
    }

    pub fn omega_max(&self) -> f64 {
        self.quads.iter().map(|q| q.omega()).fold(0.0, f64::max)
    }

    pub fn omega_tilde_max(&self) -> f64 {
        self.quads.iter().map(|q| q.omega_tilde()).fold(0.0, f64::max)
    }
}

/// Free-function spelling of [`FactorSet::s_bar`], returning the norm and
/// the contraction flag together.
pub fn s_bar_matrix_norm(fs: &FactorSet) -> (f64, bool) {
    let s = fs.s_bar();
    (s, s < 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn five_nodes() -> Vec<(f64, f64, f64)> {
        vec![
            (0.0, 0.0, 0.0),
            (0.25, 1.0, 0.5),
            (0.5, 0.0, -0.5),
            (0.75, 1.0, 0.5),
            (1.0, 0.0, 0.0),
        ]
    }

    #[test]
    fn dataset_valid_five_nodes() {
        let ds = validate_dataset(&five_nodes()).unwrap();
        assert_eq!(ds.n_regions(), 4);
        assert_eq!(ds.unit_x(0), 0.0);
        assert_eq!(ds.unit_x(4), 1.0);
    }

    #[test]
    fn dataset_duplicate_abscissa() {
        let raw = vec![(0.0, 0.0, 0.0), (0.0, 1.0, 0.0), (1.0, 0.0, 0.0)];
        assert!(matches!(
            validate_dataset(&raw),
            Err(Error::NonIncreasingAbscissas { index: 1, .. })
        ));
    }

    #[test]
    fn dataset_too_few_nodes() {
        let raw = vec![(0.0, 0.0, 0.0), (1.0, 1.0, 1.0)];
        assert!(matches!(
            validate_dataset(&raw),
            Err(Error::TooFewNodes { nodes: 2 })
        ));
    }

    #[test]
    fn dataset_rejects_non_finite() {
        let raw = vec![
            (0.0, 0.0, 0.0),
            (0.25, f64::NAN, 0.0),
            (0.5, 0.0, 0.0),
            (1.0, 0.0, 0.0),
        ];
        assert!(matches!(
            validate_dataset(&raw),
            Err(Error::NonFiniteValue { index: 1 })
        ));
    }

    #[test]
    fn dataset_normalizes_to_unit_interval() {
        let raw = vec![(2.0, 0.0, 0.0), (3.0, 1.0, 0.0), (4.0, 0.0, 0.0), (6.0, 1.0, 1.0)];
        let ds = validate_dataset(&raw).unwrap();
        assert_eq!(ds.unit_x(0), 0.0);
        assert_eq!(ds.unit_x(3), 1.0);
        assert!((ds.unit_x(1) - 0.25).abs() < 1e-15);
        assert!((ds.to_raw_x(ds.unit_x(2)) - 4.0).abs() < 1e-15);
    }

    fn spec_two_domains() -> PartitionSpec {
        PartitionSpec {
            domains: vec![(0, 2), (2, 4)],
            domain_for_region: vec![0, 1, 0, 1],
            orientation: vec![Orientation::Increasing; 4],
        }
    }

    #[test]
    fn partition_valid_two_domains() {
        let ds = validate_dataset(&five_nodes()).unwrap();
        let p = validate_partition(&ds, &spec_two_domains()).unwrap();
        assert_eq!(p.n_domains(), 2);
        for r in 0..4 {
            assert!(p.region_intervals[r].len() < p.domain_intervals[p.domain_for_region[r]].len());
        }
    }

    #[test]
    fn partition_domain_too_small() {
        let ds = validate_dataset(&five_nodes()).unwrap();
        let spec = PartitionSpec {
            domains: vec![(0, 1), (1, 4)],
            domain_for_region: vec![0, 1, 1, 1],
            orientation: vec![Orientation::Increasing; 4],
        };
        assert!(matches!(
            validate_partition(&ds, &spec),
            Err(Error::DomainTooSmall { domain: 0, span: 1 })
        ));
    }

    #[test]
    fn partition_single_domain_accepted() {
        let raw = vec![(0.0, 0.0, 0.0), (0.4, 1.0, 0.2), (0.7, -1.0, 0.1), (1.0, 0.0, 0.0)];
        let ds = validate_dataset(&raw).unwrap();
        let spec = PartitionSpec {
            domains: vec![(0, 3)],
            domain_for_region: vec![0, 0, 0],
            orientation: vec![Orientation::Increasing; 3],
        };
        let p = validate_partition(&ds, &spec).unwrap();
        assert_eq!(p.n_domains(), 1);
    }

    #[test]
    fn partition_region_not_smaller() {
        // Last region is half of the interval while its domain is the whole of it;
        // shrink the domain instead so the region matches it in length.
        let raw = vec![(0.0, 0.0, 0.0), (0.1, 1.0, 0.0), (0.2, 0.0, 0.0), (1.0, 0.0, 0.0)];
        let ds = validate_dataset(&raw).unwrap();
        let spec = PartitionSpec {
            domains: vec![(0, 2), (1, 3)],
            domain_for_region: vec![0, 0, 0],
            orientation: vec![Orientation::Increasing; 3],
        };
        // Region 2 has length 0.8; domain 0 has length 0.2.
        assert!(matches!(
            validate_partition(&ds, &spec),
            Err(Error::RegionNotSmallerThanDomain { region: 2, .. })
        ));
    }

    #[test]
    fn sup_abs_constant() {
        let f = FactorFunction::new(
            FactorFamily::Constant { value: 0.4 },
            Interval::new(0.0, 0.25),
        )
        .unwrap();
        assert_eq!(f.sup_abs(), 0.4);
        assert_eq!(f.lipschitz(), 0.0);
    }

    #[test]
    fn sup_abs_affine_endpoint_max() {
        let f = FactorFunction::new(
            FactorFamily::Affine {
                offset: 0.2,
                slope: 0.5,
            },
            Interval::new(0.0, 0.25),
        )
        .unwrap();
        assert!((f.sup_abs() - 0.325).abs() < 1e-15);
        assert_eq!(f.lipschitz(), 0.5);
    }

    #[test]
    fn sup_abs_affine_negative_dip() {
        let f = FactorFunction::new(
            FactorFamily::Affine {
                offset: -0.5,
                slope: 0.8,
            },
            Interval::new(0.0, 1.0),
        )
        .unwrap();
        assert!((f.sup_abs() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sup_abs_sinusoid_interior_peak() {
        let f = FactorFunction::new(
            FactorFamily::ScaledSinusoid {
                amplitude: 0.3,
                frequency: 2.0 * std::f64::consts::PI,
                phase: 0.0,
            },
            Interval::new(0.0, 0.25),
        )
        .unwrap();
        // sin reaches 1 at the right endpoint of the quarter period.
        assert!((f.sup_abs() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn sup_abs_sinusoid_monotone_piece() {
        let f = FactorFunction::new(
            FactorFamily::ScaledSinusoid {
                amplitude: 0.2,
                frequency: 1.0,
                phase: 0.1,
            },
            Interval::new(0.0, 0.2),
        )
        .unwrap();
        let expected = 0.2 * 0.3f64.sin();
        assert!((f.sup_abs() - expected).abs() < 1e-15);
    }

    #[test]
    fn sup_abs_sinusoid_trough() {
        let f = FactorFunction::new(
            FactorFamily::ScaledSinusoid {
                amplitude: 0.5,
                frequency: std::f64::consts::PI,
                phase: std::f64::consts::PI,
            },
            Interval::new(0.0, 1.0),
        )
        .unwrap();
        // The argument sweeps [pi, 2 pi], which contains 3 pi / 2.
        assert!((f.sup_abs() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn table_factor_is_unverified() {
        let f = FactorFunction::new(
            FactorFamily::Table {
                xs: vec![0.0, 0.5, 1.0],
                values: vec![0.1, -0.3, 0.2],
                lipschitz: 1.0,
            },
            Interval::new(0.0, 1.0),
        )
        .unwrap();
        assert!(!f.is_verified());
        assert_eq!(f.sup_abs(), 0.3);
        assert!((f.eval(0.25) - (-0.1)).abs() < 1e-15);
    }

    fn quad_of_constants(c: [f64; 4], iv: Interval) -> FactorQuad {
        let mk = |v| FactorFunction::new(FactorFamily::Constant { value: v }, iv).unwrap();
        FactorQuad {
            s: mk(c[0]),
            s_prime: mk(c[1]),
            s_tilde: mk(c[2]),
            s_tilde_prime: mk(c[3]),
        }
    }

    #[test]
    fn s_bar_all_point_three() {
        let iv = Interval::new(0.0, 0.25);
        let fs = FactorSet::new(vec![quad_of_constants([0.3; 4], iv); 4]).unwrap();
        let (s, ok) = s_bar_matrix_norm(&fs);
        assert!((s - 0.6).abs() < 1e-15);
        assert!(ok);
    }

    #[test]
    fn s_bar_column_sum_exceeds_one() {
        let iv = Interval::new(0.0, 0.25);
        let fs = FactorSet::new(vec![quad_of_constants([0.5, 0.0, 0.6, 0.0], iv); 4]).unwrap();
        let (s, ok) = s_bar_matrix_norm(&fs);
        assert!((s - 1.1).abs() < 1e-15);
        assert!(!ok);
    }

    #[test]
    fn s_bar_zero() {
        let iv = Interval::new(0.0, 0.25);
        let fs = FactorSet::new(vec![quad_of_constants([0.0; 4], iv); 4]).unwrap();
        assert_eq!(fs.s_bar(), 0.0);
    }

    #[test]
    fn factor_sup_at_least_one_rejected_at_construction() {
        let iv = Interval::new(0.0, 0.25);
        assert!(matches!(
            FactorFunction::new(FactorFamily::Constant { value: 1.0 }, iv),
            Err(Error::InvalidFactor { .. })
        ));
        assert!(matches!(
            FactorFunction::new(
                FactorFamily::Affine {
                    offset: 0.5,
                    slope: 4.0
                },
                iv
            ),
            Err(Error::InvalidFactor { .. })
        ));
    }

    #[test]
    fn factor_set_rechecks_contractivity() {
        // quads assembled around the constructor still get caught
        let iv = Interval::new(0.0, 0.25);
        let mk = |v| FactorFunction {
            family: FactorFamily::Constant { value: v },
            interval: iv,
        };
        let quad = FactorQuad {
            s: mk(1.0),
            s_prime: mk(0.0),
            s_tilde: mk(0.0),
            s_tilde_prime: mk(0.0),
        };
        assert!(matches!(
            FactorSet::new(vec![quad]),
            Err(Error::FactorNotContractive { which: "s", .. })
        ));
    }

    #[test]
    fn compose_affine_preserves_values_and_sup() {
        let f = FactorFunction::new(
            FactorFamily::ScaledSinusoid {
                amplitude: 0.4,
                frequency: 3.0,
                phase: 0.7,
            },
            Interval::new(0.2, 0.6),
        )
        .unwrap();
        // g(u) = f(c + d u) on [0, 1] with c + d * 0 = 0.2, c + d * 1 = 0.6.
        let g = f.compose_affine(0.2, 0.4, Interval::new(0.0, 1.0));
        for j in 0..=20 {
            let u = j as f64 / 20.0;
            let x = 0.2 + 0.4 * u;
            assert!((g.eval(u) - f.eval(x)).abs() < 1e-14);
        }
        assert!((g.sup_abs() - f.sup_abs()).abs() < 1e-14);
    }
}
