//! Assembly of the recurrent system: the region maps, the shift functions
//! built from chords through the data, the vertical maps, and the
//! row-stochastic connection matrix.

use num::rational::Ratio;
use num::{One, Zero};

use crate::error::{Error, Result};
use crate::map::{build_affine_map, Map1D};
use crate::model::{
    ExtendedDataset, FactorQuad, FactorSet, Interval, Orientation, Partition,
};

/// Tolerance for the numerical endpoint-condition check at assembly.
pub const ENDPOINT_TOL: f64 = 1e-12;

/// The chord (affine interpolant) through two data points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chord {
    pub x_lo: f64,
    pub x_hi: f64,
    pub v_lo: f64,
    pub v_hi: f64,
}

impl Chord {
    pub fn new(x_lo: f64, v_lo: f64, x_hi: f64, v_hi: f64) -> Self {
        Chord { x_lo, x_hi, v_lo, v_hi }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x == self.x_lo {
            return self.v_lo;
        }
        let w = (x - self.x_lo) / (self.x_hi - self.x_lo);
        self.v_lo + w * (self.v_hi - self.v_lo)
    }

    pub fn slope(&self) -> f64 {
        (self.v_hi - self.v_lo) / (self.x_hi - self.x_lo)
    }

    pub fn sup_abs(&self) -> f64 {
        self.v_lo.abs().max(self.v_hi.abs())
    }
}

/// The shift functions of one region, kept in chord form.
///
/// `q(x) = -s(L(x)) g(x) - s'(L(x)) g'(x) + h(L(x))` where `g`, `g'` are the
/// chords through the domain-endpoint data and `h` is the chord through the
/// region-endpoint ordinates. The second component uses the chord through the
/// region-endpoint hidden ordinates, which is what makes the vertical maps
/// carry domain-endpoint data points onto region-endpoint data points in both
/// coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftPair {
    /// Chord through `(x_{s(k)}, y_{s(k)})`, `(x_{e(k)}, y_{e(k)})`.
    pub g: Chord,
    /// Chord through the domain-endpoint hidden ordinates.
    pub g_hidden: Chord,
    /// Chord through the region-endpoint ordinates.
    pub h: Chord,
    /// Chord through the region-endpoint hidden ordinates.
    pub h_hidden: Chord,
    /// Upper bound on the Lipschitz constant of `q` on the domain.
    pub lipschitz_q: f64,
    /// Upper bound on the Lipschitz constant of the second shift.
    pub lipschitz_q_tilde: f64,
    /// Upper bound on sup |q| over the domain.
    pub sup_q_bound: f64,
    /// Upper bound on sup of the second shift over the domain.
    pub sup_q_tilde_bound: f64,
}

/// Composes the shift chords for region `r` from the dataset and the region's
/// map and factors.
///
/// The Lipschitz bounds follow the product rule applied to each composed
/// term: `Lip(u v) <= Lip(u) sup|v| + sup|u| Lip(v)`, with the map
/// contributing its worst-case slope to every factor composed with it.
pub fn build_shift_pair(
    ds: &ExtendedDataset,
    partition: &Partition,
    map: &Map1D,
    quad: &FactorQuad,
    r: usize,
) -> ShiftPair {
    let k = partition.domain_for_region[r];
    let (s_idx, e_idx) = partition.domains[k];
    let (xs, xe) = (ds.unit_x(s_idx), ds.unit_x(e_idx));
    let g = Chord::new(xs, ds.y(s_idx), xe, ds.y(e_idx));
    let g_hidden = Chord::new(xs, ds.z(s_idx), xe, ds.z(e_idx));
    let (xl, xr) = (ds.unit_x(r), ds.unit_x(r + 1));
    let h = Chord::new(xl, ds.y(r), xr, ds.y(r + 1));
    let h_hidden = Chord::new(xl, ds.z(r), xr, ds.z(r + 1));

    let ratio = map.max_abs_slope();
    let lip = |f: &crate::model::FactorFunction, fp: &crate::model::FactorFunction, hc: &Chord| {
        f.lipschitz() * ratio * g.sup_abs()
            + f.sup_abs() * g.slope().abs()
            + fp.lipschitz() * ratio * g_hidden.sup_abs()
            + fp.sup_abs() * g_hidden.slope().abs()
            + hc.slope().abs() * ratio
    };
    let sup = |f: &crate::model::FactorFunction, fp: &crate::model::FactorFunction, hc: &Chord| {
        f.sup_abs() * g.sup_abs() + fp.sup_abs() * g_hidden.sup_abs() + hc.sup_abs()
    };

    ShiftPair {
        g,
        g_hidden,
        h,
        h_hidden,
        lipschitz_q: lip(&quad.s, &quad.s_prime, &h),
        lipschitz_q_tilde: lip(&quad.s_tilde, &quad.s_tilde_prime, &h_hidden),
        sup_q_bound: sup(&quad.s, &quad.s_prime, &h),
        sup_q_tilde_bound: sup(&quad.s_tilde, &quad.s_tilde_prime, &h_hidden),
    }
}

/// One region of the assembled system: its map, factors and shifts.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSystem {
    pub index: usize,
    pub map: Map1D,
    pub factors: FactorQuad,
    pub shift: ShiftPair,
}

impl RegionSystem {
    /// First shift function, evaluated at a domain point.
    pub fn eval_q(&self, x: f64) -> f64 {
        let u = self.map.eval(x);
        -self.factors.s.eval(u) * self.shift.g.eval(x)
            - self.factors.s_prime.eval(u) * self.shift.g_hidden.eval(x)
            + self.shift.h.eval(u)
    }

    /// Second shift function, evaluated at a domain point.
    pub fn eval_q_tilde(&self, x: f64) -> f64 {
        let u = self.map.eval(x);
        -self.factors.s_tilde.eval(u) * self.shift.g.eval(x)
            - self.factors.s_tilde_prime.eval(u) * self.shift.g_hidden.eval(x)
            + self.shift.h_hidden.eval(u)
    }

    /// The vertical map: `F(x, y, z)` for a domain point `x`; no domain check.
    pub fn eval_f_unchecked(&self, x: f64, y: f64, z: f64) -> (f64, f64) {
        let u = self.map.eval(x);
        let f1 = self.factors.s.eval(u) * y + self.factors.s_prime.eval(u) * z + self.eval_q(x);
        let f2 = self.factors.s_tilde.eval(u) * y
            + self.factors.s_tilde_prime.eval(u) * z
            + self.eval_q_tilde(x);
        (f1, f2)
    }

    pub fn domain_interval(&self) -> Interval {
        self.map.source()
    }

    pub fn region_interval(&self) -> Interval {
        self.map.target()
    }
}

/// Row-stochastic transition matrix in exact rational arithmetic.
///
/// Entry `(s, t)` is `1 / a_s` when region `s` lies inside the domain
/// assigned to region `t`, and zero otherwise; `a_s` counts the regions `t`
/// whose assigned domain contains region `s`, so every non-empty row sums to
/// exactly one.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionMatrix {
    n: usize,
    entries: Vec<Ratio<i64>>,
}

/// Builds the connection matrix; errors when some region is contained in no
/// assigned domain (its row would be all zero).
pub fn build_connection_matrix(partition: &Partition) -> Result<ConnectionMatrix> {
    let n = partition.n_regions();
    let mut entries = vec![Ratio::zero(); n * n];
    for s in 0..n {
        let supported: Vec<usize> = (0..n)
            .filter(|&t| partition.region_in_domain(s, partition.domain_for_region[t]))
            .collect();
        if supported.is_empty() {
            return Err(Error::UnreachableRegion { region: s });
        }
        let p = Ratio::new(1, supported.len() as i64);
        for t in supported {
            entries[s * n + t] = p;
        }
    }
    Ok(ConnectionMatrix { n, entries })
}

impl ConnectionMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entry(&self, s: usize, t: usize) -> Ratio<i64> {
        self.entries[s * self.n + t]
    }

    pub fn row(&self, s: usize) -> &[Ratio<i64>] {
        &self.entries[s * self.n..(s + 1) * self.n]
    }

    /// Exact rational row sum.
    pub fn row_sum(&self, s: usize) -> Ratio<i64> {
        self.row(s).iter().fold(Ratio::zero(), |acc, &e| acc + e)
    }

    pub fn is_row_stochastic(&self) -> bool {
        (0..self.n).all(|s| self.row_sum(s) == Ratio::one())
    }

    pub fn is_positive(&self, s: usize, t: usize) -> bool {
        !self.entry(s, t).is_zero()
    }

    /// Indices of the nonzero entries in row `s`.
    pub fn support(&self, s: usize) -> Vec<usize> {
        (0..self.n)
            .filter(|&t| !self.entry(s, t).is_zero())
            .collect()
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|s| {
                self.row(s)
                    .iter()
                    .map(|e| *e.numer() as f64 / *e.denom() as f64)
                    .collect()
            })
            .collect()
    }

    /// Rows rendered as exact rational strings, e.g. `"1/2"`.
    pub fn to_strings(&self) -> Vec<Vec<String>> {
        (0..self.n)
            .map(|s| self.row(s).iter().map(|e| e.to_string()).collect())
            .collect()
    }

    /// Stationary distribution of the chain, by power iteration.
    pub fn stationary_distribution(&self) -> Vec<f64> {
        let p = self.to_f64();
        let n = self.n;
        let mut pi = vec![1.0 / n as f64; n];
        for _ in 0..20_000 {
            let mut next = vec![0.0; n];
            for s in 0..n {
                for t in 0..n {
                    next[t] += pi[s] * p[s][t];
                }
            }
            let diff: f64 = next
                .iter()
                .zip(&pi)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            pi = next;
            if diff < 1e-15 {
                break;
            }
        }
        pi
    }
}

/// Derived system-level metadata in normalized coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelMetadata {
    /// Largest region/domain length ratio over the regions.
    pub ratio_max: f64,
    /// Smallest region/domain length ratio over the regions.
    pub ratio_min: f64,
    pub domain_len_min: f64,
    pub domain_len_max: f64,
    pub region_len_min: f64,
}

/// The assembled recurrent system, immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct RifsModel {
    pub dataset: ExtendedDataset,
    pub partition: Partition,
    pub regions: Vec<RegionSystem>,
    pub connection: ConnectionMatrix,
    pub s_bar: f64,
    pub metadata: ModelMetadata,
}

/// Assembles a validated system with affine region maps.
pub fn assemble(
    ds: &ExtendedDataset,
    partition: &Partition,
    factors: &FactorSet,
) -> Result<RifsModel> {
    let n = partition.n_regions();
    let mut maps = Vec::with_capacity(n);
    for r in 0..n {
        let k = partition.domain_for_region[r];
        let m = build_affine_map(
            partition.domain_intervals[k],
            partition.region_intervals[r],
            partition.orientation[r],
        )?;
        maps.push(Map1D::Affine(m));
    }
    assemble_with_maps(ds, partition, factors, maps)
}

/// Assembles a system from explicit region maps (affine or piecewise-affine).
/// All endpoint conditions and the contraction bound are verified.
pub fn assemble_with_maps(
    ds: &ExtendedDataset,
    partition: &Partition,
    factors: &FactorSet,
    maps: Vec<Map1D>,
) -> Result<RifsModel> {
    let n = partition.n_regions();
    if factors.len() != n || maps.len() != n {
        return Err(Error::IndexOutOfRange {
            what: format!(
                "expected {n} factor quads and maps, got {} and {}",
                factors.len(),
                maps.len()
            ),
        });
    }
    let s_bar = factors.s_bar();
    if s_bar.is_nan() || s_bar >= 1.0 {
        return Err(Error::ContractionBoundExceeded { s_bar });
    }
    for m in &maps {
        let ratio = m.max_abs_slope();
        if ratio.is_nan() || ratio >= 1.0 {
            return Err(Error::NotContractive { ratio });
        }
    }

    let mut regions = Vec::with_capacity(n);
    for (r, map) in maps.into_iter().enumerate() {
        let quad = factors.quad(r).clone();
        let shift = build_shift_pair(ds, partition, &map, &quad, r);
        regions.push(RegionSystem {
            index: r,
            map,
            factors: quad,
            shift,
        });
    }

    verify_endpoint_conditions(ds, partition, &regions)?;

    let connection = build_connection_matrix(partition)?;

    let mut ratio_max: f64 = 0.0;
    let mut ratio_min = f64::INFINITY;
    for r in 0..n {
        let k = partition.domain_for_region[r];
        let ratio = partition.region_intervals[r].len() / partition.domain_intervals[k].len();
        ratio_max = ratio_max.max(ratio);
        ratio_min = ratio_min.min(ratio);
    }
    let domain_len_min = partition
        .domain_intervals
        .iter()
        .map(|iv| iv.len())
        .fold(f64::INFINITY, f64::min);
    let domain_len_max = partition
        .domain_intervals
        .iter()
        .map(|iv| iv.len())
        .fold(0.0, f64::max);
    let region_len_min = partition
        .region_intervals
        .iter()
        .map(|iv| iv.len())
        .fold(f64::INFINITY, f64::min);

    Ok(RifsModel {
        dataset: ds.clone(),
        partition: partition.clone(),
        regions,
        connection,
        s_bar,
        metadata: ModelMetadata {
            ratio_max,
            ratio_min,
            domain_len_min,
            domain_len_max,
            region_len_min,
        },
    })
}

/// Checks that every region's vertical map carries the domain-endpoint data
/// points onto the matching region-endpoint data points.
fn verify_endpoint_conditions(
    ds: &ExtendedDataset,
    partition: &Partition,
    regions: &[RegionSystem],
) -> Result<()> {
    for region in regions {
        let r = region.index;
        let k = partition.domain_for_region[r];
        let (s_idx, e_idx) = partition.domains[k];
        let pairs = match partition.orientation[r] {
            Orientation::Increasing => [(s_idx, r), (e_idx, r + 1)],
            Orientation::Decreasing => [(s_idx, r + 1), (e_idx, r)],
        };
        for (src, dst) in pairs {
            let x = ds.unit_x(src);
            let (f1, f2) = region.eval_f_unchecked(x, ds.y(src), ds.z(src));
            let residual = (f1 - ds.y(dst)).abs() + (f2 - ds.z(dst)).abs();
            let mapped = region.map.eval(x);
            let map_residual = (mapped - ds.unit_x(dst)).abs();
            if residual > ENDPOINT_TOL || map_residual > ENDPOINT_TOL {
                return Err(Error::EndpointConditionViolated {
                    region: r,
                    residual: residual.max(map_residual),
                });
            }
        }
    }
    Ok(())
}

impl RifsModel {
    pub fn n_regions(&self) -> usize {
        self.regions.len()
    }

    /// The vertical map of region `r` with a domain-membership check.
    pub fn eval_f(&self, r: usize, x: f64, y: f64, z: f64) -> Result<(f64, f64)> {
        if r >= self.regions.len() {
            return Err(Error::IndexOutOfRange {
                what: format!("region {r}"),
            });
        }
        let region = &self.regions[r];
        if !region.domain_interval().contains(x, crate::model::DOMAIN_TOL) {
            return Err(Error::OutOfDomain { region: r, x });
        }
        Ok(region.eval_f_unchecked(x, y, z))
    }

    /// Region index holding normalized abscissa `x` (boundary points resolve
    /// to the lower region).
    pub fn region_of(&self, x: f64) -> usize {
        let xs = self.dataset.unit_xs();
        let n = self.n_regions();
        xs.partition_point(|&v| v < x).clamp(1, n) - 1
    }

    pub fn omega_max(&self) -> f64 {
        self.regions
            .iter()
            .map(|r| r.factors.omega())
            .fold(0.0, f64::max)
    }

    pub fn omega_tilde_max(&self) -> f64 {
        self.regions
            .iter()
            .map(|r| r.factors.omega_tilde())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_dataset, validate_partition, FactorFamily, FactorFunction, PartitionSpec};

    fn five_nodes() -> Vec<(f64, f64, f64)> {
        vec![
            (0.0, 0.0, 0.0),
            (0.25, 1.0, 0.5),
            (0.5, 0.0, -0.5),
            (0.75, 1.0, 0.5),
            (1.0, 0.0, 0.0),
        ]
    }

    fn constant_quads(ds: &ExtendedDataset, c: [f64; 4]) -> FactorSet {
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
        FactorSet::new(quads).unwrap()
    }

    fn standard_system(c: [f64; 4]) -> RifsModel {
        let ds = validate_dataset(&five_nodes()).unwrap();
        let spec = PartitionSpec {
            domains: vec![(0, 2), (2, 4)],
            domain_for_region: vec![0, 1, 0, 1],
            orientation: vec![Orientation::Increasing; 4],
        };
        let partition = validate_partition(&ds, &spec).unwrap();
        let factors = constant_quads(&ds, c);
        assemble(&ds, &partition, &factors).unwrap()
    }

    #[test]
    fn zero_factor_shift_is_region_chord() {
        let model = standard_system([0.0; 4]);
        let region = &model.regions[0];
        for j in 0..=20 {
            let x = j as f64 * 0.5 / 20.0; // domain of region 0 is [0, 0.5]
            let expected = region.shift.h.eval(region.map.eval(x));
            assert!((region.eval_q(x) - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn shift_value_by_direct_substitution() {
        let model = standard_system([0.3, 0.3, 0.3, 0.3]);
        let ds = &model.dataset;
        let region = &model.regions[0];
        // at the domain start the map lands on x0 and every chord returns a
        // node value: q(0) = y0 - 0.3 y0 - 0.3 z0 = 0 here
        let expected = ds.y(0) - 0.3 * ds.y(0) - 0.3 * ds.z(0);
        assert!((region.eval_q(0.0) - expected).abs() < 1e-15);
        // at the domain end x2 the map lands on x1:
        // q(x2) = -s(x1) y2 - s'(x1) z2 + y1 = 0 + 0.15 + 1
        let q_end = region.eval_q(0.5);
        let expected_end = -0.3 * ds.y(2) - 0.3 * ds.z(2) + ds.y(1);
        assert!((q_end - expected_end).abs() < 1e-14);
        assert!((q_end - 1.15).abs() < 1e-14);
    }

    #[test]
    fn endpoint_condition_holds_for_all_regions() {
        let model = standard_system([0.3, 0.2, -0.25, 0.15]);
        let ds = &model.dataset;
        for region in &model.regions {
            let r = region.index;
            let k = model.partition.domain_for_region[r];
            let (s_idx, e_idx) = model.partition.domains[k];
            for (src, dst) in [(s_idx, r), (e_idx, r + 1)] {
                let (f1, f2) =
                    region.eval_f_unchecked(ds.unit_x(src), ds.y(src), ds.z(src));
                assert!((f1 - ds.y(dst)).abs() < 1e-12);
                assert!((f2 - ds.z(dst)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn endpoint_condition_with_decreasing_orientation() {
        let ds = validate_dataset(&five_nodes()).unwrap();
        let spec = PartitionSpec {
            domains: vec![(0, 2), (2, 4)],
            domain_for_region: vec![0, 1, 0, 1],
            orientation: vec![
                Orientation::Increasing,
                Orientation::Decreasing,
                Orientation::Increasing,
                Orientation::Decreasing,
            ],
        };
        let partition = validate_partition(&ds, &spec).unwrap();
        let factors = constant_quads(&ds, [0.3, 0.1, 0.2, 0.25]);
        // assemble runs the endpoint verification internally
        let model = assemble(&ds, &partition, &factors).unwrap();
        assert_eq!(model.regions[1].map.orientation(), Orientation::Decreasing);
    }

    #[test]
    fn eval_f_matches_independent_formula() {
        let model = standard_system([0.3, -0.2, 0.15, 0.25]);
        let ds = &model.dataset;
        // independent recomputation straight from the chord definitions
        let q_direct = |r: usize, x: f64| -> (f64, f64) {
            let k = model.partition.domain_for_region[r];
            let (si, ei) = model.partition.domains[k];
            let (xs, xe) = (ds.unit_x(si), ds.unit_x(ei));
            let lin = |x: f64, x0: f64, v0: f64, x1: f64, v1: f64| {
                (x - x0) / (x1 - x0) * v1 + (x - x1) / (x0 - x1) * v0
            };
            let g = lin(x, xs, ds.y(si), xe, ds.y(ei));
            let gp = lin(x, xs, ds.z(si), xe, ds.z(ei));
            let u = model.regions[r].map.eval(x);
            let h = lin(u, ds.unit_x(r), ds.y(r), ds.unit_x(r + 1), ds.y(r + 1));
            let hh = lin(u, ds.unit_x(r), ds.z(r), ds.unit_x(r + 1), ds.z(r + 1));
            let s = model.regions[r].factors.s.eval(u);
            let sp = model.regions[r].factors.s_prime.eval(u);
            let st = model.regions[r].factors.s_tilde.eval(u);
            let stp = model.regions[r].factors.s_tilde_prime.eval(u);
            (-s * g - sp * gp + h, -st * g - stp * gp + hh)
        };
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..500 {
            let r = (next() * 4.0) as usize % 4;
            let dom = model.regions[r].domain_interval();
            let x = dom.lo + next() * dom.len();
            let y = next() * 4.0 - 2.0;
            let z = next() * 4.0 - 2.0;
            let (f1, f2) = model.eval_f(r, x, y, z).unwrap();
            let u = model.regions[r].map.eval(x);
            let (q1, q2) = q_direct(r, x);
            let e1 = model.regions[r].factors.s.eval(u) * y
                + model.regions[r].factors.s_prime.eval(u) * z
                + q1;
            let e2 = model.regions[r].factors.s_tilde.eval(u) * y
                + model.regions[r].factors.s_tilde_prime.eval(u) * z
                + q2;
            assert!((f1 - e1).abs() < 1e-14);
            assert!((f2 - e2).abs() < 1e-14);
        }
    }

    #[test]
    fn eval_f_rejects_out_of_domain() {
        let model = standard_system([0.3; 4]);
        // region 0 has domain [0, 0.5]
        assert!(matches!(
            model.eval_f(0, 0.75, 0.0, 0.0),
            Err(Error::OutOfDomain { region: 0, .. })
        ));
    }

    #[test]
    fn eval_f_zero_factors_ignores_ordinates() {
        let model = standard_system([0.0; 4]);
        let (a1, a2) = model.eval_f(2, 0.3, 5.0, -7.0).unwrap();
        let (b1, b2) = model.eval_f(2, 0.3, -100.0, 42.0).unwrap();
        assert_eq!(a1, b1);
        assert_eq!(a2, b2);
    }

    #[test]
    fn eval_f_vertical_lipschitz_bounded_by_s_bar() {
        let model = standard_system([0.3, -0.2, 0.15, 0.25]);
        let s_bar = model.s_bar;
        let mut state = 42u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..2000 {
            let r = (next() * 4.0) as usize % 4;
            let dom = model.regions[r].domain_interval();
            let x = dom.lo + next() * dom.len();
            let (y1, z1) = (next() * 4.0 - 2.0, next() * 4.0 - 2.0);
            let (y2, z2) = (next() * 4.0 - 2.0, next() * 4.0 - 2.0);
            let (a1, a2) = model.eval_f(r, x, y1, z1).unwrap();
            let (b1, b2) = model.eval_f(r, x, y2, z2).unwrap();
            let lhs = (a1 - b1).abs() + (a2 - b2).abs();
            let rhs = s_bar * ((y1 - y2).abs() + (z1 - z2).abs());
            assert!(lhs <= rhs + 1e-12);
        }
    }

    #[test]
    fn connection_matrix_two_domain_example() {
        let model = standard_system([0.3; 4]);
        let m = &model.connection;
        let half = Ratio::new(1, 2);
        let zero = Ratio::new(0, 1);
        let expected = [
            [half, zero, half, zero],
            [half, zero, half, zero],
            [zero, half, zero, half],
            [zero, half, zero, half],
        ];
        for s in 0..4 {
            for t in 0..4 {
                assert_eq!(m.entry(s, t), expected[s][t], "entry ({s}, {t})");
            }
        }
        assert!(m.is_row_stochastic());
    }

    #[test]
    fn connection_matrix_single_domain_uniform() {
        let raw = vec![(0.0, 0.0, 0.0), (0.3, 1.0, 0.0), (0.6, 0.0, 0.5), (1.0, 0.0, 0.0)];
        let ds = validate_dataset(&raw).unwrap();
        let spec = PartitionSpec {
            domains: vec![(0, 3)],
            domain_for_region: vec![0, 0, 0],
            orientation: vec![Orientation::Increasing; 3],
        };
        let partition = validate_partition(&ds, &spec).unwrap();
        let m = build_connection_matrix(&partition).unwrap();
        let third = Ratio::new(1, 3);
        for s in 0..3 {
            for t in 0..3 {
                assert_eq!(m.entry(s, t), third);
            }
        }
    }

    #[test]
    fn connection_matrix_overlapping_domains() {
        let raw = vec![(0.0, 0.0, 0.0), (1.0, 1.0, 0.0), (2.0, 0.0, 0.0), (3.0, 1.0, 1.0)];
        let ds = validate_dataset(&raw).unwrap();
        let spec = PartitionSpec {
            domains: vec![(0, 2), (1, 3)],
            domain_for_region: vec![0, 0, 1],
            orientation: vec![Orientation::Increasing; 3],
        };
        let partition = validate_partition(&ds, &spec).unwrap();
        let m = build_connection_matrix(&partition).unwrap();
        // brute-force support via float interval inclusion
        for s in 0..3 {
            for t in 0..3 {
                let k = partition.domain_for_region[t];
                let ri = partition.region_intervals[s];
                let di = partition.domain_intervals[k];
                let included = ri.lo >= di.lo - 1e-15 && ri.hi <= di.hi + 1e-15;
                assert_eq!(!m.entry(s, t).is_zero(), included, "support ({s}, {t})");
            }
            assert_eq!(m.row_sum(s), Ratio::one());
        }
        // row for region 0: domains of regions 0 and 1 are (0,2) which contains it
        assert_eq!(m.entry(0, 0), Ratio::new(1, 2));
        assert_eq!(m.entry(0, 2), Ratio::new(0, 1));
        // region 2 fits only in domain (1,3), assigned to region 2 alone
        assert_eq!(m.entry(2, 2), Ratio::one());
    }

    #[test]
    fn assemble_metadata_uniform_ratios() {
        let model = standard_system([0.3; 4]);
        assert!((model.metadata.ratio_max - 0.5).abs() < 1e-15);
        assert!((model.metadata.ratio_min - 0.5).abs() < 1e-15);
        assert!((model.s_bar - 0.6).abs() < 1e-15);
    }

    #[test]
    fn assemble_refuses_non_contractive_factors() {
        let ds = validate_dataset(&five_nodes()).unwrap();
        let spec = PartitionSpec {
            domains: vec![(0, 2), (2, 4)],
            domain_for_region: vec![0, 1, 0, 1],
            orientation: vec![Orientation::Increasing; 4],
        };
        let partition = validate_partition(&ds, &spec).unwrap();
        let factors = constant_quads(&ds, [0.5, 0.0, 0.6, 0.0]);
        assert!(matches!(
            assemble(&ds, &partition, &factors),
            Err(Error::ContractionBoundExceeded { .. })
        ));
    }

    #[test]
    fn model_types_are_share_safe() {
        // everything is immutable after assembly; read-only sharing across
        // threads must compile
        fn assert_share<T: Send + Sync>() {}
        assert_share::<RifsModel>();
        assert_share::<crate::evaluator::EvaluationGrid>();
        assert_share::<crate::model::ExtendedDataset>();
        assert_share::<ConnectionMatrix>();
    }

    #[test]
    fn map_inverse_round_trip_dense() {
        let model = standard_system([0.3; 4]);
        for region in &model.regions {
            let dom = region.domain_interval();
            for j in 0..1000 {
                let x = dom.lo + dom.len() * j as f64 / 999.0;
                let y = region.map.eval(x);
                assert!((region.map.inverse_eval(y) - x).abs() < 1e-14);
            }
        }
    }
}
