//! Holder smoothness certificates for the interpolant pair: the closed-form
//! constant pipeline over the three regimes of the decay parameter `delta`,
//! and an empirical oscillation-based exponent estimator to confront the
//! certificate with a computed curve.

use serde::{Deserialize, Serialize};

use crate::construction::RifsModel;
use crate::error::{Error, Result};
use crate::evaluator::EvaluationGrid;

/// Systems with `|delta - 1|` below this are processed as critical.
pub const CRITICAL_DELTA_TOL: f64 = 1e-12;

/// Which regime the decay parameter `delta` falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HolderCase {
    /// `delta < 1`: the curve is Lipschitz.
    Sub,
    /// `delta = 1` (within tolerance): exponent `1 - alpha`.
    Critical,
    /// `delta > 1`: exponent `1 + ln(delta) / ln(ratio_max)`.
    Super,
}

/// Intermediate constants of the certificate, kept for reporting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmoothnessIntermediate {
    #[serde(rename = "L_L")]
    pub ratio_max: f64,
    #[serde(rename = "l_L")]
    pub ratio_min: f64,
    #[serde(rename = "M_k")]
    pub m_k: Vec<f64>,
    #[serde(rename = "M_tilde_k")]
    pub m_tilde_k: Vec<f64>,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub f1_bound: f64,
    pub f2_bound: f64,
    /// Free exponent knob used only in the critical case.
    pub alpha: f64,
    /// Set when `delta` was only within tolerance of 1, not exactly 1.
    pub near_critical: bool,
}

/// The Holder certificate: `|f_i(x1) - f_i(x2)| <= L_i |x1 - x2|^tau_i`
/// in normalized abscissas.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmoothnessReport {
    pub delta: f64,
    pub case: HolderCase,
    #[serde(rename = "L1")]
    pub l1: f64,
    #[serde(rename = "L2")]
    pub l2: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub intermediate: SmoothnessIntermediate,
}

/// `-x^alpha ln x`, which is positive and at most `1/(alpha e)` on `(0, 1)`.
pub fn lemma1_bound(alpha: f64, x: f64) -> Result<f64> {
    if alpha <= 0.0 || !alpha.is_finite() {
        return Err(Error::DomainError {
            reason: format!("alpha = {alpha} must be positive"),
        });
    }
    if x.is_nan() || x <= 0.0 || x >= 1.0 {
        return Err(Error::DomainError {
            reason: format!("x = {x} must lie in (0, 1)"),
        });
    }
    Ok(-x.powf(alpha) * x.ln())
}

/// Computes the full certificate for an assembled model.
///
/// `f_bounds` are sup-norm bounds for the two components, typically the
/// a priori bound of [`crate::evaluator::sup_norm_bound`] or measured grid
/// sups. Requires `omega_k + omega~_k < ratio_min / ratio_max` on every
/// region; under that hypothesis `delta < 1 / ratio_max`, so the super-case
/// exponent is strictly positive.
pub fn compute_constants(
    model: &RifsModel,
    f_bounds: (f64, f64),
    alpha: f64,
) -> Result<SmoothnessReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidAlpha { alpha });
    }
    let (f1_bound, f2_bound) = f_bounds;
    let ratio_max = model.metadata.ratio_max;
    let ratio_min = model.metadata.ratio_min;
    let limit = ratio_min / ratio_max;

    let n = model.n_regions();
    let mut m_k = Vec::with_capacity(n);
    let mut m_tilde_k = Vec::with_capacity(n);
    let mut delta: f64 = 0.0;
    for (k, region) in model.regions.iter().enumerate() {
        let quad = &region.factors;
        let omega = quad.omega();
        let omega_tilde = quad.omega_tilde();
        if omega + omega_tilde >= limit {
            return Err(Error::HypothesisViolated {
                region: Some(k),
                value: omega + omega_tilde,
                limit,
            });
        }
        let inv_ratio = region.domain_interval().len() / region.region_interval().len();
        delta = delta.max(inv_ratio * (omega + omega_tilde));
        m_k.push(
            f1_bound * quad.s.lipschitz()
                + f2_bound * quad.s_prime.lipschitz()
                + region.shift.lipschitz_q * inv_ratio,
        );
        m_tilde_k.push(
            f1_bound * quad.s_tilde.lipschitz()
                + f2_bound * quad.s_tilde_prime.lipschitz()
                + region.shift.lipschitz_q_tilde * inv_ratio,
        );
    }
    let m = m_k
        .iter()
        .zip(&m_tilde_k)
        .map(|(a, b)| a + b)
        .fold(0.0, f64::max);
    let d = m.max(
        2.0 * model.metadata.domain_len_max * (f1_bound + f2_bound)
            / (model.metadata.region_len_min * model.metadata.region_len_min),
    );

    let (case, l, tau, near_critical) = if (delta - 1.0).abs() <= CRITICAL_DELTA_TOL {
        let l = d * (1.0 + 1.0 / (alpha * std::f64::consts::E * ratio_max.ln().abs()));
        (HolderCase::Critical, l, 1.0 - alpha, delta != 1.0)
    } else if delta < 1.0 {
        (HolderCase::Sub, d / (1.0 - delta), 1.0, false)
    } else {
        let tau = 1.0 + delta.ln() / ratio_max.ln();
        if tau.is_nan() || tau <= 0.0 {
            return Err(Error::NonPositiveExponent { tau });
        }
        (HolderCase::Super, d / (delta - 1.0), tau, false)
    };

    // The second component's derivation majorizes to the same D and delta,
    // so its constants coincide with the first component's.
    Ok(SmoothnessReport {
        delta,
        case,
        l1: l,
        l2: l,
        tau1: tau,
        tau2: tau,
        intermediate: SmoothnessIntermediate {
            ratio_max,
            ratio_min,
            m_k,
            m_tilde_k,
            m,
            d,
            f1_bound,
            f2_bound,
            alpha,
            near_critical,
        },
    })
}

/// Result of the empirical oscillation regression.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HolderEstimate {
    pub tau1: f64,
    pub tau2: f64,
    /// Set per component when all oscillations vanished and the exponent
    /// defaulted to 1.
    pub degenerate_f1: bool,
    pub degenerate_f2: bool,
}

/// Maximum oscillation of sampled values over windows of half-width `h`.
///
/// Monotone-deque sliding maximum/minimum over the (possibly non-uniform)
/// abscissa windows `|x - x_j| <= h`; linear in the sample count per scale.
pub fn max_oscillation(xs: &[f64], vs: &[f64], h: f64) -> f64 {
    use std::collections::VecDeque;
    let n = xs.len();
    let mut max_dq: VecDeque<usize> = VecDeque::new();
    let mut min_dq: VecDeque<usize> = VecDeque::new();
    let mut lo = 0usize;
    let mut hi = 0usize; // exclusive
    let mut osc: f64 = 0.0;
    for j in 0..n {
        let left = xs[j] - h;
        let right = xs[j] + h;
        while hi < n && xs[hi] <= right {
            while let Some(&b) = max_dq.back() {
                if vs[b] <= vs[hi] {
                    max_dq.pop_back();
                } else {
                    break;
                }
            }
            max_dq.push_back(hi);
            while let Some(&b) = min_dq.back() {
                if vs[b] >= vs[hi] {
                    min_dq.pop_back();
                } else {
                    break;
                }
            }
            min_dq.push_back(hi);
            hi += 1;
        }
        while lo < n && xs[lo] < left {
            if max_dq.front() == Some(&lo) {
                max_dq.pop_front();
            }
            if min_dq.front() == Some(&lo) {
                min_dq.pop_front();
            }
            lo += 1;
        }
        if let (Some(&a), Some(&b)) = (max_dq.front(), min_dq.front()) {
            osc = osc.max(vs[a] - vs[b]);
        }
    }
    osc
}

/// Estimates Holder exponents for both components as the log-log regression
/// slope of maximum oscillation against window size.
///
/// Needs at least 4 scales spanning at least two decades. A component whose
/// oscillations all vanish reports exponent 1 and a degenerate flag.
pub fn empirical_holder(grid: &EvaluationGrid, scales: &[f64]) -> Result<HolderEstimate> {
    if scales.len() < 4 {
        return Err(Error::InsufficientScales {
            reason: format!("{} scales given, need at least 4", scales.len()),
        });
    }
    if !scales.iter().all(|&h| h.is_finite() && h > 0.0) {
        return Err(Error::InsufficientScales {
            reason: "scales must be positive and finite".into(),
        });
    }
    let max = scales.iter().cloned().fold(0.0, f64::max);
    let min = scales.iter().cloned().fold(f64::INFINITY, f64::min);
    if max / min < 100.0 {
        return Err(Error::InsufficientScales {
            reason: format!("scales span a factor of {:.1}, need at least 100", max / min),
        });
    }

    let fit = |vs: &[f64]| -> (f64, bool) {
        let pts: Vec<(f64, f64)> = scales
            .iter()
            .filter_map(|&h| {
                let osc = max_oscillation(&grid.xs, vs, h);
                (osc > 0.0).then(|| (h.ln(), osc.ln()))
            })
            .collect();
        if pts.len() < 2 {
            return (1.0, true);
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        (sxy / sxx, false)
    };
    let (tau1, d1) = fit(&grid.f1);
    let (tau2, d2) = fit(&grid.f2);
    Ok(HolderEstimate {
        tau1,
        tau2,
        degenerate_f1: d1,
        degenerate_f2: d2,
    })
}

/// Dyadic scales `2^-e` for `e` in `exponents`.
///
/// A good estimation window sits between the coarse saturation regime
/// (windows wide enough to capture the global oscillation) and the grid
/// spacing; `7..=14` with a `2^14 + 1` grid works well for the systems
/// treated here.
pub fn dyadic_scales(exponents: std::ops::RangeInclusive<u32>) -> Vec<f64> {
    exponents.map(|e| 0.5f64.powi(e as i32)).collect()
}
