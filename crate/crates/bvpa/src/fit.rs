//! The estimation procedures: one base fit and four modifications, all
//! built around the closed-form shape update from the em module but
//! differing in how the location/scale frame is handled and in when they
//! stop.
//!
//! * [`Variant::Base`] — freeze the frame up front (coordinate minima plus
//!   a marginal scale estimate), partition once, and iterate the shape
//!   update with the observed class counts until the surrogate objective
//!   flattens.
//! * [`Variant::Mod1`] — same frozen frame, but the observed class counts
//!   are replaced by their expected sizes under the current shapes, and the
//!   iteration stops on the relative movement of the shape iterates.
//! * [`Variant::Mod2Wt`] / [`Variant::Mod2T`] — estimate scales inside the
//!   loop: every iteration re-partitions at the current scales, updates the
//!   shapes, then moves each scale by one gradient-ascent step on its
//!   marginal log-likelihood. The step sizes are frozen at the start. The
//!   `T` flavor caps the loop at a fixed iteration budget; the `WT` flavor
//!   runs until the parameter movement stops.
//! * [`Variant::Mod3`] — as Mod2, but the gradient step is replaced by one
//!   sweep of the scale fixed-point map, which needs no step size.
//! * [`Variant::Mod4`] — settle each scale first by iterating the
//!   univariate likelihood fixed point to convergence (no shape updates are
//!   spent on this), then run the Mod3 loop from the settled scales,
//!   stopping when the surrogate objective flattens.

use serde::{Deserialize, Serialize};

use crate::em::{e_step, m_step, pseudo_likelihood, sufficient_stats, ShapeTriple};
use crate::error::{BvpaError, Result};
use crate::model::{partition_sample, BivariatePoint, BvpaParams};
use crate::pareto::{
    marginal_scale_estimate, scale_fixed_point_sweep, scale_gradient, univariate_scale_settle,
};

/// Which estimation procedure to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "base")]
    Base,
    #[serde(rename = "mod1")]
    Mod1,
    #[serde(rename = "mod2-wt")]
    Mod2Wt,
    #[serde(rename = "mod2-t")]
    Mod2T,
    #[serde(rename = "mod3")]
    Mod3,
    #[serde(rename = "mod4")]
    Mod4,
}

impl Variant {
    /// All variants in reporting order.
    pub const ALL: [Variant; 6] = [
        Variant::Base,
        Variant::Mod1,
        Variant::Mod2Wt,
        Variant::Mod2T,
        Variant::Mod3,
        Variant::Mod4,
    ];

    /// Stable small integer used in seed derivation.
    pub fn id(self) -> u8 {
        match self {
            Variant::Base => 0,
            Variant::Mod1 => 1,
            Variant::Mod2Wt => 2,
            Variant::Mod2T => 3,
            Variant::Mod3 => 4,
            Variant::Mod4 => 5,
        }
    }

    /// Parses the canonical names; `"mod2"` is accepted as an alias for the
    /// untruncated flavor.
    pub fn parse(name: &str) -> Result<Variant> {
        match name {
            "base" => Ok(Variant::Base),
            "mod1" => Ok(Variant::Mod1),
            "mod2" | "mod2-wt" => Ok(Variant::Mod2Wt),
            "mod2-t" => Ok(Variant::Mod2T),
            "mod3" => Ok(Variant::Mod3),
            "mod4" => Ok(Variant::Mod4),
            other => Err(BvpaError::InvalidParams(format!(
                "unknown variant '{other}' (expected base, mod1, mod2-wt, mod2-t, mod3, or mod4)"
            ))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Base => "base",
            Variant::Mod1 => "mod1",
            Variant::Mod2Wt => "mod2-wt",
            Variant::Mod2T => "mod2-t",
            Variant::Mod3 => "mod3",
            Variant::Mod4 => "mod4",
        })
    }
}

impl std::str::FromStr for Variant {
    type Err = BvpaError;
    fn from_str(s: &str) -> Result<Variant> {
        Variant::parse(s)
    }
}

/// Tuning knobs of a fit. `EmConfig::new` picks the defaults every study
/// and CLI invocation uses; tests override individual fields.
#[derive(Debug, Clone)]
pub struct EmConfig {
    pub variant: Variant,
    /// Stopping tolerance of the variant's own rule.
    pub tol: f64,
    /// Hard cap on shape updates.
    pub max_iter: usize,
    /// Optional early cap recorded as a truncated (non-converged) run;
    /// pre-set for the T flavor of Mod2.
    pub truncate_at: Option<usize>,
    /// Gradient-step coefficient of Mod2's scale update.
    pub gd_step: f64,
    /// Starting shapes of every variant.
    pub init_shapes: ShapeTriple,
    /// Starting scales. `None` selects the per-variant default: the
    /// marginal scale estimate for the fixed-frame variants, unit scales
    /// for the re-partitioning ones.
    pub init_scales: Option<(f64, f64)>,
    /// Absolute tolerance of Mod4's scale-settling phase.
    pub fp_inner_tol: f64,
}

impl EmConfig {
    pub fn new(variant: Variant) -> Self {
        EmConfig {
            variant,
            tol: 1e-5,
            max_iter: 200_000,
            truncate_at: if variant == Variant::Mod2T {
                Some(2000)
            } else {
                None
            },
            gd_step: 0.02,
            init_shapes: ShapeTriple {
                alpha0: 1.0,
                alpha1: 1.0,
                alpha2: 1.0,
            },
            init_scales: None,
            fp_inner_tol: 1e-5,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(BvpaError::InvalidParams(format!(
                "tolerance must be positive and finite, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(BvpaError::InvalidParams(
                "max_iter must be at least 1".into(),
            ));
        }
        if self.truncate_at == Some(0) {
            return Err(BvpaError::InvalidParams(
                "truncate_at must be at least 1".into(),
            ));
        }
        if !(self.gd_step > 0.0 && self.gd_step.is_finite()) {
            return Err(BvpaError::InvalidParams(format!(
                "gd_step must be positive and finite, got {}",
                self.gd_step
            )));
        }
        if !(self.fp_inner_tol > 0.0 && self.fp_inner_tol.is_finite()) {
            return Err(BvpaError::InvalidParams(format!(
                "fp_inner_tol must be positive and finite, got {}",
                self.fp_inner_tol
            )));
        }
        ShapeTriple::new(
            self.init_shapes.alpha0,
            self.init_shapes.alpha1,
            self.init_shapes.alpha2,
        )?;
        if let Some((s1, s2)) = self.init_scales {
            for s in [s1, s2] {
                if !(s > 0.0 && s.is_finite()) {
                    return Err(BvpaError::InvalidParams(format!(
                        "init scale must be positive and finite, got {s}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Outcome of a fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    /// All seven parameter estimates.
    pub params: BvpaParams,
    /// Number of shape updates performed; always `q_trace.len() - 1`.
    pub iterations: usize,
    /// Surrogate objective values: the starting value first, then one entry
    /// per shape update (evaluated at the new shapes under the posteriors
    /// that produced them).
    pub q_trace: Vec<f64>,
    /// True when the variant's own stopping rule fired; capped or truncated
    /// runs report false.
    pub converged: bool,
    pub variant: Variant,
    /// How many gradient-step halvings were needed to keep scale iterates
    /// positive (Mod2 only; zero for everything else and almost always zero
    /// in practice).
    pub sigma_backtracks: usize,
}

/// Serializable snapshot of a fit, the schema the CLI writes and reads.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitRecord {
    pub variant: Variant,
    pub params: BvpaParams,
    pub iterations: usize,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_trace: Option<Vec<f64>>,
}

impl FitResult {
    pub fn record(&self, include_trace: bool) -> FitRecord {
        FitRecord {
            variant: self.variant,
            params: self.params,
            iterations: self.iterations,
            converged: self.converged,
            q_trace: include_trace.then(|| self.q_trace.clone()),
        }
    }
}

/// Location estimates: the exact per-coordinate sample minima.
pub fn estimate_locations(data: &[BivariatePoint]) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Err(BvpaError::EmptyData);
    }
    let mu1 = data.iter().map(|p| p.x1).fold(f64::INFINITY, f64::min);
    let mu2 = data.iter().map(|p| p.x2).fold(f64::INFINITY, f64::min);
    Ok((mu1, mu2))
}

/// Runs a fit with the configured variant.
pub fn fit(data: &[BivariatePoint], config: &EmConfig) -> Result<FitResult> {
    config.validate()?;
    match config.variant {
        Variant::Base => fit_base(data, config),
        Variant::Mod1 => fit_mod1(data, config),
        Variant::Mod2Wt | Variant::Mod2T => fit_mod2(data, config),
        Variant::Mod3 => fit_mod3(data, config),
        Variant::Mod4 => fit_mod4(data, config),
    }
}

/// Iterates the shape update with the location/scale frame held fixed at
/// the supplied values. The partition is computed once from that frame and
/// never revisited.
///
/// This is the engine of the fixed-frame variants and is public so callers
/// can inject a known frame (for example the generating one) instead of an
/// estimated frame. With `expected_counts` unset the observed class counts
/// drive the update and the iteration stops when consecutive objective
/// values agree to the relative tolerance; with it set the expected class
/// sizes drive the update and the iteration stops when no shape moves by
/// more than the relative tolerance.
pub fn fit_shapes_fixed_frame(
    data: &[BivariatePoint],
    mu1: f64,
    mu2: f64,
    sigma1: f64,
    sigma2: f64,
    expected_counts: bool,
    config: &EmConfig,
) -> Result<FitResult> {
    config.validate()?;
    if data.is_empty() {
        return Err(BvpaError::EmptyData);
    }
    for (sigma, name) in [(sigma1, "sigma1"), (sigma2, "sigma2")] {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(BvpaError::InvalidParams(format!(
                "{name} must be positive and finite, got {sigma}"
            )));
        }
    }
    let n = data.len();
    let partition = partition_sample(data, mu1, mu2, sigma1, sigma2);
    let stats = sufficient_stats(data, &partition, mu1, mu2, sigma1, sigma2)?;
    let mut shapes = config.init_shapes;
    let mut q_trace = vec![pseudo_likelihood(
        &stats,
        &e_step(&shapes, n, expected_counts),
        &shapes,
    )];
    let mut prev_update_q: Option<f64> = None;
    let mut converged = false;
    let mut iterations = 0usize;
    while iterations < config.max_iter.min(config.truncate_at.unwrap_or(usize::MAX)) {
        let post = e_step(&shapes, n, expected_counts);
        let updated = m_step(&stats, &post)?;
        let q = pseudo_likelihood(&stats, &post, &updated);
        iterations += 1;
        q_trace.push(q);
        let hit = if expected_counts {
            let rel = ((updated.alpha0 - shapes.alpha0) / shapes.alpha0)
                .abs()
                .max(((updated.alpha1 - shapes.alpha1) / shapes.alpha1).abs())
                .max(((updated.alpha2 - shapes.alpha2) / shapes.alpha2).abs());
            rel < config.tol
        } else {
            match prev_update_q {
                Some(prev) => ((q - prev) / prev).abs() < config.tol,
                None => false,
            }
        };
        prev_update_q = Some(q);
        shapes = updated;
        if hit {
            converged = true;
            break;
        }
    }
    Ok(FitResult {
        params: BvpaParams {
            mu1,
            mu2,
            sigma1,
            sigma2,
            alpha0: shapes.alpha0,
            alpha1: shapes.alpha1,
            alpha2: shapes.alpha2,
        },
        iterations,
        q_trace,
        converged,
        variant: config.variant,
        sigma_backtracks: 0,
    })
}

/// Scales for the fixed-frame variants: explicit overrides win, otherwise
/// each coordinate gets the marginal scale estimate.
fn fixed_frame_scales(
    data: &[BivariatePoint],
    mu1: f64,
    mu2: f64,
    config: &EmConfig,
) -> Result<(f64, f64)> {
    if let Some(scales) = config.init_scales {
        return Ok(scales);
    }
    let y1: Vec<f64> = data.iter().map(|p| p.x1 - mu1).collect();
    let y2: Vec<f64> = data.iter().map(|p| p.x2 - mu2).collect();
    check_spread(&y1, &y2)?;
    Ok((marginal_scale_estimate(&y1), marginal_scale_estimate(&y2)))
}

fn check_spread(y1: &[f64], y2: &[f64]) -> Result<()> {
    for (y, name) in [(y1, "first"), (y2, "second")] {
        if y.iter().all(|&v| v == 0.0) {
            return Err(BvpaError::DegenerateData(format!(
                "the {name} coordinate is constant"
            )));
        }
    }
    Ok(())
}

fn fit_base(data: &[BivariatePoint], config: &EmConfig) -> Result<FitResult> {
    let (mu1, mu2) = estimate_locations(data)?;
    let (s1, s2) = fixed_frame_scales(data, mu1, mu2, config)?;
    fit_shapes_fixed_frame(data, mu1, mu2, s1, s2, false, config)
}

fn fit_mod1(data: &[BivariatePoint], config: &EmConfig) -> Result<FitResult> {
    let (mu1, mu2) = estimate_locations(data)?;
    let (s1, s2) = fixed_frame_scales(data, mu1, mu2, config)?;
    fit_shapes_fixed_frame(data, mu1, mu2, s1, s2, true, config)
}

/// How the re-partitioning loop moves the scales each iteration.
enum ScaleUpdate {
    /// One ascent step along each marginal scale gradient, with step sizes
    /// frozen before the loop.
    Gradient { step1: f64, step2: f64 },
    /// One sweep of each marginal scale fixed-point map.
    FixedPoint,
}

/// When the re-partitioning loop stops.
enum StopRule {
    /// Largest absolute movement across both scales and all three shapes
    /// falls below the tolerance.
    AbsoluteParams,
    /// Consecutive objective values agree to the relative tolerance.
    RelativeObjective,
}

/// Applies `sigma + step * gradient`, halving the step until the result
/// stays positive. Halvings are counted; if sixty of them cannot produce a
/// positive scale the gradient is pathological.
fn positive_gradient_step(
    sigma: f64,
    step: f64,
    gradient: f64,
    backtracks: &mut usize,
) -> Result<f64> {
    let mut h = step;
    for _ in 0..60 {
        let candidate = sigma + h * gradient;
        if candidate > 0.0 && candidate.is_finite() {
            return Ok(candidate);
        }
        h *= 0.5;
        *backtracks += 1;
    }
    Err(BvpaError::StepDivergence(format!(
        "could not keep a scale positive from sigma={sigma} with gradient {gradient}"
    )))
}

/// The joint loop shared by Mod2, Mod3, and Mod4's second phase: each
/// iteration re-partitions the sample at the current scales, performs one
/// expected-count shape update, then moves both scales using the freshly
/// updated marginal shapes `alpha0 + alpha_j`.
fn fit_repartitioning(
    data: &[BivariatePoint],
    init_scales: (f64, f64),
    scale_update: ScaleUpdate,
    stop: StopRule,
    config: &EmConfig,
) -> Result<FitResult> {
    let (mu1, mu2) = estimate_locations(data)?;
    let y1: Vec<f64> = data.iter().map(|p| p.x1 - mu1).collect();
    let y2: Vec<f64> = data.iter().map(|p| p.x2 - mu2).collect();
    check_spread(&y1, &y2)?;
    let n = data.len();
    let (mut s1, mut s2) = init_scales;
    let mut shapes = config.init_shapes;
    let cap = config.max_iter.min(config.truncate_at.unwrap_or(usize::MAX));
    let mut sigma_backtracks = 0usize;
    let initial_q = {
        let part = partition_sample(data, mu1, mu2, s1, s2);
        let stats = sufficient_stats(data, &part, mu1, mu2, s1, s2)?;
        pseudo_likelihood(&stats, &e_step(&shapes, n, true), &shapes)
    };
    let mut q_trace = vec![initial_q];
    let mut prev_update_q: Option<f64> = None;
    let mut converged = false;
    let mut iterations = 0usize;
    while iterations < cap {
        let part = partition_sample(data, mu1, mu2, s1, s2);
        let stats = sufficient_stats(data, &part, mu1, mu2, s1, s2)?;
        let post = e_step(&shapes, n, true);
        let updated = m_step(&stats, &post)?;
        let am1 = updated.alpha0 + updated.alpha1;
        let am2 = updated.alpha0 + updated.alpha2;
        let (new_s1, new_s2) = match scale_update {
            ScaleUpdate::Gradient { step1, step2 } => {
                let g1 = scale_gradient(&y1, s1, am1);
                let g2 = scale_gradient(&y2, s2, am2);
                (
                    positive_gradient_step(s1, step1, g1, &mut sigma_backtracks)?,
                    positive_gradient_step(s2, step2, g2, &mut sigma_backtracks)?,
                )
            }
            ScaleUpdate::FixedPoint => (
                scale_fixed_point_sweep(&y1, s1, am1),
                scale_fixed_point_sweep(&y2, s2, am2),
            ),
        };
        let q = pseudo_likelihood(&stats, &post, &updated);
        iterations += 1;
        q_trace.push(q);
        let hit = match stop {
            StopRule::AbsoluteParams => {
                let delta = (new_s1 - s1)
                    .abs()
                    .max((new_s2 - s2).abs())
                    .max((updated.alpha0 - shapes.alpha0).abs())
                    .max((updated.alpha1 - shapes.alpha1).abs())
                    .max((updated.alpha2 - shapes.alpha2).abs());
                delta < config.tol
            }
            StopRule::RelativeObjective => match prev_update_q {
                Some(prev) => ((q - prev) / prev).abs() < config.tol,
                None => false,
            },
        };
        prev_update_q = Some(q);
        s1 = new_s1;
        s2 = new_s2;
        shapes = updated;
        if hit {
            converged = true;
            break;
        }
    }
    Ok(FitResult {
        params: BvpaParams {
            mu1,
            mu2,
            sigma1: s1,
            sigma2: s2,
            alpha0: shapes.alpha0,
            alpha1: shapes.alpha1,
            alpha2: shapes.alpha2,
        },
        iterations,
        q_trace,
        converged,
        variant: config.variant,
        sigma_backtracks,
    })
}

fn fit_mod2(data: &[BivariatePoint], config: &EmConfig) -> Result<FitResult> {
    let (mu1, mu2) = estimate_locations(data)?;
    let init_scales = config.init_scales.unwrap_or((1.0, 1.0));
    let y1: Vec<f64> = data.iter().map(|p| p.x1 - mu1).collect();
    let y2: Vec<f64> = data.iter().map(|p| p.x2 - mu2).collect();
    check_spread(&y1, &y2)?;
    // Freeze the per-coordinate step sizes using the gradient at the
    // starting point, normalized so the first move is at most gd_step
    // relative to the starting scale.
    let am1 = config.init_shapes.alpha0 + config.init_shapes.alpha1;
    let am2 = config.init_shapes.alpha0 + config.init_shapes.alpha2;
    let g1 = scale_gradient(&y1, init_scales.0, am1);
    let g2 = scale_gradient(&y2, init_scales.1, am2);
    let step1 = config.gd_step * init_scales.0 / (1.0 + g1.abs());
    let step2 = config.gd_step * init_scales.1 / (1.0 + g2.abs());
    fit_repartitioning(
        data,
        init_scales,
        ScaleUpdate::Gradient { step1, step2 },
        StopRule::AbsoluteParams,
        config,
    )
}

fn fit_mod3(data: &[BivariatePoint], config: &EmConfig) -> Result<FitResult> {
    let init_scales = config.init_scales.unwrap_or((1.0, 1.0));
    fit_repartitioning(
        data,
        init_scales,
        ScaleUpdate::FixedPoint,
        StopRule::AbsoluteParams,
        config,
    )
}

fn fit_mod4(data: &[BivariatePoint], config: &EmConfig) -> Result<FitResult> {
    let (mu1, mu2) = estimate_locations(data)?;
    let (start1, start2) = config.init_scales.unwrap_or((1.0, 1.0));
    let y1: Vec<f64> = data.iter().map(|p| p.x1 - mu1).collect();
    let y2: Vec<f64> = data.iter().map(|p| p.x2 - mu2).collect();
    check_spread(&y1, &y2)?;
    let s1 = univariate_scale_settle(&y1, start1, config.fp_inner_tol);
    let s2 = univariate_scale_settle(&y2, start2, config.fp_inner_tol);
    fit_repartitioning(
        data,
        (s1, s2),
        ScaleUpdate::FixedPoint,
        StopRule::RelativeObjective,
        config,
    )
}
