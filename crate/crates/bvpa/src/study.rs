//! Replication studies and the parametric bootstrap.
//!
//! Both machines follow the same recipe: derive an isolated RNG stream per
//! replication (see the seeds module), simulate, refit from scratch, and
//! aggregate in replication order. Because the per-replication streams are
//! independent of scheduling and the aggregation order is fixed, reports
//! are byte-identical for every parallelism setting.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{BvpaError, Result};
use crate::fit::{fit, EmConfig, Variant};
use crate::model::{bvpa_sample_rng, BvpaParams, PARAM_NAMES};
use crate::numeric::{fmt_float, quantile_type7};
use crate::seeds::{derive_rng, PURPOSE_BOOTSTRAP, PURPOSE_STUDY};

/// Configuration of a replication study over a grid of sample sizes and
/// estimation variants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyConfig {
    /// Generating parameters.
    pub true_params: BvpaParams,
    /// Sample sizes to simulate; each must be at least 10.
    pub sample_sizes: Vec<usize>,
    /// Replications per (variant, size) cell; at least 1.
    pub replications: usize,
    /// Estimation procedures to run on every replication.
    pub variants: Vec<Variant>,
    /// Base seed of the replication streams.
    pub base_seed: u64,
    /// Worker threads for replications; 1 runs everything sequentially.
    pub parallelism: usize,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(BvpaError::InvalidParams(
                "replications must be at least 1".into(),
            ));
        }
        if self.sample_sizes.is_empty() {
            return Err(BvpaError::InvalidParams(
                "at least one sample size is required".into(),
            ));
        }
        if let Some(&bad) = self.sample_sizes.iter().find(|&&n| n < 10) {
            return Err(BvpaError::InvalidParams(format!(
                "sample sizes must be at least 10, got {bad}"
            )));
        }
        if self.variants.is_empty() {
            return Err(BvpaError::InvalidParams(
                "at least one variant is required".into(),
            ));
        }
        if self.parallelism == 0 {
            return Err(BvpaError::InvalidParams(
                "parallelism must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Aggregates of one (variant, sample size) cell.
///
/// When every replication of the cell failed, the averages and MSEs are NaN
/// and `failures` equals the replication count; callers decide whether that
/// is fatal.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CellReport {
    pub variant: Variant,
    pub n: usize,
    /// Mean shape-update count over successful replications.
    pub average_iterations: f64,
    /// Mean estimate per parameter (canonical order) over successes.
    pub average_estimates: [f64; 7],
    /// Mean squared error against the generating parameters.
    pub mse: [f64; 7],
    /// Replications whose fit returned an error; they are excluded from all
    /// averages.
    pub failures: usize,
}

/// All cells of a study, in the order (variant outer, sample size inner)
/// given by the configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyReport {
    pub true_params: BvpaParams,
    pub replications: usize,
    pub cells: Vec<CellReport>,
}

impl StudyReport {
    /// Fixed-schema CSV: one row per (variant, n, parameter) with columns
    /// `variant,n,parameter,average_estimate,mse,avg_iterations,failures`,
    /// followed by one summary row per cell with `parameter` set to
    /// `iterations` and the estimate columns left empty.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("variant,n,parameter,average_estimate,mse,avg_iterations,failures\n");
        for cell in &self.cells {
            for (j, name) in PARAM_NAMES.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    cell.variant,
                    cell.n,
                    name,
                    fmt_float(cell.average_estimates[j]),
                    fmt_float(cell.mse[j]),
                    fmt_float(cell.average_iterations),
                    cell.failures
                ));
            }
        }
        for cell in &self.cells {
            out.push_str(&format!(
                "{},{},iterations,,,{},{}\n",
                cell.variant,
                cell.n,
                fmt_float(cell.average_iterations),
                cell.failures
            ));
        }
        out
    }
}

/// Runs the full study. Every replication seeds its own RNG from
/// `(base_seed, variant, n, replication index)`, simulates a fresh sample
/// from the true parameters, and refits with the variant's default
/// configuration. Fit errors never abort the study: the replication is
/// counted in `failures` and excluded from the cell's averages.
pub fn run_study(config: &StudyConfig) -> Result<StudyReport> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| BvpaError::Precondition(format!("could not build thread pool: {e}")))?;
    let mut cells = Vec::with_capacity(config.variants.len() * config.sample_sizes.len());
    for &variant in &config.variants {
        for &n in &config.sample_sizes {
            let outcomes: Vec<Option<([f64; 7], usize)>> = pool.install(|| {
                (0..config.replications)
                    .into_par_iter()
                    .map(|rep| {
                        let mut rng = derive_rng(
                            config.base_seed,
                            PURPOSE_STUDY,
                            variant.id(),
                            n as u64,
                            rep as u64,
                        );
                        let data = bvpa_sample_rng(&config.true_params, n, &mut rng);
                        fit(&data, &EmConfig::new(variant))
                            .ok()
                            .map(|r| (r.params.as_array(), r.iterations))
                    })
                    .collect()
            });
            cells.push(aggregate_cell(variant, n, &config.true_params, &outcomes));
        }
    }
    Ok(StudyReport {
        true_params: config.true_params,
        replications: config.replications,
        cells,
    })
}

/// Sequential, replication-ordered reduction of one cell; the fixed order
/// makes the floating-point sums independent of how replications were
/// scheduled.
fn aggregate_cell(
    variant: Variant,
    n: usize,
    truth: &BvpaParams,
    outcomes: &[Option<([f64; 7], usize)>],
) -> CellReport {
    let t = truth.as_array();
    let mut successes = 0usize;
    let mut iter_sum = 0.0;
    let mut est_sum = [0.0; 7];
    let mut sq_sum = [0.0; 7];
    for outcome in outcomes {
        if let Some((estimate, iterations)) = outcome {
            successes += 1;
            iter_sum += *iterations as f64;
            for j in 0..7 {
                est_sum[j] += estimate[j];
                let d = estimate[j] - t[j];
                sq_sum[j] += d * d;
            }
        }
    }
    let failures = outcomes.len() - successes;
    if successes == 0 {
        return CellReport {
            variant,
            n,
            average_iterations: f64::NAN,
            average_estimates: [f64::NAN; 7],
            mse: [f64::NAN; 7],
            failures,
        };
    }
    let m = successes as f64;
    let mut average_estimates = [0.0; 7];
    let mut mse = [0.0; 7];
    for j in 0..7 {
        average_estimates[j] = est_sum[j] / m;
        mse[j] = sq_sum[j] / m;
    }
    CellReport {
        variant,
        n,
        average_iterations: iter_sum / m,
        average_estimates,
        mse,
        failures,
    }
}

/// Equal-tailed 95% parametric-bootstrap confidence intervals.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BootstrapCi {
    /// 2.5% quantile of the resample estimates, per parameter.
    pub lower: [f64; 7],
    /// 97.5% quantile, per parameter.
    pub upper: [f64; 7],
    pub resamples: usize,
    pub failures: usize,
}

impl BootstrapCi {
    /// CSV with columns `parameter,lower,upper`, one row per parameter in
    /// canonical order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("parameter,lower,upper\n");
        for (j, name) in PARAM_NAMES.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{}\n",
                name,
                fmt_float(self.lower[j]),
                fmt_float(self.upper[j])
            ));
        }
        out
    }
}

/// Parametric bootstrap around a fitted parameter vector: draw `resamples`
/// fresh samples of size `n` from `fitted`, refit each with `variant`'s
/// default configuration (locations, scales, and shapes are all
/// re-estimated), and take per-parameter interpolated quantiles at 2.5% and
/// 97.5%. Failed refits are counted and excluded; the call errors only when
/// every resample failed.
pub fn bootstrap_ci(
    fitted: &BvpaParams,
    n: usize,
    variant: Variant,
    resamples: usize,
    seed: u64,
    parallelism: usize,
) -> Result<BootstrapCi> {
    if resamples < 2 {
        return Err(BvpaError::Precondition(format!(
            "at least 2 resamples are required, got {resamples}"
        )));
    }
    if n == 0 {
        return Err(BvpaError::Precondition(
            "resample size must be positive".into(),
        ));
    }
    if parallelism == 0 {
        return Err(BvpaError::Precondition(
            "parallelism must be at least 1".into(),
        ));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| BvpaError::Precondition(format!("could not build thread pool: {e}")))?;
    let estimates: Vec<Option<[f64; 7]>> = pool.install(|| {
        (0..resamples)
            .into_par_iter()
            .map(|rep| {
                let mut rng = derive_rng(
                    seed,
                    PURPOSE_BOOTSTRAP,
                    variant.id(),
                    n as u64,
                    rep as u64,
                );
                let data = bvpa_sample_rng(fitted, n, &mut rng);
                fit(&data, &EmConfig::new(variant))
                    .ok()
                    .map(|r| r.params.as_array())
            })
            .collect()
    });
    let successes: Vec<[f64; 7]> = estimates.iter().flatten().copied().collect();
    let failures = resamples - successes.len();
    if successes.is_empty() {
        return Err(BvpaError::AllReplicationsFailed {
            variant: variant.to_string(),
            n,
            failures,
        });
    }
    let mut lower = [0.0; 7];
    let mut upper = [0.0; 7];
    for j in 0..7 {
        let mut column: Vec<f64> = successes.iter().map(|a| a[j]).collect();
        column.sort_by(f64::total_cmp);
        lower[j] = quantile_type7(&column, 0.025);
        upper[j] = quantile_type7(&column, 0.975);
    }
    Ok(BootstrapCi {
        lower,
        upper,
        resamples,
        failures,
    })
}
