//! The shared core of the estimation procedures: posterior weights for the
//! latent shock attribution, sufficient statistics of a partitioned sample,
//! the surrogate objective, and the closed-form shape update.
//!
//! All of this operates on shapes only. The location/scale frame is chosen
//! by the surrounding procedure (see the fit module) and enters here only
//! through the normalized coordinates baked into the statistics.

use crate::error::{BvpaError, Result};
use crate::model::{BivariatePoint, Partition};

/// The three shape parameters `(alpha0, alpha1, alpha2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeTriple {
    pub alpha0: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

impl ShapeTriple {
    pub fn new(alpha0: f64, alpha1: f64, alpha2: f64) -> Result<Self> {
        for (value, name) in [(alpha0, "alpha0"), (alpha1, "alpha1"), (alpha2, "alpha2")] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(BvpaError::InvalidParams(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        Ok(Self {
            alpha0,
            alpha1,
            alpha2,
        })
    }

    pub fn sum(&self) -> f64 {
        self.alpha0 + self.alpha1 + self.alpha2
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.alpha0, self.alpha1, self.alpha2]
    }
}

/// Posterior attribution weights at a given shape triple.
///
/// On the wedge `z1 < z2` the larger coordinate may stem from the shared
/// shock (probability `u1 = alpha0/(alpha0 + alpha2)`) or from its own
/// shock (`u2 = alpha2/(alpha0 + alpha2)`); on the opposite wedge the roles
/// are `w1 = alpha0/(alpha0 + alpha1)` and `w2 = alpha1/(alpha0 + alpha1)`.
/// When built with expected counts, `ntilde` additionally carries the
/// expected class sizes `n * alpha_j / (alpha0 + alpha1 + alpha2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Posteriors {
    pub u1: f64,
    pub u2: f64,
    pub w1: f64,
    pub w2: f64,
    /// Expected class sizes, present when the variant replaces the observed
    /// partition counts by their model-implied expectations.
    pub ntilde: Option<[f64; 3]>,
}

/// Computes the posterior weights at `shapes` for a sample of size `n`.
/// With `expected_counts` set, the observed class sizes are replaced by
/// their expectations under the current shapes during coefficient
/// assembly.
pub fn e_step(shapes: &ShapeTriple, n: usize, expected_counts: bool) -> Posteriors {
    let u_den = shapes.alpha0 + shapes.alpha2;
    let w_den = shapes.alpha0 + shapes.alpha1;
    let ntilde = if expected_counts {
        let total = shapes.sum();
        let n = n as f64;
        Some([
            n * shapes.alpha0 / total,
            n * shapes.alpha1 / total,
            n * shapes.alpha2 / total,
        ])
    } else {
        None
    };
    Posteriors {
        u1: shapes.alpha0 / u_den,
        u2: shapes.alpha2 / u_den,
        w1: shapes.alpha0 / w_den,
        w2: shapes.alpha1 / w_den,
        ntilde,
    }
}

/// Sufficient statistics of a partitioned sample under a fixed frame.
///
/// With `z_j = (x_j - mu_j)/sigma_j` and `l_j = ln(1 + z_j)`,
///
/// * `t0` sums `l` of the larger normalized coordinate over the whole
///   sample (on ties the common value),
/// * `t1` sums `l1` over the whole sample,
/// * `t2` sums `l2` over the whole sample,
///
/// and `n0, n1, n2` are the partition class sizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SufficientStats {
    pub t0: f64,
    pub t1: f64,
    pub t2: f64,
    pub n0: usize,
    pub n1: usize,
    pub n2: usize,
}

impl SufficientStats {
    pub fn n(&self) -> usize {
        self.n0 + self.n1 + self.n2
    }
}

/// Accumulates the sufficient statistics for `data` under the given frame,
/// using a partition previously computed with the same frame. Errors when
/// any normalized coordinate is at or below -1, which no location/scale
/// pair consistent with the data can produce.
pub fn sufficient_stats(
    data: &[BivariatePoint],
    partition: &Partition,
    mu1: f64,
    mu2: f64,
    sigma1: f64,
    sigma2: f64,
) -> Result<SufficientStats> {
    let normalized = |index: usize| -> Result<(f64, f64)> {
        let point = &data[index];
        let z1 = (point.x1 - mu1) / sigma1;
        let z2 = (point.x2 - mu2) / sigma2;
        for z in [z1, z2] {
            if !(z > -1.0) {
                return Err(BvpaError::InvalidNormalization { index, z });
            }
        }
        Ok((z1, z2))
    };
    let mut t0 = 0.0;
    let mut t1 = 0.0;
    let mut t2 = 0.0;
    for &i in &partition.i0 {
        let (z1, z2) = normalized(i)?;
        t0 += z1.ln_1p();
        t1 += z1.ln_1p();
        t2 += z2.ln_1p();
    }
    for &i in &partition.i1 {
        let (z1, z2) = normalized(i)?;
        t0 += z2.ln_1p();
        t1 += z1.ln_1p();
        t2 += z2.ln_1p();
    }
    for &i in &partition.i2 {
        let (z1, z2) = normalized(i)?;
        t0 += z1.ln_1p();
        t1 += z1.ln_1p();
        t2 += z2.ln_1p();
    }
    Ok(SufficientStats {
        t0,
        t1,
        t2,
        n0: partition.i0.len(),
        n1: partition.i1.len(),
        n2: partition.i2.len(),
    })
}

/// The per-shape log coefficients of the surrogate objective: class sizes
/// plus posterior-weighted attribution of the wedge classes to the shared
/// shock. Uses the expected class sizes when the posteriors carry them.
fn coefficients(stats: &SufficientStats, post: &Posteriors) -> [f64; 3] {
    let [m0, m1, m2] = match post.ntilde {
        Some(expected) => expected,
        None => [stats.n0 as f64, stats.n1 as f64, stats.n2 as f64],
    };
    [
        m0 + post.u1 * m1 + post.w1 * m2,
        m1 + post.w2 * m2,
        m2 + post.u2 * m1,
    ]
}

/// The surrogate objective at `shapes` given statistics and posteriors:
/// `sum_j (-alpha_j * t_j + c_j * ln alpha_j)` with the coefficients `c`
/// from [`e_step`]'s attribution. Each shape enters through its own concave
/// term, so the objective separates and the maximizer is closed-form.
pub fn pseudo_likelihood(stats: &SufficientStats, post: &Posteriors, shapes: &ShapeTriple) -> f64 {
    let c = coefficients(stats, post);
    let t = [stats.t0, stats.t1, stats.t2];
    let a = shapes.as_array();
    let mut q = 0.0;
    for j in 0..3 {
        q += -a[j] * t[j] + c[j] * a[j].ln();
    }
    q
}

/// Maximizes the surrogate objective in closed form: `alpha_j = c_j / t_j`.
/// Errors when a statistic `t_j` is not strictly positive or a coefficient
/// `c_j` is zero (then the objective has no interior maximizer in that
/// coordinate).
pub fn m_step(stats: &SufficientStats, post: &Posteriors) -> Result<ShapeTriple> {
    let c = coefficients(stats, post);
    let t = [stats.t0, stats.t1, stats.t2];
    for j in 0..3 {
        if !(t[j] > 0.0) {
            return Err(BvpaError::DegenerateStatistics(format!(
                "t{j} = {} is not strictly positive",
                t[j]
            )));
        }
        if c[j] == 0.0 {
            return Err(BvpaError::DegenerateStatistics(format!(
                "coefficient c{j} is zero (no observation is attributable to alpha{j})"
            )));
        }
    }
    Ok(ShapeTriple {
        alpha0: c[0] / t[0],
        alpha1: c[1] / t[1],
        alpha2: c[2] / t[2],
    })
}
