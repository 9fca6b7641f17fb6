//! The bivariate Pareto model built from three independent shocks.
//!
//! With `U0` standard Pareto of shape `alpha0` and `Uj` Pareto with location
//! `mu_j`, scale `sigma_j`, shape `alpha_j` (j = 1, 2), the observed pair is
//!
//! ```text
//! X1 = min(sigma1 * U0 + mu1, U1)
//! X2 = min(sigma2 * U0 + mu2, U2)
//! ```
//!
//! The shared shock `U0` couples the coordinates and puts strictly positive
//! probability on exact ties of the normalized values
//! `z_j = (x_j - mu_j)/sigma_j`, so the law splits into two absolutely
//! continuous wedge components (`z1 < z2` and `z1 > z2`) plus a singular
//! component supported on the diagonal `z1 = z2`. The singular density is
//! reported per unit of the common normalized coordinate `z`, i.e. as a
//! one-dimensional density along the diagonal; it is not rescaled by the
//! data-space line element.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BvpaError, Result};
use crate::pareto::{pareto_draw, ParetoParams};

/// Names of the seven parameters in canonical order; used for file output
/// and reporting.
pub const PARAM_NAMES: [&str; 7] = [
    "mu1", "mu2", "sigma1", "sigma2", "alpha0", "alpha1", "alpha2",
];

/// The seven parameters of the bivariate law: per-coordinate locations and
/// scales plus three shape parameters (shared shock, coordinate 1,
/// coordinate 2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BvpaParams {
    pub mu1: f64,
    pub mu2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub alpha0: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

impl BvpaParams {
    /// Validates finite locations and strictly positive, finite scales and
    /// shapes.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mu1: f64,
        mu2: f64,
        sigma1: f64,
        sigma2: f64,
        alpha0: f64,
        alpha1: f64,
        alpha2: f64,
    ) -> Result<Self> {
        Self::from_array([mu1, mu2, sigma1, sigma2, alpha0, alpha1, alpha2])
    }

    /// Builds from `[mu1, mu2, sigma1, sigma2, alpha0, alpha1, alpha2]`.
    pub fn from_array(a: [f64; 7]) -> Result<Self> {
        for (value, name) in a.iter().zip(PARAM_NAMES) {
            if !value.is_finite() {
                return Err(BvpaError::InvalidParams(format!(
                    "{name} must be finite, got {value}"
                )));
            }
        }
        for (value, name) in a[2..].iter().zip(&PARAM_NAMES[2..]) {
            if *value <= 0.0 {
                return Err(BvpaError::InvalidParams(format!(
                    "{name} must be strictly positive, got {value}"
                )));
            }
        }
        Ok(Self {
            mu1: a[0],
            mu2: a[1],
            sigma1: a[2],
            sigma2: a[3],
            alpha0: a[4],
            alpha1: a[5],
            alpha2: a[6],
        })
    }

    /// The parameters in canonical order, matching [`PARAM_NAMES`].
    pub fn as_array(&self) -> [f64; 7] {
        [
            self.mu1,
            self.mu2,
            self.sigma1,
            self.sigma2,
            self.alpha0,
            self.alpha1,
            self.alpha2,
        ]
    }

    /// Sum of the three shape parameters.
    pub fn shape_sum(&self) -> f64 {
        self.alpha0 + self.alpha1 + self.alpha2
    }

    /// Normalized coordinates `((x1 - mu1)/sigma1, (x2 - mu2)/sigma2)`.
    pub fn normalize(&self, point: &BivariatePoint) -> (f64, f64) {
        (
            (point.x1 - self.mu1) / self.sigma1,
            (point.x2 - self.mu2) / self.sigma2,
        )
    }
}

/// One observation of the bivariate law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BivariatePoint {
    pub x1: f64,
    pub x2: f64,
}

/// Which component of the mixed law a point belongs to: the singular
/// diagonal, the wedge `z1 < z2`, or the wedge `z1 > z2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PdfBranch {
    /// Exact tie of the normalized coordinates (shared shock won both).
    Singular,
    /// `z1 < z2`: the first coordinate is the strictly smaller one.
    Wedge1,
    /// `z1 > z2`: the second coordinate is the strictly smaller one.
    Wedge2,
}

impl std::fmt::Display for PdfBranch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PdfBranch::Singular => "f0",
            PdfBranch::Wedge1 => "f1",
            PdfBranch::Wedge2 => "f2",
        })
    }
}

/// The shock values behind one draw, kept alongside the observation so that
/// tests and diagnostics can use construction truth instead of recovering
/// ties from floating-point comparisons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatentDraw {
    /// Standard-Pareto shared shock.
    pub u0: f64,
    /// Individual shock of the first coordinate (data units).
    pub u1: f64,
    /// Individual shock of the second coordinate (data units).
    pub u2: f64,
    /// True when the shared shock achieved the first coordinate's minimum.
    pub from_shock1: bool,
    /// True when the shared shock achieved the second coordinate's minimum.
    pub from_shock2: bool,
}

impl LatentDraw {
    /// The mixture component this draw was generated from. When neither
    /// coordinate came from the shared shock the wedge is decided by the
    /// individual shocks' normalized ordering, which is almost surely
    /// strict.
    pub fn branch(&self, params: &BvpaParams) -> PdfBranch {
        match (self.from_shock1, self.from_shock2) {
            (true, true) => PdfBranch::Singular,
            // Shock won coordinate 1 only: z1 = u0 while z2 < u0.
            (true, false) => PdfBranch::Wedge2,
            (false, true) => PdfBranch::Wedge1,
            (false, false) => {
                let z1 = (self.u1 - params.mu1) / params.sigma1;
                let z2 = (self.u2 - params.mu2) / params.sigma2;
                if z1 < z2 {
                    PdfBranch::Wedge1
                } else {
                    PdfBranch::Wedge2
                }
            }
        }
    }

    /// True when the shared shock achieved both coordinates, i.e. the point
    /// sits on the singular diagonal by construction.
    pub fn is_tie(&self) -> bool {
        self.from_shock1 && self.from_shock2
    }
}

/// One draw together with its latent shocks.
pub fn bvpa_draw_latent<R: Rng + ?Sized>(params: &BvpaParams, rng: &mut R) -> (BivariatePoint, LatentDraw) {
    let shock = ParetoParams {
        mu: 0.0,
        sigma: 1.0,
        alpha: params.alpha0,
    };
    let ind1 = ParetoParams {
        mu: params.mu1,
        sigma: params.sigma1,
        alpha: params.alpha1,
    };
    let ind2 = ParetoParams {
        mu: params.mu2,
        sigma: params.sigma2,
        alpha: params.alpha2,
    };
    let u0 = pareto_draw(&shock, rng);
    let u1 = pareto_draw(&ind1, rng);
    let u2 = pareto_draw(&ind2, rng);
    let shared1 = params.sigma1 * u0 + params.mu1;
    let shared2 = params.sigma2 * u0 + params.mu2;
    let from_shock1 = shared1 <= u1;
    let from_shock2 = shared2 <= u2;
    let point = BivariatePoint {
        x1: if from_shock1 { shared1 } else { u1 },
        x2: if from_shock2 { shared2 } else { u2 },
    };
    let latent = LatentDraw {
        u0,
        u1,
        u2,
        from_shock1,
        from_shock2,
    };
    (point, latent)
}

/// `n` draws with latent shocks, using the supplied RNG.
pub fn bvpa_sample_with_latent<R: Rng + ?Sized>(
    params: &BvpaParams,
    n: usize,
    rng: &mut R,
) -> Vec<(BivariatePoint, LatentDraw)> {
    (0..n).map(|_| bvpa_draw_latent(params, rng)).collect()
}

/// `n` draws using the supplied RNG.
pub fn bvpa_sample_rng<R: Rng + ?Sized>(params: &BvpaParams, n: usize, rng: &mut R) -> Vec<BivariatePoint> {
    (0..n).map(|_| bvpa_draw_latent(params, rng).0).collect()
}

/// A reproducible sample of `n` draws.
pub fn bvpa_sample(params: &BvpaParams, n: usize, seed: u64) -> Vec<BivariatePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    bvpa_sample_rng(params, n, &mut rng)
}

/// A reproducible sample of `n` draws with latent shocks. Uses the same
/// stream as [`bvpa_sample`], so the points coincide for equal seeds.
pub fn bvpa_sample_latent(params: &BvpaParams, n: usize, seed: u64) -> Vec<(BivariatePoint, LatentDraw)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    bvpa_sample_with_latent(params, n, &mut rng)
}

/// Density of the singular component per unit of the common normalized
/// coordinate: `alpha0 * (1 + z)^-(alpha0 + alpha1 + alpha2 + 1)` for
/// `z >= 0`, zero below. Integrating this over `z in [0, inf)` gives the
/// total singular mass `alpha0 / (alpha0 + alpha1 + alpha2)`.
pub fn bvpa_tie_density(params: &BvpaParams, z: f64) -> f64 {
    if z < 0.0 {
        0.0
    } else {
        params.alpha0 * (1.0 + z).powf(-(params.shape_sum() + 1.0))
    }
}

/// Joint density at a point, classified by component.
///
/// On the wedge `z1 < z2` the (two-dimensional, data-unit) density is
///
/// ```text
/// alpha1 * (alpha0 + alpha2) / (sigma1 * sigma2)
///   * (1 + z2)^-(alpha0 + alpha2 + 1) * (1 + z1)^-(alpha1 + 1)
/// ```
///
/// and symmetrically with the coordinate roles swapped on `z1 > z2`. On the
/// exact diagonal the returned value is [`bvpa_tie_density`] at the common
/// `z`. Points with either normalized coordinate below zero have density
/// zero; the support boundary itself takes its right-limit value.
pub fn bvpa_pdf(params: &BvpaParams, point: &BivariatePoint) -> (PdfBranch, f64) {
    let (z1, z2) = params.normalize(point);
    if z1 < z2 {
        let density = if z1 < 0.0 {
            0.0
        } else {
            params.alpha1 * (params.alpha0 + params.alpha2) / (params.sigma1 * params.sigma2)
                * (1.0 + z2).powf(-(params.alpha0 + params.alpha2 + 1.0))
                * (1.0 + z1).powf(-(params.alpha1 + 1.0))
        };
        (PdfBranch::Wedge1, density)
    } else if z1 > z2 {
        let density = if z2 < 0.0 {
            0.0
        } else {
            params.alpha2 * (params.alpha0 + params.alpha1) / (params.sigma1 * params.sigma2)
                * (1.0 + z1).powf(-(params.alpha0 + params.alpha1 + 1.0))
                * (1.0 + z2).powf(-(params.alpha2 + 1.0))
        };
        (PdfBranch::Wedge2, density)
    } else {
        (PdfBranch::Singular, bvpa_tie_density(params, z1))
    }
}

/// Joint survival function `P(X1 > x1, X2 > x2)`. With the normalized
/// coordinates clamped at zero,
///
/// ```text
/// S(x1, x2) = (1 + max(z1, z2))^-alpha0 * (1 + z1)^-alpha1 * (1 + z2)^-alpha2
/// ```
pub fn bvpa_sf(params: &BvpaParams, point: &BivariatePoint) -> f64 {
    let (z1, z2) = params.normalize(point);
    let z1 = z1.max(0.0);
    let z2 = z2.max(0.0);
    (1.0 + z1.max(z2)).powf(-params.alpha0)
        * (1.0 + z1).powf(-params.alpha1)
        * (1.0 + z2).powf(-params.alpha2)
}

/// Marginal law of coordinate `which` (1 or 2): Pareto with that
/// coordinate's location and scale and shape `alpha0 + alpha_which`.
pub fn bvpa_marginal(params: &BvpaParams, which: u8) -> Result<ParetoParams> {
    match which {
        1 => Ok(ParetoParams {
            mu: params.mu1,
            sigma: params.sigma1,
            alpha: params.alpha0 + params.alpha1,
        }),
        2 => Ok(ParetoParams {
            mu: params.mu2,
            sigma: params.sigma2,
            alpha: params.alpha0 + params.alpha2,
        }),
        other => Err(BvpaError::Precondition(format!(
            "marginal index must be 1 or 2, got {other}"
        ))),
    }
}

/// Law of `min(X1, X2)` when the coordinates share a location and scale:
/// Pareto with that location and scale and the summed shape. Errors when
/// the locations or scales differ, because the minimum then leaves the
/// Pareto family.
pub fn bvpa_min_distribution(params: &BvpaParams) -> Result<ParetoParams> {
    if params.mu1 != params.mu2 || params.sigma1 != params.sigma2 {
        return Err(BvpaError::Precondition(format!(
            "min(X1, X2) is Pareto only under a common frame; got locations ({}, {}) and scales ({}, {})",
            params.mu1, params.mu2, params.sigma1, params.sigma2
        )));
    }
    Ok(ParetoParams {
        mu: params.mu1,
        sigma: params.sigma1,
        alpha: params.shape_sum(),
    })
}

/// Index partition of a sample by component relative to a location/scale
/// frame: exact ties of the normalized coordinates, the wedge `z1 < z2`,
/// and the wedge `z1 > z2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    /// Indices with `z1 == z2` (exact floating-point equality).
    pub i0: Vec<usize>,
    /// Indices with `z1 < z2`.
    pub i1: Vec<usize>,
    /// Indices with `z1 > z2`.
    pub i2: Vec<usize>,
}

impl Partition {
    pub fn n0(&self) -> usize {
        self.i0.len()
    }
    pub fn n1(&self) -> usize {
        self.i1.len()
    }
    pub fn n2(&self) -> usize {
        self.i2.len()
    }
}

/// Splits a sample into the three components relative to the given frame.
/// Every index lands in exactly one class; ties are exact floating-point
/// equality of the normalized coordinates, so detecting the singular
/// component this way is only reliable when the frame reproduces the
/// normalization used to generate the data bit for bit.
pub fn partition_sample(
    data: &[BivariatePoint],
    mu1: f64,
    mu2: f64,
    sigma1: f64,
    sigma2: f64,
) -> Partition {
    let mut part = Partition {
        i0: Vec::new(),
        i1: Vec::new(),
        i2: Vec::new(),
    };
    for (index, point) in data.iter().enumerate() {
        let z1 = (point.x1 - mu1) / sigma1;
        let z2 = (point.x2 - mu2) / sigma2;
        if z1 < z2 {
            part.i1.push(index);
        } else if z1 > z2 {
            part.i2.push(index);
        } else {
            part.i0.push(index);
        }
    }
    part
}

/// Tabulates the classified density over the Cartesian product of two
/// grids, first grid outermost. Rows are `(x1, x2, branch, density)`.
pub fn density_lattice(
    params: &BvpaParams,
    x1_grid: &[f64],
    x2_grid: &[f64],
) -> Vec<(f64, f64, PdfBranch, f64)> {
    let mut rows = Vec::with_capacity(x1_grid.len() * x2_grid.len());
    for &x1 in x1_grid {
        for &x2 in x2_grid {
            let (branch, density) = bvpa_pdf(params, &BivariatePoint { x1, x2 });
            rows.push((x1, x2, branch, density));
        }
    }
    rows
}
