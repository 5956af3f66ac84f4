//! Physical exponents and the classification of `(alpha, beta)` into the
//! strong-coercivity (SCC) and no-vacuum (NV) regimes.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::NoiseSpec;

/// Below this, `alpha + beta + 1` is treated as zero and the logarithmic
/// variable takes over.
pub const DEGENERATE_THRESHOLD: f64 = 1e-12;

pub const DEFAULT_DENSITY_FLOOR: f64 = 1e-8;

/// Model parameters: `mu(rho) = rho^alpha`, `k(rho) = rho^beta`, `p(rho) = rho^gamma`,
/// plus the cut-off radius `R` and Galerkin order `m` of the approximation scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    #[serde(default = "default_trunc_radius")]
    pub trunc_radius: f64,
    #[serde(default = "default_galerkin_order")]
    pub galerkin_order: usize,
    #[serde(default = "default_density_floor")]
    pub density_floor: f64,
    #[serde(default)]
    pub noise: NoiseSpec,
}

fn default_trunc_radius() -> f64 {
    1.0e3
}

fn default_galerkin_order() -> usize {
    32
}

fn default_density_floor() -> f64 {
    DEFAULT_DENSITY_FLOOR
}

impl Params {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self {
            alpha,
            beta,
            gamma,
            trunc_radius: default_trunc_radius(),
            galerkin_order: default_galerkin_order(),
            density_floor: DEFAULT_DENSITY_FLOOR,
            noise: NoiseSpec::default(),
        }
    }

    pub fn with_galerkin_order(mut self, m: usize) -> Self {
        self.galerkin_order = m;
        self
    }

    pub fn with_trunc_radius(mut self, r: f64) -> Self {
        self.trunc_radius = r;
        self
    }

    pub fn with_noise(mut self, noise: NoiseSpec) -> Self {
        self.noise = noise;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if !(self.alpha >= 0.0) {
            return bad(format!("alpha must be >= 0, got {}", self.alpha));
        }
        if !self.beta.is_finite() {
            return bad(format!("beta must be finite, got {}", self.beta));
        }
        if !(self.gamma >= 1.0) {
            return bad(format!("gamma must be >= 1, got {}", self.gamma));
        }
        if !(self.trunc_radius > 0.0) {
            return bad(format!("trunc_radius must be > 0, got {}", self.trunc_radius));
        }
        if self.galerkin_order < 4 {
            return bad(format!("galerkin_order must be >= 4, got {}", self.galerkin_order));
        }
        if !(self.density_floor > 0.0) {
            return bad(format!("density_floor must be > 0, got {}", self.density_floor));
        }
        self.noise.validate()
    }

    /// `alpha + beta + 1 = 0`: capillary constants undefined, `r = log rho` when also `beta = -1`.
    pub fn degenerate_theta(&self) -> bool {
        is_degenerate(self.alpha, self.beta)
    }

    pub fn regime(&self) -> RegimeReport {
        RegimeReport::classify(self.alpha, self.beta)
    }
}

fn is_degenerate(alpha: f64, beta: f64) -> bool {
    (alpha + beta + 1.0).abs() < DEGENERATE_THRESHOLD
}

/// Strong coercivity: `2 alpha - 4 <= beta <= 2 alpha - 1`, widened by `tol` on both ends.
pub fn scc_holds(alpha: f64, beta: f64, tol: f64) -> bool {
    2.0 * alpha - 4.0 - tol <= beta && beta <= 2.0 * alpha - 1.0 + tol
}

/// No-vacuum condition: `alpha <= 1/2` or `beta <= -2`.
pub fn nv_holds(alpha: f64, beta: f64) -> bool {
    alpha <= 0.5 || beta <= -2.0
}

/// Tame capillarity range `2 alpha - 3 <= beta <= 2 alpha - 1` from earlier literature.
/// Informational only.
pub fn tame_capillarity_holds(alpha: f64, beta: f64) -> bool {
    2.0 * alpha - 3.0 <= beta && beta <= 2.0 * alpha - 1.0
}

fn bracket(alpha: f64, beta: f64) -> Result<f64> {
    let s = alpha + beta + 1.0;
    if s.abs() < DEGENERATE_THRESHOLD {
        return Err(Error::DegenerateTheta(s));
    }
    Ok((alpha - beta - 1.0) * (1.0 - alpha) / (s * s) - beta / (3.0 * s))
}

/// Coefficient `c(alpha, beta)` of the quartic term in the capillary entropy dissipation.
pub fn capillary_constant(alpha: f64, beta: f64) -> Result<f64> {
    let s = alpha + beta + 1.0;
    Ok(64.0 / (s * s) * bracket(alpha, beta)?)
}

/// `g(alpha, beta) = c(alpha, beta) (alpha + beta + 1)^2 / 64 + 1/9`.
///
/// Nonnegative exactly on the SCC strip.
pub fn scc_discriminant(alpha: f64, beta: f64) -> Result<f64> {
    let s = alpha + beta + 1.0;
    if s.abs() < DEGENERATE_THRESHOLD {
        return Err(Error::DegenerateTheta(s));
    }
    // factored so that it vanishes on both boundaries up to a single rounding
    let d = 2.0 * alpha - beta;
    Ok(-2.0 * (d - 4.0) * (d - 1.0) / (9.0 * s * s))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeReport {
    pub alpha: f64,
    pub beta: f64,
    pub scc: bool,
    pub nv: bool,
    pub tame: bool,
    /// `None` on the degenerate line.
    pub c_ab: Option<f64>,
    pub discriminant: Option<f64>,
    pub degenerate_theta: bool,
}

impl RegimeReport {
    pub fn classify(alpha: f64, beta: f64) -> Self {
        Self::classify_with_tol(alpha, beta, 0.0)
    }

    pub fn classify_with_tol(alpha: f64, beta: f64, tol: f64) -> Self {
        Self {
            alpha,
            beta,
            scc: scc_holds(alpha, beta, tol),
            nv: nv_holds(alpha, beta),
            tame: tame_capillarity_holds(alpha, beta),
            c_ab: capillary_constant(alpha, beta).ok(),
            discriminant: scc_discriminant(alpha, beta).ok(),
            degenerate_theta: is_degenerate(alpha, beta),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RegimeAtlas {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    /// Row-major: `reports[i * betas.len() + j]` is `(alphas[i], betas[j])`.
    pub reports: Vec<RegimeReport>,
}

fn axis(range: (f64, f64), step: f64) -> Vec<f64> {
    let count = ((range.1 - range.0) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|i| range.0 + i as f64 * step).collect()
}

/// Dense sweep of [`RegimeReport`] over a rectangle of `(alpha, beta)`.
///
/// Grid coordinates are computed as `start + i * step` and SCC membership is
/// tested with a tolerance of `1e-9 * step`, which snaps points that lie on a
/// boundary up to rounding onto it without touching any neighbouring point.
pub fn regime_atlas(alpha_range: (f64, f64), beta_range: (f64, f64), step: f64) -> Result<RegimeAtlas> {
    if !(step > 0.0) {
        return Err(Error::InvalidParams(format!("atlas step must be > 0, got {step}")));
    }
    let alphas = axis(alpha_range, step);
    let betas = axis(beta_range, step);
    let snap = 1e-9 * step;
    let reports = alphas
        .iter()
        .flat_map(|&a| betas.iter().map(move |&b| RegimeReport::classify_with_tol(a, b, snap)))
        .collect();
    Ok(RegimeAtlas { alphas, betas, reports })
}

impl RegimeAtlas {
    pub fn get(&self, i: usize, j: usize) -> &RegimeReport {
        &self.reports[i * self.betas.len() + j]
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "alpha,beta,scc,nv,c_ab,discriminant,degenerate")?;
        let opt = |v: Option<f64>| v.map_or_else(|| "NaN".to_string(), |x| format!("{x:e}"));
        for r in &self.reports {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.alpha,
                r.beta,
                r.scc,
                r.nv,
                opt(r.c_ab),
                opt(r.discriminant),
                r.degenerate_theta
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn scc_examples() {
        assert!(scc_holds(1.0, -1.0, 0.0));
        assert!(!scc_holds(0.0, 0.0, 0.0));
        assert!(scc_holds(1.0, 1.0, 0.0));
    }

    #[test]
    fn nv_examples() {
        assert!(nv_holds(0.5, -1.0));
        assert!(!nv_holds(1.0, -1.0));
        assert!(nv_holds(2.0, -2.0));
    }

    #[test]
    fn capillary_constant_examples() {
        assert!((capillary_constant(1.0, -1.0).unwrap() - 64.0 / 3.0).abs() < 1e-12);
        assert!((capillary_constant(0.0, 0.0).unwrap() + 64.0).abs() < 1e-12);
        assert!(capillary_constant(1.0, 0.0).unwrap().abs() < 1e-12);
        assert!(matches!(capillary_constant(1.0, -2.0), Err(Error::DegenerateTheta(_))));
    }

    #[test]
    fn discriminant_examples() {
        assert!((scc_discriminant(1.0, -1.0).unwrap() - 4.0 / 9.0).abs() < 1e-15);
        assert!(scc_discriminant(1.0, 1.0).unwrap().abs() < 1e-15);
        assert!(scc_discriminant(2.0, 0.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn atlas_shape_and_points() {
        let atlas = regime_atlas((0.0, 1.0), (-2.0, 0.0), 1.0).unwrap();
        assert_eq!(atlas.alphas, vec![0.0, 1.0]);
        assert_eq!(atlas.betas, vec![-2.0, -1.0, 0.0]);
        let atlas = regime_atlas((0.0, 2.0), (-2.0, 0.0), 1.0).unwrap();
        assert_eq!(atlas.reports.len(), 9);
        let p = atlas.get(1, 1);
        assert_eq!((p.alpha, p.beta), (1.0, -1.0));
        assert!(p.scc && !p.nv);
        let d = atlas.get(1, 0);
        assert_eq!((d.alpha, d.beta), (1.0, -2.0));
        assert!(d.degenerate_theta && d.c_ab.is_none());
        assert!(regime_atlas((0.0, 1.0), (0.0, 1.0), 0.0).is_err());
    }

    #[test]
    fn atlas_csv_header() {
        let atlas = regime_atlas((0.0, 1.0), (-2.0, 0.0), 1.0).unwrap();
        let mut buf = Vec::new();
        atlas.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("alpha,beta,scc,nv,c_ab,discriminant,degenerate"));
        assert_eq!(lines.count(), 6);
    }

    #[test]
    fn params_validation() {
        assert!(Params::new(1.0, -1.0, 2.0).validate().is_ok());
        assert!(Params::new(-0.1, -1.0, 2.0).validate().is_err());
        assert!(Params::new(1.0, -1.0, 0.5).validate().is_err());
        assert!(Params::new(1.0, -1.0, 2.0).with_galerkin_order(3).validate().is_err());
        assert!(Params::new(1.0, -1.0, 2.0).with_trunc_radius(0.0).validate().is_err());
        assert!(Params::new(1.0, -2.0, 2.0).degenerate_theta());
    }

    proptest! {
        #[test]
        fn discriminant_sign_matches_scc(alpha in 0.0f64..4.0, beta in -6.0f64..4.0) {
            prop_assume!((alpha + beta + 1.0).abs() >= 1e-3);
            let g = scc_discriminant(alpha, beta).unwrap();
            prop_assert_eq!(scc_holds(alpha, beta, 0.0), g >= -1e-12);
        }

        #[test]
        fn discriminant_vanishes_on_boundaries(alpha in 0.0f64..4.0) {
            for beta in [2.0 * alpha - 1.0, 2.0 * alpha - 4.0] {
                let s = alpha + beta + 1.0;
                if s.abs() >= 1e-3 {
                    prop_assert!(scc_discriminant(alpha, beta).unwrap().abs() * s * s <= 1e-12);
                }
            }
        }

        #[test]
        fn constant_and_discriminant_share_terms(alpha in 0.0f64..4.0, beta in -6.0f64..4.0) {
            let s = alpha + beta + 1.0;
            prop_assume!(s.abs() >= 1e-1);
            let c = capillary_constant(alpha, beta).unwrap();
            let g = scc_discriminant(alpha, beta).unwrap();
            prop_assert!((c * s * s / 64.0 + 1.0 / 9.0 - g).abs() <= 1e-12 * (1.0 + g.abs()));
        }
    }
}
