//! Right-hand sides `F` for experiments.

use std::f64::consts::TAU;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ComplexStructureJ, Grid, HermitianField, ScalarField};
use crate::pointalg::ConeKind;
use crate::scalar::{lit, to_f64, Real};
use crate::solver::manufacture_rhs;

use super::entropy::entropy_norm;

/// `coef · cos(2π k·x / period + phase)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigTerm {
    pub coef: f64,
    pub k: Vec<i64>,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FSpec {
    Zero,
    Constant {
        value: f64,
    },
    Trig {
        terms: Vec<TrigTerm>,
    },
    /// Random trigonometric polynomial with modes in `[-max_mode, max_mode]`,
    /// scaled to `sup |F| = amplitude`.
    RandomTrig {
        amplitude: f64,
        max_mode: i64,
        terms: usize,
        seed: u64,
    },
    /// Background plus a Gaussian bump of the given width at `center`,
    /// scaled so that `sup F = height`.
    Spike {
        height: f64,
        width: f64,
        center: Vec<f64>,
        #[serde(default)]
        background: Vec<TrigTerm>,
    },
    /// `F` computed from a known potential so that it solves the equation
    /// with `b = 0`.
    Manufactured {
        potential: Vec<TrigTerm>,
    },
}

fn trig_value(terms: &[TrigTerm], x: &[f64], period: f64) -> f64 {
    terms
        .iter()
        .map(|t| {
            let dot: f64 = t.k.iter().zip(x).map(|(&k, &xi)| k as f64 * xi).sum();
            t.coef * (TAU * dot / period + t.phase).cos()
        })
        .sum()
}

fn check_terms(terms: &[TrigTerm], dim: usize) -> Result<()> {
    for t in terms {
        if t.k.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: t.k.len() });
        }
    }
    Ok(())
}

/// Trigonometric polynomial sampled on a torus grid.
pub fn trig_field<T: Real>(grid: &Arc<Grid<T>>, terms: &[TrigTerm]) -> Result<ScalarField<T>> {
    let torus = grid.as_torus().ok_or_else(|| Error::InvalidArgument("F families live on torus grids".into()))?;
    check_terms(terms, torus.dim())?;
    let period = to_f64(torus.period());
    Ok(ScalarField::from_fn(grid.clone(), |x| {
        let xf: Vec<f64> = x.iter().map(|&v| to_f64(v)).collect();
        lit(trig_value(terms, &xf, period))
    }))
}

/// Seeded random terms; the amplitude of each term decays with its mode.
pub fn random_terms(dim: usize, max_mode: i64, terms: usize, seed: u64) -> Vec<TrigTerm> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..terms)
        .map(|_| {
            let k: Vec<i64> = (0..dim).map(|_| rng.gen_range(-max_mode..=max_mode)).collect();
            let norm = k.iter().map(|v| (v * v) as f64).sum::<f64>().sqrt();
            TrigTerm { coef: rng.gen_range(-1.0..1.0) / (1.0 + norm), k, phase: rng.gen_range(0.0..TAU) }
        })
        .collect()
}

fn squared_distances<T: Real>(grid: &Arc<Grid<T>>, center: &[f64]) -> Result<Vec<f64>> {
    let torus = grid.as_torus().ok_or_else(|| Error::InvalidArgument("F families live on torus grids".into()))?;
    if center.len() != torus.dim() {
        return Err(Error::DimensionMismatch { expected: torus.dim(), got: center.len() });
    }
    let period = to_f64(torus.period());
    Ok((0..torus.len())
        .map(|i| {
            torus
                .coords(i)
                .iter()
                .zip(center)
                .map(|(&xi, &ci)| {
                    let mut d = (to_f64(xi) - ci).rem_euclid(period);
                    if d > 0.5 * period {
                        d -= period;
                    }
                    d * d
                })
                .sum()
        })
        .collect())
}

fn check_width(width: f64) -> Result<()> {
    if width > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument("bump width must be positive".into()))
    }
}

/// Periodic Gaussian bump `exp(-|x - c|² / (2 w²))` (nearest image).
pub fn bump_field<T: Real>(grid: &Arc<Grid<T>>, center: &[f64], width: f64) -> Result<ScalarField<T>> {
    check_width(width)?;
    let r2 = squared_distances(grid, center)?;
    ScalarField::new(grid.clone(), r2.iter().map(|&r| lit((-r / (2.0 * width * width)).exp())).collect())
}

/// Background and squared distances of a spike, reused across heights and widths.
struct SpikeParts<T> {
    bg: ScalarField<T>,
    r2: Vec<f64>,
}

impl<T: Real> SpikeParts<T> {
    fn new(grid: &Arc<Grid<T>>, center: &[f64], background: &[TrigTerm]) -> Result<Self> {
        Ok(Self { bg: trig_field(grid, background)?, r2: squared_distances(grid, center)? })
    }

    fn field(&self, height: f64, width: f64) -> Result<ScalarField<T>> {
        check_width(width)?;
        let sup_bg = to_f64(self.bg.sup());
        if sup_bg > height {
            return Err(Error::InvalidArgument(format!("background maximum {sup_bg} exceeds the spike height {height}")));
        }
        let bump: Vec<T> = self.r2.iter().map(|&r| lit((-r / (2.0 * width * width)).exp())).collect();
        // max_i (bg_i + a v_i) first reaches `height` at a = min_i (height - bg_i) / v_i
        let a = self
            .bg
            .values()
            .iter()
            .zip(&bump)
            .filter(|(_, &v)| v > T::zero())
            .map(|(&u, &v)| (lit::<T>(height) - u) / v)
            .fold(T::infinity(), |m, x| m.min(x));
        if !a.is_finite() {
            return Err(Error::InvalidArgument("bump too narrow to reach the requested height".into()));
        }
        let vals = self.bg.values().iter().zip(&bump).map(|(&u, &v)| u + a * v).collect();
        let mut f = ScalarField::new(self.bg.grid().clone(), vals)?;
        // pin the maximum exactly
        let top = f.sup();
        let arg = f.values().iter().position(|&v| v == top).unwrap_or(0);
        f.values_mut()[arg] = lit(height);
        Ok(f)
    }
}

/// `background + a · bump` with `a ≥ 0` chosen so that the grid maximum is `height`.
pub fn spike_field<T: Real>(
    grid: &Arc<Grid<T>>,
    height: f64,
    width: f64,
    center: &[f64],
    background: &[TrigTerm],
) -> Result<ScalarField<T>> {
    SpikeParts::new(grid, center, background)?.field(height, width)
}

/// Context needed by manufactured right-hand sides.
pub struct Geometry<'a, T> {
    pub g: &'a HermitianField<T>,
    pub h: &'a HermitianField<T>,
    pub j: &'a ComplexStructureJ<T>,
    pub kind: ConeKind,
}

/// Samples a spec on a torus grid.
pub fn generate<T: Real>(spec: &FSpec, grid: &Arc<Grid<T>>, geo: Option<&Geometry<'_, T>>) -> Result<ScalarField<T>> {
    let torus = grid.as_torus().ok_or_else(|| Error::InvalidArgument("F families live on torus grids".into()))?;
    match spec {
        FSpec::Zero => Ok(ScalarField::zeros(grid.clone())),
        FSpec::Constant { value } => Ok(ScalarField::constant(grid.clone(), lit(*value))),
        FSpec::Trig { terms } => trig_field(grid, terms),
        FSpec::RandomTrig { amplitude, max_mode, terms, seed } => {
            if *max_mode < 1 || *terms == 0 {
                return Err(Error::InvalidArgument("random_trig needs max_mode >= 1 and terms >= 1".into()));
            }
            let t = random_terms(torus.dim(), *max_mode, *terms, *seed);
            let f = trig_field(grid, &t)?;
            let s = f.sup_abs();
            if s == T::zero() {
                return Ok(f);
            }
            Ok(f.scale(lit::<T>(*amplitude) / s))
        }
        FSpec::Spike { height, width, center, background } => spike_field(grid, *height, *width, center, background),
        FSpec::Manufactured { potential } => {
            let geo = geo.ok_or(Error::Missing("manufactured F needs the metric data"))?;
            let pot = trig_field(grid, potential)?;
            manufacture_rhs(geo.kind, &pot, geo.g, Some(geo.h), geo.j)
        }
    }
}

/// One member of a fixed-entropy spike family.
#[derive(Clone, Debug, Serialize)]
pub struct SpikeMember {
    pub height: f64,
    pub width: f64,
    pub entropy: f64,
}

/// Widths making every member's entropy equal to `budget`; when `budget`
/// is `None` it is the entropy of the tallest member at `reference_width`.
pub fn spike_family<T: Real>(
    grid: &Arc<Grid<T>>,
    heights: &[f64],
    center: &[f64],
    background: &[TrigTerm],
    p: f64,
    budget: Option<f64>,
    reference_width: f64,
) -> Result<(f64, Vec<SpikeMember>)> {
    let torus = grid.as_torus().ok_or_else(|| Error::InvalidArgument("F families live on torus grids".into()))?;
    if heights.is_empty() {
        return Err(Error::InvalidArgument("empty spike family".into()));
    }
    let parts = SpikeParts::new(grid, center, background)?;
    let ent = |h: f64, w: f64| -> Result<f64> { Ok(to_f64(entropy_norm(&parts.field(h, w)?, lit(p))?)) };
    let tallest = heights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let budget = match budget {
        Some(b) => b,
        None => ent(tallest, reference_width)?,
    };
    let w_max = 0.5 * to_f64(torus.period());
    let w_min = 1e-3 * to_f64(torus.spacing());
    let mut out = Vec::new();
    for &h in heights {
        let (lo_e, hi_e) = (ent(h, w_min)?, ent(h, w_max)?);
        if budget < lo_e || budget > hi_e {
            return Err(Error::InvalidArgument(format!(
                "entropy budget {budget:.6e} unreachable for height {h} (range {lo_e:.6e}..{hi_e:.6e})"
            )));
        }
        let (mut lo, mut hi) = (w_min.ln(), w_max.ln());
        for _ in 0..48 {
            let mid = 0.5 * (lo + hi);
            if ent(h, mid.exp())? < budget {
                lo = mid
            } else {
                hi = mid
            }
        }
        let w = (0.5 * (lo + hi)).exp();
        out.push(SpikeMember { height: h, width: w, entropy: ent(h, w)? });
    }
    Ok((budget, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_flat_model;

    #[test]
    fn basic_specs() {
        let (grid, _, _) = make_flat_model::<f64>(1, 8, 1.0).unwrap();
        assert_eq!(generate(&FSpec::Zero, &grid, None).unwrap().sup_abs(), 0.0);
        assert_eq!(generate(&FSpec::Constant { value: 2.5 }, &grid, None).unwrap().inf(), 2.5);
        let t = FSpec::Trig { terms: vec![TrigTerm { coef: 0.5, k: vec![1, 0, 0, 0], phase: 0.0 }] };
        let f = generate(&t, &grid, None).unwrap();
        assert!((f.sup() - 0.5).abs() < 1e-15 && (f.inf() + 0.5).abs() < 1e-15);
        let r = FSpec::RandomTrig { amplitude: 1.5, max_mode: 2, terms: 6, seed: 7 };
        let a = generate(&r, &grid, None).unwrap();
        let b = generate(&r, &grid, None).unwrap();
        assert_eq!(a, b);
        assert!((a.sup_abs() - 1.5).abs() < 1e-14);
        let bad = FSpec::Trig { terms: vec![TrigTerm { coef: 1.0, k: vec![1], phase: 0.0 }] };
        assert!(generate(&bad, &grid, None).is_err());
    }

    #[test]
    fn spike_height_is_exact() {
        let (grid, _, _) = make_flat_model::<f64>(1, 8, 1.0).unwrap();
        let bg = vec![TrigTerm { coef: 0.3, k: vec![0, 1, 0, 0], phase: 0.0 }];
        for h in [2.0, 4.0, 8.0] {
            let f = spike_field(&grid, h, 0.1, &[0.5, 0.5, 0.5, 0.5], &bg).unwrap();
            assert!((f.sup() - h).abs() < 1e-12);
        }
        assert!(spike_field(&grid, 0.1, 0.1, &[0.5; 4], &bg).is_err());
    }

    #[test]
    fn family_has_common_entropy() {
        let (grid, _, _) = make_flat_model::<f64>(1, 8, 2.0).unwrap();
        let (budget, members) = spike_family(&grid, &[2.0, 4.0], &[1.0; 4], &[], 3.0, None, 0.25).unwrap();
        for m in &members {
            assert!(((m.entropy - budget) / budget).abs() < 1e-8);
        }
        assert!(members[0].width > members[1].width);
    }
}
