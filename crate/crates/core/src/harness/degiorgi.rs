//! Level-set iteration turning `t Φ(s-t) ≤ C₄ Φ(s)^{1+δ₀}` into a lower bound
//! for `Φ` at the top level.
//!
//! With `s_{j+1} = s_j - t_j`, `t_j = 2 C₄ Φ(s_j)^{δ₀}`, the hypothesis gives
//! `Φ(s_{j+1}) ≤ Φ(s_j)/2`. If `Φ > 0` on `(0, S]` the steps must add up to
//! at least `S`, which forces
//! `Φ(S) ≥ c₁ = [S (1 - 2^{-δ₀}) / (2 C₄)]^{1/δ₀}`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};

/// Closed form `c₁ = [S (1 - 2^{-δ₀}) / (2 C₄)]^{1/δ₀}`.
pub fn c1_closed_form<T: Real>(c4: T, delta0: T, s_top: T) -> T {
    let two = lit::<T>(2.0);
    (s_top * (T::one() - two.powf(-delta0)) / (two * c4)).powf(T::one() / delta0)
}

/// The profile `Φ(s) = c₁ (s/S)^{1/δ₀}`, along which every iteration step
/// halves `Φ` exactly and `Φ(S) = c₁`.
pub fn equality_profile<T: Real>(c4: T, delta0: T, s_top: T) -> impl Fn(T) -> T {
    let c1 = c1_closed_form(c4, delta0, s_top);
    move |s: T| if s <= T::zero() { T::zero() } else { c1 * (s / s_top).powf(T::one() / delta0) }
}

#[derive(Clone, Debug, Serialize)]
pub struct DeGiorgiOutcome {
    /// `[S / (2 C₄ Σ_j (Φ(s_j)/Φ(S))^{δ₀})]^{1/δ₀}`, a lower bound for `Φ(S)`.
    pub c1: f64,
    /// Whether the step sum converged before `max_steps`.
    pub converged: bool,
    pub steps: usize,
    /// Level `S - Σ t_j` when it stays positive: `Φ` must vanish below it.
    pub zero_level: Option<f64>,
    pub levels: Vec<f64>,
}

/// Runs the iteration on `profile`, checking the hypothesis at every step.
pub fn degiorgi_iterate<T: Real>(
    c4: T,
    delta0: T,
    profile: impl Fn(T) -> T,
    s_top: T,
    max_steps: usize,
) -> Result<DeGiorgiOutcome> {
    if !(c4 > T::zero() && delta0 > T::zero() && s_top > T::zero()) {
        return Err(Error::InvalidArgument("C4, delta0 and S must be positive".into()));
    }
    let two = lit::<T>(2.0);
    let phi_top = profile(s_top);
    if !(phi_top > T::zero()) {
        return Err(Error::InvalidArgument("profile vanishes at the top level".into()));
    }
    let rel = lit::<T>(1e-9);
    let mut s = s_top;
    let mut ratio_sum = T::zero();
    let mut levels = vec![to_f64(s)];
    let mut steps = 0;
    let mut converged = false;
    let mut prev_phi = phi_top;
    while steps < max_steps {
        let phi = profile(s);
        if phi > prev_phi * (T::one() + rel) {
            return Err(Error::InvalidArgument("profile is not monotone".into()));
        }
        prev_phi = phi;
        if phi <= T::zero() {
            converged = true;
            break;
        }
        let r = (phi / phi_top).powf(delta0);
        let t = two * c4 * phi.powf(delta0);
        ratio_sum = ratio_sum + r;
        if s - t > T::zero() {
            let lhs = t * profile(s - t);
            let rhs = c4 * phi.powf(T::one() + delta0);
            if lhs > rhs * (T::one() + rel) {
                return Err(Error::HypothesisViolated { s: to_f64(s), t: to_f64(t), lhs: to_f64(lhs), rhs: to_f64(rhs) });
            }
        }
        s = s - t;
        steps += 1;
        levels.push(to_f64(s));
        if s <= T::zero() || r < lit(1e-15) {
            converged = true;
            break;
        }
    }
    let zero_level = (s > T::zero() && converged && profile(s) > T::zero()).then(|| to_f64(s));
    let c1 = (s_top / (two * c4 * ratio_sum)).powf(T::one() / delta0);
    Ok(DeGiorgiOutcome { c1: to_f64(c1), converged, steps, zero_level, levels })
}

/// Piecewise-linear profile through `(s_i, Φ_i)` with `Φ(0) = 0`, constant
/// beyond the last sample.
pub fn table_profile<T: Real>(mut samples: Vec<(T, T)>) -> impl Fn(T) -> T {
    samples.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    samples.insert(0, (T::zero(), T::zero()));
    move |s: T| {
        if s <= T::zero() {
            return T::zero();
        }
        let last = samples[samples.len() - 1];
        if s >= last.0 {
            return last.1;
        }
        let i = samples.partition_point(|p| p.0 <= s);
        let (a, b) = (samples[i - 1], samples[i]);
        a.1 + (b.1 - a.1) * (s - a.0) / (b.0 - a.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equality_profile_recovers_closed_form() {
        for (c4, d0, s) in [(0.3f64, 0.25, 0.1125), (2.0, 1.0 / 6.0, 0.45), (0.05, 0.125, 1.0)] {
            let prof = equality_profile(c4, d0, s);
            let out = degiorgi_iterate(c4, d0, &prof, s, 100_000).unwrap();
            let c1 = c1_closed_form(c4, d0, s);
            assert!((prof(s) - c1).abs() <= 1e-14 * c1);
            assert!(out.converged);
            assert!(((out.c1 - c1) / c1).abs() < 1e-6, "{} vs {c1}", out.c1);
        }
    }

    #[test]
    fn profile_halves_along_schedule() {
        let (c4, d0, s) = (0.3f64, 0.25, 0.1);
        let prof = equality_profile(c4, d0, s);
        let t = 2.0 * c4 * prof(s).powf(d0);
        assert!((prof(s - t) / prof(s) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn constant_profile_violates() {
        let r = degiorgi_iterate(0.1f64, 0.25, |_| 0.5, 1.0, 100);
        assert!(matches!(r, Err(Error::HypothesisViolated { .. })));
    }

    #[test]
    fn step_profile_stops_early() {
        // Φ drops to zero below 0.5, so one step of length 0.6 ends the iteration
        let prof = |s: f64| if s < 0.5 { 0.0 } else { 1.0 };
        let out = degiorgi_iterate(0.3f64, 0.25, prof, 1.0, 1000).unwrap();
        assert!(out.converged);
        assert_eq!(out.steps, 1);
        assert!((out.levels[1] - 0.4).abs() < 1e-12);
        assert!((out.c1 - (1.0f64 / 0.6).powf(4.0)).abs() < 1e-9);
    }

    #[test]
    fn table_interpolation() {
        let p = table_profile(vec![(2.0f64, 4.0), (1.0, 1.0)]);
        assert_eq!(p(0.5), 0.5);
        assert_eq!(p(1.5), 2.5);
        assert_eq!(p(3.0), 4.0);
        assert_eq!(p(-1.0), 0.0);
    }
}
