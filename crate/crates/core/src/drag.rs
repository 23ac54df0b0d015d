//! Pressure-dependent drag laws and the reference-scale bookkeeping that
//! produces the dimensionless groups used by the assembler.
//!
//! `alpha(tag, p)` evaluates the dimensionless drag WITHOUT the group `A`;
//! multiplying by `A` is the assembler's job. The base coefficient `alpha0`
//! is looked up per region tag so heterogeneous media are one map away.

use alloc::collections::BTreeMap;
use alloc::format;

use crate::error::{invalid, Error};
use crate::math;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DragLaw {
    /// `alpha = alpha0`
    Constant,
    /// `alpha = alpha0 (1 + beta p)`; breaks down where `1 + beta p <= 0`
    Linear,
    /// `alpha = alpha0 exp(beta p)` (Barus)
    Barus,
}

impl DragLaw {
    pub fn name(self) -> &'static str {
        match self {
            DragLaw::Constant => "constant",
            DragLaw::Linear => "linear",
            DragLaw::Barus => "barus",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "constant" => Some(DragLaw::Constant),
            "linear" => Some(DragLaw::Linear),
            "barus" => Some(DragLaw::Barus),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DragModel {
    pub law: DragLaw,
    alpha0: BTreeMap<u32, f64>,
    pub beta: f64,
    /// Dimensionless momentum group multiplying `alpha` in the assembled
    /// operator (drag_ref * V * L / P).
    pub coeff_a: f64,
}

impl DragModel {
    /// Model with a single `alpha0` for every region tag encountered.
    pub fn uniform(law: DragLaw, alpha0: f64, beta: f64, coeff_a: f64) -> Result<Self> {
        let mut map = BTreeMap::new();
        map.insert(UNIFORM_TAG, alpha0);
        let m = DragModel {
            law,
            alpha0: map,
            beta,
            coeff_a,
        };
        m.validate()?;
        Ok(m)
    }

    /// Model with per-region base drag; tags missing from the map are an
    /// error at evaluation time.
    pub fn per_region(
        law: DragLaw,
        alpha0: BTreeMap<u32, f64>,
        beta: f64,
        coeff_a: f64,
    ) -> Result<Self> {
        if alpha0.is_empty() {
            return Err(invalid("per-region drag model needs at least one tag"));
        }
        let m = DragModel {
            law,
            alpha0,
            beta,
            coeff_a,
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        for (&tag, &a0) in &self.alpha0 {
            if !(a0 > 0.0) || !a0.is_finite() {
                return Err(invalid(format!("alpha0 for region {tag} must be positive")));
            }
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(invalid("beta must be finite and >= 0"));
        }
        if !(self.coeff_a > 0.0) || !self.coeff_a.is_finite() {
            return Err(invalid("coefficient A must be finite and positive"));
        }
        Ok(())
    }

    pub fn alpha0_of(&self, tag: u32) -> Result<f64> {
        if self.alpha0.len() == 1 {
            if let Some(&a0) = self.alpha0.get(&UNIFORM_TAG) {
                return Ok(a0);
            }
        }
        self.alpha0
            .get(&tag)
            .copied()
            .ok_or_else(|| invalid(format!("no alpha0 registered for region tag {tag}")))
    }

    pub fn alpha0_map(&self) -> &BTreeMap<u32, f64> {
        &self.alpha0
    }

    /// Replace the base-drag map wholesale (used by CLI overrides).
    pub fn set_alpha0_map(&mut self, alpha0: BTreeMap<u32, f64>) -> Result<()> {
        if alpha0.is_empty() {
            return Err(invalid("alpha0 map must not be empty"));
        }
        self.alpha0 = alpha0;
        self.validate()
    }

    /// Dimensionless drag at pressure `p` in a region; excludes the group A.
    pub fn alpha(&self, tag: u32, p: f64) -> Result<f64> {
        let a0 = self.alpha0_of(tag)?;
        match self.law {
            DragLaw::Constant => Ok(a0),
            DragLaw::Linear => {
                let factor = 1.0 + self.beta * p;
                if factor <= 0.0 {
                    return Err(Error::NonpositiveDrag {
                        pressure: p,
                        factor,
                    });
                }
                Ok(a0 * factor)
            }
            DragLaw::Barus => Ok(a0 * math::exp(self.beta * p)),
        }
    }

    /// Exactly `1 / alpha`.
    pub fn alpha_inverse(&self, tag: u32, p: f64) -> Result<f64> {
        Ok(1.0 / self.alpha(tag, p)?)
    }

    /// True when the assembled operator cannot depend on the pressure
    /// iterate, so the fixed-point loop terminates after one solve.
    pub fn is_pressure_independent(&self) -> bool {
        self.law == DragLaw::Constant || self.beta == 0.0
    }
}

/// Tag key used by [`DragModel::uniform`]; any tag resolves to it when the
/// map has a single entry.
const UNIFORM_TAG: u32 = 0;

// ---------------------------------------------------------------------------
// reference scales

/// Reference quantities of the dimensional problem. `coeff_a` and `coeff_c`
/// are the two groups appearing in the dimensionless momentum equation
/// `A a(p) v + grad p = C r b`.
#[derive(Debug, Clone, Copy)]
pub struct ReferenceScales {
    pub length: f64,
    pub velocity: f64,
    pub pressure: f64,
    pub drag: f64,
    pub density: f64,
    pub body_force: f64,
}

impl ReferenceScales {
    pub fn new(
        length: f64,
        velocity: f64,
        pressure: f64,
        drag: f64,
        density: f64,
        body_force: f64,
    ) -> Result<Self> {
        let s = ReferenceScales {
            length,
            velocity,
            pressure,
            drag,
            density,
            body_force,
        };
        for (name, v) in [
            ("length", length),
            ("velocity", velocity),
            ("pressure", pressure),
            ("drag", drag),
            ("density", density),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(format!("reference {name} must be positive")));
            }
        }
        if !(body_force >= 0.0) || !body_force.is_finite() {
            return Err(invalid("reference body force must be finite and >= 0"));
        }
        Ok(s)
    }

    pub fn coeff_a(&self) -> f64 {
        self.drag * self.velocity * self.length / self.pressure
    }

    pub fn coeff_c(&self) -> f64 {
        self.density * self.length * self.body_force / self.pressure
    }

    /// A dimensional `beta` (1/pressure) becomes `beta * P`.
    pub fn nondim_beta(&self, beta_dimensional: f64) -> f64 {
        beta_dimensional * self.pressure
    }

    pub fn nondim_pressure(&self, p: f64) -> f64 {
        p / self.pressure
    }

    pub fn dim_pressure(&self, p_bar: f64) -> f64 {
        p_bar * self.pressure
    }

    pub fn nondim_velocity(&self, v: f64) -> f64 {
        v / self.velocity
    }

    pub fn dim_velocity(&self, v_bar: f64) -> f64 {
        v_bar * self.velocity
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn laws_evaluate_as_written() {
        let lin = DragModel::uniform(DragLaw::Linear, 2.0, 0.5, 1.0).unwrap();
        assert!((lin.alpha(0, 3.0).unwrap() - 2.0 * 2.5).abs() <= 1e-15);
        let bar = DragModel::uniform(DragLaw::Barus, 2.0, 0.5, 1.0).unwrap();
        assert!((bar.alpha(0, 3.0).unwrap() - 2.0 * (1.5f64).exp()).abs() <= 1e-14);
        let con = DragModel::uniform(DragLaw::Constant, 2.0, 0.5, 1.0).unwrap();
        assert!((con.alpha(0, 3.0).unwrap() - 2.0).abs() == 0.0);
        // beta = 0 collapses both laws onto alpha0
        for law in [DragLaw::Linear, DragLaw::Barus] {
            let m = DragModel::uniform(law, 2.0, 0.0, 1.0).unwrap();
            assert_eq!(m.alpha(0, 123.0).unwrap(), 2.0);
            assert!(m.is_pressure_independent());
        }
    }

    #[test]
    fn nonpositive_linear_drag_is_an_error() {
        let lin = DragModel::uniform(DragLaw::Linear, 1.0, 0.1, 1.0).unwrap();
        match lin.alpha(0, -10.0) {
            Err(Error::NonpositiveDrag { factor, .. }) => assert!(factor <= 0.0),
            other => panic!("expected NonpositiveDrag, got {other:?}"),
        }
        // Barus stays positive for any finite pressure
        let bar = DragModel::uniform(DragLaw::Barus, 1.0, 0.1, 1.0).unwrap();
        assert!(bar.alpha(0, -100.0).unwrap() > 0.0);
    }

    #[test]
    fn per_region_lookup() {
        let mut map = BTreeMap::new();
        map.insert(1, 0.001);
        map.insert(2, 1.0);
        let m = DragModel::per_region(DragLaw::Linear, map, 0.0, 1.0).unwrap();
        assert_eq!(m.alpha(1, 0.0).unwrap(), 0.001);
        assert_eq!(m.alpha(2, 0.0).unwrap(), 1.0);
        assert!(m.alpha(3, 0.0).is_err());
    }

    #[test]
    fn inverse_and_monotonicity() {
        let mut rng = StdRng::seed_from_u64(0x5eed);
        for law in [DragLaw::Linear, DragLaw::Barus] {
            let alpha0 = rng.gen_range(0.01..10.0);
            let beta = rng.gen_range(0.0..1.0);
            let m = DragModel::uniform(law, alpha0, beta, 1.0).unwrap();
            let mut prev = None;
            for i in 0..200 {
                let p = -0.5 + 3.5 * i as f64 / 199.0 + rng.gen_range(0.0..0.005);
                let a = match m.alpha(0, p) {
                    Ok(a) => a,
                    Err(_) => continue, // affine law past breakdown
                };
                let prod = a * m.alpha_inverse(0, p).unwrap();
                assert!((prod - 1.0).abs() <= 1e-15, "a * 1/a = {prod}");
                if let Some(pa) = prev {
                    assert!(a >= pa, "alpha must be nondecreasing in p");
                }
                prev = Some(a);
            }
        }
    }

    /// The affine law is the first-order Taylor expansion of Barus:
    /// |a_lin - a_barus| <= alpha0 (beta p)^2 exp(beta p) / 2 for p >= 0.
    #[test]
    fn linear_law_is_first_order_barus() {
        let mut rng = StdRng::seed_from_u64(42);
        for _ in 0..500 {
            let alpha0 = rng.gen_range(0.1..5.0);
            let beta = rng.gen_range(0.0..0.8);
            let p = rng.gen_range(0.0..3.0);
            let lin = DragModel::uniform(DragLaw::Linear, alpha0, beta, 1.0).unwrap();
            let bar = DragModel::uniform(DragLaw::Barus, alpha0, beta, 1.0).unwrap();
            let diff = (lin.alpha(0, p).unwrap() - bar.alpha(0, p).unwrap()).abs();
            let t = beta * p;
            let bound = alpha0 * t * t * t.exp() / 2.0;
            assert!(diff <= bound + 1e-15, "diff {diff} bound {bound}");
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(DragModel::uniform(DragLaw::Barus, 0.0, 0.1, 1.0).is_err());
        assert!(DragModel::uniform(DragLaw::Barus, 1.0, -0.1, 1.0).is_err());
        assert!(DragModel::uniform(DragLaw::Barus, 1.0, 0.1, 0.0).is_err());
        assert!(DragModel::uniform(DragLaw::Barus, 1.0, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn reference_scales_produce_the_groups() {
        // A = drag*V*L/P, C = rho*L*B/P
        let s = ReferenceScales::new(2.0, 3.0, 12.0, 4.0, 5.0, 6.0).unwrap();
        assert!((s.coeff_a() - 2.0).abs() <= 1e-15);
        assert!((s.coeff_c() - 5.0).abs() <= 1e-15);
        assert!((s.nondim_beta(0.25) - 3.0).abs() <= 1e-15);
        assert!((s.dim_pressure(s.nondim_pressure(7.0)) - 7.0).abs() <= 1e-15);
        assert!((s.dim_velocity(s.nondim_velocity(7.0)) - 7.0).abs() <= 1e-15);
        assert!(ReferenceScales::new(0.0, 1.0, 1.0, 1.0, 1.0, 1.0).is_err());
    }
}
