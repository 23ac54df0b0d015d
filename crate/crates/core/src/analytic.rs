//! Closed-form solutions used to verify the discrete solver: a 1D channel
//! for both drag laws, a 2D channel with constant through-flow, a 3D patch
//! flow, and a manufactured field with a known body force.
//!
//! Every variant carries its own parameters and can evaluate pressure,
//! velocity, the analytic pressure gradient and (where nonzero) the body
//! force. [`AnalyticSolution::max_momentum_residual`] substitutes the fields
//! into the strong momentum equation `A a(p) v + grad p - C r b = 0`; the
//! result is roundoff-sized for a correct closed form, which is the
//! self-check the tests pin down.

use alloc::format;
use alloc::vec::Vec;

use crate::drag::DragLaw;
use crate::error::Error;
use crate::math;
use crate::Result;

#[derive(Debug, Clone, Copy)]
pub enum AnalyticSolution {
    /// Flow through the unit interval driven by end pressures `p1`, `p2`.
    OneD {
        law: DragLaw,
        alpha0: f64,
        beta: f64,
        coeff_a: f64,
        p1: f64,
        p2: f64,
    },
    /// Unit-square channel with velocity (1, 0) under the Barus law and
    /// outlet pressure `p0` at x = 1. Assumes the momentum group A = 1.
    ConstantFlow2d { alpha0: f64, beta: f64, p0: f64 },
    /// Uniform flow (1, 0, 0) through the cube (0,5)^3 under the Barus law
    /// with p(0) = 0 and A = 1.
    Patch3d { alpha0: f64, beta: f64 },
    /// Manufactured divergence-free field on the unit square: Barus law with
    /// alpha0 = 1, beta = 1/2, A = C = r = 1 and a body force chosen so the
    /// momentum equation holds exactly.
    Manufactured,
}

pub fn analytic_1d(
    law: DragLaw,
    alpha0: f64,
    beta: f64,
    coeff_a: f64,
    p1: f64,
    p2: f64,
) -> Result<AnalyticSolution> {
    if !(alpha0 > 0.0) || !(coeff_a > 0.0) || !(beta >= 0.0) {
        return Err(crate::error::invalid(
            "1D closed form needs alpha0 > 0, A > 0, beta >= 0",
        ));
    }
    if law == DragLaw::Linear && beta > 0.0 {
        for p in [p1, p2] {
            let factor = 1.0 + beta * p;
            if factor <= 0.0 {
                return Err(Error::NonpositiveDrag {
                    pressure: p,
                    factor,
                });
            }
        }
    }
    Ok(AnalyticSolution::OneD {
        law,
        alpha0,
        beta,
        coeff_a,
        p1,
        p2,
    })
}

pub fn analytic_constant_flow_2d(alpha0: f64, beta: f64, p0: f64) -> Result<AnalyticSolution> {
    if !(alpha0 > 0.0) || !(beta >= 0.0) {
        return Err(crate::error::invalid(
            "2D channel closed form needs alpha0 > 0, beta >= 0",
        ));
    }
    // log argument 1 - alpha0 beta (1-x) e^{beta p0} is smallest at x = 0
    let worst = 1.0 - alpha0 * beta * math::exp(beta * p0);
    if beta > 0.0 && worst <= 0.0 {
        return Err(Error::ModelBreakdown(format!(
            "constant-flow channel: 1 - alpha0*beta*exp(beta*p0) = {worst:e} <= 0 \
             (alpha0 = {alpha0}, beta = {beta}, p0 = {p0})"
        )));
    }
    Ok(AnalyticSolution::ConstantFlow2d { alpha0, beta, p0 })
}

pub fn analytic_patch_3d(alpha0: f64, beta: f64) -> Result<AnalyticSolution> {
    if !(alpha0 > 0.0) || !(beta >= 0.0) {
        return Err(crate::error::invalid(
            "3D patch closed form needs alpha0 > 0, beta >= 0",
        ));
    }
    Ok(AnalyticSolution::Patch3d { alpha0, beta })
}

pub fn manufactured_solution() -> AnalyticSolution {
    AnalyticSolution::Manufactured
}

impl AnalyticSolution {
    pub fn pressure(&self, x: [f64; 3]) -> f64 {
        match *self {
            AnalyticSolution::OneD {
                law,
                beta,
                p1,
                p2,
                ..
            } => {
                let t = x[0];
                if beta == 0.0 || law == DragLaw::Constant {
                    return p1 + (p2 - p1) * t;
                }
                match law {
                    DragLaw::Linear => {
                        let a = 1.0 + beta * p1;
                        let b = 1.0 + beta * p2;
                        (math::powf(a, 1.0 - t) * math::powf(b, t) - 1.0) / beta
                    }
                    DragLaw::Barus => {
                        let g = (1.0 - t) * math::exp(-beta * p1) + t * math::exp(-beta * p2);
                        -math::ln(g) / beta
                    }
                    DragLaw::Constant => unreachable!(),
                }
            }
            AnalyticSolution::ConstantFlow2d { alpha0, beta, p0 } => {
                if beta == 0.0 {
                    return p0 + alpha0 * (1.0 - x[0]);
                }
                let c = alpha0 * beta * math::exp(beta * p0);
                p0 - math::ln(1.0 - c * (1.0 - x[0])) / beta
            }
            AnalyticSolution::Patch3d { alpha0, beta } => {
                if beta == 0.0 {
                    -alpha0 * x[0]
                } else {
                    -math::ln(1.0 + alpha0 * beta * x[0]) / beta
                }
            }
            AnalyticSolution::Manufactured => x[0] * x[0] * x[1] * x[1],
        }
    }

    pub fn velocity(&self, x: [f64; 3]) -> [f64; 3] {
        match *self {
            AnalyticSolution::OneD {
                law,
                alpha0,
                beta,
                coeff_a,
                p1,
                p2,
            } => {
                let v = if beta == 0.0 || law == DragLaw::Constant {
                    (p1 - p2) / (coeff_a * alpha0)
                } else {
                    match law {
                        DragLaw::Linear => {
                            let a = 1.0 + beta * p1;
                            let b = 1.0 + beta * p2;
                            -math::ln(b / a) / (coeff_a * alpha0 * beta)
                        }
                        DragLaw::Barus => {
                            (math::exp(-beta * p2) - math::exp(-beta * p1))
                                / (coeff_a * alpha0 * beta)
                        }
                        DragLaw::Constant => unreachable!(),
                    }
                };
                [v, 0.0, 0.0]
            }
            AnalyticSolution::ConstantFlow2d { .. } => [1.0, 0.0, 0.0],
            AnalyticSolution::Patch3d { .. } => [1.0, 0.0, 0.0],
            AnalyticSolution::Manufactured => {
                let (px, py) = (core::f64::consts::PI * x[0], core::f64::consts::PI * x[1]);
                [
                    math::sin(px) * math::cos(py),
                    -math::cos(px) * math::sin(py),
                    0.0,
                ]
            }
        }
    }

    pub fn pressure_gradient(&self, x: [f64; 3]) -> [f64; 3] {
        match *self {
            AnalyticSolution::OneD {
                law,
                beta,
                p1,
                p2,
                ..
            } => {
                let t = x[0];
                let g = if beta == 0.0 || law == DragLaw::Constant {
                    p2 - p1
                } else {
                    match law {
                        DragLaw::Linear => {
                            let a = 1.0 + beta * p1;
                            let b = 1.0 + beta * p2;
                            math::powf(a, 1.0 - t) * math::powf(b, t) * math::ln(b / a) / beta
                        }
                        DragLaw::Barus => {
                            let e1 = math::exp(-beta * p1);
                            let e2 = math::exp(-beta * p2);
                            -(e2 - e1) / (beta * ((1.0 - t) * e1 + t * e2))
                        }
                        DragLaw::Constant => unreachable!(),
                    }
                };
                [g, 0.0, 0.0]
            }
            AnalyticSolution::ConstantFlow2d { alpha0, beta, p0 } => {
                if beta == 0.0 {
                    return [-alpha0, 0.0, 0.0];
                }
                let c = alpha0 * beta * math::exp(beta * p0);
                [
                    -alpha0 * math::exp(beta * p0) / (1.0 - c * (1.0 - x[0])),
                    0.0,
                    0.0,
                ]
            }
            AnalyticSolution::Patch3d { alpha0, beta } => {
                [-alpha0 / (1.0 + alpha0 * beta * x[0]), 0.0, 0.0]
            }
            AnalyticSolution::Manufactured => {
                [2.0 * x[0] * x[1] * x[1], 2.0 * x[0] * x[0] * x[1], 0.0]
            }
        }
    }

    /// Body force entering the momentum equation (zero except for the
    /// manufactured field, which was constructed around it).
    pub fn body_force(&self, x: [f64; 3]) -> [f64; 3] {
        match *self {
            AnalyticSolution::Manufactured => {
                let (px, py) = (core::f64::consts::PI * x[0], core::f64::consts::PI * x[1]);
                let e = math::exp(x[0] * x[0] * x[1] * x[1] / 2.0);
                [
                    e * math::sin(px) * math::cos(py) + 2.0 * x[0] * x[1] * x[1],
                    -e * math::cos(px) * math::sin(py) + 2.0 * x[0] * x[0] * x[1],
                    0.0,
                ]
            }
            _ => [0.0; 3],
        }
    }

    /// Drag multiplier `A a(p(x))` of the variant at a point.
    fn drag_at(&self, x: [f64; 3]) -> f64 {
        let p = self.pressure(x);
        match *self {
            AnalyticSolution::OneD {
                law,
                alpha0,
                beta,
                coeff_a,
                ..
            } => {
                let a = match law {
                    DragLaw::Constant => alpha0,
                    DragLaw::Linear => alpha0 * (1.0 + beta * p),
                    DragLaw::Barus => alpha0 * math::exp(beta * p),
                };
                coeff_a * a
            }
            AnalyticSolution::ConstantFlow2d { alpha0, beta, .. }
            | AnalyticSolution::Patch3d { alpha0, beta } => alpha0 * math::exp(beta * p),
            AnalyticSolution::Manufactured => math::exp(0.5 * p),
        }
    }

    fn coeff_c(&self) -> f64 {
        match self {
            AnalyticSolution::Manufactured => 1.0,
            _ => 0.0,
        }
    }

    /// Max (relative) strong-form momentum residual over a set of points.
    pub fn max_momentum_residual(&self, points: &[[f64; 3]]) -> f64 {
        let mut worst = 0.0_f64;
        for &x in points {
            let aa = self.drag_at(x);
            let v = self.velocity(x);
            let gp = self.pressure_gradient(x);
            let b = self.body_force(x);
            let c = self.coeff_c();
            let mut scale = 1.0_f64;
            let mut res = 0.0_f64;
            for d in 0..3 {
                let terms = [aa * v[d], gp[d], c * b[d]];
                for t in terms {
                    scale = scale.max(math::abs(t));
                }
                res = res.max(math::abs(terms[0] + terms[1] - terms[2]));
            }
            worst = worst.max(res / scale);
        }
        worst
    }

    /// Whether a domain coordinate is inside this solution's domain; used by
    /// sampling helpers.
    pub fn sample_grid(&self, n: usize) -> Vec<[f64; 3]> {
        let mut pts = Vec::new();
        let f = |i: usize| i as f64 / n as f64;
        match self {
            AnalyticSolution::OneD { .. } => {
                for i in 0..=n {
                    pts.push([f(i), 0.0, 0.0]);
                }
            }
            AnalyticSolution::ConstantFlow2d { .. } | AnalyticSolution::Manufactured => {
                for j in 0..=n {
                    for i in 0..=n {
                        pts.push([f(i), f(j), 0.0]);
                    }
                }
            }
            AnalyticSolution::Patch3d { .. } => {
                for k in 0..=n {
                    for j in 0..=n {
                        for i in 0..=n {
                            pts.push([5.0 * f(i), 5.0 * f(j), 5.0 * f(k)]);
                        }
                    }
                }
            }
        }
        pts
    }
}
