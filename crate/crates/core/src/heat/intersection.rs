use serde::{Deserialize, Serialize};

use super::kernel::KernelSpec;
use crate::error::{invalid, Result};

const GL_NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

/// `int_a^b` of the 1D kernel factor along `axis`, by composite five-point Gauss-Legendre
/// with panels no wider than `sqrt(t)/4`.
pub fn factor_integral(spec: &KernelSpec, axis: usize, t: f64, x: f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let panels = ((b - a) / (0.25 * t.sqrt())).ceil().max(8.0) as usize;
    let w = (b - a) / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * w;
        for (z, g) in GL_NODES.iter().zip(&GL_WEIGHTS) {
            sum += g * spec.factor(axis, t, x, mid + 0.5 * w * z).value;
        }
    }
    0.5 * w * sum
}

/// `int_{[lo, hi]} p(t, x, y) dy` for a product kernel.
pub fn kernel_integral(spec: &KernelSpec, t: f64, x: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    (0..spec.dim()).map(|a| factor_integral(spec, a, t, x[a], lo[a], hi[a])).product()
}

/// Mass `int p(t, x, y) dy` over the box of a Dirichlet kernel.
pub fn box_mass(spec: &KernelSpec, t: f64, x: &[f64]) -> f64 {
    let hi: Vec<f64> = spec.lower.iter().zip(&spec.sides).map(|(l, s)| l + s).collect();
    kernel_integral(spec, t, x, &spec.lower, &hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntersectionReport {
    /// `int_{W1 cap W2} (p_W1 - p_{W1 cap W2})`.
    pub lhs: f64,
    /// `1 - int_W2 p_W2`.
    pub rhs: f64,
    pub margin: f64,
}

/// Both sides of the comparison between Dirichlet kernels on boxes `W1`, `W2` and
/// `W1 cap W2`, each box given as `(lower, upper)`.
pub fn intersection_check(w1: (&[f64], &[f64]), w2: (&[f64], &[f64]), x: &[f64], t: f64) -> Result<IntersectionReport> {
    let d = x.len();
    if w1.0.len() != d || w1.1.len() != d || w2.0.len() != d || w2.1.len() != d {
        return invalid("box dimensions differ from the point dimension");
    }
    if !(t > 0.0) {
        return invalid(format!("heat kernel needs t > 0, got {t}"));
    }
    let lo: Vec<f64> = (0..d).map(|a| w1.0[a].max(w2.0[a])).collect();
    let hi: Vec<f64> = (0..d).map(|a| w1.1[a].min(w2.1[a])).collect();
    if (0..d).any(|a| !(x[a] > lo[a] && x[a] < hi[a])) {
        return invalid("point is not inside the intersection of the boxes");
    }
    let k1 = KernelSpec::dirichlet_between(w1.0, w1.1);
    let k2 = KernelSpec::dirichlet_between(w2.0, w2.1);
    let k12 = KernelSpec::dirichlet_between(&lo, &hi);
    let lhs = kernel_integral(&k1, t, x, &lo, &hi) - kernel_integral(&k12, t, x, &lo, &hi);
    let rhs = 1.0 - box_mass(&k2, t, x);
    Ok(IntersectionReport {
        lhs,
        rhs,
        margin: rhs - lhs,
    })
}
