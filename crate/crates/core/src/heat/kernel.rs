use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Relative size of the dropped image tail.
pub const DEFAULT_TRUNCATION: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelVariant {
    FreeSpace,
    TorusImages,
    BoxDirichletImages,
    /// Sine series on a box; a cross-check for the image sum.
    BoxDirichletSpectral,
}

/// A heat kernel on `R^d`, on the torus `prod [0, L_i)`, or on the box `prod [lo_i, lo_i + L_i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub variant: KernelVariant,
    /// Lower corner of the box (ignored for the torus and free space).
    pub lower: Vec<f64>,
    /// Side lengths (periods on the torus); only the length matters for free space.
    pub sides: Vec<f64>,
    pub truncation: f64,
}

/// Kernel value with the size of the truncated tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: f64,
    /// Upper bound on the absolute contribution of the dropped terms.
    pub tail_bound: f64,
    /// Number of images or series terms summed, over all axes.
    pub terms: usize,
}

impl KernelSpec {
    pub fn free(dim: usize) -> Self {
        KernelSpec {
            variant: KernelVariant::FreeSpace,
            lower: vec![0.0; dim],
            sides: vec![1.0; dim],
            truncation: DEFAULT_TRUNCATION,
        }
    }

    pub fn torus(sides: Vec<f64>) -> Self {
        KernelSpec {
            variant: KernelVariant::TorusImages,
            lower: vec![0.0; sides.len()],
            sides,
            truncation: DEFAULT_TRUNCATION,
        }
    }

    pub fn dirichlet_box(lower: Vec<f64>, sides: Vec<f64>) -> Self {
        KernelSpec {
            variant: KernelVariant::BoxDirichletImages,
            lower,
            sides,
            truncation: DEFAULT_TRUNCATION,
        }
    }

    /// Box `[lo, hi]`.
    pub fn dirichlet_between(lo: &[f64], hi: &[f64]) -> Self {
        Self::dirichlet_box(lo.to_vec(), hi.iter().zip(lo).map(|(h, l)| h - l).collect())
    }

    pub fn spectral_box(lower: Vec<f64>, sides: Vec<f64>) -> Self {
        KernelSpec {
            variant: KernelVariant::BoxDirichletSpectral,
            lower,
            sides,
            truncation: DEFAULT_TRUNCATION,
        }
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self.variant {
            KernelVariant::FreeSpace | KernelVariant::TorusImages => true,
            _ => x
                .iter()
                .zip(&self.lower)
                .zip(&self.sides)
                .all(|((&v, &l), &s)| v >= l && v <= l + s),
        }
    }

    /// One-dimensional factor along `axis`.
    pub fn factor(&self, axis: usize, t: f64, x: f64, y: f64) -> KernelValue {
        let l = self.sides[axis];
        let tau = self.truncation;
        match self.variant {
            KernelVariant::FreeSpace => KernelValue {
                value: gaussian(t, (x - y).abs()),
                tail_bound: 0.0,
                terms: 1,
            },
            KernelVariant::TorusImages => {
                let z = (x - y).abs();
                image_sum(t, z, l, tau, None)
            }
            KernelVariant::BoxDirichletImages => {
                let lo = self.lower[axis];
                let (u, v) = (x - lo, y - lo);
                // p(x, y) = sum_k g(x - y + 2kL) - g(x + y + 2kL)
                image_sum(t, (u - v).abs(), 2.0 * l, tau, Some(u + v))
            }
            KernelVariant::BoxDirichletSpectral => {
                let lo = self.lower[axis];
                let (u, v) = (x - lo, y - lo);
                let m_max = ((l / PI) * (tau.recip().ln() / t).sqrt()).ceil() as usize + 1;
                let mut sum = 0.0;
                for m in (1..=m_max).rev() {
                    let w = m as f64 * PI / l;
                    sum += (-w * w * t).exp() * (w * u).sin() * (w * v).sin();
                }
                let w = (m_max + 1) as f64 * PI / l;
                let tail = 2.0 / l * (-w * w * t).exp() / (1.0 - (-2.0 * w * PI / l * t).exp());
                KernelValue {
                    value: 2.0 / l * sum,
                    tail_bound: tail,
                    terms: m_max,
                }
            }
        }
    }

    pub fn eval_detailed(&self, t: f64, x: &[f64], y: &[f64]) -> Result<KernelValue> {
        if !(t > 0.0) {
            return invalid(format!("heat kernel needs t > 0, got {t}"));
        }
        if x.len() != self.dim() || y.len() != self.dim() {
            return invalid("point dimension differs from the kernel dimension");
        }
        let mut out = KernelValue {
            value: 1.0,
            tail_bound: 0.0,
            terms: 0,
        };
        for a in 0..self.dim() {
            let f = self.factor(a, t, x[a], y[a]);
            // (v + e)(w + e') - v w <= |v| e' + |w| e + e e'
            out.tail_bound = out.value.abs() * f.tail_bound + f.value.abs() * out.tail_bound + out.tail_bound * f.tail_bound;
            out.value *= f.value;
            out.terms += f.terms;
        }
        Ok(out)
    }

    pub fn eval(&self, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
        Ok(self.eval_detailed(t, x, y)?.value)
    }
}

/// Free one-dimensional kernel.
pub fn gaussian(t: f64, z: f64) -> f64 {
    (4.0 * PI * t).powf(-0.5) * (-z * z / (4.0 * t)).exp()
}

/// `kernel_eval(spec, t, x, y)`.
pub fn kernel_eval(spec: &KernelSpec, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    spec.eval(t, x, y)
}

/// `sum_k g(z + k P)` minus, when `reflected` is given, `sum_k g(s + k P)`, over every shift with
/// `|z + kP| <= sqrt(4 t ln(1/tau)) + P`. Terms are added in a fixed order that depends only
/// on `z` and `s`, so swapping the kernel arguments gives bit-identical values.
fn image_sum(t: f64, z: f64, period: f64, tau: f64, reflected: Option<f64>) -> KernelValue {
    let reach = (4.0 * t * tau.recip().ln()).sqrt() + period;
    let k_max = (reach / period).ceil() as i64;
    let mut sum = 0.0;
    let mut terms = 0;
    for k in (1..=k_max).rev() {
        let kp = k as f64 * period;
        sum += gaussian(t, z + kp) + gaussian(t, z - kp);
        if let Some(s) = reflected {
            sum -= gaussian(t, s + kp) + gaussian(t, s - kp);
        }
        terms += 2;
    }
    sum += gaussian(t, z);
    terms += 1;
    if let Some(s) = reflected {
        sum -= gaussian(t, s);
        terms += 1;
    }
    let r = k_max as f64 * period - period.max(z.abs()).max(reflected.unwrap_or(0.0).abs());
    let tail = if r > 0.0 {
        let per_side = gaussian(t, r) / (1.0 - (-r * period / (2.0 * t)).exp());
        if reflected.is_some() {
            4.0 * per_side
        } else {
            2.0 * per_side
        }
    } else {
        f64::INFINITY
    };
    KernelValue {
        value: sum,
        tail_bound: tail,
        terms,
    }
}
