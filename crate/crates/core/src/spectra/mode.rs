use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::geometry::{Geometry, GeometryKind};
use super::lattice::{advance, TensorLattice};
use super::rng::NormalStream;
use crate::error::{invalid, Result};

/// Analytic basis function attached to an integer frequency vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// `prod_i sin(pi m_i x_i / L_i)`
    SinProduct,
    /// `cos(2 pi sum_i k_i x_i / L_i)`
    Cos,
    /// `sin(2 pi sum_i k_i x_i / L_i)`
    Sin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeTerm {
    pub k: Vec<i64>,
    pub phase: Phase,
    pub coeff: f64,
}

/// An exact Laplace eigenfunction on a flat geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ModeFile", try_from = "ModeFile")]
pub struct EigenMode {
    pub geometry: Geometry,
    pub eigenvalue: f64,
    pub terms: Vec<ModeTerm>,
}

/// On-disk layout of a mode file.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModeFile {
    kind: GeometryKind,
    d: usize,
    sides: Vec<f64>,
    lambda: f64,
    terms: Vec<ModeTerm>,
}

impl From<EigenMode> for ModeFile {
    fn from(m: EigenMode) -> Self {
        ModeFile {
            kind: m.geometry.kind,
            d: m.geometry.dim,
            sides: m.geometry.sides,
            lambda: m.eigenvalue,
            terms: m.terms,
        }
    }
}

impl TryFrom<ModeFile> for EigenMode {
    type Error = crate::error::LabError;

    fn try_from(f: ModeFile) -> Result<Self> {
        let geometry = Geometry::new(f.kind, f.d, f.sides)?;
        let mode = EigenMode {
            geometry,
            eigenvalue: f.lambda,
            terms: f.terms,
        };
        mode.check_terms()?;
        Ok(mode)
    }
}

/// Angular frequency of a term along one axis.
fn axis_frequency(phase: Phase, k: i64, side: f64) -> f64 {
    match phase {
        Phase::SinProduct => PI * k as f64 / side,
        Phase::Cos | Phase::Sin => 2.0 * PI * k as f64 / side,
    }
}

/// Exact eigenvalue carried by a single term.
pub fn term_eigenvalue(geometry: &Geometry, phase: Phase, k: &[i64]) -> f64 {
    k.iter()
        .zip(&geometry.sides)
        .map(|(&ki, &l)| axis_frequency(phase, ki, l).powi(2))
        .sum()
}

impl EigenMode {
    pub fn dim(&self) -> usize {
        self.geometry.dim
    }

    /// Checks that every term matches the geometry and carries the mode's eigenvalue.
    pub fn check_terms(&self) -> Result<()> {
        let scale = self.eigenvalue.abs().max(1.0);
        for t in &self.terms {
            if t.k.len() != self.geometry.dim {
                return invalid("term frequency vector has wrong length");
            }
            match (self.geometry.kind, t.phase) {
                (GeometryKind::DirichletBox, Phase::SinProduct) => {
                    if t.k.iter().any(|&m| m < 1) {
                        return invalid("box modes need every index >= 1");
                    }
                }
                (GeometryKind::FlatTorus, Phase::Cos | Phase::Sin) => {}
                _ => return invalid("phase does not match geometry"),
            }
            let lam = term_eigenvalue(&self.geometry, t.phase, &t.k);
            if (lam - self.eigenvalue).abs() > 1e-12 * scale {
                return invalid(format!("term {:?} has eigenvalue {lam}, mode has {}", t.k, self.eigenvalue));
            }
        }
        Ok(())
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.coeff * term_value(&self.geometry, t, x)).sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        for t in &self.terms {
            let gt = term_gradient(&self.geometry, t, x);
            for (gi, v) in g.iter_mut().zip(gt) {
                *gi += t.coeff * v;
            }
        }
        g
    }

    /// Certified bound on `sup |grad u|`: every term has gradient norm at most `sqrt(lambda)`.
    pub fn gradient_bound(&self) -> f64 {
        self.eigenvalue.sqrt() * self.terms.iter().map(|t| t.coeff.abs()).sum::<f64>()
    }

    /// Evaluates the mode on a tensor lattice; gradient arrays optional.
    pub fn eval_lattice(&self, lattice: &TensorLattice, with_gradient: bool) -> (Vec<f64>, Option<Vec<Vec<f64>>>) {
        if !with_gradient {
            return (self.eval_values(lattice), None);
        }
        let d = self.dim();
        let n = lattice.len();
        let mut values = vec![0.0; n];
        let mut grads = with_gradient.then(|| vec![vec![0.0; n]; d]);
        let coords: Vec<Vec<f64>> = (0..d).map(|a| lattice.axis_coords(a)).collect();

        for t in &self.terms {
            let omega: Vec<f64> = (0..d).map(|a| axis_frequency(t.phase, t.k[a], self.geometry.sides[a])).collect();
            // per-axis (sin, cos) of omega_a * x_a
            let tables: Vec<Vec<(f64, f64)>> = (0..d)
                .map(|a| coords[a].iter().map(|&x| (omega[a] * x).sin_cos()).collect())
                .collect();
            let mut idx = vec![0usize; d];
            let mut flat = 0usize;
            loop {
                match t.phase {
                    Phase::SinProduct => {
                        let mut prod = 1.0;
                        for a in 0..d {
                            prod *= tables[a][idx[a]].0;
                        }
                        values[flat] += t.coeff * prod;
                        if let Some(g) = grads.as_mut() {
                            for j in 0..d {
                                let mut p = omega[j] * tables[j][idx[j]].1;
                                for a in 0..d {
                                    if a != j {
                                        p *= tables[a][idx[a]].0;
                                    }
                                }
                                g[j][flat] += t.coeff * p;
                            }
                        }
                    }
                    Phase::Cos | Phase::Sin => {
                        // e^{i theta} as a product of per-axis unit complex numbers
                        let (mut re, mut im) = (1.0, 0.0);
                        for a in 0..d {
                            let (s, c) = tables[a][idx[a]];
                            let nre = re * c - im * s;
                            im = re * s + im * c;
                            re = nre;
                        }
                        let (v, dv) = if t.phase == Phase::Cos { (re, -im) } else { (im, re) };
                        values[flat] += t.coeff * v;
                        if let Some(g) = grads.as_mut() {
                            for j in 0..d {
                                g[j][flat] += t.coeff * dv * omega[j];
                            }
                        }
                    }
                }
                flat += 1;
                if !advance(&mut idx, &lattice.shape) {
                    break;
                }
            }
        }
        (values, grads)
    }
}

impl EigenMode {
    /// Values only: per term, the product over all axes but the last is formed once per
    /// row and the last axis runs as a tight loop.
    fn eval_values(&self, lattice: &TensorLattice) -> Vec<f64> {
        let d = self.dim();
        let n = lattice.len();
        let mut values = vec![0.0; n];
        if n == 0 {
            return values;
        }
        let last = lattice.shape[d - 1];
        let row_shape = &lattice.shape[..d - 1];
        let coords: Vec<Vec<f64>> = (0..d).map(|a| lattice.axis_coords(a)).collect();
        for t in &self.terms {
            let tables: Vec<Vec<(f64, f64)>> = (0..d)
                .map(|a| {
                    let w = axis_frequency(t.phase, t.k[a], self.geometry.sides[a]);
                    coords[a].iter().map(|&x| (w * x).sin_cos()).collect()
                })
                .collect();
            let tail = &tables[d - 1];
            let mut idx = vec![0usize; d - 1];
            let mut row = 0usize;
            loop {
                let out = &mut values[row * last..(row + 1) * last];
                match t.phase {
                    Phase::SinProduct => {
                        let p = t.coeff * (0..d - 1).map(|a| tables[a][idx[a]].0).product::<f64>();
                        for (o, &(s, _)) in out.iter_mut().zip(tail) {
                            *o += p * s;
                        }
                    }
                    Phase::Cos | Phase::Sin => {
                        let (mut re, mut im) = (1.0, 0.0);
                        for a in 0..d - 1 {
                            let (s, c) = tables[a][idx[a]];
                            let nre = re * c - im * s;
                            im = re * s + im * c;
                            re = nre;
                        }
                        let (re, im) = (t.coeff * re, t.coeff * im);
                        if t.phase == Phase::Cos {
                            for (o, &(s, c)) in out.iter_mut().zip(tail) {
                                *o += re * c - im * s;
                            }
                        } else {
                            for (o, &(s, c)) in out.iter_mut().zip(tail) {
                                *o += re * s + im * c;
                            }
                        }
                    }
                }
                row += 1;
                if !advance(&mut idx, row_shape) {
                    break;
                }
            }
        }
        values
    }
}

fn term_value(geometry: &Geometry, t: &ModeTerm, x: &[f64]) -> f64 {
    match t.phase {
        Phase::SinProduct => {
            t.k.iter()
                .zip(&geometry.sides)
                .zip(x)
                .map(|((&m, &l), &xi)| (axis_frequency(t.phase, m, l) * xi).sin())
                .product()
        }
        Phase::Cos | Phase::Sin => {
            let theta = plane_phase(geometry, t, x);
            if t.phase == Phase::Cos {
                theta.cos()
            } else {
                theta.sin()
            }
        }
    }
}

fn plane_phase(geometry: &Geometry, t: &ModeTerm, x: &[f64]) -> f64 {
    t.k.iter()
        .zip(&geometry.sides)
        .zip(x)
        .map(|((&k, &l), &xi)| axis_frequency(t.phase, k, l) * xi)
        .sum()
}

fn term_gradient(geometry: &Geometry, t: &ModeTerm, x: &[f64]) -> Vec<f64> {
    let d = geometry.dim;
    let omega: Vec<f64> = (0..d).map(|a| axis_frequency(t.phase, t.k[a], geometry.sides[a])).collect();
    match t.phase {
        Phase::SinProduct => (0..d)
            .map(|j| {
                (0..d)
                    .map(|a| {
                        if a == j {
                            omega[a] * (omega[a] * x[a]).cos()
                        } else {
                            (omega[a] * x[a]).sin()
                        }
                    })
                    .product()
            })
            .collect(),
        Phase::Cos | Phase::Sin => {
            let theta = plane_phase(geometry, t, x);
            let dv = if t.phase == Phase::Cos { -theta.sin() } else { theta.cos() };
            omega.iter().map(|w| w * dv).collect()
        }
    }
}

/// Product sine mode `prod_i sin(pi m_i x_i / L_i)` on a Dirichlet box.
pub fn box_mode(geometry: &Geometry, m: &[i64]) -> Result<EigenMode> {
    geometry.validate()?;
    if geometry.kind != GeometryKind::DirichletBox {
        return invalid("box_mode needs a Dirichlet box");
    }
    if m.len() != geometry.dim {
        return invalid(format!("index vector must have {} entries", geometry.dim));
    }
    if m.iter().any(|&mi| mi < 1) {
        return invalid(format!("box mode indices must be positive, got {m:?}"));
    }
    Ok(EigenMode {
        geometry: geometry.clone(),
        eigenvalue: term_eigenvalue(geometry, Phase::SinProduct, m),
        terms: vec![ModeTerm {
            k: m.to_vec(),
            phase: Phase::SinProduct,
            coeff: 1.0,
        }],
    })
}

/// Integer vectors with `|k|^2 = n` whose first nonzero entry is positive, in lexicographic order.
pub fn lattice_representations(dim: usize, n: u64) -> Vec<Vec<i64>> {
    let r = (n as f64).sqrt().floor() as i64 + 1;
    let mut out = Vec::new();
    let mut k = vec![-r; dim];
    'outer: loop {
        let norm: i64 = k.iter().map(|x| x * x).sum();
        if norm as u64 == n && n > 0 {
            if let Some(&first) = k.iter().find(|&&x| x != 0) {
                if first > 0 {
                    out.push(k.clone());
                }
            }
        }
        for a in (0..dim).rev() {
            k[a] += 1;
            if k[a] <= r {
                continue 'outer;
            }
            k[a] = -r;
        }
        break;
    }
    out
}

/// Real basis of the eigenspace `lambda = 4 pi^2 n` on the unit torus.
pub fn torus_eigenspace(geometry: &Geometry, level: u64) -> Result<Vec<EigenMode>> {
    geometry.validate()?;
    if !geometry.is_torus() || !geometry.has_unit_sides() {
        return invalid("torus_eigenspace needs a flat torus with unit sides");
    }
    let eigenvalue = 4.0 * PI * PI * level as f64;
    let single = |k: Vec<i64>, phase| EigenMode {
        geometry: geometry.clone(),
        eigenvalue,
        terms: vec![ModeTerm { k, phase, coeff: 1.0 }],
    };
    if level == 0 {
        return Ok(vec![single(vec![0; geometry.dim], Phase::Cos)]);
    }
    Ok(lattice_representations(geometry.dim, level)
        .into_iter()
        .flat_map(|k| [single(k.clone(), Phase::Cos), single(k, Phase::Sin)])
        .collect())
}

/// Gaussian random element of the span of `basis`, with unit coefficient norm.
pub fn random_combination(basis: &[EigenMode], seed: u64) -> Result<EigenMode> {
    let first = match basis.first() {
        Some(f) => f,
        None => return invalid("random_combination needs a nonempty basis"),
    };
    let lam = first.eigenvalue;
    if basis
        .iter()
        .any(|b| (b.eigenvalue - lam).abs() > 1e-12 * lam.abs().max(1.0) || b.geometry != first.geometry)
    {
        return invalid("basis elements have mixed eigenvalues or geometries");
    }
    let coeffs = normal_coefficients(basis.len(), seed);
    let terms = basis
        .iter()
        .zip(&coeffs)
        .flat_map(|(b, &c)| {
            b.terms.iter().map(move |t| ModeTerm {
                coeff: t.coeff * c,
                ..t.clone()
            })
        })
        .collect();
    Ok(EigenMode {
        geometry: first.geometry.clone(),
        eigenvalue: lam,
        terms,
    })
}

/// Random element of the torus eigenspace at `level`; an error when the level has no
/// lattice representation.
pub fn random_eigenfunction(geometry: &Geometry, level: u64, seed: u64) -> Result<EigenMode> {
    let basis = torus_eigenspace(geometry, level)?;
    if basis.is_empty() {
        return invalid(format!("level {level} has no lattice representation in dimension {}", geometry.dim));
    }
    random_combination(&basis, seed)
}

/// `count` standard normals from the seeded stream, scaled to unit Euclidean norm.
pub fn normal_coefficients(count: usize, seed: u64) -> Vec<f64> {
    let mut stream = NormalStream::new(seed);
    let raw: Vec<f64> = (0..count).map(|_| stream.normal()).collect();
    let norm = raw.iter().map(|c| c * c).sum::<f64>().sqrt();
    raw.into_iter().map(|c| c / norm).collect()
}
