use crate::error::{invalid, Result};
use crate::spectra::{EigenMode, Geometry, ScalarGrid, TensorLattice};

use super::region::Region;

/// Largest `|f|` over the lattice points of a region.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSup {
    pub value: f64,
    pub at: Vec<f64>,
    pub count: usize,
}

/// Lattice access to a field over regions, for sup-type quantities.
pub trait FieldOracle {
    fn geometry(&self) -> &Geometry;

    /// Eigenvalue of the underlying mode, when the field is one.
    fn eigenvalue(&self) -> Option<f64>;

    /// Largest lattice spacing used inside regions.
    fn spacing(&self) -> f64;

    /// Bound on `sup_region |f| - max over lattice points of |f|`, valid for regions of half
    /// width at least `spacing * sqrt(d)`. Zero when no derivative bound is known.
    fn sup_error(&self) -> f64;

    /// Calls `f(point, value)` for every lattice point in the region.
    fn for_each_in(&self, region: &Region, f: &mut dyn FnMut(&[f64], f64));

    /// Calls `f(point, |grad|)` for every lattice point in the region.
    fn for_each_gradient_in(&self, region: &Region, f: &mut dyn FnMut(&[f64], f64)) -> Result<()>;

    fn sup(&self, region: &Region) -> RegionSup {
        let mut best = RegionSup {
            value: 0.0,
            at: region.center().to_vec(),
            count: 0,
        };
        let mut first = true;
        self.for_each_in(region, &mut |x, v| {
            best.count += 1;
            if first || v.abs() > best.value {
                first = false;
                best.value = v.abs();
                best.at.copy_from_slice(x);
            }
        });
        best
    }
}

/// Samples of a [`ScalarGrid`]. Regions may wrap on a torus; reported points are unwrapped.
pub struct GridOracle<'a> {
    pub grid: &'a ScalarGrid,
    lipschitz: Option<f64>,
    eigenvalue: Option<f64>,
}

impl<'a> GridOracle<'a> {
    /// Plain field: no derivative bound, so sups carry no certified error.
    pub fn new(grid: &'a ScalarGrid) -> Self {
        GridOracle {
            grid,
            lipschitz: None,
            eigenvalue: None,
        }
    }

    /// Grid sampled from `mode`; the mode's gradient bound certifies sup errors.
    pub fn for_mode(grid: &'a ScalarGrid, mode: &EigenMode) -> Self {
        GridOracle {
            grid,
            lipschitz: Some(mode.gradient_bound()),
            eigenvalue: Some(mode.eigenvalue),
        }
    }

    fn visit(&self, region: &Region, f: &mut dyn FnMut(usize, &[f64])) {
        let g = self.grid;
        let d = g.dim();
        let torus = g.geometry.is_torus();
        let c = region.center();
        let w = region.half_width();
        let mut lo = vec![0i64; d];
        let mut hi = vec![0i64; d];
        for a in 0..d {
            let h = g.spacing(a);
            lo[a] = ((c[a] - w) / h - 1e-9).ceil() as i64;
            hi[a] = ((c[a] + w) / h + 1e-9).floor() as i64;
            if !torus {
                lo[a] = lo[a].max(0);
                hi[a] = hi[a].min(g.shape[a] as i64 - 1);
            }
            if lo[a] > hi[a] {
                return;
            }
        }
        let strides = g.strides();
        let mut idx = lo.clone();
        let mut x = vec![0.0; d];
        loop {
            let mut flat = 0usize;
            for a in 0..d {
                x[a] = idx[a] as f64 * g.spacing(a);
                flat += idx[a].rem_euclid(g.shape[a] as i64) as usize * strides[a];
            }
            if region.contains(&x) {
                f(flat, &x);
            }
            let mut a = d;
            loop {
                if a == 0 {
                    return;
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] <= hi[a] {
                    break;
                }
                idx[a] = lo[a];
            }
        }
    }
}

impl FieldOracle for GridOracle<'_> {
    fn geometry(&self) -> &Geometry {
        &self.grid.geometry
    }

    fn eigenvalue(&self) -> Option<f64> {
        self.eigenvalue
    }

    fn spacing(&self) -> f64 {
        self.grid.max_spacing()
    }

    fn sup_error(&self) -> f64 {
        self.lipschitz.map_or(0.0, |l| l * self.spacing() * (self.grid.dim() as f64).sqrt())
    }

    fn for_each_in(&self, region: &Region, f: &mut dyn FnMut(&[f64], f64)) {
        let values = &self.grid.values;
        self.visit(region, &mut |flat, x| f(x, values[flat]));
    }

    fn for_each_gradient_in(&self, region: &Region, f: &mut dyn FnMut(&[f64], f64)) -> Result<()> {
        let Some(grad) = self.grid.gradient.as_ref() else {
            return invalid("grid has no gradient arrays");
        };
        self.visit(region, &mut |flat, x| {
            let n2: f64 = grad.iter().map(|g| g[flat] * g[flat]).sum();
            f(x, n2.sqrt())
        });
        Ok(())
    }
}

/// Exact evaluation of a mode on a lattice of the given spacing, centered at each region's center.
pub struct ModeOracle<'a> {
    pub mode: &'a EigenMode,
    pub lattice_spacing: f64,
}

impl<'a> ModeOracle<'a> {
    pub fn new(mode: &'a EigenMode, lattice_spacing: f64) -> Result<Self> {
        if !(lattice_spacing > 0.0) {
            return invalid("lattice spacing must be positive");
        }
        Ok(ModeOracle { mode, lattice_spacing })
    }

    /// Lattice `factor` times finer than `grid_spacing`.
    pub fn oversampled(mode: &'a EigenMode, grid_spacing: f64, factor: usize) -> Result<Self> {
        Self::new(mode, grid_spacing / factor.max(1) as f64)
    }

    fn lattice_for(&self, region: &Region) -> TensorLattice {
        crate::nodal::centered_lattice(region.center(), region.half_width(), self.lattice_spacing)
    }

    fn inside_box(&self, x: &[f64]) -> bool {
        let g = &self.mode.geometry;
        g.is_torus() || x.iter().zip(&g.sides).all(|(&v, &l)| v >= -1e-12 && v <= l + 1e-12)
    }
}

impl FieldOracle for ModeOracle<'_> {
    fn geometry(&self) -> &Geometry {
        &self.mode.geometry
    }

    fn eigenvalue(&self) -> Option<f64> {
        Some(self.mode.eigenvalue)
    }

    fn spacing(&self) -> f64 {
        self.lattice_spacing
    }

    fn sup_error(&self) -> f64 {
        self.mode.gradient_bound() * self.lattice_spacing * (self.mode.dim() as f64).sqrt()
    }

    fn for_each_in(&self, region: &Region, f: &mut dyn FnMut(&[f64], f64)) {
        let lattice = self.lattice_for(region);
        let (values, _) = self.mode.eval_lattice(&lattice, false);
        for (i, v) in values.into_iter().enumerate() {
            let x = lattice.point(i);
            if region.contains(&x) && self.inside_box(&x) {
                f(&x, v);
            }
        }
    }

    fn for_each_gradient_in(&self, region: &Region, f: &mut dyn FnMut(&[f64], f64)) -> Result<()> {
        let lattice = self.lattice_for(region);
        let (_, grads) = self.mode.eval_lattice(&lattice, true);
        let grads = grads.expect("gradient requested");
        for i in 0..lattice.len() {
            let x = lattice.point(i);
            if region.contains(&x) && self.inside_box(&x) {
                let n2: f64 = grads.iter().map(|g| g[i] * g[i]).sum();
                f(&x, n2.sqrt());
            }
        }
        Ok(())
    }
}
