//! Runs every acceptance criterion at its stated tolerance and prints one PASS/FAIL line
//! each. Failing criteria are reported, not hidden; the binary exits 0 either way so the
//! report is always complete. Set `ACCEPTANCE_STRICT=1` to exit 1 on any failure.

use std::f64::consts::PI;
use std::time::Instant;

use rayon::prelude::*;

use nodal_lab::capacity::{capacity_heat_bound_sweep, concentric_spheres, variational_capacity, Condenser, Shape};
use nodal_lab::doubling::{
    df_sweep, doubling_index, field_jobs, lower_median_mask, main_theorem_sweep, remez_witness, run_chain, GridOracle, ModeOracle, Region,
};
use nodal_lab::experiment::{fit_scaling, ScalingModel};
use nodal_lab::heat::{
    cell_mass, deficit_identity_check, gaussian_constant, kernel_bound_report, semigroup_defect, KernelSpec, UPPER_BOUND_C2,
};
use nodal_lab::nodal::{
    centered_inradius_search, classical_bounds_report, deficiency_profile, faber_krahn_constant, inradius_report, label_nodal_domains,
    DEFAULT_ZERO_TOLERANCE,
};
use nodal_lab::spectra::rng::{derive_seed, NormalStream};
use nodal_lab::spectra::{box_mode, resolution_for, sample_field, Geometry, ScalarGrid};
use nodal_lab::Result;

/// Frozen constant for the d=3 inradius lower bound.
const D3_INRADIUS_CONSTANT: f64 = 4.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome {
        pass,
        detail: detail.into(),
    })
}

fn d2_levels() -> Vec<u64> {
    vec![4, 9, 16, 25, 36, 49]
}

fn c1_inradius_oracle() -> Result<Outcome> {
    let t = Instant::now();
    let mut cases = Vec::new();
    for a in 1..=6 {
        for b in 1..=6 {
            cases.push((vec![a, b], 256usize));
        }
    }
    for a in 1..=4 {
        for b in 1..=4 {
            for c in 1..=4 {
                cases.push((vec![a, b, c], 96));
            }
        }
    }
    let bad: Vec<String> = cases
        .par_iter()
        .map(|(m, n)| -> Result<Option<String>> {
            let mode = box_mode(&Geometry::unit_box(m.len()), m)?;
            let grid = sample_field(&mode, *n, false)?;
            let lab = label_nodal_domains(&grid, DEFAULT_ZERO_TOLERANCE)?;
            let expected_count: i64 = m.iter().product();
            let exact = 1.0 / (2.0 * *m.iter().max().unwrap() as f64);
            let h = grid.max_spacing();
            let radii = inradius_report(&lab, &grid);
            let off = radii.iter().map(|r| (r.inradius - exact).abs()).fold(0.0, f64::max);
            Ok((lab.domain_count() as i64 != expected_count || off > 2.0 * h)
                .then(|| format!("{m:?}: {} domains, inradius error {:.2} cells", lab.domain_count(), off / h)))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let secs = t.elapsed().as_secs_f64();
    outcome(
        bad.is_empty() && secs < 30.0,
        format!(
            "{} modes, {} mismatches {:?}, {secs:.1} s (limit 30 s)",
            cases.len(),
            bad.len(),
            bad
        ),
    )
}

fn c2_scaling() -> Result<Outcome> {
    let rows = main_theorem_sweep(&Geometry::unit_torus(2), &d2_levels(), &[1, 2, 3, 4, 5], 16.0)?;
    let l: Vec<f64> = rows.iter().map(|r| r.lambda).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.min_centered_inradius).collect();
    let fit = fit_scaling(&l, &y, ScalingModel::PurePower, 2)?;
    let d2 = (-0.60..=-0.40).contains(&fit.slope) && fit.r_squared >= 0.9;

    let t = Instant::now();
    let levels: Vec<u64> = (9..=64).collect();
    let rows3 = main_theorem_sweep(&Geometry::unit_torus(3), &levels, &[1, 2, 3], 16.0)?;
    let secs = t.elapsed().as_secs_f64();
    let min_c = rows3.iter().map(|r| r.normalized).fold(f64::INFINITY, f64::min);
    let d3 = min_c >= D3_INRADIUS_CONSTANT && secs < 300.0;
    outcome(
        d2 && d3,
        format!(
            "d=2 slope {:.3} R2 {:.3} over {} fields; d=3 min r*sqrt(lambda log lambda) {min_c:.3} >= c={D3_INRADIUS_CONSTANT} over {} fields in {secs:.0} s",
            fit.slope,
            fit.r_squared,
            rows.len(),
            rows3.len()
        ),
    )
}

fn c3_donnelly_fefferman() -> Result<Outcome> {
    let rows = df_sweep(&Geometry::unit_torus(2), &d2_levels(), &[1, 2, 3, 4, 5], 200)?;
    let mut per_level: Vec<(u64, f64)> = Vec::new();
    for r in &rows {
        match per_level.iter_mut().find(|p| p.0 == r.level) {
            Some(p) => p.1 = p.1.max(r.df_ratio),
            None => per_level.push((r.level, r.df_ratio)),
        }
    }
    let max = per_level.iter().map(|p| p.1).fold(0.0, f64::max);
    let min = per_level.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let ratio = max / min;
    let stats: Vec<String> = per_level.iter().map(|(l, v)| format!("n={l}:{v:.3}")).collect();
    outcome(
        ratio <= 4.0,
        format!("max/min of N_max/sqrt(lambda) = {ratio:.2} (limit 4); {}", stats.join(" ")),
    )
}

fn c4_doubling_exactness() -> Result<Outcome> {
    let geo = Geometry::unit_box(2);
    let c = [0.5, 0.5];
    let mut worst: f64 = 0.0;
    let mut scale_exact = true;
    for n in 1..=3 {
        for angle in [0.0, 0.3, 1.1] {
            // Re(((x - c) e^{i angle})^n), a homogeneous harmonic polynomial of degree n
            let f = move |x: &[f64]| {
                let (u, v) = (x[0] - c[0], x[1] - c[1]);
                let (r, th) = ((u * u + v * v).sqrt(), v.atan2(u) + angle);
                r.powi(n) * (n as f64 * th).cos()
            };
            let grid = ScalarGrid::from_fn(&geo, 1024, "harmonic", f)?;
            let scaled = ScalarGrid::from_fn(&geo, 1024, "harmonic", move |x| -8.0 * f(x))?;
            for region in [Region::ball(c.to_vec(), 0.125), Region::cube(c.to_vec(), 0.125)] {
                let a = doubling_index(&GridOracle::new(&grid), &region)?;
                let b = doubling_index(&GridOracle::new(&scaled), &region)?;
                worst = worst.max((a.value - n as f64).abs());
                scale_exact &= a.value.to_bits() == b.value.to_bits();
            }
        }
    }
    outcome(
        worst <= 0.02 && scale_exact,
        format!("max |N - n| = {worst:.2e} (limit 0.02); N(-8 f) == N(f) bitwise: {scale_exact}"),
    )
}

fn c5_chain_telescoping() -> Result<Outcome> {
    let mut jobs = field_jobs(&Geometry::unit_torus(2), &[9, 25], &[1, 2, 3])?;
    jobs.extend(field_jobs(&Geometry::unit_torus(3), &[9], &[1, 2])?);
    let per_field: Vec<(usize, usize, usize, f64)> = jobs
        .par_iter()
        .map(|(_, _, mode)| -> Result<(usize, usize, usize, f64)> {
            let grid = sample_field(mode, resolution_for(mode, 16.0, 2), false)?;
            let lab = label_nodal_domains(&grid, DEFAULT_ZERO_TOLERANCE)?;
            let (mut reports, mut violations, mut outside, mut worst) = (0, 0, 0, f64::INFINITY);
            for id in lab.ids() {
                for delta in [0.4, 0.8] {
                    for a in [5, 9, 13, 17] {
                        match run_chain(mode, &grid, &lab, id, delta, a) {
                            Ok(r) => {
                                reports += 1;
                                let a_prime = r.a_prime as f64;
                                for s in &r.telescoping_slack {
                                    worst = worst.min(s + a_prime * r.epsilon_grid);
                                    if *s < -a_prime * r.epsilon_grid {
                                        violations += 1;
                                    }
                                }
                            }
                            Err(nodal_lab::LabError::OutsideGeometry(_)) => outside += 1,
                            Err(e) => return Err(e),
                        }
                    }
                }
            }
            Ok((reports, violations, outside, worst))
        })
        .collect::<Result<Vec<_>>>()?;
    let reports: usize = per_field.iter().map(|p| p.0).sum();
    let violations: usize = per_field.iter().map(|p| p.1).sum();
    let worst = per_field.iter().map(|p| p.3).fold(f64::INFINITY, f64::min);
    outcome(
        violations == 0 && reports > 0,
        format!("{reports} chain reports, {violations} violations, min slack + A' eps_grid = {worst:.3e}"),
    )
}

fn c6_capacity_oracles() -> Result<Outcome> {
    let mut parts = Vec::new();
    let mut pass = true;
    for (d, n, exact) in [(3, 96, 4.0 * PI / (1.0 / 0.1 - 1.0 / 0.3)), (2, 512, 2.0 * PI / 3f64.ln())] {
        let t = Instant::now();
        let r = variational_capacity(&concentric_spheres(d, 0.1, 0.3, n)?)?;
        let secs = t.elapsed().as_secs_f64();
        let err = (r.energy - exact) / exact;
        pass &= err.abs() <= 0.05 && r.relative_gap <= 1e-6 && secs < 60.0;
        parts.push(format!(
            "d={d} N={n}: cap {:.4} vs {exact:.4} ({:+.2}%), gap {:.1e}, {secs:.1} s",
            r.energy,
            100.0 * err,
            r.relative_gap
        ));
    }
    outcome(pass, parts.join("; "))
}

fn c7_heat_flow_capacity() -> Result<Outcome> {
    let c = [0.5; 3];
    let shapes = [
        Shape::ball(c.to_vec(), 0.1),
        Shape::cube(&c, 0.08),
        Shape::slab(&c, 0.12, 0.03),
        Shape::l_shape(c.to_vec(), 0.1),
        Shape::union(vec![Shape::ball(vec![0.4, 0.5, 0.5], 0.06), Shape::ball(vec![0.6, 0.5, 0.5], 0.06)]),
    ];
    let probes = [[0.7, 0.5, 0.5], [0.5, 0.68, 0.58], [0.35, 0.35, 0.65]];
    let mut worst = f64::INFINITY;
    let mut checks = 0;
    let mut ratios = Vec::new();
    for k in &shapes {
        let cond = Condenser::from_shapes(k, &Shape::cube(&c, 0.3), 1.0 / 48.0)?;
        let mut cases = Vec::new();
        for p in &probes {
            let q = cond.lattice.point(cond.nearest_node(p).expect("probe on the lattice"));
            let r = (0..cond.k.len())
                .filter(|&f| cond.k[f])
                .map(|f| {
                    cond.lattice
                        .point(f)
                        .iter()
                        .zip(&q)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                })
                .fold(0.0, f64::max);
            cases.push((p.to_vec(), r * r, r));
            cases.push((p.to_vec(), r * r / 4.0, r));
        }
        let reports = capacity_heat_bound_sweep(&cond, &cases)?;
        for r in &reports {
            worst = worst.min(r.margin / r.psi);
            checks += 1;
        }
        ratios.push(reports.iter().map(|r| r.proposition_ratio).fold(0.0, f64::max));
    }
    let spread = ratios.iter().cloned().fold(0.0, f64::max) / ratios[0];
    outcome(
        worst >= -1e-6 && checks == 30,
        format!("{checks} checks, min margin/psi = {worst:.3e} (limit -1e-6); proposition ratio max/sphere = {spread:.2}"),
    )
}

fn c8_deficit_identity() -> Result<Outcome> {
    let condensers = [
        concentric_spheres(2, 0.1, 0.3, 128)?,
        concentric_spheres(3, 0.1, 0.3, 48)?,
        Condenser::from_shapes(&Shape::l_shape(vec![0.5, 0.5], 0.1), &Shape::cube(&[0.5, 0.5], 0.3), 1.0 / 64.0)?,
    ];
    let mut worst: f64 = 0.0;
    for c in &condensers {
        worst = worst.max(deficit_identity_check(c, 0.02, 1e-4)?.discrepancy);
    }
    outcome(
        worst <= 1e-8,
        format!("max discrepancy over 3 condensers = {worst:.2e} (limit 1e-8)"),
    )
}

fn c9_kernel_cross_checks() -> Result<Outcome> {
    let torus = KernelSpec::torus(vec![1.0, 1.0]);
    let mut mass_err: f64 = 0.0;
    for i in 0..=12 {
        let t = 1e-3 * 1000f64.powf(i as f64 / 12.0);
        for x in [[0.0, 0.0], [0.37, 0.91], [0.5, 0.25]] {
            mass_err = mass_err.max((cell_mass(&torus, t, &x, 64)? - 1.0).abs());
        }
    }
    let images = KernelSpec::dirichlet_box(vec![0.0], vec![1.0]);
    let series = KernelSpec::spectral_box(vec![0.0], vec![1.0]);
    let mut factor_err: f64 = 0.0;
    for t in [1e-3, 0.01, 0.1, 1.0] {
        for (x, y) in [(0.5, 0.5), (0.3, 0.33), (0.05, 0.1), (0.2, 0.7)] {
            if (x - y) * (x - y) > 8.0 * t {
                continue;
            }
            let a = images.eval(t, &[x], &[y])?;
            factor_err = factor_err.max((a - series.eval(t, &[x], &[y])?).abs() / a);
        }
    }
    let mut semigroup: f64 = 0.0;
    for s in [0.01, 0.05] {
        for t in [0.01, 0.05] {
            semigroup = semigroup.max(semigroup_defect(&torus, s, t, &[0.2, 0.3], &[0.7, 0.45], 64)?);
        }
    }
    outcome(
        mass_err <= 1e-9 && factor_err <= 1e-10 && semigroup <= 1e-7,
        format!("mass error {mass_err:.1e} (1e-9), images vs series {factor_err:.1e} (1e-10), semigroup {semigroup:.1e} (1e-7)"),
    )
}

fn c10_appendix_bounds() -> Result<Outcome> {
    let mut parts = Vec::new();
    let mut pass = true;
    for d in [2, 3] {
        let g = Geometry::unit_torus(d);
        let mut rng = NormalStream::new(derive_seed(&[d as u64, 0xa9]));
        let mut pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..40)
            .map(|_| ((0..d).map(|_| rng.uniform()).collect(), (0..d).map(|_| rng.uniform()).collect()))
            .collect();
        // pairs inside the inner box for the boundary-ratio fit
        pairs.extend((0..20).map(|_| {
            let p = |rng: &mut NormalStream| (0..d).map(|_| 0.5 + 0.375 * (2.0 * rng.uniform() - 1.0)).collect::<Vec<f64>>();
            (p(&mut rng), p(&mut rng))
        }));
        let ts: Vec<f64> = (0..10).map(|i| 1e-3 * 500f64.powf(i as f64 / 9.0)).collect();
        let rep = kernel_bound_report(&g, &ts, &pairs, 0.05)?;
        // pairs more than half a period apart have a shorter torus path leaving the box
        let straight: Vec<_> = pairs
            .iter()
            .filter(|(x, y)| x.iter().zip(y).all(|(a, b)| (a - b).abs() < 0.5))
            .cloned()
            .collect();
        let local = kernel_bound_report(&g, &ts, &straight, 0.05)?;
        let lower = rep.c3 >= 0.9 * gaussian_constant(d);
        let upper = rep.rows.iter().all(|r| r.margin >= -1e-12 * r.value);
        let norris = rep.norris_epsilon > 0.0 && rep.norris_samples > 0;
        pass &= lower && upper && norris;
        parts.push(format!(
            "d={d}: C3/(4pi)^(-d/2) = {:.3}, C1 = {:.3} with C2 = {UPPER_BOUND_C2}, eps = {:.2e} ({} samples, {} below resolution; {:.2e} on pairs less than half a period apart)",
            rep.c3 / gaussian_constant(d),
            rep.c1,
            rep.norris_epsilon,
            rep.norris_samples,
            rep.norris_unresolved,
            local.norris_epsilon
        ));
    }
    outcome(pass, parts.join("; "))
}

fn c11_almost_inscribed() -> Result<Outcome> {
    let deltas: Vec<f64> = (0..10).map(|i| 0.15 * 4f64.powf(i as f64 / 9.0)).collect();
    let levels: Vec<u64> = (9..=64).collect();
    let jobs = field_jobs(&Geometry::unit_torus(3), &levels, &[1, 2, 3])?;
    let profiles: Vec<(Vec<f64>, f64)> = jobs
        .par_iter()
        .map(|(_, _, mode)| -> Result<(Vec<f64>, f64)> {
            let grid = sample_field(mode, resolution_for(mode, 16.0, 2), false)?;
            let lab = label_nodal_domains(&grid, DEFAULT_ZERO_TOLERANCE)?;
            // the domain with the smallest centered inradius has the largest deficiency
            // envelope over delta; every other domain's profile is zero wherever this one is
            let (id, r) = lab
                .ids()
                .map(|id| (id, centered_inradius_search(&grid, &lab, id)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("at least one domain");
            Ok((
                deficiency_profile(mode, &grid, &lab, id, &deltas, None)?,
                r * mode.eigenvalue.sqrt(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let monotone = profiles.iter().all(|(p, _)| p.windows(2).all(|w| w[1] >= w[0]));
    let mut slopes = Vec::new();
    for (p, _) in &profiles {
        let pts: Vec<(f64, f64)> = deltas.iter().zip(p).filter(|(_, &v)| v > 0.0).map(|(&d, &v)| (d, v)).collect();
        if pts.len() >= 2 {
            let (l, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            let n = l.len() as f64;
            let (lx, ly): (Vec<f64>, Vec<f64>) = (l.iter().map(|v| v.ln()).collect(), y.iter().map(|v| v.ln()).collect());
            let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
            let sxx: f64 = lx.iter().map(|v| (v - mx).powi(2)).sum();
            let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
            slopes.push(sxy / sxx);
        }
    }
    let min_reach = profiles.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let min_slope = slopes.iter().cloned().fold(f64::INFINITY, f64::min);
    let slope_ok = !slopes.is_empty() && slopes.len() == profiles.len() && min_slope >= 4.5;
    outcome(
        monotone && slope_ok,
        format!(
            "{} instances, monotone: {monotone}; slopes fitted on {} instances (min {min_slope:.2}, limit 4.5); \
             smallest centered inradius * sqrt(lambda) = {min_reach:.2} exceeds delta_max = 0.6, so every envelope is 0 on [0.15, 0.6]",
            profiles.len(),
            slopes.len()
        ),
    )
}

fn c12_remez_stability() -> Result<Outcome> {
    let jobs = field_jobs(&Geometry::unit_torus(2), &[4, 9, 16, 25], &[1, 2, 3, 4, 5])?;
    let mut constants: Vec<f64> = jobs
        .par_iter()
        .map(|(level, seed, mode)| -> Result<Vec<f64>> {
            let r = 0.5 / mode.eigenvalue.sqrt();
            let oracle = ModeOracle::new(mode, r / 20.0)?;
            let mut rng = NormalStream::new(derive_seed(&[*level, *seed, 0x7e]));
            let mut out = Vec::new();
            while out.len() < 5 {
                let ball = Region::ball(vec![rng.uniform(), rng.uniform()], r);
                match remez_witness(&oracle, &ball, lower_median_mask) {
                    Ok(w) => out.push(w.implied_constant),
                    Err(nodal_lab::LabError::VanishingInnerRegion) => {}
                    Err(e) => return Err(e),
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?
        .concat();
    constants.sort_by(f64::total_cmp);
    let median = constants[constants.len() / 2];
    let max = *constants.last().unwrap();
    outcome(
        constants.len() == 100 && max <= 10.0 * median,
        format!("{} instances, max {max:.3} vs median {median:.3} (limit 10x)", constants.len()),
    )
}

fn c13_faber_krahn() -> Result<Outcome> {
    let mut jobs = field_jobs(&Geometry::unit_torus(2), &d2_levels(), &[1, 2, 3, 4, 5])?;
    jobs.extend(field_jobs(&Geometry::unit_torus(3), &[9, 17, 25, 33], &[1, 2, 3])?);
    for m in [[1i64, 1, 1], [2, 1, 1], [2, 2, 1], [3, 2, 2]] {
        jobs.push((0, 0, box_mode(&Geometry::unit_box(3), &m)?));
    }
    for m in [[1i64, 1], [2, 3], [5, 4]] {
        jobs.push((0, 0, box_mode(&Geometry::unit_box(2), &m)?));
    }
    let mins: Vec<(usize, f64, usize)> = jobs
        .par_iter()
        .map(|(_, _, mode)| -> Result<(usize, f64, usize)> {
            let grid = sample_field(mode, resolution_for(mode, 16.0, 2), false)?;
            let lab = label_nodal_domains(&grid, DEFAULT_ZERO_TOLERANCE)?;
            let cb = classical_bounds_report(&lab, &grid, mode.eigenvalue);
            Ok((
                mode.dim(),
                cb.faber_krahn_min / faber_krahn_constant(mode.dim()),
                lab.domain_count(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = mins.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
    let domains: usize = mins.iter().map(|m| m.2).sum();
    outcome(
        worst >= 0.9,
        format!(
            "{domains} domains in {} fields, min Vol*lambda^(d/2)/constant = {worst:.3} (limit 0.9)",
            mins.len()
        ),
    )
}

fn main() {
    let criteria: Vec<(&str, fn() -> Result<Outcome>)> = vec![
        ("inradius oracle", c1_inradius_oracle),
        ("inradius scaling law", c2_scaling),
        ("doubling index growth witness", c3_donnelly_fefferman),
        ("doubling index exactness", c4_doubling_exactness),
        ("chain telescoping", c5_chain_telescoping),
        ("capacity oracles", c6_capacity_oracles),
        ("capacity via heat flow", c7_heat_flow_capacity),
        ("heat deficit identity", c8_deficit_identity),
        ("kernel cross-checks", c9_kernel_cross_checks),
        ("kernel bounds", c10_appendix_bounds),
        ("almost-inscribed ball", c11_almost_inscribed),
        ("Remez witness stability", c12_remez_stability),
        ("Faber-Krahn", c13_faber_krahn),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        let t = Instant::now();
        let (pass, detail) = match run() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "{} {:>2} {name}: {detail} [{:.1} s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} failed", failed);
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
