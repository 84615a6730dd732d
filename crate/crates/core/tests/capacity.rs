use std::f64::consts::PI;

use nodal_lab::capacity::{
    capacity_heat_bound_check, capacity_heat_bound_sweep, concentric_spheres, mazya_check, nodal_capacity_experiment, variational_capacity,
    Condenser, Shape,
};
use nodal_lab::nodal::{label_nodal_domains, DEFAULT_ZERO_TOLERANCE};
use nodal_lab::spectra::{random_eigenfunction, resolution_for, sample_field, Geometry};

fn sphere_capacity(a: f64, b: f64) -> f64 {
    4.0 * PI / (1.0 / a - 1.0 / b)
}

#[test]
fn concentric_oracles() {
    let r = variational_capacity(&concentric_spheres(3, 0.1, 0.3, 96).unwrap()).unwrap();
    let exact = sphere_capacity(0.1, 0.3);
    assert!((r.energy - exact).abs() <= 0.05 * exact, "{} vs {exact}", r.energy);
    assert!(r.relative_gap <= 1e-6);

    let r = variational_capacity(&concentric_spheres(2, 0.1, 0.3, 512).unwrap()).unwrap();
    let exact = 2.0 * PI / 3f64.ln();
    assert!((r.energy - exact).abs() <= 0.05 * exact, "{} vs {exact}", r.energy);
    assert!(r.relative_gap <= 1e-6);
}

#[test]
fn sphere_error_roughly_halves_with_resolution() {
    let exact = sphere_capacity(0.1, 0.3);
    let err = |n| (variational_capacity(&concentric_spheres(3, 0.1, 0.3, n).unwrap()).unwrap().energy - exact).abs();
    let ratio = err(192) / err(96);
    assert!((0.35..=0.65).contains(&ratio), "{ratio}");
}

#[test]
fn heat_bound_for_ball_in_cube() {
    let c = Condenser::from_shapes(&Shape::ball(vec![0.5; 3], 0.1), &Shape::cube(&[0.5; 3], 0.3), 1.0 / 60.0).unwrap();
    let r = capacity_heat_bound_check(&c, &[0.7, 0.5, 0.5], 0.09, 0.3).unwrap();
    assert!((r.probe[0] - 0.7).abs() < 1e-12);
    assert!(r.margin >= -1e-6 * r.psi, "{r:?}");
    assert!(!r.tail_warning);
    let pinned = [
        (r.capacity, 1.664509312154318),
        (r.psi, 0.2652112372134356),
        (r.kernel_integral, 0.059857231531583066),
    ];
    for (got, want) in pinned {
        assert!((got - want).abs() <= 1e-8 * want, "{got} vs {want}");
    }
}

fn k_shapes(c: &[f64]) -> Vec<Shape> {
    vec![
        Shape::ball(c.to_vec(), 0.1),
        Shape::cube(c, 0.08),
        Shape::slab(c, 0.12, 0.03),
        Shape::l_shape(c.to_vec(), 0.1),
        Shape::union(vec![
            Shape::ball(vec![c[0] - 0.1, c[1], c[2]], 0.06),
            Shape::ball(vec![c[0] + 0.1, c[1], c[2]], 0.06),
        ]),
    ]
}

#[test]
fn proposition_ratio_is_comparable_across_shapes() {
    let c = [0.5; 3];
    let mut ratios = Vec::new();
    for k in k_shapes(&c) {
        let cond = Condenser::from_shapes(&k, &Shape::cube(&c, 0.3), 1.0 / 32.0).unwrap();
        let p = [0.72, 0.5, 0.5];
        let reps = capacity_heat_bound_sweep(&cond, &[(p.to_vec(), 0.09, 0.4), (p.to_vec(), 0.02, 0.4)]).unwrap();
        for r in &reps {
            assert!(r.margin >= -1e-6 * r.psi, "{}: {r:?}", k.name());
        }
        ratios.push(reps[0].proposition_ratio);
    }
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    assert!(max <= 10.0 * ratios[0], "{ratios:?}");
}

#[test]
fn mazya_ratios_at_fixed_volume() {
    let c = [0.5; 3];
    let h = 1.0 / 96.0;
    let u = Shape::ball(c.to_vec(), 0.45);
    let ball = mazya_check(&Condenser::from_shapes(&Shape::ball(c.to_vec(), 0.1), &u, h).unwrap()).unwrap();
    let exact = (4.0 * PI / 3.0 * 1e-3) / sphere_capacity(0.1, 0.45).powi(3);
    assert!((ball.ratio - exact).abs() <= 0.2 * exact, "{} vs {exact}", ball.ratio);

    let side = (4.0 * PI / 3.0f64).cbrt() * 0.1;
    let cube = mazya_check(&Condenser::from_shapes(&Shape::cube(&c, side / 2.0), &u, h).unwrap()).unwrap();
    assert!(cube.ratio <= 1.02 * ball.ratio, "{} vs {}", cube.ratio, ball.ratio);

    let two = Shape::union(vec![
        Shape::ball(vec![0.42, 0.5, 0.5], 0.05),
        Shape::ball(vec![0.58, 0.5, 0.5], 0.05),
    ]);
    let two = mazya_check(&Condenser::from_shapes(&two, &u, h).unwrap()).unwrap();
    assert!(two.ratio <= ball.ratio, "{} vs {}", two.ratio, ball.ratio);
}

#[test]
fn nodal_condenser_golden() {
    let mode = random_eigenfunction(&Geometry::unit_torus(3), 25, 7).unwrap();
    let grid = sample_field(&mode, resolution_for(&mode, 16.0, 1), false).unwrap();
    let lab = label_nodal_domains(&grid, DEFAULT_ZERO_TOLERANCE).unwrap();
    let id = lab.ids().next().unwrap();

    // delta = 0.5 lies inside the domain's centered inradius: K is empty
    let r = nodal_capacity_experiment(&mode, &grid, &lab, id, 0.5).unwrap();
    assert!(r.vacuous);
    assert_eq!(
        (r.capacity, r.temperature, r.normalized_cap, r.normalized_temp),
        (0.0, 0.0, 0.0, 0.0)
    );
    assert!(r.normalized_cap <= 50.0);
    assert!((r.majorization_margin - (1.0 - (-0.25f64).exp())).abs() < 1e-9, "{r:?}");
    assert!((r.exit_tail - 0.0334).abs() < 5e-4, "{r:?}");

    let temps: Vec<f64> = [0.5, 0.35, 0.2]
        .iter()
        .map(|&d| nodal_capacity_experiment(&mode, &grid, &lab, id, d).unwrap().normalized_temp)
        .collect();
    assert!(temps.windows(2).all(|w| w[1] <= w[0]), "{temps:?}");

    let r = nodal_capacity_experiment(&mode, &grid, &lab, id, 3.5).unwrap();
    assert!(!r.vacuous && r.k_nodes > 0);
    assert!(r.energy_flux_gap <= 1e-6);
    assert!(r.majorization_margin >= 0.0, "{r:?}");
    assert!(r.normalized_cap <= 50.0);
}
