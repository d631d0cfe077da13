use gridot::barycenter::{
    barycenter, barycenter_step, interpolate, mean_displacement, BarycenterProblem,
};
use gridot::generators::{rng_from_seed, uniform_square, Gaussian};
use gridot::lpsolver::{solve_transportation, SparsityPattern, TransportationProblem};
use gridot::refinement::{expand_pattern, LevelSolution};
use gridot::transportmap::{
    ks_statistic, ks_threshold, map_error_e1, wasserstein_distance, MapEvaluator,
};
use gridot::{solve, Error, SampleSet, SolveConfig};

fn shifted(s: &SampleSet, t: &[f64]) -> SampleSet {
    let d = s.dim();
    let coords = s
        .coords()
        .iter()
        .enumerate()
        .map(|(k, v)| v + t[k % d])
        .collect();
    SampleSet::new(d, coords).unwrap()
}

fn line(n: usize, lo: f64, hi: f64) -> SampleSet {
    let pts: Vec<[f64; 1]> = (0..n)
        .map(|k| [lo + (hi - lo) * (k as f64 + 0.5) / n as f64])
        .collect();
    SampleSet::from_points(&pts).unwrap()
}

#[test]
fn translated_uniform_in_one_dimension() {
    let a = line(2000, 0.0, 1.0);
    let b = line(2000, 2.0, 3.0);
    let sol = solve(&a, &b, &SolveConfig::default()).unwrap();
    // objective 2, W = 2 (within the cell-level discretisation)
    assert!(
        (wasserstein_distance(&sol) - 2.0).abs() < 1e-3,
        "{}",
        wasserstein_distance(&sol)
    );
}

#[test]
fn translation_pushes_by_the_offset() {
    let a = uniform_square(3000, &mut rng_from_seed(1));
    let b = shifted(&a, &[0.5, -2.0]);
    let sol = solve(&a, &b, &SolveConfig::default()).unwrap();
    let ev = MapEvaluator::from_solution(&sol).unwrap();
    let e1 = map_error_e1(&ev, &a, |x| vec![x[0] + 0.5, x[1] - 2.0]).unwrap();
    let diam = sol.final_level().source.mean_cell_diameter();
    assert!(e1 <= diam, "E1 {e1} vs cell diameter {diam}");
    let w = wasserstein_distance(&sol);
    assert!((w - (0.25f64 + 4.0).sqrt()).abs() < 0.05 * w);
}

#[test]
fn identity_map_and_constant_offset_error() {
    let a = uniform_square(2000, &mut rng_from_seed(2));
    let sol = solve(&a, &a, &SolveConfig::default()).unwrap();
    let ev = MapEvaluator::from_solution(&sol).unwrap();
    let pushed = ev.push_samples(&a).unwrap();
    assert_eq!(pushed.len(), a.len());
    let diam = sol.final_level().source.mean_cell_diameter();
    assert!(mean_displacement(&pushed, &a) <= diam);
    // reference offset by (1, 0) from the identity: E1 = 1 up to the map error
    let e1 = map_error_e1(&ev, &a, |x| vec![x[0] + 1.0, x[1]]).unwrap();
    assert!((e1 - 1.0).abs() < 1e-6, "{e1}");
    // shifting both maps by a constant leaves E1 unchanged
    let e_a = map_error_e1(&ev, &a, |x| vec![x[0] * 0.9, x[1]]).unwrap();
    let shifted_ev = |x: &[f64]| vec![x[0] * 0.9 - 3.0, x[1] + 7.0];
    let moved = shifted(&pushed, &[-3.0, 7.0]);
    let direct: f64 = (moved
        .points()
        .zip(a.points())
        .map(|(y, x)| {
            let r = shifted_ev(x);
            (y[0] - r[0]).powi(2) + (y[1] - r[1]).powi(2)
        })
        .sum::<f64>()
        / a.len() as f64)
        .sqrt();
    assert!((e_a - direct).abs() < 1e-12);
}

#[test]
fn points_outside_the_support_are_reported() {
    let a = uniform_square(500, &mut rng_from_seed(3));
    let sol = solve(&a, &a, &SolveConfig::default()).unwrap();
    let ev = MapEvaluator::from_solution(&sol).unwrap();
    let (p0, p1) = (a.point(0), a.point(1));
    let probe = SampleSet::from_points(&[p0, &[5.0, 5.0], p1, &[-1.0, 0.0]]).unwrap();
    match ev.push_samples(&probe) {
        Err(Error::OutOfSupportMany { count, indices }) => {
            assert_eq!(count, 2);
            assert_eq!(indices, vec![1, 3]);
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(
        ev.evaluate_map(&[9.0, 9.0]),
        Err(Error::PointOutside { .. })
    ));
    assert!(matches!(
        ev.evaluate_map(&[0.5]),
        Err(Error::DimensionMismatch { .. })
    ));
}

#[test]
fn map_stays_in_partner_hull() {
    let g1 = Gaussian::new(vec![0.0, 0.0], vec![1.0, 0.2, 0.2, 0.5]).unwrap();
    let g2 = Gaussian::new(vec![1.0, 0.0], vec![2.0, -0.3, -0.3, 1.0]).unwrap();
    let a = g1.sample(2000, &mut rng_from_seed(4)).unwrap();
    let b = g2.sample(2000, &mut rng_from_seed(5)).unwrap();
    let sol = solve(&a, &b, &SolveConfig::default()).unwrap();
    let ev = MapEvaluator::from_solution(&sol).unwrap();
    for x in a.points().take(300) {
        let y = ev.evaluate_map(x).unwrap();
        let partners = ev.partners_at(x).unwrap();
        for (l, &yl) in y.iter().enumerate() {
            let lo = partners
                .iter()
                .map(|(_, m)| m.maps[l].target.left())
                .fold(f64::INFINITY, f64::min);
            let hi = partners
                .iter()
                .map(|(_, m)| m.maps[l].target.right())
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(yl >= lo - 1e-12 && yl <= hi + 1e-12);
        }
    }
}

#[test]
fn pushforward_ks_bound() {
    let g1 = Gaussian::new(vec![0.0, 0.0], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
    let g2 = Gaussian::new(vec![3.0, 1.0], vec![0.5, 0.1, 0.1, 2.0]).unwrap();
    let a = g1.sample(4000, &mut rng_from_seed(6)).unwrap();
    let b = g2.sample(3000, &mut rng_from_seed(7)).unwrap();
    let sol = solve(&a, &b, &SolveConfig::default()).unwrap();
    let pushed = MapEvaluator::from_solution(&sol)
        .unwrap()
        .push_samples(&a)
        .unwrap();
    for l in 0..2 {
        let stat = ks_statistic(&pushed.axis_values(l), &b.axis_values(l));
        let bound =
            (2.0 * sol.final_level().target.mean_cell_width(l)).max(ks_threshold(a.len(), b.len()));
        assert!(stat <= bound, "axis {l}: {stat} > {bound}");
    }
}

#[test]
fn growing_the_pattern_never_raises_the_objective() {
    let a = uniform_square(800, &mut rng_from_seed(8));
    let b = shifted(&uniform_square(800, &mut rng_from_seed(9)), &[0.3, 0.1]);
    let cfg = SolveConfig {
        max_levels: 3,
        neighbor_expansion: false,
        ..Default::default()
    };
    let sol = solve(&a, &b, &cfg).unwrap();
    let lvl: &LevelSolution = sol.final_level();
    let objective_on = |pattern: &SparsityPattern| {
        let costs: Vec<f64> = pattern
            .pairs()
            .iter()
            .map(|&(i, j)| {
                gridot::localtransport::cell_pair_cost(&lvl.source.cells[i], &lvl.target.cells[j])
                    .unwrap()
            })
            .collect();
        let problem =
            TransportationProblem::new(lvl.source.weights(), lvl.target.weights(), costs).unwrap();
        solve_transportation(&problem, pattern).unwrap().objective
    };
    let grown = expand_pattern(&lvl.pattern, &lvl.source, &lvl.target).unwrap();
    let dense = SparsityPattern::dense(lvl.pattern.n_rows(), lvl.pattern.n_cols());
    let (o1, o2, o3) = (
        objective_on(&lvl.pattern),
        objective_on(&grown),
        objective_on(&dense),
    );
    assert!(o2 <= o1 + 1e-9 && o3 <= o2 + 1e-9, "{o1} {o2} {o3}");
}

#[test]
fn solve_is_deterministic() {
    let a = uniform_square(1500, &mut rng_from_seed(10));
    let b = shifted(&uniform_square(1500, &mut rng_from_seed(11)), &[1.0, 0.0]);
    let s1 = solve(&a, &b, &SolveConfig::default()).unwrap();
    let s2 = solve(&a, &b, &SolveConfig::default()).unwrap();
    for (x, y) in s1.levels.iter().zip(&s2.levels) {
        assert_eq!(x.objective.to_bits(), y.objective.to_bits());
        assert_eq!(x.coupling.values, y.coupling.values);
    }
}

#[test]
fn barycenter_weight_edge_cases() {
    let a = uniform_square(600, &mut rng_from_seed(12));
    let b = shifted(&uniform_square(600, &mut rng_from_seed(13)), &[3.0, 0.0]);

    // a zero-weight marginal is ignored
    let p = BarycenterProblem::new(vec![a.clone(), b.clone()], vec![1.0, 0.0]);
    let step = barycenter_step(&a, &p).unwrap();
    assert!(mean_displacement(&step.samples, &a) <= step.mean_cell_diameter);

    // permuting marginals and weights gives the same result
    let p1 = BarycenterProblem::new(vec![a.clone(), b.clone()], vec![0.3, 0.7]);
    let mut p2 = BarycenterProblem::new(vec![b.clone(), a.clone()], vec![0.7, 0.3]);
    p2.init = Some(a.clone());
    let (s1, s2) = (
        barycenter_step(&a, &p1).unwrap(),
        barycenter_step(&a, &p2).unwrap(),
    );
    let worst = s1
        .samples
        .coords()
        .iter()
        .zip(s2.samples.coords())
        .map(|(u, v)| (u - v).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-12, "{worst}");

    // a unit weight on one marginal reproduces it in distribution
    let p = BarycenterProblem::new(vec![a.clone(), b.clone()], vec![0.0, 1.0]);
    let step = barycenter_step(&a, &p).unwrap();
    for l in 0..2 {
        let stat = ks_statistic(&step.samples.axis_values(l), &b.axis_values(l));
        assert!(stat <= (2.0 * 0.25f64).max(ks_threshold(a.len(), b.len())));
    }
}

#[test]
fn barycenter_history_and_sizes() {
    let g1 = Gaussian::new(vec![0.0, 0.0], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
    let g2 = Gaussian::new(vec![4.0, 1.0], vec![2.0, 0.5, 0.5, 1.0]).unwrap();
    let a = g1.sample(800, &mut rng_from_seed(14)).unwrap();
    let b = g2.sample(700, &mut rng_from_seed(15)).unwrap();
    let mut p = BarycenterProblem::new(vec![a.clone(), b], vec![0.5, 0.5]);
    p.max_iters = 5;
    p.tolerance = 0.0;
    let r = barycenter(&p).unwrap();
    assert_eq!(r.history.len(), 5);
    assert_eq!(r.samples.len(), a.len());
    // the residual shrinks after the first step, allowing one bump
    let d: Vec<f64> = r.history.iter().map(|h| h.mean_displacement).collect();
    let bumps = d[1..].windows(2).filter(|w| w[1] > w[0]).count();
    assert!(bumps <= 1, "{d:?}");
    assert!(d[1] < d[0]);
}

#[test]
fn interpolation_end_points() {
    let a = uniform_square(800, &mut rng_from_seed(16));
    let b = shifted(&uniform_square(800, &mut rng_from_seed(17)), &[2.0, 1.0]);
    let cfg = SolveConfig::default();
    let start = interpolate(&a, &b, 0.0, &cfg).unwrap();
    assert!(mean_displacement(&start, &a) <= 0.1);
    let end = interpolate(&a, &b, 1.0, &cfg).unwrap();
    for l in 0..2 {
        let stat = ks_statistic(&end.axis_values(l), &b.axis_values(l));
        assert!(stat <= (2.0 * 0.25f64).max(ks_threshold(a.len(), b.len())));
    }
    let mid = interpolate(&a, &b, 0.5, &cfg).unwrap();
    let (m, ma) = (mid.mean(), a.mean());
    assert!((m[0] - ma[0] - 1.0).abs() < 0.05 && (m[1] - ma[1] - 0.5).abs() < 0.05);
    assert!(matches!(
        interpolate(&a, &b, -0.1, &cfg),
        Err(Error::Domain(_))
    ));
}
