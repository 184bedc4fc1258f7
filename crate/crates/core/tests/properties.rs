use proptest::prelude::*;
use rand::Rng;
use wedge_walk::kernel::{
    build_model, derive_seed, rng_from_seed, ContinuousModel, IncrementModel, LatticeModel, ModelFamily, ModelSpec,
    ReflectionSpec,
};
use wedge_walk::simulator::{run_ensemble, run_one, SimConfig};
use wedge_walk::*;

fn configs() -> Vec<(Geometry64, Covariance64, f64)> {
    let covs = [
        Covariance64::identity(),
        Covariance64::new(1.0, 4.0, 0.0).unwrap(),
        Covariance64::new(1.0, 1.0, 0.5).unwrap(),
        Covariance64::new(2.0, 1.0, -0.7).unwrap(),
    ];
    let geoms = [
        Geometry64::symmetric(10.0, 0.0, 4.0).unwrap(),
        Geometry64::symmetric(10.0, 0.5, 4.0).unwrap(),
        Geometry64::symmetric(1.0, 0.5, 4.0).unwrap(),
        Geometry64::symmetric(10.0, 2.0, 4.0).unwrap(),
        Geometry64::new(3.0, 1.0, 0.3, 1.5, 4.0).unwrap(),
    ];
    let alphas = [0.0, 0.7, -1.2];
    let mut out = vec![];
    for (i, g) in geoms.iter().enumerate() {
        for (j, c) in covs.iter().enumerate() {
            out.push((*g, *c, alphas[(i + j) % alphas.len()]));
        }
    }
    out
}

fn models() -> Vec<Box<dyn IncrementModel>> {
    let mut out: Vec<Box<dyn IncrementModel>> = vec![];
    for (geom, cov, alpha) in configs() {
        let refl = ReflectionSpec::new(alpha, 1.0, 0.5).unwrap();
        out.push(Box::new(LatticeModel::new(geom, refl, cov).unwrap()));
        out.push(Box::new(ContinuousModel::new(geom, refl, cov, 0.5).unwrap()));
    }
    out
}

/// A state of `model` with norm roughly log-uniform in `[1, 10^4]`.
fn random_state(model: &dyn IncrementModel, rng: &mut impl Rng) -> Point64 {
    let g = model.geometry();
    loop {
        let x1: f64 = 10f64.powf(rng.gen_range(0.0..4.0)) * rng.gen::<f64>();
        let up = g.boundary_height(x1, Side::Upper).unwrap();
        let lo = g.boundary_height(x1, Side::Lower).unwrap();
        let mut x = Point::new(x1, rng.gen_range(-lo..=up));
        if model.name() == "lattice" {
            x = Point::new(x.x1.round(), x.x2.round());
        }
        if model.contains(x) {
            return x;
        }
    }
}

#[test]
fn ten_million_transitions_stay_inside() {
    let models = models();
    let per_model = 10_000_000 / models.len();
    let mut rng = rng_from_seed(1);
    for m in &models {
        let mut done = 0;
        while done < per_model {
            let mut x = random_state(m.as_ref(), &mut rng);
            for _ in 0..1000 {
                let y = m.step(x, &mut rng);
                assert!(m.contains(y), "{} left the wedge: {x:?} -> {y:?}", m.name());
                x = y;
            }
            done += 1000;
        }
    }
}

#[test]
fn increments_depend_only_on_state_and_stream() {
    for m in models() {
        let mut rng = rng_from_seed(2);
        let states: Vec<_> = (0..200).map(|_| random_state(m.as_ref(), &mut rng)).collect();
        let draw = |x: Point64, seed: u64| {
            let mut r = rng_from_seed(seed);
            (0..8).map(|_| m.sample_increment(x, m.region(x), &mut r)).collect::<Vec<_>>()
        };
        let first: Vec<_> = states.iter().enumerate().map(|(i, &x)| draw(x, i as u64)).collect();
        // Visit the states in reverse so any hidden state in the model would show.
        for (i, &x) in states.iter().enumerate().rev() {
            assert_eq!(draw(x, i as u64), first[i], "{} at {x:?}", m.name());
        }
    }
}

#[test]
fn ensembles_do_not_depend_on_thread_count() {
    let geom = Geometry64::symmetric(10.0, 0.5, 3.0).unwrap();
    let refl = ReflectionSpec::new(0.3, 1.0, 1.0).unwrap();
    for family in [ModelFamily::Lattice, ModelFamily::Continuous] {
        let spec = ModelSpec { family, ..Default::default() };
        let m = build_model(geom, refl, Covariance64::new(1.0, 4.0, 0.0).unwrap(), &spec).unwrap();
        let cfg = SimConfig {
            x0: Point::new(50.0, 0.0),
            horizon: 20_000,
            return_radius: 20.0,
            n_walkers: 48,
            master_seed: 3,
        };
        let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
        let one = pool(1).install(|| run_ensemble(m.as_ref(), &cfg).unwrap());
        let three = pool(3).install(|| run_ensemble(m.as_ref(), &cfg).unwrap());
        assert_eq!(one, three);
    }
}

#[test]
fn walks_are_not_confined() {
    let geom = Geometry64::symmetric(10.0, 0.5, 3.0).unwrap();
    let refl = ReflectionSpec::new(0.0, 1.0, 1.0).unwrap();
    let cov = Covariance64::identity();
    let shipped: Vec<Box<dyn IncrementModel>> = vec![
        Box::new(LatticeModel::new(geom, refl, cov).unwrap()),
        Box::new(ContinuousModel::new(geom, refl, cov, 0.5).unwrap()),
    ];
    for m in shipped {
        let n = 400;
        let escaped = (0..n)
            .filter(|&i| {
                let mut rng = rng_from_seed(derive_seed(4, i));
                let mut x = Point::new(10.0, 0.0);
                (0..1_000_000).any(|_| {
                    x = m.step(x, &mut rng);
                    x.norm() >= 100.0
                })
            })
            .count();
        assert!(escaped as f64 >= 0.99 * n as f64, "{}: {escaped}/{n}", m.name());
    }
}

fn strip() -> LatticeModel {
    let geom = Geometry64::symmetric(10.0, 0.0, 3.0).unwrap();
    LatticeModel::new(geom, ReflectionSpec::new(0.0, 1.0, 1.0).unwrap(), Covariance64::identity()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Paths do not depend on `r`, so a larger ball is hit no later.
    #[test]
    fn return_time_is_monotone_in_radius(seed in any::<u64>(), id in 0u64..1000, r1 in 11.0f64..30.0, dr in 0.0f64..15.0) {
        let m = strip();
        let cfg = |r| SimConfig { x0: Point::new(50.0, 0.0), horizon: 200_000, return_radius: r, n_walkers: 1, master_seed: seed };
        let small = run_one(&m, &cfg(r1), id).unwrap();
        let large = run_one(&m, &cfg(r1 + dr), id).unwrap();
        prop_assert!(large.tau <= small.tau);
        prop_assert!(large.max_norm <= small.max_norm);
        if !small.censored {
            prop_assert!(!large.censored);
        }
    }
}
