//! Randomized invariant checks, runnable at any case count.

use occprior::grid::occupancy_from_trajectories;
use occprior::io;
use occprior::irl::exponentiated_step;
use occprior::{
    initial_model, kl_divergence, train_iocmm, Cell, ClassTable, Dims, IocmmHyper, MapSample, OccupancyGrid, Planner,
    SemanticMap, ThetaModel, Trajectory,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use super::{neighbours, urban_names};

pub type Outcome = Result<(), String>;

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    })
}

fn run<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Outcome
where
    S::Value: std::fmt::Debug,
{
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

/// Random walk of `moves.len()` 8-connected steps from `start`; blocked
/// directions are replaced by the next valid one.
fn walk(dims: Dims, start: Cell, moves: &[usize]) -> Trajectory {
    let mut states = vec![start];
    for &m in moves {
        let here = *states.last().unwrap();
        let options: Vec<Cell> = neighbours(dims, here).collect();
        states.push(options[m % options.len()]);
    }
    Trajectory::new(states).unwrap()
}

fn trajectory_strategy(dims: Dims) -> impl Strategy<Value = Trajectory> {
    (0..dims.width, 0..dims.height, prop::collection::vec(0usize..8, 1..30))
        .prop_map(move |(x, y, moves)| walk(dims, Cell::new(x, y), &moves))
}

fn map_strategy(max_side: usize, classes: u16) -> impl Strategy<Value = SemanticMap> {
    (2..=max_side, 2..=max_side).prop_flat_map(move |(w, h)| {
        prop::collection::vec(0..classes, w * h)
            .prop_map(move |cells| SemanticMap::new(w, h, ClassTable::urban(), cells).unwrap())
    })
}

fn simplex(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, k).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    })
}

fn occupancy_strategy() -> impl Strategy<Value = OccupancyGrid> {
    (1usize..10, 1usize..10).prop_flat_map(|(w, h)| {
        prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..1.0, 1e-12f64..1e-6], w * h)
            .prop_filter_map("all-zero weights", move |v| OccupancyGrid::from_weights(w, h, &v).ok())
    })
}

fn check_distribution(values: &[f64]) -> Result<(), TestCaseError> {
    prop_assert!(values.iter().all(|&v| v >= 0.0));
    let mass: f64 = values.iter().sum();
    prop_assert!((mass - 1.0).abs() < 1e-6, "mass {}", mass);
    Ok(())
}

/// Occupancy from random visit counts and random trajectory sets sums to 1.
pub fn occupancy_normalization(cases: u32) -> Outcome {
    run(
        cases,
        (2usize..12, 2usize..12).prop_flat_map(|(w, h)| {
            let dims = Dims::new(w, h);
            (
                Just(dims),
                prop::collection::vec(0u64..50, w * h),
                prop::collection::vec(trajectory_strategy(dims), 1..6),
            )
        }),
        |(dims, counts, trajs)| {
            if counts.iter().any(|&c| c > 0) {
                check_distribution(
                    OccupancyGrid::from_counts(dims.width, dims.height, &counts)
                        .unwrap()
                        .values(),
                )?;
            }
            let map = SemanticMap::filled(dims.width, dims.height, ClassTable::urban(), 0).unwrap();
            let occ = occupancy_from_trajectories(&map, &trajs).unwrap();
            check_distribution(occ.values())?;
            let visits: usize = trajs.iter().map(|t| t.len()).sum();
            let c = trajs[0].start();
            let here = trajs.iter().flat_map(|t| t.states()).filter(|&&s| s == c).count();
            prop_assert!((occ.get(c) - here as f64 / visits as f64).abs() < 1e-12);
            Ok(())
        },
    )
}

/// The exponentiated update keeps weights positive and normalized, and
/// ignores a constant shift of the gradient.
pub fn theta_simplex(cases: u32) -> Outcome {
    run(
        cases,
        (2usize..9).prop_flat_map(|k| {
            (
                simplex(k),
                prop::collection::vec(-1.0f64..1.0, k),
                0.0f64..5.0,
                -2.0f64..2.0,
                1usize..6,
            )
        }),
        |(theta0, grad, lambda, shift, steps)| {
            let mut theta = theta0.clone();
            for _ in 0..steps {
                exponentiated_step(&mut theta, &grad, lambda);
                prop_assert!(theta.iter().all(|&t| t > 0.0));
                prop_assert!((theta.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
            let mut a = theta0.clone();
            let mut b = theta0;
            exponentiated_step(&mut a, &grad, lambda);
            let shifted: Vec<f64> = grad.iter().map(|g| g + shift).collect();
            exponentiated_step(&mut b, &shifted, lambda);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            Ok(())
        },
    )
}

/// Every iteration logged by a short training run stays on the simplex.
pub fn theta_simplex_training(cases: u32) -> Outcome {
    run(
        cases,
        map_strategy(5, 3).prop_flat_map(|map| {
            let dims = map.dims();
            (
                Just(map),
                prop::collection::vec(trajectory_strategy(dims), 1..4),
                0.1f64..3.0,
                any::<u64>(),
            )
        }),
        |(map, trajs, lambda, seed)| {
            let data = vec![MapSample::from_trajectories("p", map, trajs).unwrap()];
            let hyper = IocmmHyper {
                max_iters: 3,
                rollouts_per_traj: 2,
                lambda,
                seed,
                ..IocmmHyper::u4()
            };
            let trained = train_iocmm(&data, &hyper, initial_model(&data, &hyper).unwrap()).unwrap();
            for rec in &trained.log.iterations {
                prop_assert!(rec.theta.iter().all(|&t| t >= 0.0));
                prop_assert!((rec.theta.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
            Ok(())
        },
    )
}

/// Action probabilities sum to 1 wherever a move exists, vanish on invalid
/// moves, and the goal has zero value.
pub fn policy_normalization(cases: u32) -> Outcome {
    run(
        cases,
        map_strategy(7, 4).prop_flat_map(|map| {
            let n = map.dims().len();
            (Just(map), simplex(4), 0..n, 0.01f64..5.0, 50.0f64..600.0)
        }),
        |(map, theta, goal, alpha, cost_scale)| {
            let dims = map.dims();
            let goal = dims.cell(goal);
            prop_assume!(map.class_at(goal) != super::OBSTACLE as usize);
            let model = ThetaModel::new(urban_names(), theta, 0.01, vec![0.25; 4]).unwrap();
            let hyper = IocmmHyper {
                alpha,
                cost_scale,
                ..IocmmHyper::u4()
            };
            let planner = Planner::new(&map, model.classes(), &hyper).unwrap();
            let policy = match planner.backward_pass(&model, goal, &hyper) {
                Ok(p) => p,
                Err(occprior::Error::DegenerateMap) => return Ok(()),
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            };
            prop_assert_eq!(policy.value(goal), 0.0);
            for s in dims.cells() {
                let probs = policy.probs(s);
                prop_assert!(probs.iter().all(|p| p.is_finite() && *p >= 0.0));
                for (a, &p) in probs.iter().enumerate() {
                    if policy.successor(s, a).is_none() {
                        prop_assert_eq!(p, 0.0);
                    }
                }
                if s != goal && !planner.is_blocked(s) && policy.valid_actions(s) > 0 {
                    let total: f64 = probs.iter().sum();
                    prop_assert!((total - 1.0).abs() < 1e-9, "sum {} at {:?}", total, s);
                }
            }
            Ok(())
        },
    )
}

/// KL divergence is non-negative and zero on identical inputs.
pub fn kl_nonnegative(cases: u32) -> Outcome {
    run(
        cases,
        (occupancy_strategy(), 0.0f64..0.5).prop_flat_map(|(gt, eps)| {
            let (w, h) = (gt.width(), gt.height());
            let pred = prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..1.0], w * h)
                .prop_filter_map("all-zero weights", move |v| OccupancyGrid::from_weights(w, h, &v).ok());
            (Just(gt), pred, Just(eps))
        }),
        |(gt, pred, eps)| {
            prop_assert_eq!(kl_divergence(&gt, &gt, 0.0).unwrap(), 0.0);
            prop_assert!(kl_divergence(&gt, &gt, eps).unwrap() >= 0.0);
            if eps > 0.0 {
                let kl = kl_divergence(&gt, &pred, eps).unwrap();
                prop_assert!(kl.is_finite() && kl >= 0.0, "kl {}", kl);
            }
            Ok(())
        },
    )
}

fn class_table_strategy() -> impl Strategy<Value = ClassTable> {
    prop::collection::vec(("[a-z][a-z0-9_]{0,6}", any::<bool>()), 1..7).prop_map(|raw| {
        let names: Vec<String> = raw.iter().enumerate().map(|(i, (n, _))| format!("{n}{i}")).collect();
        let mut walkable: Vec<bool> = raw.iter().map(|(_, w)| *w).collect();
        walkable[0] = true;
        ClassTable::new(names, walkable).unwrap()
    })
}

/// All four file formats read back what was written.
pub fn file_round_trips(cases: u32) -> Outcome {
    let strategy = (class_table_strategy(), 1usize..10, 1usize..10).prop_flat_map(|(classes, w, h)| {
        let k = classes.len() as u16;
        let dims = Dims::new(w.max(2), h.max(2));
        (
            prop::collection::vec(0..k, dims.width * dims.height)
                .prop_map(move |cells| SemanticMap::new(dims.width, dims.height, classes.clone(), cells).unwrap()),
            occupancy_strategy(),
            prop::collection::vec(trajectory_strategy(dims), 0..5),
            (1usize..8).prop_flat_map(|k| (simplex(k), simplex(k), 1e-6f64..10.0)),
        )
    });
    run(cases, strategy, |(map, occ, trajs, (theta, prior, r0))| {
        prop_assert_eq!(&io::map_from_str(&io::map_to_string(&map)).unwrap(), &map);

        let back = io::occupancy_from_str(&io::occupancy_to_string(&occ)).unwrap();
        prop_assert_eq!(back.dims(), occ.dims());
        for (a, b) in back.values().iter().zip(occ.values()) {
            prop_assert!((a - b).abs() <= 1e-9, "{} vs {}", a, b);
        }

        prop_assert_eq!(
            &io::trajectories_from_str(&io::trajectories_to_string(&trajs)).unwrap(),
            &trajs
        );

        let names: Vec<String> = (0..theta.len()).map(|i| format!("k{i}")).collect();
        let model = ThetaModel::new(names, theta, r0, prior).unwrap();
        prop_assert_eq!(&io::theta_from_str(&io::theta_to_string(&model)).unwrap(), &model);
        Ok(())
    })
}

pub type Suite = (&'static str, fn(u32) -> Outcome);

pub const SUITES: [Suite; 7] = [
    ("occupancy normalization", occupancy_normalization),
    ("theta simplex (update)", theta_simplex),
    ("theta simplex (training)", theta_simplex_training),
    ("policy normalization", policy_normalization),
    ("kl non-negative, identity zero", kl_nonnegative),
    ("file round trips", file_round_trips),
    ("rollout states in bounds", rollouts_in_bounds),
];

/// Rollouts only visit in-bounds, non-blocked states and end at the goal.
pub fn rollouts_in_bounds(cases: u32) -> Outcome {
    run(
        cases,
        map_strategy(6, 4).prop_flat_map(|map| {
            let n = map.dims().len();
            (Just(map), 0..n, 0..n, any::<u64>())
        }),
        |(map, start, goal, seed)| {
            let dims = map.dims();
            let (start, goal) = (dims.cell(start), dims.cell(goal));
            let model = ThetaModel::uniform(urban_names(), 0.01).unwrap();
            let hyper = IocmmHyper::u4();
            let planner = Planner::new(&map, model.classes(), &hyper).unwrap();
            prop_assume!(!planner.is_blocked(start) && !planner.is_blocked(goal));
            let Ok(policy) = planner.backward_pass(&model, goal, &hyper) else {
                return Ok(());
            };
            let mut rng = occprior::stream_rng(seed, 0);
            let cap = hyper.cap_for(dims);
            if let Some(path) = occprior::irl::sample_path(&policy, start, cap, &mut rng).unwrap() {
                prop_assert_eq!(path[0], start);
                prop_assert_eq!(*path.last().unwrap(), goal);
                for w in path.windows(2) {
                    prop_assert!(w[0].is_adjacent(w[1]));
                }
                prop_assert!(path.iter().all(|&c| dims.contains(c) && !planner.is_blocked(c)));
            }
            Ok(())
        },
    )
}
