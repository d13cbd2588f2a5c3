use proptest::prelude::*;
use trajloc::metrics::{min_cost_assignment, min_grid_rmse, ospa_assign, trajectory_rmse};
use trajloc::optim::amplitudes_ls;
use trajloc::{synthesize_block, ArrayConfig, Frequency, ParamGrid, TrajectoryModel, TrajectoryParams};

fn linear() -> impl Strategy<Value = TrajectoryParams> {
    (-60.0..60.0f64, -5.0..5.0f64).prop_map(|(p, a)| TrajectoryParams::linear(p, a))
}

/// Minimum over all injections of rows into columns, by enumeration.
fn brute_force(cost: &[Vec<f64>]) -> f64 {
    fn go(cost: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
        if row == cost.len() {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                best = best.min(cost[row][j] + go(cost, row + 1, used));
                used[j] = false;
            }
        }
        best
    }
    let cols = cost.first().map_or(0, Vec::len);
    go(cost, 0, &mut vec![false; cols])
}

proptest! {
    #[test]
    fn rmse_symmetric_nonnegative(a in linear(), b in linear()) {
        let ab = trajectory_rmse(&a, &b, 30);
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab, trajectory_rmse(&b, &a, 30));
        prop_assert_eq!(trajectory_rmse(&a, &a, 30), 0.0);
    }

    #[test]
    fn assignment_is_optimal(
        (rows, cols) in (0usize..=6).prop_flat_map(|r| (Just(r), r.max(1)..=6usize)),
        seed in proptest::collection::vec(0.0..100.0f64, 36),
    ) {
        let cost: Vec<Vec<f64>> = (0..rows).map(|i| (0..cols).map(|j| seed[i * 6 + j]).collect()).collect();
        let pick = min_cost_assignment(&cost);
        let mut seen = pick.clone();
        seen.sort();
        seen.dedup();
        prop_assert_eq!(seen.len(), rows);
        let total: f64 = pick.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
        prop_assert!((total - brute_force(&cost)).abs() <= 1e-9 * total.max(1.0));
    }

    #[test]
    fn ospa_bounded_and_symmetric(t in proptest::collection::vec(linear(), 1..5), e in proptest::collection::vec(linear(), 1..5)) {
        let k = t.len().min(e.len());
        let (t, e) = (&t[..k], &e[..k]);
        let ab = ospa_assign(t, e, 2.0, 100.0, 30).unwrap();
        let ba = ospa_assign(e, t, 2.0, 100.0, 30).unwrap();
        prop_assert!(ab.ospa <= 100.0 + 1e-12);
        prop_assert!((ab.ospa - ba.ospa).abs() <= 1e-9);
        prop_assert!(ab.pairs.iter().all(|p| p.distance <= 100.0));
    }

    #[test]
    fn grid_floor_below_every_grid_point(phi in -80.0..80.0f64, alpha in -5.0..5.0f64, picks in proptest::collection::vec(0usize..1806, 50)) {
        let grid = ParamGrid::uniform((-85.0, 2.0, 85.0), (-5.0, 0.5, 5.0), TrajectoryModel::linear()).unwrap();
        let truth = TrajectoryParams::linear(phi, alpha);
        let (floor, best) = min_grid_rmse(&truth, &grid, 30);
        prop_assert_eq!(floor, trajectory_rmse(&truth, &best, 30));
        for i in picks {
            prop_assert!(floor <= trajectory_rmse(&truth, &grid.grid_point(i).unwrap(), 30));
        }
    }

    #[test]
    fn grid_index_round_trip(i in 0usize..37926) {
        let grid = ParamGrid::uniform((-85.0, 2.0, 85.0), (-5.0, 0.5, 5.0), TrajectoryModel::Polynomial { order: 2 }).unwrap();
        let p = grid.grid_point(i).unwrap();
        prop_assert_eq!(grid.index_of(&p), Some(i));
    }

    #[test]
    fn least_squares_residual_orthogonal(srcs in proptest::collection::vec(linear(), 1..4), seed in any::<u64>()) {
        let array = ArrayConfig::half_wavelength(10).unwrap();
        let (blocks, _) = synthesize_block(&srcs, &array, 12, 5.0, &[Frequency::Narrowband], seed).unwrap();
        let sol = amplitudes_ls(&srcs, &blocks).unwrap();
        let m = blocks[0].manifold();
        for l in 0..12 {
            let r = sol.residuals[0].snapshot(l);
            let rn = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for s in &srcs {
                prop_assert!(m.correlate(s.doa(l, 12), r).norm() <= 1e-9 * rn.max(1e-300) * 10f64.sqrt() + 1e-12);
            }
        }
    }
}
