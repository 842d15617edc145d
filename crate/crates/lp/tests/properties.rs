use proptest::prelude::*;
use sgkit_lp::{solve_lp, solve_mip, LinearProgram, LpOutcome, MipProgram, Relation, Sense};

/// Random packing LP `max c.x, A x <= b, x >= 0` with positive data, so it is
/// always feasible and bounded.
fn packing() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>, Vec<f64>)> {
    (1usize..7, 1usize..7).prop_flat_map(|(m, n)| {
        (
            prop::collection::vec(prop::collection::vec(0.05f64..3.0, n), m),
            prop::collection::vec(0.5f64..5.0, m),
            prop::collection::vec(-1.0f64..4.0, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn strong_duality_holds((a, b, c) in packing()) {
        let m = a.len();
        let n = c.len();
        let mut primal = LinearProgram::new(Sense::Maximize, c.clone());
        for (row, rhs) in a.iter().zip(&b) {
            primal.add_dense(row, Relation::Le, *rhs);
        }
        // Dual: min b.y, A^T y >= c, y >= 0.
        let mut dual = LinearProgram::new(Sense::Minimize, b.clone());
        for j in 0..n {
            let col: Vec<f64> = (0..m).map(|i| a[i][j]).collect();
            dual.add_dense(&col, Relation::Ge, c[j]);
        }
        let p = solve_lp(&primal).unwrap().optimal().unwrap();
        let d = solve_lp(&dual).unwrap().optimal().unwrap();
        prop_assert!((p.value - d.value).abs() < 1e-7, "primal {} dual {}", p.value, d.value);
        prop_assert!(primal.max_violation(&p.x) < 1e-9);
        prop_assert!(dual.max_violation(&d.x) < 1e-9);
    }

    #[test]
    fn equality_form_duality(
        (a, _, c) in packing(),
        shift in 0.0f64..2.0,
    ) {
        // min c'.x, A x = A (1 + shift), x >= 0, with c' > 0: feasible and bounded.
        let n = c.len();
        let cost: Vec<f64> = c.iter().map(|v| v.abs() + 0.1).collect();
        let mut primal = LinearProgram::new(Sense::Minimize, cost.clone());
        let rhs: Vec<f64> = a.iter().map(|row| row.iter().sum::<f64>() * (1.0 + shift)).collect();
        for (row, r) in a.iter().zip(&rhs) {
            primal.add_dense(row, Relation::Eq, *r);
        }
        // Dual: max rhs.y, A^T y <= cost, y free.
        let mut dual = LinearProgram::new(Sense::Maximize, rhs.clone());
        for i in 0..rhs.len() {
            dual.set_free(i);
        }
        for j in 0..n {
            let col: Vec<f64> = a.iter().map(|row| row[j]).collect();
            dual.add_dense(&col, Relation::Le, cost[j]);
        }
        let p = solve_lp(&primal).unwrap().optimal().unwrap();
        let d = solve_lp(&dual).unwrap().optimal().unwrap();
        prop_assert!((p.value - d.value).abs() < 1e-7, "primal {} dual {}", p.value, d.value);
    }

    #[test]
    fn mip_matches_enumeration(
        (a, b, c) in (1usize..4, 1usize..13).prop_flat_map(|(m, n)| (
            prop::collection::vec(prop::collection::vec(-1.0f64..3.0, n), m),
            prop::collection::vec(0.0f64..4.0, m),
            prop::collection::vec(-2.0f64..5.0, n),
        ))
    ) {
        let n = c.len();
        let mut lp = LinearProgram::new(Sense::Maximize, c.clone());
        for (row, rhs) in a.iter().zip(&b) {
            lp.add_dense(row, Relation::Le, *rhs);
        }
        let out = solve_mip(&MipProgram::new(lp, (0..n).collect())).unwrap();

        let mut best: Option<f64> = None;
        for mask in 0u32..(1 << n) {
            let x: Vec<f64> = (0..n).map(|j| ((mask >> j) & 1) as f64).collect();
            let feasible = a.iter().zip(&b).all(|(row, rhs)| {
                row.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() <= rhs + 1e-12
            });
            if feasible {
                let v: f64 = c.iter().zip(&x).map(|(p, q)| p * q).sum();
                best = Some(best.map_or(v, |bv: f64| bv.max(v)));
            }
        }
        match (out, best) {
            (LpOutcome::Optimal(s), Some(v)) => prop_assert!((s.value - v).abs() < 1e-7, "{} vs {}", s.value, v),
            (LpOutcome::Infeasible, None) => {}
            (o, b) => prop_assert!(false, "mismatch {:?} vs {:?}", o, b),
        }
    }
}
