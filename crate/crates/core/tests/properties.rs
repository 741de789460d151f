//! Randomized invariants for surfaces, concavification, trade refinements and
//! rational rendering.

use proptest::prelude::*;

use parley_core::concavify::{concavify_axis, Action};
use parley_core::rational::{one, parse_rational, rat, to_compact_string, to_fraction_string, zero};
use parley_core::surface::{Axis, Bilinear, Grid, Lin, Surface};
use parley_core::trade::{bbm_decompose, nested_decompose, Dist, TradeGame};
use parley_core::Rational;

fn cuts() -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec(1i64..12, 0..3).prop_map(|ks| {
        let mut v: Vec<Rational> = ks.into_iter().map(|k| rat(k, 12)).collect();
        v.push(zero());
        v.push(one());
        v.sort();
        v.dedup();
        v
    })
}

fn coef() -> impl Strategy<Value = Rational> {
    (-8i64..=8, 1i64..=4).prop_map(|(n, d)| rat(n, d))
}

fn surface() -> impl Strategy<Value = Surface> {
    (cuts(), cuts()).prop_flat_map(|(pc, qc)| {
        let n = (pc.len() - 1) * (qc.len() - 1);
        prop::collection::vec((coef(), coef(), coef(), coef()), n).prop_map(move |cs| {
            let nq = qc.len() - 1;
            let mut it = cs.into_iter().map(|(a, b, c, d)| Bilinear::new(a, b, c, d));
            let cells = (0..pc.len() - 1).map(|_| (0..nq).map(|_| it.next().unwrap()).collect()).collect();
            Surface::from_cells(Grid::new(pc.clone(), qc.clone()).unwrap(), cells).unwrap()
        })
    })
}

fn max_of(vals: impl IntoIterator<Item = Rational>) -> Rational {
    vals.into_iter().max().expect("nonempty")
}

/// Cut values sit on or above every adjacent one-sided limit, so each slice
/// is upper semicontinuous; `bump` lifts them further at random.
fn upper_cut_values(grid: Grid, cells: Vec<Vec<Bilinear>>, bump: &[i64]) -> Surface {
    let (pc, qc) = (grid.p_cuts().to_vec(), grid.q_cuts().to_vec());
    let (np, nq) = (pc.len(), qc.len());
    let mut bumps = bump.iter().cycle().map(|&b| rat(b.max(0), 4));
    let cols = |i: usize| (i.saturating_sub(1)..i.min(np - 2) + 1).collect::<Vec<_>>();
    let rows = |j: usize| (j.saturating_sub(1)..j.min(nq - 2) + 1).collect::<Vec<_>>();
    let p_lines: Vec<Vec<Lin>> = (0..np)
        .map(|i| {
            (0..nq - 1)
                .map(|j| {
                    let lo = max_of(cols(i).into_iter().map(|c| cells[c][j].eval(&pc[i], &qc[j]))) + bumps.next().unwrap();
                    let hi = max_of(cols(i).into_iter().map(|c| cells[c][j].eval(&pc[i], &qc[j + 1]))) + bumps.next().unwrap();
                    Lin::through(&qc[j], &lo, &qc[j + 1], &hi)
                })
                .collect()
        })
        .collect();
    let q_lines: Vec<Vec<Lin>> = (0..nq)
        .map(|j| {
            (0..np - 1)
                .map(|i| {
                    let lo = max_of(rows(j).into_iter().map(|r| cells[i][r].eval(&pc[i], &qc[j]))) + bumps.next().unwrap();
                    let hi = max_of(rows(j).into_iter().map(|r| cells[i][r].eval(&pc[i + 1], &qc[j]))) + bumps.next().unwrap();
                    Lin::through(&pc[i], &lo, &pc[i + 1], &hi)
                })
                .collect()
        })
        .collect();
    let vertices = (0..np)
        .map(|i| {
            (0..nq)
                .map(|j| {
                    let mut around: Vec<Rational> = rows(j).into_iter().map(|r| p_lines[i][r].eval(&qc[j])).collect();
                    around.extend(cols(i).into_iter().map(|c| q_lines[j][c].eval(&pc[i])));
                    max_of(around) + bumps.next().unwrap()
                })
                .collect()
        })
        .collect();
    Surface::new(grid, cells, p_lines, q_lines, vertices).unwrap()
}

/// Piecewise-bilinear with jumps, upper semicontinuous along both axes.
fn usc_surface() -> impl Strategy<Value = Surface> {
    (surface(), prop::collection::vec(-6i64..4, 1..16)).prop_map(|(s, bump)| {
        let grid = s.grid().clone();
        let (np, nq) = (grid.p_cuts().len() - 1, grid.q_cuts().len() - 1);
        let cells = (0..np).map(|i| (0..nq).map(|j| s.cell(i, j).clone()).collect()).collect();
        upper_cut_values(grid, cells, &bump)
    })
}

fn axis() -> impl Strategy<Value = Axis> {
    prop_oneof![Just(Axis::P), Just(Axis::Q)]
}

fn sample() -> Vec<Rational> {
    (0..=12).map(|k| rat(k, 12)).chain([rat(1, 7), rat(5, 11)]).collect()
}

fn at(axis: Axis, moved: &Rational, fixed: &Rational) -> (Rational, Rational) {
    match axis {
        Axis::P => (moved.clone(), fixed.clone()),
        Axis::Q => (fixed.clone(), moved.clone()),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn refinement_preserves_values(f in surface(), extra in cuts(), extra_q in cuts()) {
        let finer = f.grid().merge(&Grid::new(extra, extra_q).unwrap());
        let g = f.refine_to(&finer).unwrap();
        prop_assert!(g.equal(&f) && f.equal(&g));
        for p in sample() {
            for q in sample() {
                prop_assert_eq!(g.eval(&p, &q), f.eval(&p, &q));
            }
        }
        prop_assert!(f.simplify().equal(&f));
    }

    #[test]
    fn equal_matches_pointwise(f in surface(), g in surface()) {
        let pointwise = sample().iter().all(|p| sample().iter().all(|q| f.eval(p, q) == g.eval(p, q)));
        if f.equal(&g) {
            prop_assert!(pointwise);
        }
        let (a, b) = f.common_refinement(&g);
        prop_assert_eq!(a.grid(), b.grid());
    }

    #[test]
    fn concavify_dominates_and_is_idempotent(f in usc_surface(), g in surface(), ax in axis()) {
        let c = concavify_axis(&f, &g, ax);
        for p in sample() {
            for q in sample() {
                prop_assert!(c.f.eval(&p, &q) >= f.eval(&p, &q), "at ({}, {})", p, q);
            }
        }
        prop_assert!(c.f.is_concave_along(ax));
        let again = concavify_axis(&c.f, &c.g, ax);
        prop_assert!(again.f.equal(&c.f) && again.g.equal(&c.g));
        prop_assert!(again.plan.is_silent());
    }

    #[test]
    fn concavify_is_idempotent_on_any_surface(f in surface(), g in surface(), ax in axis()) {
        let c = concavify_axis(&f, &g, ax);
        let again = concavify_axis(&c.f, &c.g, ax);
        prop_assert!(again.f.equal(&c.f) && again.g.equal(&c.g));
    }

    #[test]
    fn plan_splits_are_bayes_plausible(f in surface(), g in surface(), ax in axis()) {
        let c = concavify_axis(&f, &g, ax);
        let half = rat(1, 2);
        for r in &c.plan.rects {
            let mid = ((&r.p.0 + &r.p.1) * &half, (&r.q.0 + &r.q.1) * &half);
            let (x, fixed) = match ax {
                Axis::P => (&mid.0, &mid.1),
                Axis::Q => (&mid.1, &mid.0),
            };
            match &r.action {
                Action::Silent => {
                    prop_assert_eq!(c.f.eval(&mid.0, &mid.1), f.eval(&mid.0, &mid.1));
                    prop_assert_eq!(c.g.eval(&mid.0, &mid.1), g.eval(&mid.0, &mid.1));
                }
                Action::Refine { lo, hi } => {
                    prop_assert!(lo < x && x < hi);
                    let w_hi = (x - lo) / (hi - lo);
                    let w_lo = one() - &w_hi;
                    prop_assert!(w_lo > zero() && w_hi > zero());
                    prop_assert_eq!(&w_lo * lo + &w_hi * hi, x.clone());
                    let (a, b) = (at(ax, lo, fixed), at(ax, hi, fixed));
                    prop_assert_eq!(c.f.eval(&mid.0, &mid.1), &w_lo * f.eval_at(&a) + &w_hi * f.eval_at(&b));
                    prop_assert_eq!(c.g.eval(&mid.0, &mid.1), &w_lo * g.eval_at(&a) + &w_hi * g.eval_at(&b));
                }
            }
        }
    }

    #[test]
    fn trade_refinements_average_to_the_prior(
        raw_costs in prop::collection::btree_set(0i64..30, 1..5),
        gap in 1i64..10,
        spread in 1i64..10,
        weights in prop::collection::vec(0i64..6, 5),
        pw in prop::collection::vec(1i64..6, 2),
    ) {
        let costs: Vec<Rational> = raw_costs.iter().map(|&c| rat(c, 4)).collect();
        let v0 = costs.last().unwrap() + rat(gap, 3);
        let v1 = &v0 + rat(spread, 2);
        let game = TradeGame::new(vec![v0, v1], costs.clone()).unwrap();
        let w = &weights[..costs.len()];
        let total: i64 = w.iter().sum();
        prop_assume!(total > 0);
        let q = Dist::new(w.iter().map(|&x| rat(x, total)).collect()).unwrap();
        let nd = nested_decompose(&game, &q).unwrap();
        prop_assert!(nd.is_nested());
        prop_assert!(nd.as_refinement().is_bayes_plausible(&q));

        let ptotal: i64 = pw.iter().sum();
        let p = Dist::new(pw.iter().map(|&x| rat(x, ptotal)).collect()).unwrap();
        for k in 0..costs.len() {
            prop_assert!(bbm_decompose(&game, k, &p).unwrap().is_bayes_plausible(&p));
        }
    }

    #[test]
    fn rationals_round_trip(n in -10_000i64..10_000, d in 1i64..10_000) {
        let r = rat(n, d);
        prop_assert_eq!(parse_rational(&to_fraction_string(&r)).unwrap(), r.clone());
        prop_assert_eq!(parse_rational(&to_compact_string(&r)).unwrap(), r);
    }
}
