//! Base games with two types per side where only the seller acts.
//!
//! The seller picks an action knowing her own type and the belief `p` that
//! the buyer has type 1; each type maximizes her own expected payoff and
//! breaks ties in the buyer's favour. The resulting expected payoffs, mixed
//! over the seller-type probability `q`, are the base surfaces.

use std::cmp::Ordering;

use num_traits::Zero;

use crate::rational::{int, one, zero, Rational};
use crate::surface::{Bilinear, Grid, Lin, Surface};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GameError {
    #[error("game needs at least one action")]
    NoActions,
    #[error("payoff table for action {0} must be 2x2")]
    BadTable(usize),
    #[error("trade types must satisfy c_low < c_high < v0 < v1")]
    TradeOrdering,
}

/// `table[s][b]`: payoff when the seller has type `s` and the buyer type `b`.
pub type Table = [[Rational; 2]; 2];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixGame {
    pub seller_types: [String; 2],
    pub buyer_types: [String; 2],
    pub actions: Vec<String>,
    pub u_s: Vec<Table>,
    pub u_b: Vec<Table>,
}

impl MatrixGame {
    pub fn new(
        seller_types: [String; 2],
        buyer_types: [String; 2],
        actions: Vec<String>,
        u_s: Vec<Table>,
        u_b: Vec<Table>,
    ) -> Result<Self, GameError> {
        if actions.is_empty() {
            return Err(GameError::NoActions);
        }
        if u_s.len() != actions.len() {
            return Err(GameError::BadTable(u_s.len().min(actions.len())));
        }
        if u_b.len() != actions.len() {
            return Err(GameError::BadTable(u_b.len().min(actions.len())));
        }
        Ok(MatrixGame {
            seller_types,
            buyer_types,
            actions,
            u_s,
            u_b,
        })
    }

    /// The spy game: Sally cooperates (`C`) or escalates (`E`).
    pub fn spy() -> Self {
        let t = |a: i64, b: i64, c: i64, d: i64| [[int(a), int(b)], [int(c), int(d)]];
        MatrixGame {
            seller_types: ["0".into(), "1".into()],
            buyer_types: ["0".into(), "1".into()],
            actions: vec!["C".into(), "E".into()],
            u_s: vec![t(1, -2, -2, 1), t(-1, 2, 2, -1)],
            u_b: vec![t(1, 2, 2, 1), t(-1, -2, -2, -1)],
        }
    }

    /// Posted-price trade: actions are the two buyer values used as prices;
    /// seller type `s` has cost `costs[s]`, buyer type `b` value `values[b]`.
    /// No ordering is enforced, so equal costs are allowed.
    pub fn bilateral_trade(values: [Rational; 2], costs: [Rational; 2]) -> Self {
        let table = |price: &Rational, f: &dyn Fn(&Rational, &Rational) -> Rational| -> Table {
            let cell = |s: usize, b: usize| if &values[b] >= price { f(&costs[s], &values[b]) } else { zero() };
            [[cell(0, 0), cell(0, 1)], [cell(1, 0), cell(1, 1)]]
        };
        let u_s = values.iter().map(|a| table(a, &|c, _| a - c)).collect();
        let u_b = values.iter().map(|a| table(a, &|_, v| v - a)).collect();
        MatrixGame {
            seller_types: costs.clone().map(|c| format!("c={c}")),
            buyer_types: values.clone().map(|v| format!("v={v}")),
            actions: values.iter().map(|v| format!("{v}")).collect(),
            u_s,
            u_b,
        }
    }

    /// Expected payoff of `action` for seller type `s`, linear in `p`.
    fn line(table: &Table, s: usize) -> Lin {
        Lin::new(table[s][0].clone(), &table[s][1] - &table[s][0])
    }

    /// Lexicographic best action for seller type `s` at belief `p`.
    pub fn best_action(&self, s: usize, p: &Rational) -> usize {
        let score = |a: usize| (Self::line(&self.u_s[a], s).eval(p), Self::line(&self.u_b[a], s).eval(p));
        let mut best = 0;
        let mut best_score = score(0);
        for a in 1..self.actions.len() {
            let sc = score(a);
            if sc.cmp(&best_score) == Ordering::Greater {
                best = a;
                best_score = sc;
            }
        }
        best
    }

    /// Beliefs in `(0,1)` where some seller type's choice may switch.
    fn switch_points(&self) -> Vec<Rational> {
        let mut out = Vec::new();
        let n = self.actions.len();
        for s in 0..2 {
            for a in 0..n {
                for b in a + 1..n {
                    let (sa, sb) = (Self::line(&self.u_s[a], s), Self::line(&self.u_s[b], s));
                    let diff = if sa == sb {
                        Self::line(&self.u_b[a], s).sub(&Self::line(&self.u_b[b], s))
                    } else {
                        sa.sub(&sb)
                    };
                    if !diff.c1.is_zero() {
                        let r = -&diff.c0 / &diff.c1;
                        if r > zero() && r < one() {
                            out.push(r);
                        }
                    }
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }
}

/// Base surfaces plus the action profile of each `p`-region.
#[derive(Debug, Clone)]
pub struct BaseGame {
    pub pi_s: Surface,
    pub pi_b: Surface,
    /// `(p_lo, p_hi, label)` with label `"a0/a1"`: the actions of seller types 0 and 1.
    pub regions: Vec<(Rational, Rational, String)>,
}

/// Seller-type payoff lines at a fixed action profile: `(α_0, α_1)` for the
/// seller and for the buyer.
fn profile_lines(g: &MatrixGame, acts: [usize; 2]) -> ([Lin; 2], [Lin; 2]) {
    let l = |t: &Vec<Table>, s: usize| MatrixGame::line(&t[acts[s]], s);
    ([l(&g.u_s, 0), l(&g.u_s, 1)], [l(&g.u_b, 0), l(&g.u_b, 1)])
}

/// `(1-q)·α_0(p) + q·α_1(p)`.
fn mix(alpha: &[Lin; 2]) -> Bilinear {
    Bilinear::new(
        alpha[0].c0.clone(),
        alpha[0].c1.clone(),
        &alpha[1].c0 - &alpha[0].c0,
        &alpha[1].c1 - &alpha[0].c1,
    )
}

pub fn build_matrix(g: &MatrixGame) -> BaseGame {
    let mut p_cuts = vec![zero()];
    p_cuts.extend(g.switch_points());
    p_cuts.push(one());
    let np = p_cuts.len();
    let grid = Grid::new(p_cuts.clone(), vec![zero(), one()]).expect("switch points lie in (0,1)");
    let half = crate::rational::rat(1, 2);

    let cell_profile: Vec<[usize; 2]> = p_cuts
        .windows(2)
        .map(|w| {
            let mid = (&w[0] + &w[1]) * &half;
            [g.best_action(0, &mid), g.best_action(1, &mid)]
        })
        .collect();
    let cut_profile: Vec<[usize; 2]> = p_cuts.iter().map(|x| [g.best_action(0, x), g.best_action(1, x)]).collect();

    let build = |pick_b: bool| -> Surface {
        let choose = |acts: [usize; 2]| {
            let (s, b) = profile_lines(g, acts);
            if pick_b {
                b
            } else {
                s
            }
        };
        let cells: Vec<Vec<Bilinear>> = cell_profile.iter().map(|&a| vec![mix(&choose(a))]).collect();
        let cut_fn: Vec<Bilinear> = cut_profile.iter().map(|&a| mix(&choose(a))).collect();
        let p_lines = p_cuts.iter().zip(&cut_fn).map(|(x, f)| vec![f.at_p(x)]).collect();
        let q_lines = [zero(), one()]
            .iter()
            .map(|y| cells.iter().map(|c| c[0].at_q(y)).collect())
            .collect();
        let vertices = p_cuts
            .iter()
            .zip(&cut_fn)
            .map(|(x, f)| vec![f.eval(x, &zero()), f.eval(x, &one())])
            .collect();
        Surface::new(grid.clone(), cells, p_lines, q_lines, vertices).expect("builder shapes agree")
    };

    let label = |a: [usize; 2]| format!("{}/{}", g.actions[a[0]], g.actions[a[1]]);
    let regions = (0..np - 1)
        .map(|i| (p_cuts[i].clone(), p_cuts[i + 1].clone(), label(cell_profile[i])))
        .collect();
    BaseGame {
        pi_s: build(false),
        pi_b: build(true),
        regions,
    }
}

/// Binary trade with seller costs `c_low < c_high` (type 1 is the high cost)
/// and buyer values `v0 < v1` (type 1 is the high value).
pub fn build_trade_binary(v0: &Rational, v1: &Rational, c_low: &Rational, c_high: &Rational) -> Result<BaseGame, GameError> {
    if !(c_low < c_high && c_high < v0 && v0 < v1) {
        return Err(GameError::TradeOrdering);
    }
    Ok(build_matrix(&MatrixGame::bilateral_trade(
        [v0.clone(), v1.clone()],
        [c_low.clone(), c_high.clone()],
    )))
}
