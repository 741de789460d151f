//! Bilateral trade with finitely many types: posted prices, welfare,
//! equal-revenue splitting, indifference distributions and their nested
//! decomposition, the two-round efficient protocol for a binary buyer, and
//! the candidate-posterior programs for three buyer values.

use num_traits::{Signed, Zero};

use crate::concavify::{hull_1d, HullVertex};
use crate::lp::{lex_solve, Constraint, LpError, LpStatus, Relation};
use crate::rational::{one, zero, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TradeError {
    #[error("{0} must be strictly increasing and nonempty")]
    Unsorted(&'static str),
    #[error("distribution has {got} entries, expected {want}")]
    Length { got: usize, want: usize },
    #[error("probabilities must be nonnegative and sum to 1")]
    NotADistribution,
    #[error("operation needs {0}")]
    Shape(&'static str),
    #[error("types must satisfy max cost < min value")]
    Ordering,
    #[error("buyer value {value} in the support does not exceed cost {cost}")]
    ValueNotAboveCost { value: Box<Rational>, cost: Box<Rational> },
    #[error("indifference distribution undefined: threshold equals 1")]
    DegenerateThreshold,
    #[error("cost subset must be nonempty, sorted and in range")]
    BadSubset,
    #[error("candidate grid must be a nonempty subset of [0,1]")]
    MissingCandidates,
    #[error("program unexpectedly {0:?}")]
    Lp(LpStatus),
    #[error(transparent)]
    Solver(#[from] LpError),
}

/// Buyer values and seller costs, each strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TradeGame {
    pub values: Vec<Rational>,
    pub costs: Vec<Rational>,
}

fn strictly_increasing(v: &[Rational]) -> bool {
    !v.is_empty() && v.windows(2).all(|w| w[0] < w[1])
}

impl TradeGame {
    pub fn new(values: Vec<Rational>, costs: Vec<Rational>) -> Result<Self, TradeError> {
        if !strictly_increasing(&values) {
            return Err(TradeError::Unsorted("values"));
        }
        if !strictly_increasing(&costs) {
            return Err(TradeError::Unsorted("costs"));
        }
        Ok(TradeGame { values, costs })
    }

    fn require_binary_buyer(&self) -> Result<(), TradeError> {
        if self.values.len() != 2 {
            return Err(TradeError::Shape("exactly two buyer values"));
        }
        if self.costs[self.costs.len() - 1] >= self.values[0] {
            return Err(TradeError::Ordering);
        }
        Ok(())
    }
}

/// Probability vector over a type list.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dist {
    pub probs: Vec<Rational>,
}

impl Dist {
    pub fn new(probs: Vec<Rational>) -> Result<Self, TradeError> {
        if probs.is_empty() || probs.iter().any(|p| p.is_negative()) || probs.iter().sum::<Rational>() != one() {
            return Err(TradeError::NotADistribution);
        }
        Ok(Dist { probs })
    }

    pub fn point(n: usize, k: usize) -> Self {
        let mut probs = vec![zero(); n];
        probs[k] = one();
        Dist { probs }
    }

    /// `(1 - q, q)`: a binary distribution with `q` on type 1.
    pub fn binary(q: &Rational) -> Self {
        Dist {
            probs: vec![one() - q, q.clone()],
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.probs.len()).filter(|&i| !self.probs[i].is_zero()).collect()
    }

    fn check_len(&self, want: usize) -> Result<(), TradeError> {
        if self.probs.len() != want {
            return Err(TradeError::Length {
                got: self.probs.len(),
                want,
            });
        }
        Ok(())
    }
}

/// Distribution over posteriors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Refinement {
    pub branches: Vec<(Rational, Dist)>,
}

impl Refinement {
    /// `Σ weight · posterior`.
    pub fn mean(&self) -> Vec<Rational> {
        let n = self.branches.first().map_or(0, |b| b.1.len());
        let mut m = vec![zero(); n];
        for (w, d) in &self.branches {
            for (mi, pi) in m.iter_mut().zip(&d.probs) {
                *mi += w * pi;
            }
        }
        m
    }

    pub fn is_bayes_plausible(&self, prior: &Dist) -> bool {
        self.branches.iter().all(|(w, _)| !w.is_negative())
            && self.branches.iter().map(|(w, _)| w.clone()).sum::<Rational>() == one()
            && self.mean() == prior.probs
    }
}

/// Posted price for the seller with cost `costs[cost_index]` facing buyer
/// distribution `p`: the revenue-maximizing value in the support, lowest on
/// ties. `None` when every price loses money.
pub fn seller_price(game: &TradeGame, cost_index: usize, p: &Dist) -> Option<usize> {
    let c = &game.costs[cost_index];
    let mut tail = zero();
    let mut best: Option<(usize, Rational)> = None;
    for k in (0..game.values.len()).rev() {
        tail += &p.probs[k];
        if p.probs[k].is_zero() {
            continue;
        }
        let rev = (&game.values[k] - c) * &tail;
        if rev.is_negative() {
            continue;
        }
        // Scanning downward, `>=` keeps the lowest maximizer.
        if best.as_ref().is_none_or(|(_, b)| &rev >= b) {
            best = Some((k, rev));
        }
    }
    best.map(|(k, _)| k)
}

/// Seller and buyer surplus when the seller has cost index `i`.
fn payoffs_for_cost(game: &TradeGame, i: usize, p: &Dist) -> (Rational, Rational) {
    let Some(k) = seller_price(game, i, p) else {
        return (zero(), zero());
    };
    let price = &game.values[k];
    let c = &game.costs[i];
    let mut s = zero();
    let mut b = zero();
    for j in k..game.values.len() {
        s += &p.probs[j] * (price - c);
        b += &p.probs[j] * (&game.values[j] - price);
    }
    (s, b)
}

/// Base-game payoffs `(π⁰_S, π⁰_B)` for seller distribution `q` and buyer
/// distribution `p`.
pub fn pi0(game: &TradeGame, q: &Dist, p: &Dist) -> Result<(Rational, Rational), TradeError> {
    q.check_len(game.costs.len())?;
    p.check_len(game.values.len())?;
    let mut s = zero();
    let mut b = zero();
    for (i, qi) in q.probs.iter().enumerate() {
        if qi.is_zero() {
            continue;
        }
        let (si, bi) = payoffs_for_cost(game, i, p);
        s += qi * si;
        b += qi * bi;
    }
    Ok((s, b))
}

/// First-best gains from trade `E[(v - c)⁺]`.
pub fn efficient_welfare(game: &TradeGame, q: &Dist, p: &Dist) -> Result<Rational, TradeError> {
    q.check_len(game.costs.len())?;
    p.check_len(game.values.len())?;
    let mut w = zero();
    for (qi, c) in q.probs.iter().zip(&game.costs) {
        for (pj, v) in p.probs.iter().zip(&game.values) {
            if v > c {
                w += qi * pj * (v - c);
            }
        }
    }
    Ok(w)
}

/// Equal-revenue distribution on `support` for cost `c`: the tail mass at
/// each support value `v` is `(v_min - c) / (v - c)`.
fn equal_revenue(values: &[Rational], support: &[usize], c: &Rational) -> Vec<Rational> {
    let n = values.len();
    let vmin = &values[support[0]];
    let tail = |k: usize| (vmin - c) / (&values[k] - c);
    let mut r = vec![zero(); n];
    for (pos, &k) in support.iter().enumerate() {
        let next = support.get(pos + 1).map_or(zero(), |&k2| tail(k2));
        r[k] = tail(k) - next;
    }
    r
}

/// Splits the buyer prior into posteriors on which the seller with cost
/// `costs[cost_index]` is indifferent among all support prices, peeling the
/// largest equal-revenue component each step. The final branch is a point
/// mass.
pub fn bbm_decompose(game: &TradeGame, cost_index: usize, p: &Dist) -> Result<Refinement, TradeError> {
    p.check_len(game.values.len())?;
    let c = &game.costs[cost_index];
    for k in p.support() {
        if &game.values[k] <= c {
            return Err(TradeError::ValueNotAboveCost {
                value: Box::new(game.values[k].clone()),
                cost: Box::new(c.clone()),
            });
        }
    }
    let mut residual = p.probs.clone();
    let mut branches = Vec::new();
    loop {
        let support: Vec<usize> = (0..residual.len()).filter(|&i| !residual[i].is_zero()).collect();
        if support.len() <= 1 {
            if let Some(&k) = support.first() {
                branches.push((residual[k].clone(), Dist::point(residual.len(), k)));
            }
            break;
        }
        let r = equal_revenue(&game.values, &support, c);
        let z = support.iter().map(|&k| &residual[k] / &r[k]).min().expect("nonempty support");
        for &k in &support {
            residual[k] -= &z * &r[k];
        }
        branches.push((z, Dist { probs: r }));
    }
    Ok(Refinement { branches })
}

/// `p*_j = (v0 - c_j) / (v1 - c_j)`, one per cost, decreasing in `j`.
pub fn thresholds(game: &TradeGame) -> Result<Vec<Rational>, TradeError> {
    game.require_binary_buyer()?;
    let (v0, v1) = (&game.values[0], &game.values[1]);
    Ok(game.costs.iter().map(|c| (v0 - c) / (v1 - c)).collect())
}

fn check_subset(game: &TradeGame, x: &[usize]) -> Result<(), TradeError> {
    if x.is_empty() || x.windows(2).any(|w| w[0] >= w[1]) || x[x.len() - 1] >= game.costs.len() {
        return Err(TradeError::BadSubset);
    }
    Ok(())
}

/// Seller distribution on the cost subset `x` that aligns the peaks of the
/// buyer's payoff at every threshold `p*_i`, `i ∈ x`.
pub fn indifference_dist(game: &TradeGame, x: &[usize]) -> Result<Dist, TradeError> {
    let ps = thresholds(game)?;
    check_subset(game, x)?;
    let inv = |i: usize| one() / &ps[i];
    let denom = inv(x[x.len() - 1]) - one();
    if denom.is_zero() {
        return Err(TradeError::DegenerateThreshold);
    }
    let mut probs = vec![zero(); game.costs.len()];
    let mut prev = one();
    for &i in x {
        probs[i] = (inv(i) - &prev) / &denom;
        prev = inv(i);
    }
    Ok(Dist { probs })
}

/// `q = Σ λ_i q^{X_i}` with `X_1 ⊇ X_2 ⊇ ...`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NestedDecomposition {
    pub terms: Vec<(Rational, Vec<usize>)>,
    pub posteriors: Vec<Dist>,
}

impl NestedDecomposition {
    pub fn as_refinement(&self) -> Refinement {
        Refinement {
            branches: self
                .terms
                .iter()
                .zip(&self.posteriors)
                .map(|((l, _), d)| (l.clone(), d.clone()))
                .collect(),
        }
    }

    pub fn is_nested(&self) -> bool {
        self.terms
            .windows(2)
            .all(|w| w[1].1.iter().all(|i| w[0].1.contains(i)) && w[1].1.len() < w[0].1.len())
            && self.terms.last().is_some_and(|t| !t.1.is_empty())
    }
}

pub fn nested_decompose(game: &TradeGame, q: &Dist) -> Result<NestedDecomposition, TradeError> {
    q.check_len(game.costs.len())?;
    let mut residual = q.probs.clone();
    let mut terms = Vec::new();
    let mut posteriors = Vec::new();
    loop {
        let x: Vec<usize> = (0..residual.len()).filter(|&i| !residual[i].is_zero()).collect();
        if x.is_empty() {
            break;
        }
        let qx = indifference_dist(game, &x)?;
        let z = x.iter().map(|&i| &residual[i] / &qx.probs[i]).min().expect("nonempty");
        for &i in &x {
            residual[i] -= &z * &qx.probs[i];
        }
        terms.push((z, x));
        posteriors.push(qx);
    }
    Ok(NestedDecomposition { terms, posteriors })
}

/// Buyer payoff slice `p ↦ π⁰_B(q, (1-p, p))` together with the seller's,
/// sampled at its breakpoints `{0, thresholds, 1}`.
pub fn buyer_slice(game: &TradeGame, q: &Dist) -> Result<Vec<HullVertex>, TradeError> {
    let mut xs: Vec<Rational> = thresholds(game)?;
    xs.push(zero());
    xs.push(one());
    xs.sort();
    xs.dedup();
    xs.into_iter()
        .map(|x| {
            let (s, b) = pi0(game, q, &Dist::binary(&x))?;
            Ok(HullVertex::new(x, b, s))
        })
        .collect()
}

/// Bob's round-one response to a seller posterior.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BobMove {
    Silent,
    /// `(weight, posterior p)` pairs.
    Split(Vec<(Rational, Rational)>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SallyBranch {
    pub weight: Rational,
    pub support: Vec<usize>,
    pub q: Dist,
    pub bob: BobMove,
    /// Payoffs `(S, B)` after Bob's move, averaged over his split.
    pub payoffs: (Rational, Rational),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoRound {
    pub p: Rational,
    pub q: Dist,
    pub branches: Vec<SallyBranch>,
    pub pi0: (Rational, Rational),
    /// Payoffs with one buyer message only: lexicographic hull along `p`.
    pub pi1: (Rational, Rational),
    pub pi2: (Rational, Rational),
    pub w_star: Rational,
}

impl TwoRound {
    pub fn is_efficient(&self) -> bool {
        &self.pi2.0 + &self.pi2.1 == self.w_star
    }
}

/// Sally splits `q` into nested indifference posteriors; on each, Bob stays
/// silent when `p ≤ p*` of the highest cost in the support and otherwise
/// splits `p` to `{p*, 1}`.
pub fn two_round_protocol(game: &TradeGame, q: &Dist, p: &Rational) -> Result<TwoRound, TradeError> {
    game.require_binary_buyer()?;
    q.check_len(game.costs.len())?;
    if p.is_negative() || p > &one() {
        return Err(TradeError::NotADistribution);
    }
    let ps = thresholds(game)?;
    let nd = nested_decompose(game, q)?;
    let prior_p = Dist::binary(p);
    let mut branches = Vec::new();
    let (mut s2, mut b2) = (zero(), zero());
    for ((lambda, x), qx) in nd.terms.iter().zip(&nd.posteriors) {
        let pstar = &ps[x[x.len() - 1]];
        let (bob, payoffs) = if p <= pstar {
            (BobMove::Silent, pi0(game, qx, &prior_p)?)
        } else {
            let w_hi = (p - pstar) / (one() - pstar);
            let w_lo = one() - &w_hi;
            let (s_lo, b_lo) = pi0(game, qx, &Dist::binary(pstar))?;
            let (s_hi, b_hi) = pi0(game, qx, &Dist::binary(&one()))?;
            let pay = (&w_lo * s_lo + &w_hi * s_hi, &w_lo * b_lo + &w_hi * b_hi);
            (BobMove::Split(vec![(w_lo, pstar.clone()), (w_hi, one())]), pay)
        };
        s2 += lambda * &payoffs.0;
        b2 += lambda * &payoffs.1;
        branches.push(SallyBranch {
            weight: lambda.clone(),
            support: x.clone(),
            q: qx.clone(),
            bob,
            payoffs,
        });
    }
    let h = hull_1d(&buyer_slice(game, q)?, p).expect("slice spans [0,1]");
    Ok(TwoRound {
        p: p.clone(),
        q: q.clone(),
        branches,
        pi0: pi0(game, q, &prior_p)?,
        pi1: (h.co_value, h.value),
        pi2: (s2, b2),
        w_star: efficient_welfare(game, q, &prior_p)?,
    })
}

fn require_three_by_two(game: &TradeGame) -> Result<(), TradeError> {
    if game.values.len() != 3 || game.costs.len() != 2 {
        return Err(TradeError::Shape("three buyer values and two seller costs"));
    }
    if game.costs[1] >= game.values[0] {
        return Err(TradeError::Ordering);
    }
    Ok(())
}

/// Two-point posterior on values `a < b` making cost `c` indifferent
/// between pricing at either.
fn two_point(values: &[Rational], a: usize, b: usize, c: &Rational) -> Dist {
    let hi = (&values[a] - c) / (&values[b] - c);
    let mut probs = vec![zero(); values.len()];
    probs[a] = one() - &hi;
    probs[b] = hi;
    Dist { probs }
}

/// The twelve candidate posteriors for three buyer values and two costs:
/// three point masses; two-point indifference posteriors at the low cost,
/// then at the high cost; full-support equal revenue at each cost; and the
/// posterior indifferent between the two lowest prices at the low cost and
/// the two highest at the high cost.
pub fn twelve_candidates(game: &TradeGame) -> Result<Vec<Dist>, TradeError> {
    require_three_by_two(game)?;
    let v = &game.values;
    let mut out: Vec<Dist> = (0..3).map(|k| Dist::point(3, k)).collect();
    for c in &game.costs {
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            out.push(two_point(v, a, b, c));
        }
    }
    for c in &game.costs {
        out.push(Dist {
            probs: equal_revenue(v, &[0, 1, 2], c),
        });
    }
    let (c1, c2) = (&game.costs[0], &game.costs[1]);
    let upper = (&v[0] - c1) / (&v[1] - c1);
    let p3 = &upper * (&v[1] - c2) / (&v[2] - c2);
    out.push(Dist {
        probs: vec![one() - &upper, &upper - &p3, p3],
    });
    Ok(out)
}

/// Seller participation constraint in the candidate program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LpMode {
    /// Seller keeps at least her no-communication payoff.
    #[default]
    Voluntary,
    /// Seller payoff only needs to be nonnegative.
    LiteralZero,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lp3Result {
    pub pi1_b: Rational,
    pub pi1_s: Rational,
    pub weights: Vec<Rational>,
    pub candidates: Vec<Dist>,
}

/// Bob's best first message over the twelve candidates, with the seller's
/// payoff maximized among his optimal messages.
pub fn lp3_best_response(game: &TradeGame, q: &Rational, p: &Dist, mode: LpMode) -> Result<Lp3Result, TradeError> {
    require_three_by_two(game)?;
    p.check_len(3)?;
    let qd = Dist::binary(q);
    let candidates = twelve_candidates(game)?;
    let pays: Vec<(Rational, Rational)> = candidates.iter().map(|d| pi0(game, &qd, d)).collect::<Result<_, _>>()?;
    let obj_b: Vec<Rational> = pays.iter().map(|x| x.1.clone()).collect();
    let obj_s: Vec<Rational> = pays.iter().map(|x| x.0.clone()).collect();
    let floor = match mode {
        LpMode::Voluntary => pi0(game, &qd, p)?.0,
        LpMode::LiteralZero => zero(),
    };
    let mut cons = vec![
        Constraint::new(obj_s.clone(), Relation::Ge, floor),
        Constraint::new(vec![one(); candidates.len()], Relation::Eq, one()),
    ];
    // The first coordinate follows from the others and the weight sum.
    for k in 1..3 {
        cons.push(Constraint::new(
            candidates.iter().map(|d| d.probs[k].clone()).collect(),
            Relation::Eq,
            p.probs[k].clone(),
        ));
    }
    let lex = lex_solve(&obj_b, &obj_s, &cons)?;
    if lex.solution.status != LpStatus::Optimal {
        return Err(TradeError::Lp(lex.solution.status));
    }
    Ok(Lp3Result {
        pi1_b: lex.primary_value,
        pi1_s: lex.solution.value,
        weights: lex.solution.point,
        candidates,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Round2Result {
    pub pi2_s: Rational,
    pub pi2_b: Rational,
    /// `(weight, q)` over the candidate grid, zero weights dropped.
    pub branches: Vec<(Rational, Rational)>,
    /// `(q, π¹_S, π¹_B)` at every candidate.
    pub pi1_at: Vec<(Rational, Rational, Rational)>,
}

/// Sally's best split of `q` over a candidate grid (the prior is always
/// added), with Bob responding
/// optimally at each candidate. The result is a lower bound on the exact
/// round-two payoffs, attained when the grid contains the true kinks.
pub fn round2_concavify(
    game: &TradeGame,
    q: &Rational,
    p: &Dist,
    candidate_qs: &[Rational],
    mode: LpMode,
) -> Result<Round2Result, TradeError> {
    require_three_by_two(game)?;
    if candidate_qs.is_empty() || candidate_qs.iter().any(|u| u.is_negative() || u > &one()) {
        return Err(TradeError::MissingCandidates);
    }
    // The prior itself is always a candidate: staying put is feasible.
    let mut grid = candidate_qs.to_vec();
    grid.push(q.clone());
    grid.sort();
    grid.dedup();
    let pi1_at: Vec<(Rational, Rational, Rational)> = grid
        .iter()
        .map(|u| lp3_best_response(game, u, p, mode).map(|r| (u.clone(), r.pi1_s, r.pi1_b)))
        .collect::<Result<_, _>>()?;
    let here = pi1_at.iter().find(|x| &x.0 == q).expect("prior is a candidate").clone();
    let obj_s: Vec<Rational> = pi1_at.iter().map(|x| x.1.clone()).collect();
    let obj_b: Vec<Rational> = pi1_at.iter().map(|x| x.2.clone()).collect();
    let cons = vec![
        Constraint::new(vec![one(); grid.len()], Relation::Eq, one()),
        Constraint::new(grid.clone(), Relation::Eq, q.clone()),
        Constraint::new(obj_s.clone(), Relation::Ge, here.1.clone()),
        Constraint::new(obj_b.clone(), Relation::Ge, here.2.clone()),
    ];
    let lex = lex_solve(&obj_s, &obj_b, &cons)?;
    if lex.solution.status != LpStatus::Optimal {
        return Err(TradeError::Lp(lex.solution.status));
    }
    let branches = grid
        .iter()
        .zip(&lex.solution.point)
        .filter(|(_, w)| !w.is_zero())
        .map(|(u, w)| (w.clone(), u.clone()))
        .collect();
    Ok(Round2Result {
        pi2_s: lex.primary_value,
        pi2_b: lex.solution.value,
        branches,
        pi1_at,
    })
}

/// `Σ` of a payoff pair.
pub fn welfare(pair: &(Rational, Rational)) -> Rational {
    &pair.0 + &pair.1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn ints(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| int(x)).collect()
    }

    fn d(v: &[(i64, i64)]) -> Dist {
        Dist::new(v.iter().map(|&(n, m)| rat(n, m)).collect()).unwrap()
    }

    fn sec31() -> (TradeGame, Dist, Dist) {
        (
            TradeGame::new(ints(&[3, 6]), ints(&[2])).unwrap(),
            d(&[(1, 1)]),
            d(&[(2, 3), (1, 3)]),
        )
    }

    fn sec32() -> (TradeGame, Dist, Dist) {
        (
            TradeGame::new(ints(&[3, 6]), ints(&[0, 2])).unwrap(),
            d(&[(1, 2), (1, 2)]),
            d(&[(2, 3), (1, 3)]),
        )
    }

    fn appc() -> (TradeGame, Dist, Dist) {
        (
            TradeGame::new(ints(&[3, 6, 12]), ints(&[0, 2])).unwrap(),
            d(&[(4, 5), (1, 5)]),
            d(&[(1, 3), (1, 3), (1, 3)]),
        )
    }

    #[test]
    fn prices_break_ties_low() {
        let (g, _, p) = sec31();
        assert_eq!(seller_price(&g, 0, &p), Some(1));
        assert_eq!(seller_price(&g, 0, &d(&[(3, 4), (1, 4)])), Some(0));
        assert_eq!(seller_price(&g, 0, &Dist::point(2, 1)), Some(1));
    }

    #[test]
    fn base_payoffs_and_welfare() {
        let (g, q, p) = sec31();
        assert_eq!(pi0(&g, &q, &p).unwrap(), (rat(4, 3), zero()));
        assert_eq!(efficient_welfare(&g, &q, &p).unwrap(), int(2));
        let (g, q, p) = sec32();
        assert_eq!(pi0(&g, &q, &p).unwrap(), (rat(13, 6), rat(1, 2)));
        assert_eq!(efficient_welfare(&g, &q, &p).unwrap(), int(3));
        let (g, q, p) = appc();
        assert_eq!(pi0(&g, &q, &p).unwrap(), (rat(58, 15), rat(8, 5)));
        assert_eq!(efficient_welfare(&g, &q, &p).unwrap(), rat(33, 5));
    }

    #[test]
    fn bbm_peels_equal_revenue() {
        let (g, q, p) = sec31();
        let r = bbm_decompose(&g, 0, &p).unwrap();
        assert_eq!(r.branches, vec![(rat(8, 9), d(&[(3, 4), (1, 4)])), (rat(1, 9), Dist::point(2, 1))]);
        assert!(r.is_bayes_plausible(&p));
        let after: (Rational, Rational) = r.branches.iter().fold((zero(), zero()), |acc, (w, post)| {
            let (s, b) = pi0(&g, &q, post).unwrap();
            (acc.0 + w * s, acc.1 + w * b)
        });
        assert_eq!(after, (rat(4, 3), rat(2, 3)));
        let single = bbm_decompose(&g, 0, &Dist::point(2, 0)).unwrap();
        assert_eq!(single.branches, vec![(one(), Dist::point(2, 0))]);
        let bad = TradeGame::new(ints(&[2, 6]), ints(&[2])).unwrap();
        assert!(matches!(bbm_decompose(&bad, 0, &p), Err(TradeError::ValueNotAboveCost { .. })));
    }

    #[test]
    fn thresholds_and_indifference() {
        let (g, q, _) = sec32();
        assert_eq!(thresholds(&g).unwrap(), vec![rat(1, 2), rat(1, 4)]);
        assert_eq!(indifference_dist(&g, &[0, 1]).unwrap(), d(&[(1, 3), (2, 3)]));
        assert_eq!(indifference_dist(&g, &[1]).unwrap(), Dist::point(2, 1));
        let nd = nested_decompose(&g, &q).unwrap();
        assert_eq!(nd.terms, vec![(rat(3, 4), vec![0, 1]), (rat(1, 4), vec![0])]);
        assert!(nd.is_nested());
        assert!(nd.as_refinement().is_bayes_plausible(&q));
        let three = TradeGame::new(ints(&[3, 6]), ints(&[0, 1, 2])).unwrap();
        assert_eq!(indifference_dist(&three, &[0, 1, 2]).unwrap(), d(&[(1, 3), (1, 6), (1, 2)]));
        assert!(thresholds(&TradeGame::new(ints(&[3, 6]), ints(&[3])).unwrap()).is_err());
    }

    #[test]
    fn two_rounds_reach_first_best() {
        let (g, q, _) = sec32();
        let r = two_round_protocol(&g, &q, &rat(1, 3)).unwrap();
        assert_eq!(r.pi1, (rat(13, 6), rat(3, 4)));
        assert_eq!(r.pi2, (rat(9, 4), rat(3, 4)));
        assert!(r.is_efficient());
        assert_eq!(r.branches[0].bob, BobMove::Split(vec![(rat(8, 9), rat(1, 4)), (rat(1, 9), one())]));
        assert_eq!(r.branches[1].bob, BobMove::Silent);
        let (g, q, _) = sec31();
        let r = two_round_protocol(&g, &q, &rat(1, 3)).unwrap();
        assert_eq!(r.pi2, (rat(4, 3), rat(2, 3)));
    }

    #[test]
    fn candidates_for_three_values() {
        let (g, _, _) = appc();
        let c = twelve_candidates(&g).unwrap();
        assert_eq!(c.len(), 12);
        assert_eq!(c[9], d(&[(1, 2), (1, 4), (1, 4)]));
        assert_eq!(c[11], d(&[(1, 2), (3, 10), (1, 5)]));
        assert!(c.iter().all(|x| x.probs.iter().sum::<Rational>() == one()));
    }

    #[test]
    fn candidate_program_matches_printed_values() {
        let (g, _, p) = appc();
        for (q, b, s) in [
            (rat(1, 5), rat(12, 5), rat(58, 15)),
            (zero(), int(3), int(4)),
            (rat(1, 2), rat(11, 6), int(4)),
        ] {
            let r = lp3_best_response(&g, &q, &p, LpMode::Voluntary).unwrap();
            assert_eq!((r.pi1_b, r.pi1_s), (b, s), "q = {q}");
        }
    }

    #[test]
    fn round_two_split() {
        let (g, _, p) = appc();
        let grid = vec![zero(), rat(1, 3), rat(2, 3), one()];
        let r = round2_concavify(&g, &rat(1, 5), &p, &grid, LpMode::Voluntary).unwrap();
        assert_eq!((r.pi2_s.clone(), r.pi2_b.clone()), (rat(62, 15), rat(12, 5)));
        assert_eq!(r.branches, vec![(rat(2, 5), zero()), (rat(3, 5), rat(1, 3))]);
        let alone = round2_concavify(&g, &rat(1, 5), &p, &[rat(1, 5)], LpMode::Voluntary).unwrap();
        assert_eq!(alone.branches, vec![(one(), rat(1, 5))]);
        assert_eq!((alone.pi2_s, alone.pi2_b), (rat(58, 15), rat(12, 5)));
        assert!(round2_concavify(&g, &rat(1, 5), &p, &[], LpMode::Voluntary).is_err());
    }
}
