//! Alternating concavification over rounds, protocol tracing, and message
//! complexity.
//!
//! Rounds are indexed from the end of the protocol: `t = 0` is the base game
//! and round `t` is the `t`-th message before play. Bob (the buyer side,
//! coordinate `p`) speaks in odd rounds and Sally (coordinate `q`) in even
//! rounds, so computing `π^1, π^2, ...` forward is backward induction over
//! the protocol.

use std::fmt;

use serde_json::{json, Value};

use crate::concavify::{concavify_axis, split_at, Action, StrategyPartition};
use crate::rational::{one, to_decimal, to_fraction_string, zero, Rational};
use crate::surface::{Axis, Surface};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DynamicsError {
    #[error("voluntary communication not guaranteed: {0}")]
    Premise(&'static str),
    #[error("start belief ({0}, {1}) is outside [0,1]²")]
    StartOutOfRange(Box<Rational>, Box<Rational>),
    #[error("stored surfaces disagree with the pointwise hull at t={t}, ({p}, {q})")]
    Inconsistent { t: usize, p: Box<Rational>, q: Box<Rational> },
    #[error("empty round log")]
    EmptyLog,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Player {
    /// Seller; refines `q`.
    S,
    /// Buyer; refines `p`.
    B,
}

impl Player {
    pub fn for_round(t: usize) -> Option<Player> {
        match t {
            0 => None,
            t if t % 2 == 1 => Some(Player::B),
            _ => Some(Player::S),
        }
    }

    pub fn axis(self) -> Axis {
        match self {
            Player::B => Axis::P,
            Player::S => Axis::Q,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Player::S => "S",
            Player::B => "B",
        })
    }
}

#[derive(Debug, Clone)]
pub struct RoundLog {
    pub t: usize,
    pub mover: Option<Player>,
    pub pi_s: Surface,
    pub pi_b: Surface,
    /// `None` for the base game.
    pub plan: Option<StrategyPartition>,
}

impl RoundLog {
    pub fn payoffs(&self, p: &Rational, q: &Rational) -> (Rational, Rational) {
        (self.pi_s.eval(p, q), self.pi_b.eval(p, q))
    }

    pub fn welfare(&self, p: &Rational, q: &Rational) -> Rational {
        self.pi_s.eval(p, q) + self.pi_b.eval(p, q)
    }
}

/// One concavification round on top of `prev`.
pub fn step(prev: &RoundLog) -> RoundLog {
    let t = prev.t + 1;
    let mover = Player::for_round(t).expect("t >= 1");
    let (pi_s, pi_b, plan) = match mover {
        Player::B => {
            let c = concavify_axis(&prev.pi_b, &prev.pi_s, Axis::P);
            (c.g, c.f, c.plan)
        }
        Player::S => {
            let c = concavify_axis(&prev.pi_s, &prev.pi_b, Axis::Q);
            (c.f, c.g, c.plan)
        }
    };
    RoundLog {
        t,
        mover: Some(mover),
        pi_s,
        pi_b,
        plan: Some(plan),
    }
}

/// Computes `π^0 .. π^rounds`.
///
/// The base surfaces must have `π⁰_B` convex along `q` and `π⁰_S` convex
/// along `p`; under that premise every optimal refinement is voluntary.
pub fn run(base_s: &Surface, base_b: &Surface, rounds: usize) -> Result<Vec<RoundLog>, DynamicsError> {
    if !base_b.is_convex_along(Axis::Q) {
        return Err(DynamicsError::Premise("buyer payoff is not convex in q"));
    }
    if !base_s.is_convex_along(Axis::P) {
        return Err(DynamicsError::Premise("seller payoff is not convex in p"));
    }
    let mut logs = vec![RoundLog {
        t: 0,
        mover: None,
        pi_s: base_s.clone(),
        pi_b: base_b.clone(),
        plan: None,
    }];
    for _ in 0..rounds {
        let next = step(logs.last().expect("nonempty"));
        logs.push(next);
    }
    Ok(logs)
}

/// Realized protocol from a start belief.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolTree {
    pub t: usize,
    pub p: Rational,
    pub q: Rational,
    /// `None` at leaves.
    pub mover: Option<Player>,
    pub payoff_s: Rational,
    pub payoff_b: Rational,
    pub children: Vec<(Rational, ProtocolTree)>,
}

impl ProtocolTree {
    pub fn is_silent(&self) -> bool {
        self.children.len() == 1
    }

    /// `(probability, p, q)` of the children.
    pub fn branches(&self) -> Vec<(Rational, Rational, Rational)> {
        self.children.iter().map(|(w, c)| (w.clone(), c.p.clone(), c.q.clone())).collect()
    }

    pub fn leaves(&self) -> usize {
        if self.children.is_empty() {
            1
        } else {
            self.children.iter().map(|(_, c)| c.leaves()).sum()
        }
    }

    /// Child reached by following the branch whose belief is `(p, q)`.
    pub fn child_at(&self, p: &Rational, q: &Rational) -> Option<&ProtocolTree> {
        self.children.iter().map(|(_, c)| c).find(|c| &c.p == p && &c.q == q)
    }

    pub fn to_json_value(&self) -> Value {
        let r = |x: &Rational| Value::String(to_fraction_string(x));
        let d = |x: &Rational| Value::String(to_decimal(x, 3));
        json!({
            "t": self.t,
            "p": r(&self.p),
            "q": r(&self.q),
            "p_decimal": d(&self.p),
            "q_decimal": d(&self.q),
            "mover": self.mover.map(|m| m.to_string()),
            "payoff_s": r(&self.payoff_s),
            "payoff_b": r(&self.payoff_b),
            "payoff_s_decimal": d(&self.payoff_s),
            "payoff_b_decimal": d(&self.payoff_b),
            "children": self.children.iter().map(|(w, c)| json!({
                "prob": r(w),
                "prob_decimal": d(w),
                "node": c.to_json_value(),
            })).collect::<Vec<_>>(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("tree serializes")
    }
}

/// Follows the equilibrium from `start` through every stored round.
///
/// Each split is recomputed from the previous round's surfaces and checked
/// against the stored surfaces and plan.
pub fn trace(logs: &[RoundLog], start: (&Rational, &Rational)) -> Result<ProtocolTree, DynamicsError> {
    let (p, q) = start;
    let unit = |x: &Rational| x >= &zero() && x <= &one();
    if !unit(p) || !unit(q) {
        return Err(DynamicsError::StartOutOfRange(Box::new(p.clone()), Box::new(q.clone())));
    }
    let top = logs.len().checked_sub(1).ok_or(DynamicsError::EmptyLog)?;
    trace_node(logs, top, p.clone(), q.clone())
}

fn trace_node(logs: &[RoundLog], t: usize, p: Rational, q: Rational) -> Result<ProtocolTree, DynamicsError> {
    let log = &logs[t];
    let (payoff_s, payoff_b) = log.payoffs(&p, &q);
    let Some(mover) = log.mover else {
        return Ok(ProtocolTree {
            t,
            p,
            q,
            mover: None,
            payoff_s,
            payoff_b,
            children: vec![],
        });
    };
    let prev = &logs[t - 1];
    let (f, g) = match mover {
        Player::B => (&prev.pi_b, &prev.pi_s),
        Player::S => (&prev.pi_s, &prev.pi_b),
    };
    let split = split_at(f, g, mover.axis(), &p, &q);
    let (mine, theirs) = match mover {
        Player::B => (&payoff_b, &payoff_s),
        Player::S => (&payoff_s, &payoff_b),
    };
    let bad = || DynamicsError::Inconsistent {
        t,
        p: Box::new(p.clone()),
        q: Box::new(q.clone()),
    };
    if &split.value != mine || &split.co_value != theirs {
        return Err(bad());
    }
    if let Some(planned) = log.plan.as_ref().and_then(|plan| plan.action_at_interior(&p, &q)) {
        // Off a measure-zero tie the plan and the pointwise split coincide;
        // on a tie the planned move must still realize the same payoffs.
        if planned != &split.action && !realizes(f, g, mover.axis(), (&p, &q), planned, (&split.value, &split.co_value)) {
            return Err(bad());
        }
    }
    let mut children = Vec::with_capacity(split.branches.len());
    let mut sum_s = zero();
    let mut sum_b = zero();
    for (x, w) in split.branches {
        let (cp, cq) = match mover {
            Player::B => (x, q.clone()),
            Player::S => (p.clone(), x),
        };
        let child = trace_node(logs, t - 1, cp, cq)?;
        sum_s += &w * &child.payoff_s;
        sum_b += &w * &child.payoff_b;
        children.push((w, child));
    }
    if sum_s != payoff_s || sum_b != payoff_b {
        return Err(bad());
    }
    Ok(ProtocolTree {
        t,
        p,
        q,
        mover: Some(mover),
        payoff_s,
        payoff_b,
        children,
    })
}

fn realizes(f: &Surface, g: &Surface, axis: Axis, pt: (&Rational, &Rational), action: &Action, target: (&Rational, &Rational)) -> bool {
    let (p, q) = pt;
    let (lo, hi) = match action {
        Action::Silent => return (&f.eval(p, q), &g.eval(p, q)) == target,
        Action::Refine { lo, hi } => (lo, hi),
    };
    let along = if axis == Axis::P { p } else { q };
    if lo >= hi || along < lo || along > hi {
        return false;
    }
    let w_hi = (along - lo) / (hi - lo);
    let w_lo = one() - &w_hi;
    let at = |x: &Rational| {
        if axis == Axis::P {
            (x.clone(), q.clone())
        } else {
            (p.clone(), x.clone())
        }
    };
    let (a, b) = (at(lo), at(hi));
    let fv = &w_lo * f.eval_at(&a) + &w_hi * f.eval_at(&b);
    let gv = &w_lo * g.eval_at(&a) + &w_hi * g.eval_at(&b);
    (&fv, &gv) == target
}

/// Smallest `t` at which neither player can gain from another message:
/// concavifying either surface along its own axis changes nothing.
pub fn detect_fixed_point(logs: &[RoundLog]) -> Option<usize> {
    logs.iter().find(|log| is_fixed_point(&log.pi_s, &log.pi_b)).map(|log| log.t)
}

pub fn is_fixed_point(pi_s: &Surface, pi_b: &Surface) -> bool {
    if !pi_b.is_concave_along(Axis::P) || !pi_s.is_concave_along(Axis::Q) {
        return false;
    }
    let b = concavify_axis(pi_b, pi_s, Axis::P);
    if !(b.f.equal(pi_b) && b.g.equal(pi_s)) {
        return false;
    }
    let s = concavify_axis(pi_s, pi_b, Axis::Q);
    s.f.equal(pi_s) && s.g.equal(pi_b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComplexityKind {
    Exact,
    LowerBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Certificate {
    FixedPoint,
    Efficiency,
    Horizon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComplexityReport {
    pub kind: ComplexityKind,
    pub value: usize,
    pub certificate: Certificate,
}

impl fmt::Display for ComplexityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cert = match self.certificate {
            Certificate::FixedPoint => "fixed point",
            Certificate::Efficiency => "efficiency",
            Certificate::Horizon => "horizon",
        };
        match self.kind {
            ComplexityKind::Exact => write!(f, "C = {} (exact, {cert})", self.value),
            ComplexityKind::LowerBound => write!(f, "C >= {} (lower bound, {cert})", self.value),
        }
    }
}

/// Message complexity at `start`.
///
/// Exact when welfare reaches `w_star` (nothing can improve on first best)
/// or when a fixed point is certified; otherwise the smallest round whose
/// welfare equals the last computed round, which is a lower bound.
pub fn message_complexity(logs: &[RoundLog], start: (&Rational, &Rational), w_star: Option<&Rational>) -> ComplexityReport {
    let (p, q) = start;
    let w: Vec<Rational> = logs.iter().map(|l| l.welfare(p, q)).collect();
    if let Some(ws) = w_star {
        if let Some(t) = w.iter().position(|x| x == ws) {
            return ComplexityReport {
                kind: ComplexityKind::Exact,
                value: t,
                certificate: Certificate::Efficiency,
            };
        }
    }
    let first_equal = |upto: usize| w.iter().position(|x| x == &w[upto]).expect("present");
    if let Some(tf) = detect_fixed_point(logs) {
        return ComplexityReport {
            kind: ComplexityKind::Exact,
            value: first_equal(tf),
            certificate: Certificate::FixedPoint,
        };
    }
    ComplexityReport {
        kind: ComplexityKind::LowerBound,
        value: first_equal(w.len() - 1),
        certificate: Certificate::Horizon,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{build_matrix, build_trade_binary, MatrixGame};
    use crate::rational::{int, rat};

    fn trade32() -> Vec<RoundLog> {
        let base = build_trade_binary(&int(3), &int(6), &int(0), &int(2)).unwrap();
        run(&base.pi_s, &base.pi_b, 2).unwrap()
    }

    #[test]
    fn trade_rounds_match_hand_values() {
        let logs = trade32();
        let (p, q) = (rat(1, 3), rat(1, 2));
        assert_eq!(logs[0].payoffs(&p, &q), (rat(13, 6), rat(1, 2)));
        assert_eq!(logs[1].payoffs(&p, &q), (rat(13, 6), rat(3, 4)));
        assert_eq!(logs[2].payoffs(&p, &q), (rat(9, 4), rat(3, 4)));
    }

    #[test]
    fn trade_trace_two_rounds() {
        let logs = trade32();
        let tree = trace(&logs, (&rat(1, 3), &rat(1, 2))).unwrap();
        assert_eq!(tree.mover, Some(Player::S));
        assert_eq!(
            tree.branches(),
            vec![(rat(1, 4), rat(1, 3), zero()), (rat(3, 4), rat(1, 3), rat(2, 3))]
        );
        let high = tree.child_at(&rat(1, 3), &rat(2, 3)).unwrap();
        assert_eq!(
            high.branches(),
            vec![(rat(8, 9), rat(1, 4), rat(2, 3)), (rat(1, 9), one(), rat(2, 3))]
        );
        let low = tree.child_at(&rat(1, 3), &zero()).unwrap();
        assert!(low.is_silent());
    }

    #[test]
    fn zero_rounds_is_a_leaf() {
        let base = build_matrix(&MatrixGame::spy());
        let logs = run(&base.pi_s, &base.pi_b, 0).unwrap();
        assert_eq!(logs.len(), 1);
        let tree = trace(&logs, (&rat(1, 2), &rat(1, 2))).unwrap();
        assert!(tree.children.is_empty());
        assert_eq!((tree.payoff_s, tree.payoff_b), (rat(1, 2), rat(-3, 2)));
    }

    #[test]
    fn premise_violation_is_reported() {
        let base = build_matrix(&MatrixGame::spy());
        let err = run(&base.pi_b, &base.pi_s, 1).unwrap_err();
        assert!(err.to_string().starts_with("voluntary communication not guaranteed"));
    }

    #[test]
    fn complexity_for_trade() {
        let logs = trade32();
        let r = message_complexity(&logs, (&rat(1, 3), &rat(1, 2)), Some(&int(3)));
        assert_eq!(
            r,
            ComplexityReport {
                kind: ComplexityKind::Exact,
                value: 2,
                certificate: Certificate::Efficiency
            }
        );
        assert_eq!(detect_fixed_point(&logs), Some(2));
    }
}
