//! JSON game specifications.
//!
//! ```json
//! {"kind": "trade_binary", "values": ["3", "6"], "costs": ["0", "2"], "start": ["1/3", "1/2"]}
//! ```
//!
//! Rationals are strings in `int` or `int/int` form. `start` is `[p, q]`.

use serde::{Deserialize, Serialize};

use crate::games::{build_matrix, build_trade_binary, BaseGame, GameError, MatrixGame, Table};
use crate::rational::{RatStr, Rational};
use crate::trade::{efficient_welfare, Dist, TradeError, TradeGame};

#[derive(Debug, thiserror::Error)]
pub enum SpecError {
    #[error("invalid game spec: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Trade(#[from] TradeError),
    #[error("this spec has no two-type surface form: {0}")]
    NotEngine(&'static str),
    #[error("no start belief given")]
    NoStart,
    #[error("start belief must lie in [0,1]²")]
    StartRange,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActionSpec {
    pub label: String,
    /// `[seller type][buyer type]`.
    pub u_s: [[RatStr; 2]; 2],
    pub u_b: [[RatStr; 2]; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GameSpec {
    Matrix {
        seller_types: [String; 2],
        buyer_types: [String; 2],
        actions: Vec<ActionSpec>,
        #[serde(default)]
        start: Option<[RatStr; 2]>,
    },
    TradeBinary {
        values: [RatStr; 2],
        costs: [RatStr; 2],
        #[serde(default)]
        start: Option<[RatStr; 2]>,
    },
    Trade {
        values: Vec<RatStr>,
        costs: Vec<RatStr>,
        buyer_dist: Vec<RatStr>,
        seller_dist: Vec<RatStr>,
        /// Default candidate grid for the round-two program.
        #[serde(default)]
        qgrid: Option<Vec<RatStr>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameFile {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(flatten)]
    pub spec: GameSpec,
}

fn table(t: &[[RatStr; 2]; 2]) -> Table {
    [[t[0][0].0.clone(), t[0][1].0.clone()], [t[1][0].0.clone(), t[1][1].0.clone()]]
}

fn rats(v: &[RatStr]) -> Vec<Rational> {
    v.iter().map(|r| r.0.clone()).collect()
}

/// A trade instance with its prior beliefs.
#[derive(Debug, Clone)]
pub struct TradeInstance {
    pub game: TradeGame,
    /// Seller-type distribution.
    pub q: Dist,
    /// Buyer-type distribution.
    pub p: Dist,
}

impl GameFile {
    pub fn parse(text: &str) -> Result<GameFile, SpecError> {
        let file: GameFile = serde_json::from_str(text)?;
        if let Some((p, q)) = file.start()? {
            let unit = |x: &Rational| x >= &crate::rational::zero() && x <= &crate::rational::one();
            if !unit(&p) || !unit(&q) {
                return Err(SpecError::StartRange);
            }
        }
        Ok(file)
    }

    /// Start belief `(p, q)` if the spec has one.
    pub fn start(&self) -> Result<Option<(Rational, Rational)>, SpecError> {
        Ok(match &self.spec {
            GameSpec::Matrix { start, .. } | GameSpec::TradeBinary { start, .. } => start.as_ref().map(|[p, q]| (p.0.clone(), q.0.clone())),
            GameSpec::Trade {
                buyer_dist,
                seller_dist,
                values,
                ..
            } => {
                if values.len() != 2 {
                    return Ok(None);
                }
                let p = buyer_dist.get(1).map(|r| r.0.clone()).ok_or(TradeError::NotADistribution)?;
                let q = seller_dist.get(1).map_or(crate::rational::zero(), |r| r.0.clone());
                Some((p, q))
            }
        })
    }

    /// Base surfaces for the round engine.
    ///
    /// A trade spec with a single seller cost is embedded as a two-type game
    /// whose seller types share that cost, so the seller belief is inert.
    pub fn base_game(&self) -> Result<BaseGame, SpecError> {
        match &self.spec {
            GameSpec::Matrix {
                seller_types,
                buyer_types,
                actions,
                ..
            } => {
                let g = MatrixGame::new(
                    seller_types.clone(),
                    buyer_types.clone(),
                    actions.iter().map(|a| a.label.clone()).collect(),
                    actions.iter().map(|a| table(&a.u_s)).collect(),
                    actions.iter().map(|a| table(&a.u_b)).collect(),
                )?;
                Ok(build_matrix(&g))
            }
            GameSpec::TradeBinary { values, costs, .. } => Ok(build_trade_binary(&values[0].0, &values[1].0, &costs[0].0, &costs[1].0)?),
            GameSpec::Trade { values, costs, .. } => {
                let game = TradeGame::new(rats(values), rats(costs))?;
                if game.values.len() != 2 {
                    return Err(SpecError::NotEngine("the round engine needs two buyer values"));
                }
                if game.costs[game.costs.len() - 1] >= game.values[0] {
                    return Err(TradeError::Ordering.into());
                }
                let v = [game.values[0].clone(), game.values[1].clone()];
                match game.costs.len() {
                    1 => Ok(build_matrix(&MatrixGame::bilateral_trade(
                        v,
                        [game.costs[0].clone(), game.costs[0].clone()],
                    ))),
                    2 => Ok(build_trade_binary(&v[0], &v[1], &game.costs[0], &game.costs[1])?),
                    _ => Err(SpecError::NotEngine("the round engine needs at most two seller costs")),
                }
            }
        }
    }

    /// Trade data with priors; binary specs take their priors from `start`.
    pub fn trade_instance(&self) -> Result<Option<TradeInstance>, SpecError> {
        match &self.spec {
            GameSpec::Matrix { .. } => Ok(None),
            GameSpec::TradeBinary { values, costs, .. } => {
                let (p, q) = self.start()?.ok_or(SpecError::NoStart)?;
                let game = TradeGame::new(rats(values), rats(costs))?;
                Ok(Some(TradeInstance {
                    game,
                    q: Dist::binary(&q),
                    p: Dist::binary(&p),
                }))
            }
            GameSpec::Trade {
                values,
                costs,
                buyer_dist,
                seller_dist,
                ..
            } => {
                let game = TradeGame::new(rats(values), rats(costs))?;
                let p = Dist::new(rats(buyer_dist))?;
                let q = Dist::new(rats(seller_dist))?;
                if p.len() != game.values.len() || q.len() != game.costs.len() {
                    return Err(TradeError::Length {
                        got: p.len().max(q.len()),
                        want: game.values.len().max(game.costs.len()),
                    }
                    .into());
                }
                Ok(Some(TradeInstance { game, q, p }))
            }
        }
    }

    /// First-best welfare at a belief point of the engine square; `None`
    /// for non-trade games.
    pub fn w_star_at(&self, p: &Rational, q: &Rational) -> Result<Option<Rational>, SpecError> {
        let Some(inst) = self.trade_instance()? else {
            return Ok(None);
        };
        let qd = if inst.game.costs.len() == 1 {
            inst.q.clone()
        } else {
            Dist::binary(q)
        };
        Ok(Some(efficient_welfare(&inst.game, &qd, &Dist::binary(p))?))
    }

    pub fn qgrid(&self) -> Option<Vec<Rational>> {
        match &self.spec {
            GameSpec::Trade { qgrid: Some(g), .. } => Some(rats(g)),
            _ => None,
        }
    }
}

/// Specs shipped with the crate, by file stem.
pub fn bundled(name: &str) -> Option<&'static str> {
    Some(match name {
        "spy" => include_str!("../games/spy.json"),
        "trade_single_cost" => include_str!("../games/trade_single_cost.json"),
        "trade_two_costs" => include_str!("../games/trade_two_costs.json"),
        "trade_three_values" => include_str!("../games/trade_three_values.json"),
        _ => return None,
    })
}

pub const BUNDLED: [&str; 4] = ["spy", "trade_single_cost", "trade_two_costs", "trade_three_values"];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    #[test]
    fn bundled_specs_parse() {
        for name in BUNDLED {
            let f = GameFile::parse(bundled(name).unwrap()).unwrap();
            assert!(f.name.is_some(), "{name}");
        }
    }

    #[test]
    fn spy_spec_matches_builtin() {
        let f = GameFile::parse(bundled("spy").unwrap()).unwrap();
        let a = f.base_game().unwrap();
        let b = build_matrix(&MatrixGame::spy());
        assert!(a.pi_s.equal(&b.pi_s) && a.pi_b.equal(&b.pi_b));
        assert_eq!(f.start().unwrap(), Some((rat(1, 2), rat(1, 2))));
    }

    #[test]
    fn trade_specs() {
        let f = GameFile::parse(bundled("trade_single_cost").unwrap()).unwrap();
        let (p, q) = f.start().unwrap().unwrap();
        assert_eq!(p, rat(1, 3));
        assert_eq!(f.w_star_at(&p, &q).unwrap(), Some(int(2)));
        let base = f.base_game().unwrap();
        assert_eq!(base.pi_s.eval(&p, &q), rat(4, 3));
        let f = GameFile::parse(bundled("trade_three_values").unwrap()).unwrap();
        assert!(matches!(f.base_game(), Err(SpecError::NotEngine(_))));
        assert_eq!(f.trade_instance().unwrap().unwrap().game.values.len(), 3);
    }

    #[test]
    fn malformed_specs_are_rejected() {
        assert!(GameFile::parse(r#"{"kind":"trade_binary","values":["3","6"],"costs":["0","2.5"]}"#).is_err());
        assert!(GameFile::parse(r#"{"kind":"nope"}"#).is_err());
        assert!(GameFile::parse(r#"{"kind":"trade_binary","values":["3","6"],"costs":["0","2"],"start":["2","0"]}"#).is_err());
        let f = GameFile::parse(r#"{"kind":"trade_binary","values":["3","6"],"costs":["2","0"]}"#).unwrap();
        assert!(f.base_game().is_err());
    }
}
