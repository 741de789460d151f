//! Exact solver for two-player pre-play communication games with binary
//! types: payoff surfaces over the belief square, alternating
//! concavification, protocol extraction, and a bilateral-trade toolkit.

pub mod concavify;
pub mod dynamics;
pub mod export;
pub mod gamefile;
pub mod games;
pub mod lp;
pub mod rational;
pub mod surface;
pub mod trade;

pub use rational::Rational;
