use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use parley_core::dynamics::{message_complexity, run, trace, RoundLog};
use parley_core::export;
use parley_core::gamefile::{bundled, GameFile, TradeInstance, BUNDLED};
use parley_core::rational::{one, parse_rational, to_compact_string, to_decimal, to_fraction_string, zero};
use parley_core::trade::{bbm_decompose, lp3_best_response, pi0, round2_concavify, two_round_protocol, welfare, BobMove, Dist, LpMode};
use parley_core::Rational;

#[derive(Parser)]
#[command(
    name = "parley",
    version,
    about = "Exact solver for pre-play communication games with binary types"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Payoff table per round at the start belief.
    Solve(Common),
    /// Realized protocol tree from the start belief.
    Trace(Common),
    /// Strategy partition of one round as a square diagram.
    Partition {
        #[command(flatten)]
        common: Common,
        /// Round to draw; defaults to the last one.
        #[arg(long)]
        round: Option<usize>,
    },
    /// Bilateral-trade toolkit.
    Trade {
        #[arg(value_enum)]
        sub: TradeCmd,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TradeCmd {
    TwoRound,
    Bbm,
    Lp3,
    Complexity,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
    Dot,
    Svg,
}

#[derive(Clone, Copy, ValueEnum)]
enum LpModeArg {
    Voluntary,
    LiteralZero,
}

#[derive(Args)]
struct Common {
    /// Game spec JSON, or the name of a bundled spec.
    #[arg(long)]
    game: String,
    #[arg(long)]
    rounds: Option<usize>,
    /// Start belief `P,Q`, overriding the spec.
    #[arg(long)]
    start: Option<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long, value_enum, default_value = "voluntary")]
    lp_mode: LpModeArg,
    /// Comma-separated candidate seller beliefs for the round-two program.
    #[arg(long)]
    qgrid: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_list(s: &str) -> Result<Vec<Rational>> {
    s.split(',')
        .map(|x| parse_rational(x.trim()).with_context(|| format!("bad rational {x:?}")))
        .collect()
}

fn in_unit(x: &Rational) -> bool {
    x >= &zero() && x <= &one()
}

impl Common {
    fn load(&self) -> Result<GameFile> {
        let path = Path::new(&self.game);
        let text = if path.exists() {
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?
        } else if let Some(t) = bundled(&self.game) {
            t.to_string()
        } else {
            bail!("no such game file {:?} (bundled specs: {})", self.game, BUNDLED.join(", "));
        };
        Ok(GameFile::parse(&text)?)
    }

    fn start(&self, file: &GameFile) -> Result<(Rational, Rational)> {
        if let Some(s) = &self.start {
            let v = parse_list(s)?;
            if v.len() != 2 {
                bail!("--start expects P,Q");
            }
            if !in_unit(&v[0]) || !in_unit(&v[1]) {
                bail!("--start must lie in [0,1]²");
            }
            return Ok((v[0].clone(), v[1].clone()));
        }
        file.start()?.context("spec has no start belief; pass --start P,Q")
    }

    fn rounds(&self) -> Result<usize> {
        self.rounds.context("--rounds is required for this command")
    }

    fn lp_mode(&self) -> LpMode {
        match self.lp_mode {
            LpModeArg::Voluntary => LpMode::Voluntary,
            LpModeArg::LiteralZero => LpMode::LiteralZero,
        }
    }

    fn format(&self, default: Format, allowed: &[Format]) -> Result<Format> {
        let f = self.format.unwrap_or(default);
        if !allowed.contains(&f) {
            bail!(
                "format {:?} is not available for this command",
                f.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
            );
        }
        Ok(f)
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    /// Trade data; `--start` overrides binary priors.
    fn instance(&self, file: &GameFile) -> Result<TradeInstance> {
        let mut inst = file.trade_instance()?.context("this command needs a trade spec")?;
        if let Some(s) = &self.start {
            let v = parse_list(s)?;
            if v.len() != 2 || !in_unit(&v[0]) || !in_unit(&v[1]) {
                bail!("--start expects P,Q in [0,1]");
            }
            if inst.game.values.len() == 2 {
                inst.p = Dist::binary(&v[0]);
            }
            if inst.game.costs.len() == 2 {
                inst.q = Dist::binary(&v[1]);
            }
        }
        Ok(inst)
    }
}

fn engine(common: &Common) -> Result<(GameFile, Vec<RoundLog>, (Rational, Rational))> {
    let file = common.load()?;
    let start = common.start(&file)?;
    let base = file.base_game()?;
    let logs = run(&base.pi_s, &base.pi_b, common.rounds()?)?;
    // Re-derives every split from the surfaces; fails on any disagreement.
    trace(&logs, (&start.0, &start.1))?;
    Ok((file, logs, start))
}

fn pair(x: &(Rational, Rational)) -> String {
    format!("({}, {})", to_compact_string(&x.0), to_compact_string(&x.1))
}

fn cmd_solve(c: &Common) -> Result<String> {
    let (_, logs, (p, q)) = engine(c)?;
    let rows = export::payoff_rows(&logs, &p, &q);
    Ok(match c.format(Format::Text, &[Format::Text, Format::Csv, Format::Json])? {
        Format::Csv => export::rows_csv(&rows),
        Format::Json => export::rows_json(&rows) + "\n",
        _ => export::rows_text(&rows),
    })
}

fn cmd_trace(c: &Common) -> Result<String> {
    let (_, logs, (p, q)) = engine(c)?;
    let tree = trace(&logs, (&p, &q))?;
    Ok(match c.format(Format::Json, &[Format::Json, Format::Dot, Format::Text])? {
        Format::Dot => export::tree_dot(&tree),
        Format::Text => export::tree_text(&tree),
        _ => tree.to_json() + "\n",
    })
}

fn cmd_partition(c: &Common, round: Option<usize>) -> Result<String> {
    let file = c.load()?;
    let base = file.base_game()?;
    let rounds = c.rounds()?;
    let t = round.unwrap_or(rounds);
    if t > rounds {
        bail!("--round {t} exceeds --rounds {rounds}");
    }
    let logs = run(&base.pi_s, &base.pi_b, t)?;
    let fmt = c.format(Format::Svg, &[Format::Svg, Format::Dot, Format::Json, Format::Text])?;
    let title = format!("t={t}");
    let Some(plan) = &logs[t].plan else {
        return Ok(match fmt {
            Format::Dot => export::regions_dot(&base.regions, &title),
            Format::Text => export::regions_text(&base.regions),
            Format::Json => {
                let v: Vec<_> = base
                    .regions
                    .iter()
                    .map(|(lo, hi, l)| json!({"p": [to_fraction_string(lo), to_fraction_string(hi)], "actions": l}))
                    .collect();
                serde_json::to_string_pretty(&v)? + "\n"
            }
            _ => export::regions_svg(&base.regions, &title),
        });
    };
    Ok(match fmt {
        Format::Dot => export::partition_dot(plan, &title),
        Format::Text => export::partition_text(plan),
        Format::Json => plan.to_json() + "\n",
        _ => export::partition_svg(plan, &title),
    })
}

fn dist_text(d: &Dist) -> String {
    let parts: Vec<String> = d.probs.iter().map(to_compact_string).collect();
    format!("[{}]", parts.join(", "))
}

fn cmd_two_round(c: &Common) -> Result<String> {
    let file = c.load()?;
    let inst = c.instance(&file)?;
    if inst.p.len() != 2 {
        bail!("two-round needs a binary buyer");
    }
    let r = two_round_protocol(&inst.game, &inst.q, &inst.p.probs[1])?;
    let mut out = format!("prior p = {}, q = {}\n", to_compact_string(&r.p), dist_text(&r.q));
    out += "Sally splits q:\n";
    for b in &r.branches {
        let bob = match &b.bob {
            BobMove::Silent => "Bob silent".to_string(),
            BobMove::Split(s) => {
                let parts: Vec<String> = s
                    .iter()
                    .map(|(w, x)| format!("{} -> p={}", to_compact_string(w), to_compact_string(x)))
                    .collect();
                format!("Bob splits {}", parts.join(", "))
            }
        };
        out += &format!(
            "  {} -> q={}  {bob}  payoffs {}\n",
            to_compact_string(&b.weight),
            dist_text(&b.q),
            pair(&b.payoffs)
        );
    }
    for (name, x) in [("pi0", &r.pi0), ("pi1", &r.pi1), ("pi2", &r.pi2)] {
        out += &format!("{name} (S, B) = {}  W = {}\n", pair(x), to_compact_string(&welfare(x)));
    }
    out += &format!("W* = {}\n", to_compact_string(&r.w_star));
    out += if r.is_efficient() {
        "verdict: efficient after two rounds\n"
    } else {
        "verdict: not efficient\n"
    };
    Ok(out)
}

fn cmd_bbm(c: &Common) -> Result<String> {
    let file = c.load()?;
    let inst = c.instance(&file)?;
    let mut out = String::new();
    for (k, cost) in inst.game.costs.iter().enumerate() {
        let r = bbm_decompose(&inst.game, k, &inst.p)?;
        out += &format!("cost {}:\n", to_compact_string(cost));
        for (w, d) in &r.branches {
            let post = if d.len() == 2 {
                format!("p={}", to_compact_string(&d.probs[1]))
            } else {
                dist_text(d)
            };
            out += &format!("  ({}, {post})\n", to_compact_string(w));
        }
    }
    Ok(out)
}

fn qgrid(c: &Common, file: &GameFile) -> Result<Vec<Rational>> {
    match &c.qgrid {
        Some(s) => parse_list(s),
        None => Ok(file.qgrid().unwrap_or_else(|| vec![zero(), one()])),
    }
}

/// Three rounds of the three-value program: no talk, one buyer message, and
/// a seller message over the candidate grid.
struct Chain {
    /// `(S, B)` for t = 0, 1, 2.
    rows: Vec<(Rational, Rational)>,
    w_star: Rational,
    /// Seller's round-two split as `(weight, q)`.
    branches: Vec<(Rational, Rational)>,
}

fn lp3_chain(c: &Common, file: &GameFile) -> Result<Chain> {
    let inst = c.instance(file)?;
    if inst.q.len() != 2 {
        bail!("lp3 needs two seller costs");
    }
    let q = inst.q.probs[1].clone();
    let mode = c.lp_mode();
    let p0 = pi0(&inst.game, &inst.q, &inst.p)?;
    let r1 = lp3_best_response(&inst.game, &q, &inst.p, mode)?;
    let r2 = round2_concavify(&inst.game, &q, &inst.p, &qgrid(c, file)?, mode)?;
    let w_star = parley_core::trade::efficient_welfare(&inst.game, &inst.q, &inst.p)?;
    Ok(Chain {
        rows: vec![p0, (r1.pi1_s, r1.pi1_b), (r2.pi2_s, r2.pi2_b)],
        w_star,
        branches: r2.branches,
    })
}

fn chain_text(rows: &[(Rational, Rational)], w_star: &Rational) -> String {
    let mut out = String::from("t  (S, B)  W\n");
    for (t, r) in rows.iter().enumerate() {
        out += &format!(
            "{t}  {}  {} ({})\n",
            pair(r),
            to_compact_string(&welfare(r)),
            to_decimal(&welfare(r), 3)
        );
    }
    out += &format!("W* = {}\n", to_compact_string(w_star));
    out
}

fn lp3_verdict(rows: &[(Rational, Rational)], w_star: &Rational) -> String {
    match rows.iter().position(|r| &welfare(r) == w_star) {
        Some(t) => format!("verdict: efficient at t={t}, C <= {t}\n"),
        None => format!("verdict: C >= {} (no efficiency within {} rounds)\n", rows.len(), rows.len() - 1),
    }
}

fn cmd_lp3(c: &Common) -> Result<String> {
    let file = c.load()?;
    let Chain { rows, w_star, branches } = lp3_chain(c, &file)?;
    let mut out = chain_text(&rows, &w_star);
    let parts: Vec<String> = branches
        .iter()
        .map(|(w, q)| format!("({}, {})", to_compact_string(w), to_compact_string(q)))
        .collect();
    out += &format!("Sally t=2 refinement: {}\n", parts.join(", "));
    out += &lp3_verdict(&rows, &w_star);
    Ok(out)
}

fn cmd_complexity(c: &Common) -> Result<String> {
    let file = c.load()?;
    if file.base_game().is_err() {
        let chain = lp3_chain(c, &file)?;
        return Ok(chain_text(&chain.rows, &chain.w_star) + &lp3_verdict(&chain.rows, &chain.w_star));
    }
    let (file, logs, (p, q)) = engine(c)?;
    let w_star = file.w_star_at(&p, &q)?;
    let mut out = String::from("t  W\n");
    for l in &logs {
        let w = l.welfare(&p, &q);
        out += &format!("{}  {} ({})\n", l.t, to_compact_string(&w), to_decimal(&w, 3));
    }
    if let Some(ws) = &w_star {
        out += &format!("W* = {}\n", to_compact_string(ws));
    }
    out += &format!("{}\n", message_complexity(&logs, (&p, &q), w_star.as_ref()));
    Ok(out)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let (common, text) = match &cli.command {
        Command::Solve(c) => (c, cmd_solve(c)?),
        Command::Trace(c) => (c, cmd_trace(c)?),
        Command::Partition { common, round } => (common, cmd_partition(common, *round)?),
        Command::Trade { sub, common } => {
            common.format(Format::Text, &[Format::Text])?;
            let text = match sub {
                TradeCmd::TwoRound => cmd_two_round(common)?,
                TradeCmd::Bbm => cmd_bbm(common)?,
                TradeCmd::Lp3 => cmd_lp3(common)?,
                TradeCmd::Complexity => cmd_complexity(common)?,
            };
            (common, text)
        }
    };
    common.emit(&text)
}
