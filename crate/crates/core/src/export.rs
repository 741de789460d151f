//! Text, CSV, JSON, DOT and SVG renderings of engine output.
//!
//! Every decimal is printed next to the exact rational it rounds.

use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::concavify::{Action, StrategyPartition};
use crate::dynamics::{ProtocolTree, RoundLog};
use crate::rational::{to_decimal, to_fraction_string, Rational};
use crate::surface::Axis;

/// Payoffs at one belief point after round `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PayoffRow {
    pub t: usize,
    pub mover: String,
    pub s: Rational,
    pub b: Rational,
}

impl PayoffRow {
    pub fn welfare(&self) -> Rational {
        &self.s + &self.b
    }
}

pub fn payoff_rows(logs: &[RoundLog], p: &Rational, q: &Rational) -> Vec<PayoffRow> {
    logs.iter()
        .map(|l| {
            let (s, b) = l.payoffs(p, q);
            PayoffRow {
                t: l.t,
                mover: l.mover.map_or("-".to_string(), |m| m.to_string()),
                s,
                b,
            }
        })
        .collect()
}

const HEADER: [&str; 8] = ["t", "mover", "S", "B", "W", "S_dec", "B_dec", "W_dec"];

fn row_fields(r: &PayoffRow) -> [String; 8] {
    let w = r.welfare();
    [
        r.t.to_string(),
        r.mover.clone(),
        label(&r.s),
        label(&r.b),
        label(&w),
        to_decimal(&r.s, 3),
        to_decimal(&r.b, 3),
        to_decimal(&w, 3),
    ]
}

pub fn rows_text(rows: &[PayoffRow]) -> String {
    let body: Vec<[String; 8]> = rows.iter().map(row_fields).collect();
    let mut width = HEADER.map(str::len);
    for r in &body {
        for (w, f) in width.iter_mut().zip(r) {
            *w = (*w).max(f.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |fields: &[String]| {
        let cols: Vec<String> = fields.iter().zip(&width).map(|(f, w)| format!("{f:>w$}")).collect();
        out.push_str(cols.join("  ").trim_end());
        out.push('\n');
    };
    line(&HEADER.map(String::from));
    for r in &body {
        line(r);
    }
    out
}

pub fn rows_csv(rows: &[PayoffRow]) -> String {
    let mut out = HEADER.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&row_fields(r).join(","));
        out.push('\n');
    }
    out
}

pub fn rows_json(rows: &[PayoffRow]) -> String {
    let v: Vec<Value> = rows
        .iter()
        .map(|r| {
            let f = row_fields(r);
            json!({
                "t": r.t, "mover": f[1],
                "s": frac(&r.s), "b": frac(&r.b), "w": frac(&r.welfare()),
                "s_decimal": f[5], "b_decimal": f[6], "w_decimal": f[7],
            })
        })
        .collect();
    serde_json::to_string_pretty(&v).expect("rows serialize")
}

fn frac(r: &Rational) -> String {
    to_fraction_string(r)
}

/// Short exact label: integers without a denominator.
fn label(r: &Rational) -> String {
    crate::rational::to_compact_string(r)
}

fn mover_color(axis: Axis) -> &'static str {
    match axis {
        Axis::P => "blue",
        Axis::Q => "red",
    }
}

fn action_text(axis: Axis, a: &Action) -> String {
    match a {
        Action::Silent => "silent".into(),
        Action::Refine { lo, hi } => format!("{axis} -> {{{}, {}}}", label(lo), label(hi)),
    }
}

/// Graphviz (neato) diagram of a round plan: one box per rectangle at its
/// position in the square, and arrows from each box to the posteriors.
pub fn partition_dot(plan: &StrategyPartition, title: &str) -> String {
    const SCALE: f64 = 6.0;
    let pos = |p: &Rational, q: &Rational| {
        format!(
            "{:.4},{:.4}!",
            crate::rational::to_f64(p) * SCALE,
            crate::rational::to_f64(q) * SCALE
        )
    };
    let color = mover_color(plan.axis);
    let mut out = String::new();
    writeln!(out, "digraph plan {{").unwrap();
    writeln!(out, "  layout=neato;").unwrap();
    writeln!(out, "  label=\"{}\";", title.replace('"', "'")).unwrap();
    writeln!(out, "  node [fontsize=9];").unwrap();
    for (k, r) in plan.rects.iter().enumerate() {
        let half = Rational::new(1.into(), 2.into());
        let cp = (&r.p.0 + &r.p.1) * &half;
        let cq = (&r.q.0 + &r.q.1) * &half;
        let w = crate::rational::to_f64(&(&r.p.1 - &r.p.0)) * SCALE;
        let h = crate::rational::to_f64(&(&r.q.1 - &r.q.0)) * SCALE;
        writeln!(
            out,
            "  r{k} [shape=box, fixedsize=true, width={w:.4}, height={h:.4}, pos=\"{}\", label=\"p [{}, {}]\\nq [{}, {}]\\n{}\"];",
            pos(&cp, &cq),
            label(&r.p.0),
            label(&r.p.1),
            label(&r.q.0),
            label(&r.q.1),
            action_text(plan.axis, &r.action)
        )
        .unwrap();
        if let Action::Refine { lo, hi } = &r.action {
            for (side, x) in [("lo", lo), ("hi", hi)] {
                let (tp, tq) = match plan.axis {
                    Axis::P => (x.clone(), cq.clone()),
                    Axis::Q => (cp.clone(), x.clone()),
                };
                writeln!(out, "  r{k}{side} [shape=point, color={color}, pos=\"{}\"];", pos(&tp, &tq)).unwrap();
                writeln!(out, "  r{k} -> r{k}{side} [color={color}];").unwrap();
            }
        }
    }
    writeln!(out, "}}").unwrap();
    out
}

const SVG_SIZE: f64 = 480.0;
const SVG_MARGIN: f64 = 60.0;

fn sx(p: &Rational) -> f64 {
    SVG_MARGIN + crate::rational::to_f64(p) * SVG_SIZE
}

/// `q` grows upward.
fn sy(q: &Rational) -> f64 {
    SVG_MARGIN + (1.0 - crate::rational::to_f64(q)) * SVG_SIZE
}

fn svg_open(title: &str) -> String {
    let total = SVG_SIZE + 2.0 * SVG_MARGIN;
    let mut out = String::new();
    writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total}" height="{total}" viewBox="0 0 {total} {total}" font-family="sans-serif" font-size="11">"#).unwrap();
    writeln!(
        out,
        r#"<defs><marker id="ab" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="6" markerHeight="6" orient="auto"><path d="M0,0 L10,5 L0,10 z" fill="blue"/></marker><marker id="ar" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="6" markerHeight="6" orient="auto"><path d="M0,0 L10,5 L0,10 z" fill="red"/></marker></defs>"#
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        total / 2.0,
        xml_escape(title)
    )
    .unwrap();
    writeln!(
        out,
        r#"<rect x="{SVG_MARGIN}" y="{SVG_MARGIN}" width="{SVG_SIZE}" height="{SVG_SIZE}" fill="white" stroke="black"/>"#
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">p</text>"#,
        total / 2.0,
        total - 12.0
    )
    .unwrap();
    writeln!(out, r#"<text x="14" y="{}" text-anchor="middle">q</text>"#, total / 2.0).unwrap();
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn axis_labels(out: &mut String, p_cuts: &[Rational], q_cuts: &[Rational]) {
    for x in p_cuts {
        writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            sx(x),
            SVG_MARGIN + SVG_SIZE + 16.0,
            label(x)
        )
        .unwrap();
    }
    for y in q_cuts {
        writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            SVG_MARGIN - 6.0,
            sy(y) + 4.0,
            label(y)
        )
        .unwrap();
    }
}

fn with_ends(mut cuts: Vec<Rational>) -> Vec<Rational> {
    cuts.insert(0, crate::rational::zero());
    cuts.push(crate::rational::one());
    cuts
}

/// Self-contained SVG of a round plan: rectangles with exact cut labels and
/// arrows to the posteriors (blue for `p`, red for `q`).
pub fn partition_svg(plan: &StrategyPartition, title: &str) -> String {
    let mut out = svg_open(title);
    let half = Rational::new(1.into(), 2.into());
    let (color, marker) = match plan.axis {
        Axis::P => ("blue", "ab"),
        Axis::Q => ("red", "ar"),
    };
    for r in &plan.rects {
        writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}" stroke="gray"/>"#,
            sx(&r.p.0),
            sy(&r.q.1),
            sx(&r.p.1) - sx(&r.p.0),
            sy(&r.q.0) - sy(&r.q.1),
            if r.action == Action::Silent { "#f4f4f4" } else { "white" }
        )
        .unwrap();
        let cp = (&r.p.0 + &r.p.1) * &half;
        let cq = (&r.q.0 + &r.q.1) * &half;
        if let Action::Refine { lo, hi } = &r.action {
            for x in [lo, hi] {
                let (x1, y1, x2, y2) = match plan.axis {
                    Axis::P => (sx(&cp), sy(&cq), sx(x), sy(&cq)),
                    Axis::Q => (sx(&cp), sy(&cq), sx(&cp), sy(x)),
                };
                writeln!(out, r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{color}" stroke-width="1.5" marker-end="url(#{marker})"/>"#).unwrap();
            }
            writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, sx(&cp), sy(&cq)).unwrap();
        }
    }
    axis_labels(&mut out, &with_ends(plan.cuts(Axis::P)), &with_ends(plan.cuts(Axis::Q)));
    out.push_str("</svg>\n");
    out
}

/// Base-game action regions, `(p_lo, p_hi, label)`, as DOT.
pub fn regions_dot(regions: &[(Rational, Rational, String)], title: &str) -> String {
    let mut out = String::new();
    writeln!(out, "digraph regions {{").unwrap();
    writeln!(out, "  rankdir=LR;").unwrap();
    writeln!(out, "  label=\"{}\";", title.replace('"', "'")).unwrap();
    writeln!(out, "  node [shape=box, fontsize=9];").unwrap();
    for (k, (lo, hi, name)) in regions.iter().enumerate() {
        writeln!(out, "  g{k} [label=\"{name}\\np [{}, {}]\"];", label(lo), label(hi)).unwrap();
        if k > 0 {
            writeln!(out, "  g{} -> g{k} [style=invis];", k - 1).unwrap();
        }
    }
    writeln!(out, "}}").unwrap();
    out
}

pub fn regions_svg(regions: &[(Rational, Rational, String)], title: &str) -> String {
    let mut out = svg_open(title);
    let half = Rational::new(1.into(), 2.into());
    for (lo, hi, name) in regions {
        writeln!(
            out,
            r#"<rect x="{:.2}" y="{SVG_MARGIN}" width="{:.2}" height="{SVG_SIZE}" fill="white" stroke="gray"/>"#,
            sx(lo),
            sx(hi) - sx(lo)
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{}</text>"#,
            sx(&((lo + hi) * &half)),
            sy(&half),
            xml_escape(name)
        )
        .unwrap();
    }
    let mut cuts: Vec<Rational> = regions.iter().map(|r| r.0.clone()).collect();
    if let Some(last) = regions.last() {
        cuts.push(last.1.clone());
    }
    axis_labels(&mut out, &cuts, &[crate::rational::zero(), crate::rational::one()]);
    out.push_str("</svg>\n");
    out
}

pub fn regions_text(regions: &[(Rational, Rational, String)]) -> String {
    regions
        .iter()
        .map(|(lo, hi, name)| format!("p [{}, {}]  {name}\n", label(lo), label(hi)))
        .collect()
}

pub fn partition_text(plan: &StrategyPartition) -> String {
    let mut out = format!("mover axis: {}\n", plan.axis);
    for r in &plan.rects {
        writeln!(
            out,
            "p [{}, {}]  q [{}, {}]  {}",
            label(&r.p.0),
            label(&r.p.1),
            label(&r.q.0),
            label(&r.q.1),
            action_text(plan.axis, &r.action)
        )
        .unwrap();
    }
    out
}

/// Protocol tree as DOT; edges carry branch probabilities, coloured by mover.
pub fn tree_dot(tree: &ProtocolTree) -> String {
    fn walk(node: &ProtocolTree, id: &mut usize, out: &mut String) -> usize {
        let me = *id;
        *id += 1;
        writeln!(
            out,
            "  n{me} [label=\"t={}  ({}, {})\\nS={}  B={}\"];",
            node.t,
            label(&node.p),
            label(&node.q),
            label(&node.payoff_s),
            label(&node.payoff_b)
        )
        .unwrap();
        let color = node.mover.map_or("black", |m| mover_color(m.axis()));
        for (w, child) in &node.children {
            let c = walk(child, id, out);
            writeln!(out, "  n{me} -> n{c} [label=\"{}\", color={color}, fontcolor={color}];", label(w)).unwrap();
        }
        me
    }
    let mut out = String::from("digraph protocol {\n  node [shape=box, fontsize=9];\n");
    walk(tree, &mut 0, &mut out);
    out.push_str("}\n");
    out
}

/// Indented text rendering of a protocol tree.
pub fn tree_text(tree: &ProtocolTree) -> String {
    fn walk(node: &ProtocolTree, prob: Option<&Rational>, depth: usize, out: &mut String) {
        let lead = "  ".repeat(depth);
        let w = prob.map_or(String::new(), |w| format!("[{}] ", label(w)));
        let mover = node.mover.map_or("leaf".to_string(), |m| format!("{m} moves"));
        writeln!(
            out,
            "{lead}{w}t={} (p={}, q={}) S={} B={} {mover}",
            node.t,
            label(&node.p),
            label(&node.q),
            label(&node.payoff_s),
            label(&node.payoff_b)
        )
        .unwrap();
        for (w, c) in &node.children {
            walk(c, Some(w), depth + 1, out);
        }
    }
    let mut out = String::new();
    walk(tree, None, 0, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{run, trace};
    use crate::games::{build_matrix, MatrixGame};
    use crate::rational::rat;

    fn spy_logs() -> Vec<RoundLog> {
        let base = build_matrix(&MatrixGame::spy());
        run(&base.pi_s, &base.pi_b, 2).unwrap()
    }

    #[test]
    fn table_formats_agree() {
        let rows = payoff_rows(&spy_logs(), &rat(1, 2), &rat(1, 2));
        let csv = rows_csv(&rows);
        assert!(csv.lines().nth(2).unwrap().starts_with("1,B,1/2,-1/6,1/3,0.500,-0.167,0.333"));
        let v: Value = serde_json::from_str(&rows_json(&rows)).unwrap();
        assert_eq!(v[2]["s"], "13/18");
        assert_eq!(rows_text(&rows).lines().count(), 4);
    }

    #[test]
    fn diagrams_carry_exact_cuts() {
        let logs = spy_logs();
        let plan = logs[1].plan.as_ref().unwrap();
        let svg = partition_svg(plan, "t=1");
        assert!(svg.contains(">4/9<") && svg.contains(">5/9<") && svg.contains("stroke=\"blue\""));
        let dot = partition_dot(plan, "t=1");
        assert!(dot.contains("color=blue") && dot.contains("q [4/9, 5/9]"));
        let base = build_matrix(&MatrixGame::spy());
        let regions = regions_svg(&base.regions, "t=0");
        for l in ["C/E", "E/E", "E/C"] {
            assert!(regions.contains(l));
        }
    }

    #[test]
    fn tree_renderings() {
        let logs = spy_logs();
        let tree = trace(&logs, (&rat(1, 2), &rat(1, 2))).unwrap();
        let dot = tree_dot(&tree);
        assert!(dot.starts_with("digraph protocol"));
        assert_eq!(dot.matches(" -> ").count(), tree_text(&tree).lines().count() - 1);
    }
}
