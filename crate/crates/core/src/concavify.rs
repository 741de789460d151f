//! Upper concave envelopes along one axis, with lexicographic tie-breaking.
//!
//! The mover's surface `F` is replaced by its concave hull along the moved
//! axis; among the splits that attain the hull, the one maximizing the other
//! player's surface `G` is selected, which defines `G'`.
//!
//! Along the transverse coordinate every breakpoint value is linear, so each
//! orientation test of the hull is a linear function of that coordinate. The
//! hull combinatorics is constant until one of those tests changes sign; the
//! sweep in [`concavify_axis`] inserts a transverse cut at every such root.

use std::cmp::Ordering;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{one, zero, RatStr, Rational};
use crate::surface::{merge_sorted, Axis, Bilinear, Grid, Lin, Surface};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConcavifyError {
    #[error("hull input needs at least two points with x = 0 and x = 1 at the ends")]
    MissingEndpoints,
    #[error("hull input x coordinates must be strictly increasing")]
    Unsorted,
    #[error("query {0} is outside [0,1]")]
    QueryOutOfRange(Rational),
}

/// One breakpoint of a slice: coordinate along the hulled axis, the mover's
/// value `f`, and the other player's value `g`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HullVertex {
    pub x: Rational,
    pub f: Rational,
    pub g: Rational,
}

impl HullVertex {
    pub fn new(x: Rational, f: Rational, g: Rational) -> Self {
        HullVertex { x, f, g }
    }
}

/// Hull value, companion value, and the posterior split that realizes both.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HullPoint {
    pub value: Rational,
    pub co_value: Rational,
    /// `(x, weight)` pairs; one entry when the query is itself a hull vertex.
    pub support: Vec<(Rational, Rational)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Which {
    F,
    G,
}

/// A sign that must hold for the hull structure to stay valid.
#[derive(Debug, Clone)]
struct Certificate {
    which: Which,
    i: usize,
    j: usize,
    k: usize,
}

/// Combinatorial hull structure of one slice.
#[derive(Debug, Clone)]
struct Structure {
    /// Indices where both `F'` and `G'` may kink. Always contains both ends.
    breaks: Vec<usize>,
    certificates: Vec<Certificate>,
}

/// Monotone-chain upper hull over `idx` (already sorted by x).
fn upper_chain(idx: &[usize], which: Which, keep_collinear: bool, sign: &impl Fn(Which, usize, usize, usize) -> Ordering) -> Vec<usize> {
    let mut h: Vec<usize> = Vec::with_capacity(idx.len());
    for &k in idx {
        while h.len() >= 2 {
            let s = sign(which, h[h.len() - 2], h[h.len() - 1], k);
            let pop = if keep_collinear {
                s == Ordering::Less
            } else {
                s != Ordering::Greater
            };
            if !pop {
                break;
            }
            h.pop();
        }
        h.push(k);
    }
    h
}

/// `sign(which, i, j, k)` must report whether point `j` lies above (Greater),
/// on (Equal) or below (Less) the chord from `i` to `k`.
fn analyze(n: usize, sign: impl Fn(Which, usize, usize, usize) -> Ordering) -> Structure {
    let all: Vec<usize> = (0..n).collect();
    let chain = upper_chain(&all, Which::F, true, &sign);
    let mut strict = vec![chain[0]];
    for w in chain.windows(3) {
        if sign(Which::F, w[0], w[1], w[2]) == Ordering::Greater {
            strict.push(w[1]);
        }
    }
    strict.push(chain[chain.len() - 1]);

    let mut certificates = Vec::new();
    let cert = |which, i, j, k| Certificate { which, i, j, k };
    for w in strict.windows(3) {
        certificates.push(cert(Which::F, w[0], w[1], w[2]));
    }
    // Every point strictly inside a primary face is either a contact
    // (identically on the face) or strictly below it.
    for w in strict.windows(2) {
        for k in w[0] + 1..w[1] {
            certificates.push(cert(Which::F, w[0], k, w[1]));
        }
    }

    let mut breaks = Vec::new();
    let mut c = 0;
    for w in strict.windows(2) {
        let (a, b) = (w[0], w[1]);
        while chain[c] != a {
            c += 1;
        }
        let start = c;
        while chain[c] != b {
            c += 1;
        }
        let contacts = &chain[start..=c];
        let sec = upper_chain(contacts, Which::G, false, &sign);
        for t in sec.windows(3) {
            certificates.push(cert(Which::G, t[0], t[1], t[2]));
        }
        let mut s = 0;
        for &k in contacts {
            if k == sec[s] {
                s += 1;
            } else {
                certificates.push(cert(Which::G, sec[s - 1], k, sec[s]));
            }
        }
        if breaks.last() == Some(&a) {
            breaks.pop();
        }
        breaks.extend(sec);
    }
    Structure { breaks, certificates }
}

fn orient(x: &[Rational], v: [&Rational; 3], i: usize, j: usize, k: usize) -> Rational {
    (&x[k] - &x[i]) * (v[1] - v[0]) - (&x[j] - &x[i]) * (v[2] - v[0])
}

fn orient_lin(x: &[Rational], v: [&Lin; 3], i: usize, j: usize, k: usize) -> Lin {
    v[1].sub(v[0]).scale(&(&x[k] - &x[i])).sub(&v[2].sub(v[0]).scale(&(&x[j] - &x[i])))
}

fn check_points(points: &[HullVertex]) -> Result<(), ConcavifyError> {
    if points.len() < 2 || !points[0].x.is_zero() || !points[points.len() - 1].x.is_one() {
        return Err(ConcavifyError::MissingEndpoints);
    }
    if points.windows(2).any(|w| w[0].x >= w[1].x) {
        return Err(ConcavifyError::Unsorted);
    }
    Ok(())
}

fn analyze_points(points: &[HullVertex]) -> Structure {
    let x: Vec<Rational> = points.iter().map(|p| p.x.clone()).collect();
    analyze(points.len(), |which, i, j, k| {
        let pick = |t: usize| match which {
            Which::F => &points[t].f,
            Which::G => &points[t].g,
        };
        orient(&x, [pick(i), pick(j), pick(k)], i, j, k).cmp(&zero())
    })
}

fn lerp(x0: &Rational, y0: &Rational, x1: &Rational, y1: &Rational, x: &Rational) -> Rational {
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

fn hull_at(points: &[HullVertex], st: &Structure, x: &Rational) -> HullPoint {
    let pos = st.breaks.partition_point(|&b| &points[b].x < x);
    let hi = &points[st.breaks[pos]];
    if &hi.x == x {
        return HullPoint {
            value: hi.f.clone(),
            co_value: hi.g.clone(),
            support: vec![(x.clone(), one())],
        };
    }
    let lo = &points[st.breaks[pos - 1]];
    let w_hi = (x - &lo.x) / (&hi.x - &lo.x);
    HullPoint {
        value: lerp(&lo.x, &lo.f, &hi.x, &hi.f, x),
        co_value: lerp(&lo.x, &lo.g, &hi.x, &hi.g, x),
        support: vec![(lo.x.clone(), one() - &w_hi), (hi.x.clone(), w_hi)],
    }
}

/// Lexicographic concave hull of a finite point set, evaluated at `x`.
///
/// `value` is the largest `f` reachable by a mean-`x` mixture of the points;
/// `co_value` the largest `g` among those optimal mixtures.
pub fn hull_1d(points: &[HullVertex], x: &Rational) -> Result<HullPoint, ConcavifyError> {
    check_points(points)?;
    if x < &zero() || x > &one() {
        return Err(ConcavifyError::QueryOutOfRange(x.clone()));
    }
    Ok(hull_at(points, &analyze_points(points), x))
}

/// What the mover does on a region of the belief square.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Action {
    Silent,
    /// Split the moved coordinate into the posteriors `lo` and `hi`.
    Refine {
        lo: Rational,
        hi: Rational,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanRect {
    pub p: (Rational, Rational),
    pub q: (Rational, Rational),
    pub action: Action,
}

impl PlanRect {
    fn contains_interior(&self, p: &Rational, q: &Rational) -> bool {
        &self.p.0 < p && p < &self.p.1 && &self.q.0 < q && q < &self.q.1
    }

    fn contains(&self, p: &Rational, q: &Rational) -> bool {
        &self.p.0 <= p && p <= &self.p.1 && &self.q.0 <= q && q <= &self.q.1
    }
}

/// Tiling of the square by closed rectangles with disjoint interiors; each
/// rectangle prescribes one split along `axis`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "PartitionRepr", try_from = "PartitionRepr")]
pub struct StrategyPartition {
    pub axis: Axis,
    pub rects: Vec<PlanRect>,
}

impl StrategyPartition {
    pub fn silent(axis: Axis) -> Self {
        StrategyPartition {
            axis,
            rects: vec![PlanRect {
                p: (zero(), one()),
                q: (zero(), one()),
                action: Action::Silent,
            }],
        }
    }

    pub fn is_silent(&self) -> bool {
        self.rects.iter().all(|r| r.action == Action::Silent)
    }

    /// Action of the rectangle whose interior contains the point, if any.
    pub fn action_at_interior(&self, p: &Rational, q: &Rational) -> Option<&Action> {
        self.rects.iter().find(|r| r.contains_interior(p, q)).map(|r| &r.action)
    }

    /// Action of the first rectangle whose closure contains the point.
    pub fn action_at(&self, p: &Rational, q: &Rational) -> Option<&Action> {
        self.rects.iter().find(|r| r.contains(p, q)).map(|r| &r.action)
    }

    /// Cuts of the rectangle boundaries along `axis`, excluding 0 and 1.
    pub fn cuts(&self, axis: Axis) -> Vec<Rational> {
        let mut out: Vec<Rational> = self
            .rects
            .iter()
            .flat_map(|r| {
                let (a, b) = match axis {
                    Axis::P => &r.p,
                    Axis::Q => &r.q,
                };
                [a.clone(), b.clone()]
            })
            .filter(|v| !v.is_zero() && !v.is_one())
            .collect();
        out.sort();
        out.dedup();
        out
    }

    fn transpose(self) -> StrategyPartition {
        StrategyPartition {
            axis: self.axis.other(),
            rects: self
                .rects
                .into_iter()
                .map(|r| PlanRect {
                    p: r.q,
                    q: r.p,
                    action: r.action,
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("partition serializes")
    }
}

#[derive(Serialize, Deserialize)]
struct RectRepr {
    p: [RatStr; 2],
    q: [RatStr; 2],
    #[serde(skip_serializing_if = "Option::is_none", default)]
    refine: Option<[RatStr; 2]>,
}

#[derive(Serialize, Deserialize)]
struct PartitionRepr {
    axis: Axis,
    rects: Vec<RectRepr>,
}

impl From<StrategyPartition> for PartitionRepr {
    fn from(s: StrategyPartition) -> Self {
        PartitionRepr {
            axis: s.axis,
            rects: s
                .rects
                .iter()
                .map(|r| RectRepr {
                    p: [(&r.p.0).into(), (&r.p.1).into()],
                    q: [(&r.q.0).into(), (&r.q.1).into()],
                    refine: match &r.action {
                        Action::Silent => None,
                        Action::Refine { lo, hi } => Some([lo.into(), hi.into()]),
                    },
                })
                .collect(),
        }
    }
}

impl TryFrom<PartitionRepr> for StrategyPartition {
    type Error = String;

    fn try_from(r: PartitionRepr) -> Result<Self, String> {
        let rects = r
            .rects
            .into_iter()
            .map(|x| {
                let [p0, p1] = x.p;
                let [q0, q1] = x.q;
                let action = match x.refine {
                    None => Action::Silent,
                    Some([lo, hi]) if lo.0 <= hi.0 => Action::Refine { lo: lo.0, hi: hi.0 },
                    Some(_) => return Err("refine endpoints out of order".to_string()),
                };
                Ok(PlanRect {
                    p: (p0.0, p1.0),
                    q: (q0.0, q1.0),
                    action,
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(StrategyPartition { axis: r.axis, rects })
    }
}

/// Output of one concavification step.
#[derive(Debug, Clone)]
pub struct Concavified {
    pub f: Surface,
    pub g: Surface,
    pub plan: StrategyPartition,
}

/// Slice of `(F, G)` along `axis` through the point whose transverse
/// coordinate is `at`.
pub fn slice_points(f: &Surface, g: &Surface, axis: Axis, at: &Rational) -> Vec<HullVertex> {
    let (sf, sg) = (f.slice_along(axis, at), g.slice_along(axis, at));
    let breaks = merge_sorted(&sf.breaks, &sg.breaks);
    let (sf, sg) = (sf.refine(&breaks), sg.refine(&breaks));
    sf.breaks
        .iter()
        .zip(sf.values)
        .zip(sg.values)
        .map(|((x, f), g)| HullVertex::new(x.clone(), f, g))
        .collect()
}

/// Pointwise lexicographic split at `(p, q)`: hull of the exact slice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointSplit {
    pub value: Rational,
    pub co_value: Rational,
    pub action: Action,
    /// `(posterior, weight)` pairs; a single pair with weight 1 when silent.
    pub branches: Vec<(Rational, Rational)>,
}

pub fn split_at(f: &Surface, g: &Surface, axis: Axis, p: &Rational, q: &Rational) -> PointSplit {
    let (along, at) = match axis {
        Axis::P => (p, q),
        Axis::Q => (q, p),
    };
    let points = slice_points(f, g, axis, at);
    let h = hull_at(&points, &analyze_points(&points), along);
    let here = (f.eval(p, q), g.eval(p, q));
    if here == (h.value.clone(), h.co_value.clone()) {
        return PointSplit {
            value: h.value,
            co_value: h.co_value,
            action: Action::Silent,
            branches: vec![(along.clone(), one())],
        };
    }
    let action = Action::Refine {
        lo: h.support[0].0.clone(),
        hi: h.support[h.support.len() - 1].0.clone(),
    };
    PointSplit {
        value: h.value,
        co_value: h.co_value,
        action,
        branches: h.support,
    }
}

/// Line through two breakpoints, as a bilinear function of (x, y) where
/// each endpoint value is linear in y.
fn interpolate(xa: &Rational, va: &Lin, xb: &Rational, vb: &Lin) -> Bilinear {
    let d = xb - xa;
    Bilinear::new(
        (&va.c0 * xb - &vb.c0 * xa) / &d,
        (&vb.c0 - &va.c0) / &d,
        (&va.c1 * xb - &vb.c1 * xa) / &d,
        (&vb.c1 - &va.c1) / &d,
    )
}

struct StripOut {
    f_cells: Vec<Bilinear>,
    g_cells: Vec<Bilinear>,
    f_lines: Vec<Lin>,
    g_lines: Vec<Lin>,
    actions: Vec<Action>,
}

/// Concavifies `f` along `axis`, co-transforming `g`.
///
/// Hull vertices are the stored cut values, so the result dominates `f`
/// only where each slice of `f` is upper semicontinuous (cut values at
/// least the one-sided limits). Engine surfaces are; arbitrary ones may not be.
pub fn concavify_axis(f: &Surface, g: &Surface, axis: Axis) -> Concavified {
    match axis {
        Axis::P => concavify_p(f, g),
        Axis::Q => {
            let c = concavify_p(&f.transpose(), &g.transpose());
            Concavified {
                f: c.f.transpose(),
                g: c.g.transpose(),
                plan: c.plan.transpose(),
            }
        }
    }
}

fn concavify_p(f: &Surface, g: &Surface) -> Concavified {
    let (f, g) = f.common_refinement(g);
    let xs = f.grid().p_cuts().to_vec();
    let ys = f.grid().q_cuts().to_vec();
    let n = xs.len();

    let mut out_q = vec![ys[0].clone()];
    let mut strips: Vec<StripOut> = Vec::new();
    for j in 0..ys.len() - 1 {
        let fv: Vec<&Lin> = (0..n).map(|i| f.p_line(i, j)).collect();
        let gv: Vec<&Lin> = (0..n).map(|i| g.p_line(i, j)).collect();
        let d = |which: Which, a: usize, b: usize, c: usize| {
            let v = match which {
                Which::F => &fv,
                Which::G => &gv,
            };
            orient_lin(&xs, [v[a], v[b], v[c]], a, b, c)
        };
        let mut y0 = ys[j].clone();
        loop {
            let st = analyze(n, |w, a, b, c| d(w, a, b, c).sign_right_of(&y0));
            let next = st
                .certificates
                .iter()
                .filter_map(|c| {
                    let l = d(c.which, c.i, c.j, c.k);
                    (!l.c1.is_zero()).then(|| -&l.c0 / &l.c1)
                })
                .filter(|r| r > &y0 && r < &ys[j + 1])
                .min();
            strips.push(build_strip(&xs, &fv, &gv, &st.breaks, &f, &g, j));
            match next {
                Some(r) => {
                    out_q.push(r.clone());
                    y0 = r;
                }
                None => {
                    out_q.push(ys[j + 1].clone());
                    break;
                }
            }
        }
    }

    let nq = out_q.len();
    let mut q_lines_f = Vec::with_capacity(nq);
    let mut q_lines_g = Vec::with_capacity(nq);
    let mut vert_f = vec![Vec::with_capacity(nq); n];
    let mut vert_g = vec![Vec::with_capacity(nq); n];
    for y in &out_q {
        let points: Vec<HullVertex> = f
            .restrict(Axis::Q, y)
            .values
            .into_iter()
            .zip(g.restrict(Axis::Q, y).values)
            .zip(&xs)
            .map(|((fv, gv), x)| HullVertex::new(x.clone(), fv, gv))
            .collect();
        let st = analyze_points(&points);
        let (mut lf, mut lg) = (Vec::with_capacity(n - 1), Vec::with_capacity(n - 1));
        let mut k = 0;
        for i in 0..n - 1 {
            while st.breaks[k + 1] <= i {
                k += 1;
            }
            let (a, b) = (&points[st.breaks[k]], &points[st.breaks[k + 1]]);
            lf.push(Lin::through(&a.x, &a.f, &b.x, &b.f));
            lg.push(Lin::through(&a.x, &a.g, &b.x, &b.g));
        }
        for (i, x) in xs.iter().enumerate() {
            let h = hull_at(&points, &st, x);
            vert_f[i].push(h.value);
            vert_g[i].push(h.co_value);
        }
        q_lines_f.push(lf);
        q_lines_g.push(lg);
    }

    let grid = Grid::new(xs.clone(), out_q.clone()).expect("sweep cuts are increasing");
    let cells = |pick: fn(&StripOut) -> &Vec<Bilinear>| -> Vec<Vec<Bilinear>> {
        (0..n - 1).map(|i| strips.iter().map(|s| pick(s)[i].clone()).collect()).collect()
    };
    let lines = |pick: fn(&StripOut) -> &Vec<Lin>| -> Vec<Vec<Lin>> {
        (0..n).map(|i| strips.iter().map(|s| pick(s)[i].clone()).collect()).collect()
    };
    let f_out = Surface::new(grid.clone(), cells(|s| &s.f_cells), lines(|s| &s.f_lines), q_lines_f, vert_f).expect("consistent shape");
    let g_out = Surface::new(grid, cells(|s| &s.g_cells), lines(|s| &s.g_lines), q_lines_g, vert_g).expect("consistent shape");
    let plan = merge_plan(&xs, &out_q, &strips);
    Concavified {
        f: f_out.simplify(),
        g: g_out.simplify(),
        plan,
    }
}

fn build_strip(xs: &[Rational], fv: &[&Lin], gv: &[&Lin], breaks: &[usize], f: &Surface, g: &Surface, j: usize) -> StripOut {
    let n = xs.len();
    let mut out = StripOut {
        f_cells: Vec::with_capacity(n - 1),
        g_cells: Vec::with_capacity(n - 1),
        f_lines: Vec::with_capacity(n),
        g_lines: Vec::with_capacity(n),
        actions: Vec::with_capacity(n - 1),
    };
    let mut k = 0;
    for i in 0..n - 1 {
        while breaks[k + 1] <= i {
            k += 1;
        }
        let (a, b) = (breaks[k], breaks[k + 1]);
        let fc = interpolate(&xs[a], fv[a], &xs[b], fv[b]);
        let gc = interpolate(&xs[a], gv[a], &xs[b], gv[b]);
        let silent = &fc == f.cell(i, j) && &gc == g.cell(i, j);
        out.actions.push(if silent {
            Action::Silent
        } else {
            Action::Refine {
                lo: xs[a].clone(),
                hi: xs[b].clone(),
            }
        });
        out.f_cells.push(fc);
        out.g_cells.push(gc);
    }
    for i in 0..n {
        if breaks.binary_search(&i).is_ok() {
            out.f_lines.push(fv[i].clone());
            out.g_lines.push(gv[i].clone());
        } else {
            out.f_lines.push(out.f_cells[i].at_p(&xs[i]));
            out.g_lines.push(out.g_cells[i].at_p(&xs[i]));
        }
    }
    out
}

fn merge_plan(xs: &[Rational], ys: &[Rational], strips: &[StripOut]) -> StrategyPartition {
    // Row-wise run-length merge, then stack identical rows.
    let rows: Vec<Vec<(usize, usize, &Action)>> = strips
        .iter()
        .map(|s| {
            let mut runs: Vec<(usize, usize, &Action)> = Vec::new();
            for (i, a) in s.actions.iter().enumerate() {
                match runs.last_mut() {
                    Some(last) if last.2 == a => last.1 = i + 1,
                    _ => runs.push((i, i + 1, a)),
                }
            }
            runs
        })
        .collect();
    let mut rects = Vec::new();
    let mut start = 0;
    for r in 1..=rows.len() {
        if r < rows.len() && rows[r] == rows[start] {
            continue;
        }
        for &(a, b, act) in &rows[start] {
            rects.push(PlanRect {
                p: (xs[a].clone(), xs[b].clone()),
                q: (ys[start].clone(), ys[r].clone()),
                action: act.clone(),
            });
        }
        start = r;
    }
    StrategyPartition { axis: Axis::P, rects }
}

/// Checks `(F', G')` against the pointwise lexicographic hull of `(F, G)` on
/// the `(grid_n + 1)²` points `(i/grid_n, j/grid_n)`.
pub fn verify_against_pointwise(f: &Surface, g: &Surface, f2: &Surface, g2: &Surface, axis: Axis, grid_n: u32) -> bool {
    let n = grid_n.max(2) as i64;
    let coords: Vec<Rational> = (0..=n).map(|i| crate::rational::rat(i, n)).collect();
    for at in &coords {
        let points = slice_points(f, g, axis, at);
        let st = analyze_points(&points);
        for along in &coords {
            let h = hull_at(&points, &st, along);
            let (p, q) = match axis {
                Axis::P => (along, at),
                Axis::Q => (at, along),
            };
            if f2.eval(p, q) != h.value || g2.eval(p, q) != h.co_value {
                return false;
            }
        }
    }
    true
}

/// Recovers the full point list from an `(x, f, g)` triple list; helper for
/// callers that build slices by hand.
pub fn vertices_from(xs: &[Rational], fs: &[Rational], gs: &[Rational]) -> Vec<HullVertex> {
    xs.iter()
        .zip(fs)
        .zip(gs)
        .map(|((x, f), g)| HullVertex::new(x.clone(), f.clone(), g.clone()))
        .collect()
}
