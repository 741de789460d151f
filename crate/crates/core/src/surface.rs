//! Piecewise-bilinear payoff functions on the belief square `[0,1]²`.
//!
//! A [`Surface`] lives on a tensor [`Grid`]. Open cells carry a [`Bilinear`]
//! function, open cut segments carry a [`Lin`] function of the running
//! coordinate, and grid vertices carry a value of their own. Cut and vertex
//! values are stored explicitly because payoffs jump where the seller's
//! action switches, and the value on the switch line is fixed by the
//! tie-break rather than by either one-sided limit.

use std::cmp::Ordering;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{one, rs, unrs, zero, RatStr, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SurfaceError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("grid is not a refinement of the surface grid")]
    NotRefinement,
}

/// Coordinate of the belief square: `p` is the seller's belief about the
/// buyer, `q` the buyer's belief about the seller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    P,
    Q,
}

impl Axis {
    pub fn other(self) -> Axis {
        match self {
            Axis::P => Axis::Q,
            Axis::Q => Axis::P,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::P => "p",
            Axis::Q => "q",
        })
    }
}

/// `c0 + c1·t` in a single running coordinate.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Lin {
    pub c0: Rational,
    pub c1: Rational,
}

impl Lin {
    pub fn new(c0: Rational, c1: Rational) -> Self {
        Lin { c0, c1 }
    }

    pub fn constant(c0: Rational) -> Self {
        Lin { c0, c1: zero() }
    }

    pub fn eval(&self, t: &Rational) -> Rational {
        &self.c0 + &self.c1 * t
    }

    pub fn is_zero(&self) -> bool {
        self.c0.is_zero() && self.c1.is_zero()
    }

    pub fn sub(&self, other: &Lin) -> Lin {
        Lin::new(&self.c0 - &other.c0, &self.c1 - &other.c1)
    }

    pub fn add(&self, other: &Lin) -> Lin {
        Lin::new(&self.c0 + &other.c0, &self.c1 + &other.c1)
    }

    pub fn scale(&self, k: &Rational) -> Lin {
        Lin::new(&self.c0 * k, &self.c1 * k)
    }

    /// Line through `(x0, y0)` and `(x1, y1)`; requires `x0 != x1`.
    pub fn through(x0: &Rational, y0: &Rational, x1: &Rational, y1: &Rational) -> Lin {
        let slope = (y1 - y0) / (x1 - x0);
        Lin::new(y0 - &slope * x0, slope)
    }

    /// Sign of the function just to the right of `t`, i.e. on `(t, t + ε)`.
    pub fn sign_right_of(&self, t: &Rational) -> Ordering {
        let v = self.eval(t);
        match v.cmp(&zero()) {
            Ordering::Equal => self.c1.cmp(&zero()),
            s => s,
        }
    }
}

/// `a + b·p + c·q + d·p·q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bilinear {
    pub a: Rational,
    pub b: Rational,
    pub c: Rational,
    pub d: Rational,
}

impl Bilinear {
    pub fn new(a: Rational, b: Rational, c: Rational, d: Rational) -> Self {
        Bilinear { a, b, c, d }
    }

    pub fn constant(a: Rational) -> Self {
        Bilinear::new(a, zero(), zero(), zero())
    }

    pub fn eval(&self, p: &Rational, q: &Rational) -> Rational {
        &self.a + &self.b * p + &self.c * q + &self.d * p * q
    }

    /// Restriction to the vertical line `p = x`, as a function of `q`.
    pub fn at_p(&self, x: &Rational) -> Lin {
        Lin::new(&self.a + &self.b * x, &self.c + &self.d * x)
    }

    /// Restriction to the horizontal line `q = y`, as a function of `p`.
    pub fn at_q(&self, y: &Rational) -> Lin {
        Lin::new(&self.a + &self.c * y, &self.b + &self.d * y)
    }

    pub fn transpose(&self) -> Bilinear {
        Bilinear::new(self.a.clone(), self.c.clone(), self.b.clone(), self.d.clone())
    }

    pub fn add(&self, o: &Bilinear) -> Bilinear {
        Bilinear::new(&self.a + &o.a, &self.b + &o.b, &self.c + &o.c, &self.d + &o.d)
    }
}

/// Strictly increasing cut lists on both axes, each starting at 0 and ending at 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    p_cuts: Vec<Rational>,
    q_cuts: Vec<Rational>,
}

fn check_cuts(cuts: &[Rational], axis: Axis) -> Result<(), SurfaceError> {
    if cuts.len() < 2 || !cuts[0].is_zero() || !cuts[cuts.len() - 1].is_one() {
        return Err(SurfaceError::Grid(format!("{axis} cuts must start at 0 and end at 1")));
    }
    if cuts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SurfaceError::Grid(format!("{axis} cuts must be strictly increasing")));
    }
    Ok(())
}

impl Grid {
    pub fn new(p_cuts: Vec<Rational>, q_cuts: Vec<Rational>) -> Result<Self, SurfaceError> {
        check_cuts(&p_cuts, Axis::P)?;
        check_cuts(&q_cuts, Axis::Q)?;
        Ok(Grid { p_cuts, q_cuts })
    }

    pub fn unit() -> Self {
        Grid {
            p_cuts: vec![zero(), one()],
            q_cuts: vec![zero(), one()],
        }
    }

    pub fn p_cuts(&self) -> &[Rational] {
        &self.p_cuts
    }

    pub fn q_cuts(&self) -> &[Rational] {
        &self.q_cuts
    }

    pub fn cuts(&self, axis: Axis) -> &[Rational] {
        match axis {
            Axis::P => &self.p_cuts,
            Axis::Q => &self.q_cuts,
        }
    }

    pub fn merge(&self, other: &Grid) -> Grid {
        Grid {
            p_cuts: merge_sorted(&self.p_cuts, &other.p_cuts),
            q_cuts: merge_sorted(&self.q_cuts, &other.q_cuts),
        }
    }

    pub fn transpose(&self) -> Grid {
        Grid {
            p_cuts: self.q_cuts.clone(),
            q_cuts: self.p_cuts.clone(),
        }
    }

    fn contains_all(&self, other: &Grid) -> bool {
        other.p_cuts.iter().all(|x| self.p_cuts.binary_search(x).is_ok())
            && other.q_cuts.iter().all(|y| self.q_cuts.binary_search(y).is_ok())
    }
}

pub(crate) fn merge_sorted(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut out: Vec<Rational> = a.iter().chain(b.iter()).cloned().collect();
    out.sort();
    out.dedup();
    out
}

/// Position of a coordinate relative to a cut list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Loc {
    Cut(usize),
    Open(usize),
}

pub(crate) fn locate(cuts: &[Rational], x: &Rational) -> Loc {
    match cuts.binary_search(x) {
        Ok(i) => Loc::Cut(i),
        Err(i) => {
            assert!(i > 0 && i < cuts.len(), "coordinate {x} outside [0,1]");
            Loc::Open(i - 1)
        }
    }
}

fn midpoint(a: &Rational, b: &Rational) -> Rational {
    (a + b) / Rational::from_integer(2.into())
}

/// One-dimensional piecewise-linear function with explicit values at its
/// breakpoints, obtained by fixing one coordinate of a surface.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pwl1d {
    pub breaks: Vec<Rational>,
    pub values: Vec<Rational>,
    /// `pieces[i]` is the function on the open interval `(breaks[i], breaks[i+1])`.
    pub pieces: Vec<Lin>,
}

impl Pwl1d {
    pub fn eval(&self, x: &Rational) -> Rational {
        match locate(&self.breaks, x) {
            Loc::Cut(i) => self.values[i].clone(),
            Loc::Open(i) => self.pieces[i].eval(x),
        }
    }

    pub fn left_limit(&self, i: usize) -> Option<Rational> {
        (i > 0).then(|| self.pieces[i - 1].eval(&self.breaks[i]))
    }

    pub fn right_limit(&self, i: usize) -> Option<Rational> {
        (i + 1 < self.breaks.len()).then(|| self.pieces[i].eval(&self.breaks[i]))
    }

    pub fn slopes(&self) -> Vec<Rational> {
        self.pieces.iter().map(|l| l.c1.clone()).collect()
    }

    /// Same function on a superset of breakpoints.
    pub fn refine(&self, breaks: &[Rational]) -> Pwl1d {
        let mut values = Vec::with_capacity(breaks.len());
        let mut pieces = Vec::with_capacity(breaks.len().saturating_sub(1));
        for (k, x) in breaks.iter().enumerate() {
            values.push(self.eval(x));
            if k + 1 < breaks.len() {
                match locate(&self.breaks, &midpoint(x, &breaks[k + 1])) {
                    Loc::Open(i) => pieces.push(self.pieces[i].clone()),
                    Loc::Cut(_) => unreachable!("midpoint of consecutive refined cuts hit an original cut"),
                }
            }
        }
        Pwl1d {
            breaks: breaks.to_vec(),
            values,
            pieces,
        }
    }

    fn has_curvature(&self, curv: Curvature) -> bool {
        let n = self.breaks.len();
        for i in 0..n {
            let v = &self.values[i];
            match (self.left_limit(i), self.right_limit(i)) {
                (Some(l), Some(r)) => {
                    if &l != v || &r != v || !curv.slopes_ok(&self.pieces[i - 1].c1, &self.pieces[i].c1) {
                        return false;
                    }
                }
                (Some(lim), None) | (None, Some(lim)) => {
                    if !curv.boundary_ok(v, &lim) {
                        return false;
                    }
                }
                (None, None) => {}
            }
        }
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Curvature {
    Convex,
    Concave,
}

impl Curvature {
    fn slopes_ok(self, left: &Rational, right: &Rational) -> bool {
        match self {
            Curvature::Convex => left <= right,
            Curvature::Concave => left >= right,
        }
    }

    /// A convex function on a closed interval may jump up at an endpoint; a
    /// concave one may jump down.
    fn boundary_ok(self, value: &Rational, limit: &Rational) -> bool {
        match self {
            Curvature::Convex => value >= limit,
            Curvature::Concave => value <= limit,
        }
    }
}

/// Piecewise-bilinear function on `[0,1]²` with explicit cut and vertex values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SurfaceRepr", into = "SurfaceRepr")]
pub struct Surface {
    grid: Grid,
    /// `cells[i][j]` on `(p_i, p_{i+1}) × (q_j, q_{j+1})`.
    cells: Vec<Vec<Bilinear>>,
    /// `p_lines[i][j]` on `{p_i} × (q_j, q_{j+1})`, as a function of `q`.
    p_lines: Vec<Vec<Lin>>,
    /// `q_lines[j][i]` on `(p_i, p_{i+1}) × {q_j}`, as a function of `p`.
    q_lines: Vec<Vec<Lin>>,
    /// `vertices[i][j]` at `(p_i, q_j)`.
    vertices: Vec<Vec<Rational>>,
}

impl Surface {
    pub fn new(
        grid: Grid,
        cells: Vec<Vec<Bilinear>>,
        p_lines: Vec<Vec<Lin>>,
        q_lines: Vec<Vec<Lin>>,
        vertices: Vec<Vec<Rational>>,
    ) -> Result<Self, SurfaceError> {
        let np = grid.p_cuts.len();
        let nq = grid.q_cuts.len();
        let shape = |what: &str, ok: bool| if ok { Ok(()) } else { Err(SurfaceError::Shape(what.to_string())) };
        shape("cells", cells.len() == np - 1 && cells.iter().all(|c| c.len() == nq - 1))?;
        shape("p_lines", p_lines.len() == np && p_lines.iter().all(|c| c.len() == nq - 1))?;
        shape("q_lines", q_lines.len() == nq && q_lines.iter().all(|c| c.len() == np - 1))?;
        shape("vertices", vertices.len() == np && vertices.iter().all(|c| c.len() == nq))?;
        Ok(Surface {
            grid,
            cells,
            p_lines,
            q_lines,
            vertices,
        })
    }

    /// Continuous surface given by one bilinear function on every cell of `grid`.
    pub fn from_bilinear(grid: Grid, f: &Bilinear) -> Surface {
        let np = grid.p_cuts.len();
        let nq = grid.q_cuts.len();
        let cells = vec![vec![f.clone(); nq - 1]; np - 1];
        let p_lines = grid.p_cuts.iter().map(|x| vec![f.at_p(x); nq - 1]).collect();
        let q_lines = grid.q_cuts.iter().map(|y| vec![f.at_q(y); np - 1]).collect();
        let vertices = grid
            .p_cuts
            .iter()
            .map(|x| grid.q_cuts.iter().map(|y| f.eval(x, y)).collect())
            .collect();
        Surface {
            grid,
            cells,
            p_lines,
            q_lines,
            vertices,
        }
    }

    /// Surface whose cut values are one-sided limits of the given cells: the
    /// cell to the left (below) wins, except on the `0` cut.
    pub fn from_cells(grid: Grid, cells: Vec<Vec<Bilinear>>) -> Result<Surface, SurfaceError> {
        let np = grid.p_cuts.len();
        let nq = grid.q_cuts.len();
        if cells.len() != np - 1 || cells.iter().any(|c| c.len() != nq - 1) {
            return Err(SurfaceError::Shape("cells".to_string()));
        }
        let p_lines = grid
            .p_cuts
            .iter()
            .enumerate()
            .map(|(i, x)| (0..nq - 1).map(|j| cells[i.saturating_sub(1)][j].at_p(x)).collect())
            .collect();
        let q_lines = grid
            .q_cuts
            .iter()
            .enumerate()
            .map(|(j, y)| (0..np - 1).map(|i| cells[i][j.saturating_sub(1)].at_q(y)).collect())
            .collect();
        let vertices = grid
            .p_cuts
            .iter()
            .enumerate()
            .map(|(i, x)| {
                grid.q_cuts
                    .iter()
                    .enumerate()
                    .map(|(j, y)| cells[i.saturating_sub(1)][j.saturating_sub(1)].eval(x, y))
                    .collect()
            })
            .collect();
        Ok(Surface {
            grid,
            cells,
            p_lines,
            q_lines,
            vertices,
        })
    }

    pub fn constant(v: Rational) -> Surface {
        Surface::from_bilinear(Grid::unit(), &Bilinear::constant(v))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn cell(&self, i: usize, j: usize) -> &Bilinear {
        &self.cells[i][j]
    }

    pub fn p_line(&self, i: usize, j: usize) -> &Lin {
        &self.p_lines[i][j]
    }

    pub fn q_line(&self, j: usize, i: usize) -> &Lin {
        &self.q_lines[j][i]
    }

    pub fn vertex(&self, i: usize, j: usize) -> &Rational {
        &self.vertices[i][j]
    }

    pub fn set_cell(&mut self, i: usize, j: usize, f: Bilinear) {
        self.cells[i][j] = f;
    }

    /// Value at `(p, q)`. Panics when the point is outside the unit square.
    pub fn eval(&self, p: &Rational, q: &Rational) -> Rational {
        match (locate(&self.grid.p_cuts, p), locate(&self.grid.q_cuts, q)) {
            (Loc::Cut(i), Loc::Cut(j)) => self.vertices[i][j].clone(),
            (Loc::Cut(i), Loc::Open(j)) => self.p_lines[i][j].eval(q),
            (Loc::Open(i), Loc::Cut(j)) => self.q_lines[j][i].eval(p),
            (Loc::Open(i), Loc::Open(j)) => self.cells[i][j].eval(p, q),
        }
    }

    pub fn eval_at(&self, pt: &(Rational, Rational)) -> Rational {
        self.eval(&pt.0, &pt.1)
    }

    /// Fixes coordinate `axis` at `value` and returns the function of the
    /// other coordinate.
    pub fn restrict(&self, axis: Axis, value: &Rational) -> Pwl1d {
        match axis {
            Axis::Q => {
                let (values, pieces) = match locate(&self.grid.q_cuts, value) {
                    Loc::Cut(j) => (self.vertices.iter().map(|col| col[j].clone()).collect(), self.q_lines[j].clone()),
                    Loc::Open(j) => (
                        self.p_lines.iter().map(|col| col[j].eval(value)).collect(),
                        self.cells.iter().map(|col| col[j].at_q(value)).collect(),
                    ),
                };
                Pwl1d {
                    breaks: self.grid.p_cuts.clone(),
                    values,
                    pieces,
                }
            }
            Axis::P => self.transpose().restrict(Axis::Q, value),
        }
    }

    /// Function along `axis` with the other coordinate fixed at `at`.
    pub fn slice_along(&self, axis: Axis, at: &Rational) -> Pwl1d {
        self.restrict(axis.other(), at)
    }

    /// Swaps the roles of `p` and `q`.
    pub fn transpose(&self) -> Surface {
        let np = self.grid.p_cuts.len();
        let nq = self.grid.q_cuts.len();
        let cells = (0..nq - 1)
            .map(|j| (0..np - 1).map(|i| self.cells[i][j].transpose()).collect())
            .collect();
        let vertices = (0..nq).map(|j| (0..np).map(|i| self.vertices[i][j].clone()).collect()).collect();
        Surface {
            grid: self.grid.transpose(),
            cells,
            p_lines: self.q_lines.clone(),
            q_lines: self.p_lines.clone(),
            vertices,
        }
    }

    /// Re-expresses the surface on a finer grid without changing any value.
    pub fn refine_to(&self, grid: &Grid) -> Result<Surface, SurfaceError> {
        if !grid.contains_all(&self.grid) {
            return Err(SurfaceError::NotRefinement);
        }
        let (np, nq) = (grid.p_cuts.len(), grid.q_cuts.len());
        let open = |cuts: &[Rational], k: usize, old: &[Rational]| match locate(old, &midpoint(&cuts[k], &cuts[k + 1])) {
            Loc::Open(i) => i,
            Loc::Cut(_) => unreachable!("refined strip straddles an old cut"),
        };
        let pi: Vec<usize> = (0..np - 1).map(|k| open(&grid.p_cuts, k, &self.grid.p_cuts)).collect();
        let qj: Vec<usize> = (0..nq - 1).map(|k| open(&grid.q_cuts, k, &self.grid.q_cuts)).collect();

        let cells = (0..np - 1)
            .map(|a| (0..nq - 1).map(|b| self.cells[pi[a]][qj[b]].clone()).collect())
            .collect();
        let p_lines = grid
            .p_cuts
            .iter()
            .map(|x| {
                (0..nq - 1)
                    .map(|b| match locate(&self.grid.p_cuts, x) {
                        Loc::Cut(i) => self.p_lines[i][qj[b]].clone(),
                        Loc::Open(i) => self.cells[i][qj[b]].at_p(x),
                    })
                    .collect()
            })
            .collect();
        let q_lines = grid
            .q_cuts
            .iter()
            .map(|y| {
                (0..np - 1)
                    .map(|a| match locate(&self.grid.q_cuts, y) {
                        Loc::Cut(j) => self.q_lines[j][pi[a]].clone(),
                        Loc::Open(j) => self.cells[pi[a]][j].at_q(y),
                    })
                    .collect()
            })
            .collect();
        let vertices = grid
            .p_cuts
            .iter()
            .map(|x| grid.q_cuts.iter().map(|y| self.eval(x, y)).collect())
            .collect();
        Ok(Surface {
            grid: grid.clone(),
            cells,
            p_lines,
            q_lines,
            vertices,
        })
    }

    /// Both surfaces re-expressed on the union of their grids.
    pub fn common_refinement(&self, other: &Surface) -> (Surface, Surface) {
        let grid = self.grid.merge(&other.grid);
        (
            self.refine_to(&grid).expect("merged grid refines both"),
            other.refine_to(&grid).expect("merged grid refines both"),
        )
    }

    /// Extensional equality: same value at every point of the square.
    pub fn equal(&self, other: &Surface) -> bool {
        let (a, b) = self.common_refinement(other);
        a == b
    }

    /// Pointwise sum.
    pub fn add(&self, other: &Surface) -> Surface {
        let (a, b) = self.common_refinement(other);
        let zip2 = |x: &Vec<Vec<Lin>>, y: &Vec<Vec<Lin>>| -> Vec<Vec<Lin>> {
            x.iter()
                .zip(y)
                .map(|(r, s)| r.iter().zip(s).map(|(l, m)| l.add(m)).collect())
                .collect()
        };
        Surface {
            cells: a
                .cells
                .iter()
                .zip(&b.cells)
                .map(|(r, s)| r.iter().zip(s).map(|(f, g)| f.add(g)).collect())
                .collect(),
            p_lines: zip2(&a.p_lines, &b.p_lines),
            q_lines: zip2(&a.q_lines, &b.q_lines),
            vertices: a
                .vertices
                .iter()
                .zip(&b.vertices)
                .map(|(r, s)| r.iter().zip(s).map(|(u, v)| u + v).collect())
                .collect(),
            grid: a.grid,
        }
    }

    /// True when every restriction along `axis` is convex on `[0,1]`.
    pub fn is_convex_along(&self, axis: Axis) -> bool {
        self.has_curvature_along(axis, Curvature::Convex)
    }

    /// True when every restriction along `axis` is concave on `[0,1]`.
    pub fn is_concave_along(&self, axis: Axis) -> bool {
        self.has_curvature_along(axis, Curvature::Concave)
    }

    fn has_curvature_along(&self, axis: Axis, curv: Curvature) -> bool {
        if axis == Axis::Q {
            return self.transpose().has_curvature_along(Axis::P, curv);
        }
        let np = self.grid.p_cuts.len();
        let nq = self.grid.q_cuts.len();
        // Open q-strips: all quantities are linear in q, so the two strip
        // endpoints decide every inequality.
        for j in 0..nq - 1 {
            let ends = [&self.grid.q_cuts[j], &self.grid.q_cuts[j + 1]];
            for (i, x) in self.grid.p_cuts.iter().enumerate() {
                let line = &self.p_lines[i][j];
                let left = (i > 0).then(|| self.cells[i - 1][j].at_p(x));
                let right = (i + 1 < np).then(|| self.cells[i][j].at_p(x));
                match (left, right) {
                    (Some(l), Some(r)) => {
                        if &l != line || &r != line {
                            return false;
                        }
                        let (fl, fr) = (&self.cells[i - 1][j], &self.cells[i][j]);
                        for y in ends {
                            if !curv.slopes_ok(&(&fl.b + &fl.d * y), &(&fr.b + &fr.d * y)) {
                                return false;
                            }
                        }
                    }
                    (Some(lim), None) | (None, Some(lim)) => {
                        if ends.iter().any(|y| !curv.boundary_ok(&line.eval(y), &lim.eval(y))) {
                            return false;
                        }
                    }
                    (None, None) => {}
                }
            }
        }
        self.grid.q_cuts.iter().all(|y| self.restrict(Axis::Q, y).has_curvature(curv))
    }

    /// Drops cuts across which nothing changes.
    pub fn simplify(&self) -> Surface {
        self.simplify_p().transpose().simplify_p().transpose()
    }

    fn removable_p(&self, i: usize) -> bool {
        let x = &self.grid.p_cuts[i];
        let nq = self.grid.q_cuts.len();
        (0..nq - 1).all(|j| self.cells[i - 1][j] == self.cells[i][j] && self.p_lines[i][j] == self.cells[i][j].at_p(x))
            && (0..nq).all(|j| self.q_lines[j][i - 1] == self.q_lines[j][i] && self.vertices[i][j] == self.q_lines[j][i].eval(x))
    }

    fn simplify_p(&self) -> Surface {
        let np = self.grid.p_cuts.len();
        let keep: Vec<usize> = (0..np).filter(|&i| i == 0 || i == np - 1 || !self.removable_p(i)).collect();
        if keep.len() == np {
            return self.clone();
        }
        let segs = &keep[..keep.len() - 1];
        Surface {
            grid: Grid {
                p_cuts: keep.iter().map(|&i| self.grid.p_cuts[i].clone()).collect(),
                q_cuts: self.grid.q_cuts.clone(),
            },
            cells: segs.iter().map(|&i| self.cells[i].clone()).collect(),
            p_lines: keep.iter().map(|&i| self.p_lines[i].clone()).collect(),
            q_lines: self
                .q_lines
                .iter()
                .map(|row| segs.iter().map(|&i| row[i].clone()).collect())
                .collect(),
            vertices: keep.iter().map(|&i| self.vertices[i].clone()).collect(),
        }
    }

    /// Cut values that match neither adjacent one-sided limit. Base game
    /// surfaces never have any; reported for diagnostics.
    pub fn invented_boundary_values(&self) -> usize {
        let mut count = 0;
        for (axis, s) in [(Axis::P, self.clone()), (Axis::Q, self.transpose())] {
            let _ = axis;
            let np = s.grid.p_cuts.len();
            for j in 0..s.grid.q_cuts.len() - 1 {
                for (i, x) in s.grid.p_cuts.iter().enumerate() {
                    let line = &s.p_lines[i][j];
                    let l = (i > 0).then(|| s.cells[i - 1][j].at_p(x));
                    let r = (i + 1 < np).then(|| s.cells[i][j].at_p(x));
                    if l.as_ref() != Some(line) && r.as_ref() != Some(line) {
                        count += 1;
                    }
                }
            }
        }
        count
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("surface serializes")
    }

    pub fn from_json(s: &str) -> Result<Surface, serde_json::Error> {
        serde_json::from_str(s)
    }
}

#[derive(Serialize, Deserialize)]
struct SurfaceRepr {
    p_cuts: Vec<RatStr>,
    q_cuts: Vec<RatStr>,
    cells: Vec<Vec<[RatStr; 4]>>,
    p_lines: Vec<Vec<[RatStr; 2]>>,
    q_lines: Vec<Vec<[RatStr; 2]>>,
    vertices: Vec<Vec<RatStr>>,
}

fn lin_repr(l: &Lin) -> [RatStr; 2] {
    [RatStr::from(&l.c0), RatStr::from(&l.c1)]
}

fn lin_unrepr([c0, c1]: [RatStr; 2]) -> Lin {
    Lin::new(c0.0, c1.0)
}

impl From<Surface> for SurfaceRepr {
    fn from(s: Surface) -> Self {
        let lines = |v: &Vec<Vec<Lin>>| v.iter().map(|r| r.iter().map(lin_repr).collect()).collect();
        SurfaceRepr {
            p_cuts: rs(&s.grid.p_cuts),
            q_cuts: rs(&s.grid.q_cuts),
            cells: s
                .cells
                .iter()
                .map(|r| {
                    r.iter()
                        .map(|f| [(&f.a).into(), (&f.b).into(), (&f.c).into(), (&f.d).into()])
                        .collect()
                })
                .collect(),
            p_lines: lines(&s.p_lines),
            q_lines: lines(&s.q_lines),
            vertices: s.vertices.iter().map(|r| rs(r)).collect(),
        }
    }
}

impl TryFrom<SurfaceRepr> for Surface {
    type Error = SurfaceError;

    fn try_from(r: SurfaceRepr) -> Result<Self, Self::Error> {
        let grid = Grid::new(unrs(r.p_cuts), unrs(r.q_cuts))?;
        let lines = |v: Vec<Vec<[RatStr; 2]>>| v.into_iter().map(|r| r.into_iter().map(lin_unrepr).collect()).collect();
        Surface::new(
            grid,
            r.cells
                .into_iter()
                .map(|row| row.into_iter().map(|[a, b, c, d]| Bilinear::new(a.0, b.0, c.0, d.0)).collect())
                .collect(),
            lines(r.p_lines),
            lines(r.q_lines),
            r.vertices.into_iter().map(unrs).collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn grid(p: &[(i64, i64)], q: &[(i64, i64)]) -> Grid {
        Grid::new(
            p.iter().map(|&(n, d)| rat(n, d)).collect(),
            q.iter().map(|&(n, d)| rat(n, d)).collect(),
        )
        .unwrap()
    }

    /// `|p - 1/2|` with a jump up to 5 on the line `p = 1/2`.
    fn kinked() -> Surface {
        let g = grid(&[(0, 1), (1, 2), (1, 1)], &[(0, 1), (1, 1)]);
        let left = Bilinear::new(rat(1, 2), int(-1), zero(), zero());
        let right = Bilinear::new(rat(-1, 2), int(1), zero(), zero());
        let mut s = Surface::from_bilinear(g, &left);
        s.cells[1][0] = right.clone();
        s.p_lines[2][0] = right.at_p(&one());
        s.p_lines[1][0] = Lin::constant(int(5));
        s.vertices[1] = vec![int(5), int(5)];
        s.vertices[2] = vec![rat(1, 2), rat(1, 2)];
        s.q_lines[0][1] = right.at_q(&zero());
        s.q_lines[1][1] = right.at_q(&one());
        s
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(vec![zero(), one()], vec![zero(), rat(1, 2), one()]).is_ok());
        assert!(Grid::new(vec![zero(), rat(1, 2), rat(1, 2), one()], vec![zero(), one()]).is_err());
        assert!(Grid::new(vec![rat(1, 3), one()], vec![zero(), one()]).is_err());
        assert!(Grid::new(vec![zero()], vec![zero(), one()]).is_err());
    }

    #[test]
    fn constant_surface_evaluates_everywhere() {
        let s = Surface::constant(rat(7, 3));
        for (p, q) in [(zero(), zero()), (rat(1, 2), one()), (rat(2, 7), rat(5, 9))] {
            assert_eq!(s.eval(&p, &q), rat(7, 3));
        }
    }

    #[test]
    fn eval_dispatches_on_location() {
        let s = kinked();
        assert_eq!(s.eval(&rat(1, 2), &rat(1, 3)), int(5));
        assert_eq!(s.eval(&rat(1, 2), &zero()), int(5));
        assert_eq!(s.eval(&rat(1, 4), &rat(1, 3)), rat(1, 4));
        assert_eq!(s.eval(&rat(3, 4), &zero()), rat(1, 4));
        assert_eq!(s.eval(&one(), &one()), rat(1, 2));
    }

    #[test]
    fn refinement_preserves_values_and_is_idempotent() {
        let s = kinked();
        let other = Surface::from_bilinear(
            grid(&[(0, 1), (1, 3), (1, 1)], &[(0, 1), (2, 5), (1, 1)]),
            &Bilinear::constant(zero()),
        );
        let (a, b) = s.common_refinement(&other);
        assert_eq!(a.grid().p_cuts(), &[zero(), rat(1, 3), rat(1, 2), one()]);
        assert_eq!(b.grid(), a.grid());
        for i in 0..=8 {
            for j in 0..=8 {
                let (p, q) = (rat(i, 8), rat(j, 8));
                assert_eq!(a.eval(&p, &q), s.eval(&p, &q));
            }
        }
        let (c, d) = s.common_refinement(&s);
        assert_eq!(c, s);
        assert_eq!(d, s);
    }

    #[test]
    fn equal_is_representation_independent() {
        let s = kinked();
        let fine = s.add(&Surface::from_bilinear(
            grid(&[(0, 1), (1, 5), (1, 1)], &[(0, 1), (1, 7), (1, 1)]),
            &Bilinear::constant(zero()),
        ));
        assert_ne!(fine.grid(), s.grid());
        assert!(fine.equal(&s));
        assert_eq!(fine.simplify(), s);
        assert!(!s.equal(&Surface::constant(zero())));
    }

    #[test]
    fn curvature_checks_see_jumps() {
        let s = kinked();
        // |p - 1/2| is convex but the jump at 1/2 breaks it.
        assert!(!s.is_convex_along(Axis::P));
        assert!(s.is_convex_along(Axis::Q));
        assert!(s.is_concave_along(Axis::Q));
        let smooth = Surface::from_bilinear(Grid::unit(), &Bilinear::new(zero(), int(1), int(1), int(-3)));
        assert!(smooth.is_convex_along(Axis::P) && smooth.is_concave_along(Axis::P));
    }

    #[test]
    fn restrict_reports_breakpoints_and_pieces() {
        let s = kinked();
        let r = s.restrict(Axis::Q, &rat(1, 2));
        assert_eq!(r.breaks, vec![zero(), rat(1, 2), one()]);
        assert_eq!(r.values, vec![rat(1, 2), int(5), rat(1, 2)]);
        assert_eq!(r.slopes(), vec![int(-1), int(1)]);
        let c = Surface::constant(int(4)).restrict(Axis::P, &rat(1, 3));
        assert_eq!(c.pieces, vec![Lin::constant(int(4))]);
    }

    #[test]
    fn json_round_trip() {
        let s = kinked();
        let text = s.to_json();
        assert!(text.contains("\"5/1\""));
        assert_eq!(Surface::from_json(&text).unwrap(), s);
        let broken = text.replacen("\"p_cuts\":[\"0/1\"", "\"p_cuts\":[\"1/9\"", 1);
        assert!(Surface::from_json(&broken).is_err());
    }
}
