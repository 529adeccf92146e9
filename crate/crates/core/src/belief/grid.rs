//! Sequential grid strategy: a histogram over the fluents, updated action
//! by action. Its cost grows with the number of fluents instead of the
//! length of the history.
//!
//! Continuous fluents live on cells; a cell's mass is spread uniformly over
//! its width when a condition is tested and sits at its center when it is
//! moved or reweighted. After a physical action every moved fluent is
//! re-gridded over the range its new values cover, and each moved mass is
//! split linearly between the two nearest centers.

use std::collections::BTreeMap;

use super::compile::{CExpr, CFormula, Lowering};
use super::{check_grid, BeliefError, BeliefProblem, BeliefResult, DensityGrid, GAMMA_MIN};
use crate::history::History;
use crate::model::{Density, Formula, Support, Theory, Valuation};
use crate::regression::{bindings, GroundAction};

/// Cells per continuous fluent.
pub const DEFAULT_CELLS: usize = 2048;
/// Cap on the number of joint cells.
const MAX_JOINT: usize = 1 << 20;
/// Cap on joint cells times noise nodes in one motion step.
const MAX_WORK: usize = 1 << 27;
const LATENT_SLOT: &str = "#latent";

#[derive(Debug, Clone, PartialEq)]
enum Axis {
    Cells { lo: f64, width: f64, n: usize },
    Atoms(Vec<f64>),
}

impl Axis {
    fn len(&self) -> usize {
        match self {
            Axis::Cells { n, .. } => *n,
            Axis::Atoms(v) => v.len(),
        }
    }

    fn value(&self, i: usize) -> f64 {
        match self {
            Axis::Cells { lo, width, .. } => lo + (i as f64 + 0.5) * width,
            Axis::Atoms(v) => v[i],
        }
    }

    fn is_cells(&self) -> bool {
        matches!(self, Axis::Cells { .. })
    }

    /// Centers (with linear weights) or the exact atom receiving `v`.
    fn deposit(&self, v: f64) -> [(usize, f64); 2] {
        match self {
            Axis::Cells { lo, width, n } => {
                if *n == 1 {
                    return [(0, 1.0), (0, 0.0)];
                }
                let u = ((v - lo) / width - 0.5).clamp(0.0, (*n - 1) as f64);
                let i = (u.floor() as usize).min(n - 2);
                let f = u - i as f64;
                [(i, 1.0 - f), (i + 1, f)]
            }
            Axis::Atoms(values) => {
                let i = values
                    .binary_search_by(|a| a.total_cmp(&v))
                    .expect("atom values are closed under the effect");
                [(i, 1.0), (i, 0.0)]
            }
        }
    }
}

struct Grid {
    fluents: Vec<String>,
    axes: Vec<Axis>,
    mass: Vec<f64>,
    gamma: f64,
    cells: usize,
    evaluations: u64,
    warnings: Vec<String>,
}

fn per_axis(cells: usize, continuous: usize) -> usize {
    if continuous <= 1 {
        return cells.max(2);
    }
    let cap = (MAX_JOINT as f64).powf(1.0 / continuous as f64).floor() as usize;
    cells.min(cap).max(2)
}

fn sub_samples(continuous: usize) -> usize {
    match continuous {
        0 => 1,
        1 => 16,
        2 => 4,
        _ => 2,
    }
}

impl Grid {
    fn init(problem: &BeliefProblem, cells: usize) -> Self {
        let t = &problem.theory;
        let continuous = t.fluents.iter().filter(|f| f.init.is_continuous()).count();
        let n = per_axis(cells, continuous);
        let empty = Valuation::new();
        let mut axes = Vec::new();
        let mut mass = vec![problem.prior_scale];
        for f in &t.fluents {
            let (axis, m): (Axis, Vec<f64>) = match f.init.support(&empty).expect("constant prior") {
                Support::Interval { lo, hi } => {
                    let width = (hi - lo) / n as f64;
                    let pdf = |x: f64| crate::model::density_pdf(&f.init, x, &empty).expect("constant prior");
                    let m = (0..n)
                        .map(|i| {
                            let a = lo + i as f64 * width;
                            width / 6.0 * (pdf(a) + 4.0 * pdf(a + 0.5 * width) + pdf(a + width))
                        })
                        .collect();
                    (Axis::Cells { lo, width, n }, m)
                }
                Support::Atoms(table) => {
                    let mut merged: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
                    for (v, m) in table {
                        merged.entry(order_key(v)).or_insert((v, 0.0)).1 += m;
                    }
                    let (values, m) = merged.into_values().unzip();
                    (Axis::Atoms(values), m)
                }
            };
            mass = mass.iter().flat_map(|a| m.iter().map(move |b| a * b)).collect();
            axes.push(axis);
        }
        let fluents = t.fluents.iter().map(|f| f.name.clone()).collect();
        let mut g = Grid {
            fluents,
            axes,
            mass,
            gamma: 1.0,
            cells,
            evaluations: 0,
            warnings: Vec::new(),
        };
        g.renormalize_unchecked();
        g
    }

    fn renormalize_unchecked(&mut self) -> f64 {
        let s: f64 = self.mass.iter().sum();
        self.gamma *= s;
        if s > 0.0 {
            for m in &mut self.mass {
                *m /= s;
            }
        }
        s
    }

    fn renormalize(&mut self) -> Result<(), BeliefError> {
        let s = self.renormalize_unchecked();
        if !(s > 0.0) || !(self.gamma >= GAMMA_MIN) {
            return Err(BeliefError::ImpossibleHistory { gamma: self.gamma });
        }
        Ok(())
    }

    fn continuous_axes(&self) -> usize {
        self.axes.iter().filter(|a| a.is_cells()).count()
    }

    fn lowering(&self, latent_continuous: bool) -> Lowering {
        let mut index: BTreeMap<String, usize> =
            self.fluents.iter().cloned().enumerate().map(|(i, f)| (f, i)).collect();
        index.insert(LATENT_SLOT.to_string(), self.fluents.len());
        let mut continuous: Vec<bool> = self.axes.iter().map(Axis::is_cells).collect();
        continuous.push(latent_continuous);
        Lowering {
            index,
            continuous,
            warnings: Vec::new(),
        }
    }

    /// Cell centers of joint index `idx` into `x`.
    fn centers(&self, mut idx: usize, x: &mut [f64]) {
        for k in (0..self.axes.len()).rev() {
            let n = self.axes[k].len();
            x[k] = self.axes[k].value(idx % n);
            idx /= n;
        }
    }

    /// Fraction of each cell where `f` holds, with cells treated as
    /// uniformly filled.
    fn fractions(&mut self, f: &CFormula) -> Vec<f64> {
        let d = self.axes.len();
        let k = sub_samples(self.continuous_axes());
        let cont: Vec<usize> = (0..d).filter(|i| self.axes[*i].is_cells()).collect();
        let total = k.pow(cont.len() as u32);
        let mut x = vec![0.0; d + 1];
        let mut base = vec![0.0; d];
        let mut out = vec![0.0; self.mass.len()];
        for (idx, o) in out.iter_mut().enumerate() {
            if self.mass[idx] == 0.0 {
                continue;
            }
            self.centers(idx, &mut base);
            let mut hits = 0usize;
            for s in 0..total {
                x[..d].copy_from_slice(&base);
                let mut r = s;
                for &a in &cont {
                    if let Axis::Cells { width, .. } = self.axes[a] {
                        x[a] += width * (((r % k) as f64 + 0.5) / k as f64 - 0.5);
                    }
                    r /= k;
                }
                hits += usize::from(f.eval(&x));
            }
            self.evaluations += total as u64;
            *o = hits as f64 / total as f64;
        }
        out
    }

    fn step(&mut self, t: &Theory, index: usize, ga: &GroundAction) -> Result<(), BeliefError> {
        let decl = t.action(&ga.action).expect("validated history");
        let params = super::compile::parameters(decl, &ga.args);
        let latent = decl
            .noise
            .as_ref()
            .filter(|_| decl.has_latent())
            .map(|n| n.density.substitute(&params));
        let mut lw = self.lowering(latent.as_ref().is_some_and(Density::is_continuous));

        let poss = lw.formula(
            &decl.poss.substitute(&params),
            &format!("the precondition of event {}", index + 1),
        )?;
        if !matches!(poss, CFormula::Const(true)) {
            let frac = self.fractions(&poss);
            for (m, f) in self.mass.iter_mut().zip(frac) {
                *m *= f;
            }
        }
        if let (Some(s), Some(z)) = (&decl.sensing, ga.reading) {
            let context = format!("the likelihood of event {}", index + 1);
            let lik = lw.density(&s.likelihood.substitute(&params), CExpr::Const(z), &context)?;
            let mut x = vec![0.0; self.axes.len() + 1];
            for idx in 0..self.mass.len() {
                if self.mass[idx] != 0.0 {
                    self.centers(idx, &mut x);
                    self.mass[idx] *= lik.eval(&x);
                }
            }
            self.evaluations += self.mass.len() as u64;
        } else if !decl.effects.is_empty() {
            let ga = if latent.is_some() {
                ga.clone().with_symbolic_outcome(LATENT_SLOT)
            } else {
                ga.clone()
            };
            let binds = bindings(decl, &ga)?;
            let mut effects = Vec::new();
            for (i, f) in self.fluents.iter().enumerate() {
                if let Some(rhs) = decl.effects.get(f) {
                    effects.push((i, lw.expr(&rhs.substitute(&binds))?));
                }
            }
            let nodes = self.noise_nodes(latent.as_ref());
            self.motion(&lw, &effects, &nodes);
        }
        self.warnings.append(&mut lw.warnings);
        self.renormalize()
    }

    /// Quadrature nodes and weights (summing to 1) for the latent.
    fn noise_nodes(&self, latent: Option<&Density>) -> Vec<(f64, f64)> {
        let Some(d) = latent else { return vec![(0.0, 1.0)] };
        match d.support(&Valuation::new()).expect("noise parameters are constants") {
            Support::Atoms(table) => table,
            Support::Interval { lo, hi } => {
                let finest = self
                    .axes
                    .iter()
                    .filter_map(|a| {
                        if let Axis::Cells { width, .. } = a {
                            Some(*width)
                        } else {
                            None
                        }
                    })
                    .fold(f64::INFINITY, f64::min);
                let live = self.mass.iter().filter(|m| **m > 0.0).count().max(1);
                let wanted = if finest.is_finite() {
                    ((hi - lo) / finest).ceil() as usize
                } else {
                    self.cells
                };
                let n = wanted.clamp(16, (MAX_WORK / live).max(16));
                let h = (hi - lo) / n as f64;
                let empty = Valuation::new();
                let mut nodes: Vec<(f64, f64)> = (0..n)
                    .map(|i| {
                        let y = lo + (i as f64 + 0.5) * h;
                        (y, crate::model::density_pdf(d, y, &empty).expect("constant parameters"))
                    })
                    .collect();
                let s: f64 = nodes.iter().map(|n| n.1).sum();
                for n in &mut nodes {
                    n.1 /= s;
                }
                nodes
            }
        }
    }

    fn motion(&mut self, lw: &Lowering, effects: &[(usize, CExpr)], nodes: &[(f64, f64)]) {
        let d = self.axes.len();
        let mut x = vec![0.0; d + 1];
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        let mut atoms: Vec<BTreeMap<u64, f64>> = vec![BTreeMap::new(); d];
        let varies: Vec<bool> = effects.iter().map(|(_, e)| lw.varies(e)).collect();
        for idx in 0..self.mass.len() {
            if self.mass[idx] == 0.0 {
                continue;
            }
            self.centers(idx, &mut x);
            for &(y, q) in nodes {
                if q == 0.0 {
                    continue;
                }
                x[d] = y;
                for ((i, e), v) in effects.iter().zip(&varies) {
                    let nv = e.eval(&x);
                    lo[*i] = lo[*i].min(nv);
                    hi[*i] = hi[*i].max(nv);
                    if !v {
                        atoms[*i].insert(order_key(nv), nv);
                    }
                }
            }
        }
        let mut axes = self.axes.clone();
        let moved_cont = effects.iter().zip(&varies).filter(|(_, v)| **v).count();
        let kept_cont = (0..d)
            .filter(|i| self.axes[*i].is_cells() && !effects.iter().any(|(j, _)| j == i))
            .count();
        let n = per_axis(self.cells, moved_cont + kept_cont);
        for ((i, _), v) in effects.iter().zip(&varies) {
            axes[*i] = if *v && hi[*i] > lo[*i] {
                let width = (hi[*i] - lo[*i]) / (n - 1) as f64;
                Axis::Cells {
                    lo: lo[*i] - 0.5 * width,
                    width,
                    n,
                }
            } else if *v {
                Axis::Atoms(vec![lo[*i]])
            } else {
                Axis::Atoms(atoms[*i].values().copied().collect())
            };
        }
        let strides: Vec<usize> = (0..d).map(|k| axes[k + 1..].iter().map(Axis::len).product()).collect();
        let mut next = vec![0.0; axes.iter().map(Axis::len).product()];
        let mut parts = vec![[(0usize, 0.0f64); 2]; d];
        for idx in 0..self.mass.len() {
            let m = self.mass[idx];
            if m == 0.0 {
                continue;
            }
            self.centers(idx, &mut x);
            let old: Vec<f64> = x[..d].to_vec();
            for &(y, q) in nodes {
                if q == 0.0 {
                    continue;
                }
                x[..d].copy_from_slice(&old);
                x[d] = y;
                for k in 0..d {
                    parts[k] = match effects.iter().find(|(i, _)| *i == k) {
                        Some((_, e)) => axes[k].deposit(e.eval(&x)),
                        None => [(self.index_of(idx, k), 1.0), (0, 0.0)],
                    };
                }
                for corner in 0..(1usize << d) {
                    let mut w = m * q;
                    let mut at = 0;
                    for k in 0..d {
                        let (i, f) = parts[k][(corner >> k) & 1];
                        w *= f;
                        at += i * strides[k];
                    }
                    if w != 0.0 {
                        next[at] += w;
                    }
                }
            }
            self.evaluations += nodes.len() as u64;
        }
        self.axes = axes;
        self.mass = next;
    }

    fn index_of(&self, mut idx: usize, k: usize) -> usize {
        for a in self.axes[k + 1..].iter().rev() {
            idx /= a.len();
        }
        idx % self.axes[k].len()
    }

    fn marginal(&self, k: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.axes[k].len()];
        for (idx, m) in self.mass.iter().enumerate() {
            out[self.index_of(idx, k)] += m;
        }
        out
    }
}

/// Total order key for deduplicating floats.
fn order_key(v: f64) -> u64 {
    let b = (v + 0.0).to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

fn run(problem: &BeliefProblem, cells: usize) -> Result<Grid, BeliefError> {
    let mut g = Grid::init(problem, cells);
    if !(g.gamma >= GAMMA_MIN) {
        return Err(BeliefError::ImpossibleHistory { gamma: g.gamma });
    }
    for (i, e) in problem.history.iter().enumerate() {
        g.step(&problem.theory, i, &GroundAction::from_event(e, None))?;
    }
    Ok(g)
}

/// Belief by the sequential grid. `estimated_abs_error` is the mass of
/// cells where the query is neither everywhere true nor everywhere false,
/// divided by the number of sub-samples per cell; it does not include the
/// discretization error of the grid itself.
pub fn bel_grid(problem: &BeliefProblem, cells: usize) -> Result<BeliefResult, BeliefError> {
    let mut g = run(problem, cells)?;
    let mut lw = g.lowering(false);
    let query = lw.formula(&problem.query, "the query")?;
    let frac = g.fractions(&query);
    let k = sub_samples(g.continuous_axes()) as f64;
    let (mut belief, mut boundary) = (0.0, 0.0);
    for (m, f) in g.mass.iter().zip(&frac) {
        belief += m * f;
        if *f > 0.0 && *f < 1.0 {
            boundary += m;
        }
    }
    g.warnings.append(&mut lw.warnings);
    Ok(BeliefResult {
        belief: belief.clamp(0.0, 1.0),
        gamma: g.gamma,
        estimated_abs_error: boundary / k,
        dimension: problem.dimension(),
        evaluations: g.evaluations,
        warnings: g.warnings,
    })
}

/// Posterior density of `fluent` from the sequential grid, linearly
/// interpolated between cell centers.
pub fn posterior_density_grid(
    t: &Theory,
    hist: &History,
    fluent: &str,
    points: &[f64],
    cells: usize,
) -> Result<DensityGrid, BeliefError> {
    check_grid(points)?;
    let k = t
        .fluents
        .iter()
        .position(|f| f.name == fluent)
        .ok_or_else(|| BeliefError::UnknownFluent(fluent.to_string()))?;
    let problem = BeliefProblem::new(t.clone(), hist.clone(), Formula::True)?;
    let g = run(&problem, cells)?;
    let Axis::Cells { lo, width, n } = g.axes[k] else {
        return Err(BeliefError::NoDensity {
            fluent: fluent.to_string(),
            reason: "it takes finitely many values".into(),
        });
    };
    let dens: Vec<f64> = g.marginal(k).iter().map(|m| m / width).collect();
    let densities = points
        .iter()
        .map(|&p| {
            if p < lo || p > lo + n as f64 * width {
                return 0.0;
            }
            let u = ((p - lo) / width - 0.5).clamp(0.0, (n - 1) as f64);
            let i = (u.floor() as usize).min(n.saturating_sub(2));
            let f = u - i as f64;
            if n == 1 {
                dens[0]
            } else {
                dens[i] * (1.0 - f) + dens[i + 1] * f
            }
        })
        .collect();
    Ok(DensityGrid {
        fluent: fluent.to_string(),
        points: points.to_vec(),
        densities,
    })
}
