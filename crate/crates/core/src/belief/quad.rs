//! Nested adaptive Simpson over a box of interval and atom axes.
//!
//! Both components of the integrand (the weight and the weight inside the
//! query) are refined together on the same nodes, with a refinement test
//! that also bounds the error of their difference, so the belief of a
//! query and of its negation come from identical node sets.

use super::compile::{Affine, AxisKind};
use super::QuadratureConfig;

pub(crate) trait Field {
    fn dim(&self) -> usize;
    fn axis(&self, k: usize) -> &AxisKind;
    fn eval(&mut self, x: &[f64]) -> [f64; 2];
    /// Affine functions across whose zero set the integrand may jump.
    fn kinks(&self) -> &[Affine];
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Est {
    pub v: [f64; 2],
    /// Bound on the error of `v[0]`, `v[1]` and `v[0] - v[1]`.
    pub e: f64,
}

impl Est {
    fn add(self, o: Est) -> Est {
        Est {
            v: [self.v[0] + o.v[0], self.v[1] + o.v[1]],
            e: self.e + o.e,
        }
    }
}

fn gap(d: [f64; 2]) -> f64 {
    d[0].abs().max(d[1].abs()).max((d[0] - d[1]).abs())
}

fn simpson(h: f64, a: &Est, m: &Est, b: &Est) -> [f64; 2] {
    let k = h / 6.0;
    [
        k * (a.v[0] + 4.0 * m.v[0] + b.v[0]),
        k * (a.v[1] + 4.0 * m.v[1] + b.v[1]),
    ]
}

/// Result of [`integrate`].
#[derive(Debug, Clone, Copy)]
pub(crate) struct Outcome {
    pub est: Est,
    pub evaluations: u64,
}

/// Integrates with tolerances tightening tenfold from `coarsest` down to
/// `cfg.abs_tol`, keeping the last pass that finished within the
/// evaluation budget. The first pass always runs to completion.
pub(crate) fn integrate<F: Field>(field: &mut F, cfg: &QuadratureConfig, coarsest: f64) -> Outcome {
    let mut tols = vec![cfg.abs_tol];
    while tols[0] * 10.0 <= coarsest {
        tols.insert(0, tols[0] * 10.0);
    }
    let mut best: Option<Outcome> = None;
    let mut spent = 0;
    for tol in tols {
        let limit = if best.is_some() {
            cfg.max_evaluations.saturating_sub(spent)
        } else {
            u64::MAX
        };
        let mut q = Quadrature {
            field: &mut *field,
            cfg,
            x: Vec::new(),
            evaluations: 0,
            limit,
            aborted: false,
        };
        q.x = vec![0.0; q.field.dim()];
        let est = q.level(0, tol);
        spent += q.evaluations;
        if q.aborted {
            break;
        }
        best = Some(Outcome { est, evaluations: 0 });
    }
    Outcome {
        evaluations: spent,
        ..best.expect("the first pass always completes")
    }
}

struct Quadrature<'a, F: Field> {
    field: &'a mut F,
    cfg: &'a QuadratureConfig,
    x: Vec<f64>,
    evaluations: u64,
    limit: u64,
    aborted: bool,
}

impl<F: Field> Quadrature<'_, F> {
    fn level(&mut self, k: usize, tol: f64) -> Est {
        if self.aborted {
            return Est::default();
        }
        if k == self.field.dim() {
            self.evaluations += 1;
            if self.evaluations >= self.limit {
                self.aborted = true;
            }
            return Est {
                v: self.field.eval(&self.x),
                e: 0.0,
            };
        }
        match self.field.axis(k).clone() {
            AxisKind::Atoms(values) => {
                let inner = tol / values.len() as f64;
                let mut sum = Est::default();
                for v in values {
                    self.x[k] = v;
                    sum = sum.add(self.level(k + 1, inner));
                }
                sum
            }
            AxisKind::Interval { lo, hi } => self.interval(k, lo, hi, tol),
        }
    }

    /// Roots in `(lo, hi)` of kinks that, with the outer coordinates fixed,
    /// depend on coordinate `k` and on nothing further in.
    fn cuts(&self, k: usize, lo: f64, hi: f64) -> Vec<f64> {
        let mut cuts: Vec<f64> = self
            .field
            .kinks()
            .iter()
            .filter(|a| a.coefs[k] != 0.0 && a.coefs[k + 1..].iter().all(|c| *c == 0.0))
            .map(|a| {
                let rest: f64 = a.constant + a.coefs[..k].iter().zip(&self.x).map(|(c, v)| c * v).sum::<f64>();
                -rest / a.coefs[k]
            })
            .filter(|r| r.is_finite() && lo < *r && *r < hi)
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        cuts
    }

    fn interval(&mut self, k: usize, lo: f64, hi: f64, tol: f64) -> Est {
        let total = hi - lo;
        if total <= 0.0 {
            return Est::default();
        }
        let mut edges = vec![lo];
        edges.extend(self.cuts(k, lo, hi));
        edges.push(hi);
        // inner integrals share half the budget, weighted by the panel width
        let inner = tol / (2.0 * total);
        let panels = self.cfg.initial_panels.max(1);
        let last = edges.len() - 2;
        let mut sum = Est::default();
        for (j, w) in edges.windows(2).enumerate() {
            let (a, b) = (w[0], w[1]);
            let n = ((panels as f64 * (b - a) / total).round() as usize).max(1);
            let h = (b - a) / n as f64;
            // at a cut the integrand jumps; sample its one-sided limit
            let nudge = (1e-9 * (b - a)).max(8.0 * f64::EPSILON * a.abs().max(b.abs()));
            let inside = |t: f64, toward: f64| if nudge < 0.25 * (b - a) { t + nudge * toward } else { t };
            let mut fa = self.node(k, if j > 0 { inside(a, 1.0) } else { a }, inner);
            for i in 0..n {
                let pb = if i + 1 == n { b } else { a + (i + 1) as f64 * h };
                let pa = a + i as f64 * h;
                let fm = self.node(k, 0.5 * (pa + pb), inner);
                let fb = self.node(k, if i + 1 == n && j < last { inside(b, -1.0) } else { pb }, inner);
                let whole = simpson(pb - pa, &fa, &fm, &fb);
                let own = 0.5 * tol * (pb - pa) / total;
                sum = sum.add(self.adapt(k, pa, pb, [fa, fm, fb], whole, own, inner, self.cfg.max_depth));
                fa = fb;
            }
        }
        sum
    }

    fn node(&mut self, k: usize, t: f64, inner: f64) -> Est {
        self.x[k] = t;
        self.level(k + 1, inner)
    }

    #[allow(clippy::too_many_arguments)]
    fn adapt(
        &mut self,
        k: usize,
        a: f64,
        b: f64,
        f: [Est; 3],
        whole: [f64; 2],
        tol: f64,
        inner: f64,
        depth: u32,
    ) -> Est {
        let [fa, fm, fb] = f;
        let m = 0.5 * (a + b);
        let flm = self.node(k, 0.5 * (a + m), inner);
        let frm = self.node(k, 0.5 * (m + b), inner);
        let left = simpson(m - a, &fa, &flm, &fm);
        let right = simpson(b - m, &fm, &frm, &fb);
        let two = [left[0] + right[0], left[1] + right[1]];
        let delta = [two[0] - whole[0], two[1] - whole[1]];
        let err = gap(delta) / 15.0;
        let tiny = m <= a || m >= b || (b - a) <= f64::EPSILON * (a.abs() + b.abs());
        if err <= tol || depth == 0 || tiny || self.aborted {
            let h = b - a;
            let carried = h / 12.0 * (fa.e + 4.0 * flm.e + 2.0 * fm.e + 4.0 * frm.e + fb.e);
            return Est {
                v: [two[0] + delta[0] / 15.0, two[1] + delta[1] / 15.0],
                e: err + carried,
            };
        }
        let l = self.adapt(k, a, m, [fa, flm, fm], left, 0.5 * tol, inner, depth - 1);
        let r = self.adapt(k, m, b, [fm, frm, fb], right, 0.5 * tol, inner, depth - 1);
        l.add(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Poly {
        axes: Vec<AxisKind>,
        kinks: Vec<Affine>,
        f: fn(&[f64]) -> [f64; 2],
    }

    impl Field for Poly {
        fn dim(&self) -> usize {
            self.axes.len()
        }
        fn axis(&self, k: usize) -> &AxisKind {
            &self.axes[k]
        }
        fn eval(&mut self, x: &[f64]) -> [f64; 2] {
            (self.f)(x)
        }
        fn kinks(&self) -> &[Affine] {
            &self.kinks
        }
    }

    fn run(p: &mut Poly) -> (Est, u64) {
        let o = integrate(p, &QuadratureConfig::default(), 1e-8);
        (o.est, o.evaluations)
    }

    #[test]
    fn cubic_is_exact() {
        let mut p = Poly {
            axes: vec![AxisKind::Interval { lo: -1.0, hi: 2.0 }],
            kinks: vec![],
            f: |x| [x[0] * x[0] * x[0], 1.0],
        };
        let (e, _) = run(&mut p);
        assert!((e.v[0] - 3.75).abs() < 1e-12);
        assert!((e.v[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn step_is_exact_with_a_cut() {
        // ∫∫ [x + y <= 1] over the unit square = 1/2
        let mut p = Poly {
            axes: vec![
                AxisKind::Interval { lo: 0.0, hi: 1.0 },
                AxisKind::Interval { lo: 0.0, hi: 1.0 },
            ],
            kinks: vec![Affine {
                constant: -1.0,
                coefs: vec![1.0, 1.0],
            }],
            f: |x| [1.0, if x[0] + x[1] <= 1.0 { 1.0 } else { 0.0 }],
        };
        let (e, n) = run(&mut p);
        assert!((e.v[1] - 0.5).abs() < 1e-12, "{e:?}");
        assert!(n < 2000, "{n}");
    }

    #[test]
    fn atoms_are_summed() {
        let mut p = Poly {
            axes: vec![AxisKind::Atoms(vec![1.0, 2.0, 3.0])],
            kinks: vec![],
            f: |x| [x[0], x[0] * x[0]],
        };
        assert_eq!(run(&mut p).0.v, [6.0, 14.0]);
    }

    #[test]
    fn smooth_gaussian_meets_tolerance() {
        let mut p = Poly {
            axes: vec![AxisKind::Interval { lo: -8.0, hi: 8.0 }],
            kinks: vec![],
            f: |x| {
                let g = (-0.5 * x[0] * x[0]).exp() / (2.0 * std::f64::consts::PI).sqrt();
                [g, if x[0] <= 0.0 { g } else { 0.0 }]
            },
        };
        let (e, _) = run(&mut p);
        // the step at 0 is not a declared kink here; adaptivity handles it
        assert!((e.v[0] - 1.0).abs() < 1e-8);
        assert!((e.v[1] - 0.5).abs() < 1e-6, "{e:?}");
    }
}
