//! Reference filters for cross-checking the belief engine.
//!
//! Nothing here shares code with [`crate::belief`]: states are moved
//! forward through the effects with [`progress_valuation`] and conditions
//! are evaluated on [`Valuation`]s.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::history::{History, HistoryError};
use crate::model::{density_pdf, eval_formula, Density, EvalError, Expr, Formula, Support, Theory, Valuation};
use crate::regression::{progress_valuation, GroundAction, RegressionError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("history has zero weight")]
    ImpossibleHistory,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    History(#[from] HistoryError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Regression(#[from] RegressionError),
}

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// Error function. Power series with positive terms below 3, continued
/// fraction for the complement above.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return -erf(-x);
    }
    if x < 3.0 {
        erf_series(x)
    } else {
        1.0 - erfc_fraction(x)
    }
}

/// `1 - erf(x)` without cancellation for large `x`.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 3.0 {
        1.0 - erf(x)
    } else {
        erfc_fraction(x)
    }
}

// erf(x) = 2/√π · e^{-x²} · Σ 2ⁿ x^{2n+1} / (1·3·…·(2n+1))
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    while term > sum * 1e-17 {
        n += 1.0;
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
    }
    FRAC_2_SQRT_PI * (-x2).exp() * sum
}

// erfc(x) = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + …)))), modified Lentz
fn erfc_fraction(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for n in 1..500 {
        let a = n as f64 / 2.0;
        d = x + a * d;
        d = if d.abs() < tiny { tiny } else { d };
        c = x + a / c;
        c = if c.abs() < tiny { tiny } else { c };
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    0.5 * FRAC_2_SQRT_PI * (-x * x).exp() / f
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// CDF at `at` of a Gaussian(`mean`, `stddev`) restricted to `[lo, hi]`.
pub fn truncated_gaussian_cdf(lo: f64, hi: f64, mean: f64, stddev: f64, at: f64) -> Result<f64, OracleError> {
    if !(lo < hi) || !(stddev > 0.0) || !(lo <= at && at <= hi) || !mean.is_finite() {
        return Err(OracleError::InvalidArgument(format!(
            "need lo < hi, stddev > 0, lo <= at <= hi (got lo={lo}, hi={hi}, stddev={stddev}, at={at})"
        )));
    }
    let z = |v: f64| (v - mean) / stddev;
    // upper tails are differenced on the complementary side
    let (num, den) = if z(lo) > 0.0 {
        let q = |v: f64| normal_cdf(-z(v));
        (q(lo) - q(at), q(lo) - q(hi))
    } else {
        (
            normal_cdf(z(at)) - normal_cdf(z(lo)),
            normal_cdf(z(hi)) - normal_cdf(z(lo)),
        )
    };
    if !(den >= 1e-300) {
        return Err(OracleError::ImpossibleHistory);
    }
    Ok((num / den).clamp(0.0, 1.0))
}

/// Mass of `d` (constant parameters) on `[a, b]`.
fn interval_mass(d: &Density, a: f64, b: f64) -> f64 {
    match d {
        Density::Uniform { lo, hi } => (b.min(*hi) - a.max(*lo)).max(0.0) / (hi - lo),
        Density::Gaussian {
            mean: Expr::Const(m),
            stddev,
        } => {
            let (za, zb) = ((a - m) / stddev, (b - m) / stddev);
            if za > 0.0 {
                normal_cdf(-za) - normal_cdf(-zb)
            } else {
                normal_cdf(zb) - normal_cdf(za)
            }
        }
        _ => unreachable!("interval mass of a continuous density with constant parameters"),
    }
}

fn event_parameters(t: &Theory, e: &crate::history::ActionEvent) -> BTreeMap<String, Expr> {
    let decl = t.action(&e.action).expect("validated history");
    decl.params
        .iter()
        .cloned()
        .zip(e.args.iter().map(|v| Expr::Const(*v)))
        .collect()
}

fn valuation(names: &[String], values: &[f64]) -> Valuation {
    names.iter().cloned().zip(values.iter().copied()).collect()
}

/// Joint histogram over the fluents after a history.
#[derive(Debug, Clone, PartialEq)]
pub struct GridBelief {
    pub fluents: Vec<String>,
    /// Cell width per fluent; `None` for fluents that only take the
    /// values of a finite table.
    pub widths: Vec<Option<f64>>,
    /// Cell centers (one row per cell, fluents in declaration order).
    pub points: Vec<Vec<f64>>,
    /// Normalized cell masses.
    pub masses: Vec<f64>,
    /// Product of the per-step normalizers.
    pub gamma: f64,
}

impl GridBelief {
    /// Mass where `phi` holds, sampling each continuous cell at evenly
    /// spaced points.
    pub fn belief(&self, phi: &Formula) -> Result<f64, OracleError> {
        let cont: Vec<usize> = (0..self.fluents.len()).filter(|i| self.widths[*i].is_some()).collect();
        let k: usize = match cont.len() {
            0 => 1,
            1 => 16,
            2 => 4,
            _ => 1,
        };
        let total = k.pow(cont.len() as u32);
        let mut sum = 0.0;
        for (p, m) in self.points.iter().zip(&self.masses) {
            let mut hits = 0;
            for s in 0..total {
                let mut x = p.clone();
                let mut r = s;
                for &i in &cont {
                    let w = self.widths[i].expect("continuous");
                    x[i] += w * (((r % k) as f64 + 0.5) / k as f64 - 0.5);
                    r /= k;
                }
                if eval_formula(phi, &valuation(&self.fluents, &x))? {
                    hits += 1;
                }
            }
            sum += m * hits as f64 / total as f64;
        }
        Ok(sum)
    }

    /// Marginal density of a continuous fluent at its cell centers.
    pub fn marginal(&self, fluent: &str) -> Option<Vec<(f64, f64)>> {
        let i = self.fluents.iter().position(|f| f == fluent)?;
        let w = self.widths[i]?;
        let mut acc: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
        for (p, m) in self.points.iter().zip(&self.masses) {
            let e = acc.entry((p[i] / w).floor() as i64).or_insert((p[i], 0.0));
            e.1 += m;
        }
        Some(acc.into_values().map(|(x, m)| (x, m / w)).collect())
    }
}

/// Sparse cell key: lattice index for continuous fluents, value bits for
/// finite ones.
type Key = Vec<i64>;

/// `(anchor, width)` of a continuous lattice axis.
type Axis = (f64, f64);

struct Lattice {
    /// One axis per continuous fluent.
    axes: Vec<Option<Axis>>,
}

impl Lattice {
    fn key(&self, x: &[f64]) -> Key {
        self.axes
            .iter()
            .zip(x)
            .map(|(a, v)| match a {
                Some((lo, w)) => ((v - lo) / w).floor() as i64,
                None => v.to_bits() as i64,
            })
            .collect()
    }

    fn center(&self, key: &Key) -> Vec<f64> {
        self.axes
            .iter()
            .zip(key)
            .map(|(a, k)| match a {
                Some((lo, w)) => lo + (*k as f64 + 0.5) * w,
                None => f64::from_bits(*k as u64),
            })
            .collect()
    }
}

/// Fluents that keep finitely many values: a finite prior, and every
/// effect on them in `hist` built from such fluents, parameters, and a
/// finite latent.
fn finite_fluents(t: &Theory, hist: &History) -> Vec<bool> {
    let mut finite: Vec<bool> = t.fluents.iter().map(|f| !f.init.is_continuous()).collect();
    loop {
        let mut changed = false;
        for e in hist.iter() {
            let decl = t.action(&e.action).expect("validated history");
            let latent_finite = decl.noise.as_ref().is_none_or(|n| !n.density.is_continuous());
            for (i, f) in t.fluents.iter().enumerate() {
                let Some(rhs) = decl.effects.get(&f.name) else { continue };
                let ok = rhs.names().iter().all(|n| {
                    if let Some(j) = t.fluents.iter().position(|g| &g.name == n) {
                        finite[j]
                    } else if decl.params.contains(n) {
                        true
                    } else {
                        latent_finite
                    }
                });
                if finite[i] && !ok {
                    finite[i] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            return finite;
        }
    }
}

/// Upper bound on the number of bins a continuous noise density is split into.
const NOISE_BINS: f64 = 512.0;

/// Histogram filter on a fixed lattice: prior cell masses from the exact
/// CDF, effector noise binned on the lattice spacing (at most
/// [`NOISE_BINS`] bins), and each moved cell deposited whole into the
/// cell containing its new center.
pub fn grid_filter(t: &Theory, hist: &History, cells: usize) -> Result<GridBelief, OracleError> {
    if cells < 2 {
        return Err(OracleError::InvalidArgument("cells must be at least 2".into()));
    }
    hist.validate(t)?;
    let empty = Valuation::new();
    let finite = finite_fluents(t, hist);
    let noise_widths = hist.iter().filter_map(|e| {
        let decl = t.action(&e.action)?;
        let d = decl.noise.as_ref()?.density.substitute(&event_parameters(t, e));
        match d.support(&empty).ok()? {
            Support::Interval { lo, hi } => Some(hi - lo),
            Support::Atoms(_) => None,
        }
    });
    let prior_widths = t.fluents.iter().filter_map(|f| match f.init.support(&empty).ok()? {
        Support::Interval { lo, hi } => Some(hi - lo),
        Support::Atoms(_) => None,
    });
    let fallback = prior_widths.chain(noise_widths).fold(f64::INFINITY, f64::min) / cells as f64;

    let mut axes = Vec::new();
    let mut state: BTreeMap<Key, f64> = BTreeMap::from([(Vec::new(), 1.0)]);
    for (f, fin) in t.fluents.iter().zip(&finite) {
        let support = f.init.support(&empty)?;
        let (axis, entries): (Option<Axis>, Vec<(i64, f64)>) = match support {
            Support::Interval { lo, hi } => {
                let w = (hi - lo) / cells as f64;
                let m = (0..cells as i64).map(|i| {
                    let a = lo + i as f64 * w;
                    (i, interval_mass(&f.init, a, a + w))
                });
                (Some((lo, w)), m.collect())
            }
            Support::Atoms(table) if *fin => (None, table.into_iter().map(|(v, m)| (v.to_bits() as i64, m)).collect()),
            Support::Atoms(table) => {
                let w = fallback;
                (
                    Some((0.0, w)),
                    table.into_iter().map(|(v, m)| ((v / w).floor() as i64, m)).collect(),
                )
            }
        };
        axes.push(axis);
        let mut next = BTreeMap::new();
        for (k, m) in &state {
            for (e, q) in &entries {
                let mut key = k.clone();
                key.push(*e);
                *next.entry(key).or_insert(0.0) += m * q;
            }
        }
        state = next;
    }
    let lattice = Lattice { axes };
    let names: Vec<String> = t.fluents.iter().map(|f| f.name.clone()).collect();
    let mut gamma = normalize(&mut state)?;

    for e in hist.iter() {
        let decl = t.action(&e.action).expect("validated history");
        let params = event_parameters(t, e);
        let poss = decl.poss.substitute(&params);
        let mut next: BTreeMap<Key, f64> = BTreeMap::new();
        let noise = decl.noise.as_ref().map(|n| n.density.substitute(&params));
        let bins: Vec<(Option<f64>, f64)> = match (&noise, decl.has_latent()) {
            (Some(d), true) => match d.support(&empty)? {
                Support::Atoms(table) => table.into_iter().map(|(y, q)| (Some(y), q)).collect(),
                Support::Interval { lo, hi } => {
                    // bins centered on the mean, at least one lattice spacing wide
                    let w = lattice.axes.iter().flatten().map(|a| a.1).fold(fallback, f64::min);
                    let w = w.max((hi - lo) / NOISE_BINS);
                    let mid = 0.5 * (lo + hi);
                    let half = ((hi - mid) / w).ceil() as i64;
                    (-half..=half)
                        .map(|j| {
                            let y = mid + j as f64 * w;
                            (Some(y), interval_mass(d, (y - 0.5 * w).max(lo), (y + 0.5 * w).min(hi)))
                        })
                        .collect()
                }
            },
            _ => vec![(None, 1.0)],
        };
        for (key, m) in &state {
            let v = valuation(&names, &lattice.center(key));
            if !eval_formula(&poss, &v)? {
                continue;
            }
            if let (Some(s), Some(z)) = (&decl.sensing, e.reading) {
                let l = density_pdf(&s.likelihood.substitute(&params), z, &v)?;
                if l > 0.0 {
                    *next.entry(key.clone()).or_insert(0.0) += m * l;
                }
                continue;
            }
            for (y, q) in &bins {
                if *q == 0.0 {
                    continue;
                }
                let mut ga = GroundAction::from_event(e, None);
                if let Some(y) = y {
                    ga = ga.with_outcome(*y);
                }
                let after = progress_valuation(&v, &ga, t)?;
                let x: Vec<f64> = names.iter().map(|n| after.get(n).expect("fluent")).collect();
                *next.entry(lattice.key(&x)).or_insert(0.0) += m * q;
            }
        }
        state = next;
        gamma *= normalize(&mut state)?;
    }
    let (points, masses) = state.iter().map(|(k, m)| (lattice.center(k), *m)).unzip();
    let widths = lattice.axes.iter().map(|a| a.map(|(_, w)| w)).collect();
    Ok(GridBelief {
        fluents: names,
        widths,
        points,
        masses,
        gamma,
    })
}

fn normalize(state: &mut BTreeMap<Key, f64>) -> Result<f64, OracleError> {
    let s: f64 = state.values().sum();
    if !(s > 0.0) {
        return Err(OracleError::ImpossibleHistory);
    }
    for m in state.values_mut() {
        *m /= s;
    }
    Ok(s)
}

/// Weighted samples of the fluents after a history.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleCloud {
    pub fluents: Vec<String>,
    /// One row of fluent values per particle.
    pub particles: Vec<Vec<f64>>,
    /// Normalized weights.
    pub weights: Vec<f64>,
    /// Estimate of the history's total weight: the product over events of
    /// the weight sums before normalizing.
    pub gamma: f64,
    pub seed: u64,
    pub resamplings: usize,
}

impl ParticleCloud {
    fn indicators(&self, phi: &Formula) -> Result<Vec<f64>, OracleError> {
        self.particles
            .iter()
            .map(|p| {
                Ok(if eval_formula(phi, &valuation(&self.fluents, p))? {
                    1.0
                } else {
                    0.0
                })
            })
            .collect()
    }

    pub fn belief(&self, phi: &Formula) -> Result<f64, OracleError> {
        Ok(self
            .indicators(phi)?
            .iter()
            .zip(&self.weights)
            .map(|(i, w)| i * w)
            .sum())
    }

    /// Estimated variance of [`belief`](Self::belief):
    /// `Σ wᵢ² (1ᵢ − p̂)²`, which is `p̂(1−p̂)/N` for equal weights.
    pub fn variance(&self, phi: &Formula) -> Result<f64, OracleError> {
        let ind = self.indicators(phi)?;
        let p: f64 = ind.iter().zip(&self.weights).map(|(i, w)| i * w).sum();
        Ok(ind
            .iter()
            .zip(&self.weights)
            .map(|(i, w)| w * w * (i - p) * (i - p))
            .sum())
    }

    pub fn effective_sample_size(&self) -> f64 {
        1.0 / self.weights.iter().map(|w| w * w).sum::<f64>()
    }
}

fn sample(d: &Density, rng: &mut ChaCha8Rng) -> Result<f64, OracleError> {
    Ok(match d {
        Density::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        Density::Gaussian {
            mean: Expr::Const(m),
            stddev,
        } => Normal::new(*m, *stddev)
            .map_err(|e| OracleError::InvalidArgument(e.to_string()))?
            .sample(rng),
        Density::Discrete(table) => {
            let total: f64 = table.iter().map(|(_, m)| m).sum();
            let mut u = rng.random::<f64>() * total;
            let mut last = table[0].0;
            for (v, m) in table {
                last = *v;
                if u < *m {
                    break;
                }
                u -= m;
            }
            last
        }
        Density::Point(Expr::Const(v)) => *v,
        other => {
            return Err(OracleError::InvalidArgument(format!(
                "cannot sample `{other}` without a state"
            )))
        }
    })
}

/// Systematic resampling: one uniform offset, `n` evenly spaced pointers
/// into the cumulative weights.
fn systematic(weights: &[f64], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = weights.len();
    let u0 = rng.random::<f64>() / n as f64;
    let mut out = Vec::with_capacity(n);
    let mut cum = weights[0];
    let mut j = 0;
    for i in 0..n {
        let u = u0 + i as f64 / n as f64;
        while u > cum && j + 1 < n {
            j += 1;
            cum += weights[j];
        }
        out.push(j);
    }
    out
}

/// Bootstrap particle filter driven by a ChaCha8 stream seeded with
/// `seed`. Resamples systematically whenever the effective sample size
/// drops below `n / 2`.
pub fn particle_filter(t: &Theory, hist: &History, n: usize, seed: u64) -> Result<ParticleCloud, OracleError> {
    if n == 0 {
        return Err(OracleError::InvalidArgument("need at least one particle".into()));
    }
    hist.validate(t)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = t.fluents.iter().map(|f| f.name.clone()).collect();
    let mut particles = Vec::with_capacity(n);
    for _ in 0..n {
        let row = t
            .fluents
            .iter()
            .map(|f| sample(&f.init, &mut rng))
            .collect::<Result<Vec<_>, _>>()?;
        particles.push(row);
    }
    let mut weights = vec![1.0 / n as f64; n];
    let mut resamplings = 0;
    let mut gamma = 1.0;
    for e in hist.iter() {
        let decl = t.action(&e.action).expect("validated history");
        let params = event_parameters(t, e);
        let poss = decl.poss.substitute(&params);
        let noise = decl
            .noise
            .as_ref()
            .filter(|_| decl.has_latent())
            .map(|n| n.density.substitute(&params));
        for (p, w) in particles.iter_mut().zip(weights.iter_mut()) {
            if *w == 0.0 {
                continue;
            }
            let v = valuation(&names, p);
            if !eval_formula(&poss, &v)? {
                *w = 0.0;
                continue;
            }
            if let (Some(s), Some(z)) = (&decl.sensing, e.reading) {
                *w *= density_pdf(&s.likelihood.substitute(&params), z, &v)?;
                continue;
            }
            let mut ga = GroundAction::from_event(e, None);
            if let Some(d) = &noise {
                ga = ga.with_outcome(sample(d, &mut rng)?);
            }
            let after = progress_valuation(&v, &ga, t)?;
            for (x, n) in p.iter_mut().zip(&names) {
                *x = after.get(n).expect("fluent");
            }
        }
        let s: f64 = weights.iter().sum();
        if !(s > 0.0) {
            return Err(OracleError::ImpossibleHistory);
        }
        gamma *= s;
        for w in &mut weights {
            *w /= s;
        }
        let ess = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        if ess < n as f64 / 2.0 {
            let picks = systematic(&weights, &mut rng);
            particles = picks.iter().map(|&i| particles[i].clone()).collect();
            weights = vec![1.0 / n as f64; n];
            resamplings += 1;
        }
    }
    Ok(ParticleCloud {
        fluents: names,
        particles,
        weights,
        gamma,
        seed,
        resamplings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_formula, parse_theory};

    fn robot() -> Theory {
        parse_theory(include_str!("../theories/robot1d.bat")).unwrap()
    }

    #[test]
    fn erf_reference_values() {
        // tabulated values of erf
        for (x, want) in [
            (0.0, 0.0),
            (0.5, 0.520_499_877_813_046_5),
            (1.0, 0.842_700_792_949_714_9),
            (2.0, 0.995_322_265_018_952_7),
            (3.5, 0.999_999_256_901_627_7),
        ] {
            assert!((erf(x) - want).abs() < 1e-15, "erf({x}) = {}", erf(x));
            assert!((erf(-x) + want).abs() < 1e-15);
        }
        let e5 = erfc(5.0);
        assert!((e5 / 1.537_459_794_428_034_8e-12 - 1.0).abs() < 1e-13, "{e5:e}");
        assert!((normal_cdf(-3.0) / 1.349_898_031_630_094_6e-3 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn erf_is_continuous_at_the_switch() {
        let (a, b) = (erf(3.0 - 1e-12), erf(3.0));
        assert!((a - b).abs() < 1e-15);
        assert!((erfc(3.0 - 1e-12) - erfc(3.0)).abs() < 1e-15);
    }

    #[test]
    fn truncated_cdf_examples() {
        assert!((truncated_gaussian_cdf(-1.0, 1.0, 0.0, 1.0, 0.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(truncated_gaussian_cdf(2.0, 12.0, 5.0, 1.0, 12.0).unwrap(), 1.0);
        let v = truncated_gaussian_cdf(2.0, 12.0, 5.0, 1.0, 5.0).unwrap();
        assert!((v - 0.499_324_94).abs() < 1e-6, "{v}");
        assert!(truncated_gaussian_cdf(2.0, 1.0, 0.0, 1.0, 1.5).is_err());
        assert_eq!(
            truncated_gaussian_cdf(0.0, 1.0, 1e4, 1.0, 0.5),
            Err(OracleError::ImpossibleHistory)
        );
    }

    #[test]
    fn grid_prior_and_shift() {
        let t = robot();
        let g = grid_filter(&t, &History::empty(), 1000).unwrap();
        assert!((g.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((g.belief(&parse_formula("h <= 7").unwrap()).unwrap() - 0.5).abs() < 1e-12);

        let src = include_str!("../theories/robot1d.bat").replace("gaussian(mean = x, stddev = 1.0)", "point(x)");
        let t = parse_theory(&src).unwrap();
        let g = grid_filter(&t, &History::parse("fwd(2)").unwrap(), 1000).unwrap();
        assert!((g.belief(&parse_formula("h <= 5").unwrap()).unwrap() - 0.5).abs() < 1e-9);
        let lo = g.points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        assert!((lo - 0.005).abs() < 1e-9, "{lo}");
    }

    #[test]
    fn grid_sensing_is_a_pointwise_product() {
        let t = robot();
        let g = grid_filter(&t, &History::parse("sonar()=5").unwrap(), 500).unwrap();
        let norm: f64 = g
            .points
            .iter()
            .map(|p| crate::model::gaussian_pdf(5.0, p[0], 1.0))
            .sum();
        for (p, m) in g.points.iter().zip(&g.masses) {
            let want = crate::model::gaussian_pdf(5.0, p[0], 1.0) / norm;
            assert!((m - want).abs() < 1e-15);
        }
    }

    #[test]
    fn particles_are_reproducible() {
        let t = robot();
        let h = History::parse("fwd(2); sonar()=4").unwrap();
        let a = particle_filter(&t, &h, 2000, 7).unwrap();
        let b = particle_filter(&t, &h, 2000, 7).unwrap();
        assert_eq!(a, b);
        assert!((a.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_ne!(a, particle_filter(&t, &h, 2000, 8).unwrap());
    }

    #[test]
    fn particle_prior_bound() {
        let t = robot();
        let c = particle_filter(&t, &History::empty(), 100_000, 1).unwrap();
        let phi = parse_formula("h <= 7").unwrap();
        let p = c.belief(&phi).unwrap();
        assert!((p - 0.5).abs() < 3.0 * (0.25f64 / 100_000.0).sqrt(), "{p}");
        assert!((c.variance(&phi).unwrap() - p * (1.0 - p) / 100_000.0).abs() < 1e-12);
    }

    #[test]
    fn particle_gamma_estimates_the_evidence() {
        let c = particle_filter(&robot(), &History::parse("sonar()=5").unwrap(), 100_000, 4).unwrap();
        let want = 0.1 * (normal_cdf(7.0) - normal_cdf(-3.0));
        // relative sd of the likelihood mean is about 1.35 / sqrt(n)
        assert!(
            (c.gamma - want).abs() < 3.0 * 1.35 / 100_000f64.sqrt() * want,
            "{} vs {want}",
            c.gamma
        );
    }

    #[test]
    fn systematic_resampling_preserves_proportions() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let picks = systematic(&[0.5, 0.25, 0.0, 0.25], &mut rng);
        let count = |i| picks.iter().filter(|p| **p == i).count();
        assert_eq!((count(0), count(1), count(2), count(3)), (2, 1, 0, 1));
    }

    #[test]
    fn zero_weight_histories() {
        let t = robot();
        let h = History::parse("fwd(20); sonar()=1").unwrap();
        assert_eq!(particle_filter(&t, &h, 1000, 1), Err(OracleError::ImpossibleHistory));
        assert_eq!(grid_filter(&t, &h, 200), Err(OracleError::ImpossibleHistory));
    }
}
