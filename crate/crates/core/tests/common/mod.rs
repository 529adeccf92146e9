//! Random theories, histories and queries for property checks.
#![allow(dead_code)]

use degbel::model::{eval_expr, Density, Valuation};
use degbel::{parse_formula, parse_theory, ActionEvent, Formula, GroundAction, History, Theory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const ROBOT: &str = include_str!("../../theories/robot1d.bat");

pub fn robot() -> Theory {
    parse_theory(ROBOT).unwrap()
}

/// Mixed sensing and noisy-motion scenarios on the robot theory.
pub const SCENARIOS: [(&str, &str); 10] = [
    ("", "h <= 7"),
    ("sonar()=5", "h <= 5"),
    ("fwd(2)", "h <= 4"),
    ("fwd(2); sonar()=4", "h <= 3"),
    ("sonar()=6; fwd(1); sonar()=5", "h <= 5"),
    ("fwd(1); fwd(1)", "h > 6"),
    ("sonar()=7; fwd(2); fwd(1); sonar()=4", "h <= 4.5"),
    ("fwd(3); sonar()=0.5", "h <= 1"),
    ("sonar()=3; fwd(-2); sonar()=5", "h <= 4 or h > 6"),
    ("fwd(1.5); sonar()=9; fwd(0.5)", "not (h <= 7) and h <= 9"),
];

pub struct Gen {
    pub rng: ChaCha8Rng,
}

fn num(v: f64) -> String {
    format!("{:.2}", v)
}

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.rng.random_range(0..items.len())]
    }

    fn real(&mut self, lo: f64, hi: f64) -> f64 {
        (self.rng.random_range(lo..hi) * 4.0).round() / 4.0
    }

    fn prior(&mut self) -> String {
        match self.rng.random_range(0..3) {
            0 => {
                let lo = self.real(-5.0, 5.0);
                format!("uniform({}, {})", num(lo), num(lo + self.real(1.0, 8.0)))
            }
            1 => format!(
                "gaussian(mean = {}, stddev = {})",
                num(self.real(-3.0, 3.0)),
                num(self.real(0.5, 2.5))
            ),
            _ => {
                let p = self.real(0.25, 0.75);
                format!(
                    "discrete({}: {}, {}: {})",
                    num(self.real(-3.0, 0.0)),
                    num(p),
                    num(self.real(0.25, 3.0)),
                    num(1.0 - p)
                )
            }
        }
    }

    /// A theory with one or two fluents `a`, `b`, a noisy move, a
    /// deterministic move, and a sensor.
    pub fn theory(&mut self, id: usize) -> (String, Theory) {
        let two = self.rng.random_bool(0.5);
        let mut src = format!("theory random{id}\nfluent a : real\ninit a ~ {}\n", self.prior());
        if two {
            src += &format!("fluent b : real\ninit b ~ {}\n", self.prior());
        }
        let noise = if self.rng.random_bool(0.7) {
            format!("gaussian(mean = x, stddev = {})", num(self.real(0.25, 1.5)))
        } else {
            let w = self.real(0.25, 1.5);
            format!("uniform({}, {})", num(-w), num(w))
        };
        let move_effect = *self.pick(&["a - y", "a + y", "a + x + y", "0.5 * a + y"]);
        let move_poss = *self.pick(&["true", "a >= -20", "a <= 30 or a > 40"]);
        src += &format!(
            "action mv(x: real) {{\n  noisy y ~ {noise}\n  poss {move_poss}\n  effect a := {move_effect}\n}}\n"
        );
        let shift_effect = if two {
            *self.pick(&["b := b + x", "b := a - b", "a := a + b * x"])
        } else {
            "a := a * x"
        };
        src += &format!("action shift(x: real) {{\n  effect {shift_effect}\n}}\n");
        let mean = if two {
            *self.pick(&["a", "a + b", "b - a"])
        } else {
            *self.pick(&["a", "2 * a - 1"])
        };
        let sense_poss = *self.pick(&["true", "a > -30"]);
        src += &format!(
            "action look() senses z {{\n  poss {sense_poss}\n  likelihood gaussian(mean = {mean}, stddev = {})\n}}\n",
            num(self.real(0.5, 2.0))
        );
        let t = parse_theory(&src).unwrap_or_else(|d| panic!("{src}\n{d:?}"));
        (src, t)
    }

    fn sample(&mut self, d: &Density, scope: &Valuation) -> f64 {
        match d {
            Density::Uniform { lo, hi } => self.rng.random_range(*lo..*hi),
            Density::Gaussian { mean, stddev } => Normal::new(eval_expr(mean, scope).unwrap(), *stddev)
                .unwrap()
                .sample(&mut self.rng),
            Density::Discrete(table) => self.pick(table).0,
            Density::Point(e) => eval_expr(e, scope).unwrap(),
        }
    }

    /// Up to `len` events, at most `max_latents` of them noisy, with
    /// readings drawn from a forward simulation.
    pub fn history(&mut self, t: &Theory, len: usize, max_latents: usize) -> History {
        let mut v = Valuation::new();
        for f in &t.fluents {
            let x = self.sample(&f.init, &Valuation::new());
            v.set(f.name.clone(), x);
        }
        let mut h = History::empty();
        let mut latents = 0;
        for _ in 0..len {
            let name = *self.pick(&["mv", "shift", "look"]);
            if name == "mv" && latents == max_latents {
                continue;
            }
            let decl = t.action(name).unwrap();
            let args: Vec<f64> = decl.params.iter().map(|_| self.real(-2.0, 2.0)).collect();
            let mut scope = v.clone();
            for (p, a) in decl.params.iter().zip(&args) {
                scope.set(p.clone(), *a);
            }
            if let Some(s) = &decl.sensing {
                let z = self.sample(&s.likelihood, &scope);
                h.push(ActionEvent::sensed(name, args, (z * 100.0).round() / 100.0));
                continue;
            }
            let mut ga = GroundAction::new(name, args.clone());
            if let Some(n) = &decl.noise {
                ga = ga.with_outcome(self.sample(&n.density, &scope));
                latents += 1;
            }
            v = degbel::progress_valuation(&v, &ga, t).unwrap();
            h.push(ActionEvent::new(name, args));
        }
        h
    }

    fn term(&mut self, fluents: &[&str], nonlinear: bool) -> String {
        let f = *self.pick(fluents);
        let g = *self.pick(fluents);
        match self.rng.random_range(0..if nonlinear { 5 } else { 4 }) {
            0 => f.to_string(),
            1 => format!("{f} + {g}"),
            2 => format!("{f} - 2 * {g}"),
            3 => format!("-{f} + {}", num(self.real(-1.0, 1.0))),
            _ => format!("{f} * {g} - {f}"),
        }
    }

    pub fn formula_text(&mut self, fluents: &[&str], depth: usize, nonlinear: bool) -> String {
        if depth == 0 || self.rng.random_bool(0.4) {
            let op = *self.pick(&["<", "<=", ">", ">="]);
            return format!("{} {op} {}", self.term(fluents, nonlinear), num(self.real(-4.0, 8.0)));
        }
        match self.rng.random_range(0..3) {
            0 => format!(
                "({}) and ({})",
                self.formula_text(fluents, depth - 1, nonlinear),
                self.formula_text(fluents, depth - 1, nonlinear)
            ),
            1 => format!(
                "({}) or ({})",
                self.formula_text(fluents, depth - 1, nonlinear),
                self.formula_text(fluents, depth - 1, nonlinear)
            ),
            _ => format!("not ({})", self.formula_text(fluents, depth - 1, nonlinear)),
        }
    }

    pub fn formula(&mut self, t: &Theory, depth: usize, nonlinear: bool) -> Formula {
        let names: Vec<&str> = t.fluent_names().collect();
        parse_formula(&self.formula_text(&names, depth, nonlinear)).unwrap()
    }

    /// Ground actions with concrete outcomes for the noisy ones.
    pub fn ground_history(&mut self, t: &Theory, len: usize) -> Vec<GroundAction> {
        (0..len)
            .map(|_| {
                let name = *self.pick(&["mv", "shift", "look"]);
                let decl = t.action(name).unwrap();
                let args = decl.params.iter().map(|_| self.real(-3.0, 3.0)).collect();
                let mut ga = GroundAction::new(name, args);
                if decl.noise.is_some() {
                    ga = ga.with_outcome(self.rng.random_range(-3.0..3.0));
                }
                if decl.is_sensing() {
                    ga = ga.with_reading(self.real(-3.0, 3.0));
                }
                ga
            })
            .collect()
    }

    pub fn valuation(&mut self, t: &Theory) -> Valuation {
        t.fluent_names()
            .map(|n| (n.to_string(), self.rng.random_range(-6.0..6.0)))
            .collect()
    }
}
