//! Choosing Lyapunov weights.
//!
//! [`feasible_seed`] follows the constructive order in which the sign
//! conditions decouple: fix `n2`, grow `α2, α3` until `c4 > 0`, grow `α1` and
//! `n1` until `c3 > 0`, then grow `n0` until `c1, c2, c5, c6` and `κ1` are all
//! positive.
//!
//! [`maximize_kappa2`] improves on that seed with a cyclic coordinate search
//! in log-space, polling a few random directions before each step reduction
//! and restarting from perturbed copies of the incumbent. Infeasible points
//! score `−∞`, so every accepted point is
//! feasible and the best-so-far rate never decreases.

use std::f64::consts::{LN_2, PI};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::certificate::{Certificate, Certifier, Constraint, Gate, LyapunovWeights};
use crate::error::{Error, Result};
use crate::params::{BeamParameters, DEFAULT_GRID};

const MAX_DOUBLINGS: usize = 64;
const MIN_STEP: f64 = 1e-9;
const RESTART_SPREAD: f64 = 0.7;
/// Random directions polled when no coordinate move improves. Needed where
/// two coefficients tie for the minimum and every axis move loses.
const RANDOM_DIRECTIONS: usize = 12;
/// Step below which the tolerance test may end a local search.
const SETTLED_STEP: f64 = LN_2 / 64.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    /// Extra starting point next to the constructive seed.
    pub initial: Option<LyapunovWeights>,
    /// `[lower, upper]` per weight, in the order `n0, n1, n2, α1, α2, α3`.
    pub bounds: [[f64; 2]; 6],
    /// Budget of objective evaluations.
    pub max_iterations: usize,
    /// Relative improvement of κ2 between step reductions below which the
    /// local search stops.
    pub tolerance: f64,
    pub seed: u64,
    /// Number of randomly perturbed restarts around the incumbent.
    pub restarts: usize,
    /// Set from the run-level gate when read from a config file.
    #[serde(skip)]
    pub gate: Gate,
    /// Grid intervals for the coefficient infima.
    #[serde(skip)]
    pub n_grid: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            initial: None,
            bounds: [[1e-3, 1e4]; 6],
            max_iterations: 2000,
            tolerance: 1e-6,
            seed: 0,
            restarts: 4,
            gate: Gate::ExcludeC1,
            n_grid: DEFAULT_GRID,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        for (i, [lo, hi]) in self.bounds.iter().enumerate() {
            if !(*lo > 0.0 && lo < hi && hi.is_finite()) {
                return Err(Error::Precondition(format!(
                    "search bounds for weight {i} must satisfy 0 < lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        if self.max_iterations < 1 {
            return Err(Error::Precondition("max_iterations must be at least 1".into()));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::Precondition("tolerance must be non-negative".into()));
        }
        if let Some(w) = &self.initial {
            w.validate()?;
        }
        Ok(())
    }
}

/// First weight tuple produced by the constructive procedure. Feasible under
/// the strict gate, hence under both.
pub fn feasible_seed(params: &BeamParameters) -> Result<LyapunovWeights> {
    seed_with(&Certifier::new(params))
}

fn grow<F: FnMut(f64) -> bool>(start: f64, mut done: F) -> Option<f64> {
    let mut v = start;
    for _ in 0..=MAX_DOUBLINGS {
        if done(v) {
            return Some(v);
        }
        v *= 2.0;
    }
    None
}

fn seed_with(certifier: &Certifier) -> Result<LyapunovWeights> {
    let params = certifier.params();
    let not_found = |blocking| Error::FeasibilityNotFound { blocking };
    let mut w = LyapunovWeights::from_array([1.0; 6]);

    let alpha = grow(1.0, |a| {
        let trial = LyapunovWeights {
            alpha2: a,
            alpha3: a,
            ..w
        };
        certifier.certify(&trial).c_essinf[3] > 0.0
    })
    .ok_or(not_found(Constraint::Coefficient(4)))?;
    w.alpha2 = alpha;
    w.alpha3 = alpha;

    // the Wirtinger share of c3 is at most half of n1 K / 2 once α1 ≥ 2 (2L/π)²
    let wirt = (2.0 * params.length / PI).powi(2);
    w.alpha1 = grow(1.0, |a| a >= 2.0 * wirt).ok_or(not_found(Constraint::Coefficient(3)))?;
    w.n1 = grow(1.0, |n1| {
        certifier.certify(&LyapunovWeights { n1, ..w }).c_essinf[2] > 0.0
    })
    .ok_or(not_found(Constraint::Coefficient(3)))?;

    let mut last = None;
    let n0 = grow(1.0, |n0| {
        let cert = certifier.certify(&LyapunovWeights { n0, ..w });
        let ok = cert.feasible;
        last = Some(cert);
        ok
    });
    match n0 {
        Some(n0) => {
            w.n0 = n0;
            Ok(w)
        }
        None => {
            let blocking = last
                .and_then(|c| c.blocking_constraint(Gate::Strict))
                .unwrap_or(Constraint::Kappa1);
            Err(not_found(blocking))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    /// Best weights after this evaluation.
    pub weights: LyapunovWeights,
    /// Best rate after this evaluation.
    pub kappa2: f64,
    /// Rate of the point evaluated at this iteration (`−∞` if infeasible).
    pub candidate: f64,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub weights: LyapunovWeights,
    pub certificate: Certificate,
    pub gate: Gate,
    /// Constructive seed and its rate, when the procedure succeeded.
    pub seed: Option<(LyapunovWeights, f64)>,
    pub trace: Vec<TraceRow>,
}

impl SearchOutcome {
    pub fn kappa2(&self) -> f64 {
        self.certificate
            .decay_rate(self.gate)
            .expect("search only returns feasible certificates")
    }

    /// CSV: `iteration,n0,n1,n2,alpha1,alpha2,alpha3,kappa2,candidate_kappa2`.
    pub fn write_trace_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "iteration,n0,n1,n2,alpha1,alpha2,alpha3,kappa2,candidate_kappa2")?;
        for row in &self.trace {
            let w = row.weights.to_array();
            write!(out, "{}", row.iteration)?;
            for v in w {
                write!(out, ",{v:.14e}")?;
            }
            writeln!(out, ",{:.14e},{:.14e}", row.kappa2, row.candidate)?;
        }
        Ok(())
    }
}

struct Search<'a> {
    certifier: &'a Certifier,
    gate: Gate,
    lo: [f64; 6],
    hi: [f64; 6],
    budget: usize,
    evaluations: usize,
    best_x: [f64; 6],
    best_f: f64,
    trace: Vec<TraceRow>,
    rng: ChaCha8Rng,
}

impl Search<'_> {
    fn objective(&mut self, x: &[f64; 6]) -> f64 {
        let w = LyapunovWeights::from_array(x.map(f64::exp));
        let f = self
            .certifier
            .certify(&w)
            .decay_rate(self.gate)
            .unwrap_or(f64::NEG_INFINITY);
        self.evaluations += 1;
        if f > self.best_f {
            self.best_f = f;
            self.best_x = *x;
        }
        self.trace.push(TraceRow {
            iteration: self.evaluations,
            weights: LyapunovWeights::from_array(self.best_x.map(f64::exp)),
            kappa2: self.best_f,
            candidate: f,
        });
        f
    }

    fn exhausted(&self) -> bool {
        self.evaluations >= self.budget
    }

    fn clamp(&self, mut x: [f64; 6]) -> [f64; 6] {
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = xi.clamp(self.lo[i], self.hi[i]);
        }
        x
    }

    fn random_direction(&mut self) -> [f64; 6] {
        loop {
            let d: [f64; 6] = std::array::from_fn(|_| self.rng.gen_range(-1.0..1.0));
            let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-3 {
                return d.map(|v| v / norm);
            }
        }
    }

    fn local(&mut self, mut x: [f64; 6], mut fx: f64, tolerance: f64) {
        let mut step = LN_2;
        let mut f_at_shrink = fx;
        while step > MIN_STEP && !self.exhausted() {
            let mut improved = false;
            'coords: for i in 0..6 {
                for dir in [1.0, -1.0] {
                    if self.exhausted() {
                        return;
                    }
                    let mut cand = x;
                    cand[i] = (x[i] + dir * step).clamp(self.lo[i], self.hi[i]);
                    if cand[i] == x[i] {
                        continue;
                    }
                    let fc = self.objective(&cand);
                    if fc > fx {
                        x = cand;
                        fx = fc;
                        improved = true;
                        continue 'coords;
                    }
                }
            }
            if !improved {
                for _ in 0..RANDOM_DIRECTIONS {
                    if self.exhausted() {
                        return;
                    }
                    let d = self.random_direction();
                    let cand = self.clamp(std::array::from_fn(|i| x[i] + step * d[i]));
                    let fc = self.objective(&cand);
                    if fc > fx {
                        x = cand;
                        fx = fc;
                        improved = true;
                        break;
                    }
                }
            }
            if !improved {
                step *= 0.5;
                if step < SETTLED_STEP && fx - f_at_shrink <= tolerance * fx.abs() {
                    return;
                }
                f_at_shrink = fx;
            }
        }
    }
}

/// Derivative-free maximisation of the certified rate under `config.gate`.
pub fn maximize_kappa2(params: &BeamParameters, config: &SearchConfig) -> Result<SearchOutcome> {
    config.validate()?;
    let certifier = Certifier::with_grid(params, config.n_grid);
    let gate = config.gate;

    let seeded = seed_with(&certifier);
    let mut starts = Vec::new();
    let mut seed = None;
    if let Ok(w) = &seeded {
        let rate = certifier.certify(w).decay_rate(gate);
        if let Some(r) = rate {
            seed = Some((*w, r));
            starts.push(*w);
        }
    }
    if let Some(w) = config.initial {
        if certifier.certify(&w).is_feasible(gate) {
            starts.push(w);
        }
    }
    if starts.is_empty() {
        return Err(match seeded {
            Err(e) => e,
            Ok(_) => Error::FeasibilityNotFound {
                blocking: Constraint::Kappa1,
            },
        });
    }

    let mut lo = config.bounds.map(|b| b[0].ln());
    let mut hi = config.bounds.map(|b| b[1].ln());
    for w in &starts {
        for (i, v) in w.to_array().iter().enumerate() {
            lo[i] = lo[i].min(v.ln());
            hi[i] = hi[i].max(v.ln());
        }
    }

    let mut search = Search {
        certifier: &certifier,
        gate,
        lo,
        hi,
        budget: config.max_iterations,
        evaluations: 0,
        best_x: starts[0].to_array().map(f64::ln),
        best_f: f64::NEG_INFINITY,
        trace: Vec::new(),
        rng: ChaCha8Rng::seed_from_u64(config.seed),
    };
    for w in &starts {
        let x = w.to_array().map(f64::ln);
        let f = search.objective(&x);
        search.local(x, f, config.tolerance);
    }

    for _ in 0..config.restarts {
        if search.exhausted() {
            break;
        }
        let mut x = search.best_x;
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = (*xi + search.rng.gen_range(-RESTART_SPREAD..RESTART_SPREAD)).clamp(lo[i], hi[i]);
        }
        let f = search.objective(&x);
        if f.is_finite() {
            search.local(x, f, config.tolerance);
        }
    }

    let weights = LyapunovWeights::from_array(search.best_x.map(f64::exp));
    let certificate = certifier.certify(&weights);
    if !certificate.is_feasible(gate) {
        return Err(Error::Numerical(
            "search incumbent failed re-certification".into(),
        ));
    }
    log::debug!(
        "weight search: {} evaluations, kappa2 = {}",
        search.evaluations,
        search.best_f
    );
    Ok(SearchOutcome {
        weights,
        certificate,
        gate,
        seed,
        trace: search.trace,
    })
}
