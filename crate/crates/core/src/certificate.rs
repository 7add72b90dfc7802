//! Lyapunov certificate for the damped beam.
//!
//! The Lyapunov functional is `V = n0 E + n1 F1 + n2 F2` with the energy `E`
//! and the cross terms
//!
//! ```text
//! F1 = ∫ z1(ξ) ∫_0^ξ K z3 ds dξ,    F2 = ∫ z2(ξ) ∫_0^ξ EI z4 ds dξ.
//! ```
//!
//! For weights `(n0, n1, n2, α1, α2, α3)` the certificate collects
//!
//! * `k1 = (2L/π)² sup K`, `k2 = (2L/π)² sup EI`,
//! * `κ1`, the lower quadratic bound `V ≥ κ1 ‖z‖²`,
//! * `η`, the upper bound `V ≤ η E`,
//! * the essential infima of the dissipation coefficients `c1..c6`,
//! * `β = min(inf c1..inf c4)` and the decay rate `κ2 = β / η`,
//!
//! so that `‖z(t)‖ ≤ sqrt(V(z0)/κ1) exp(-κ2 t / 2)` whenever every constraint
//! is positive.
//!
//! `c1` is frequently the only negative coefficient for realistic weights, so
//! the certificate also carries `β' = min(inf c2..inf c4)` and a matching
//! feasibility flag. [`Gate`] selects which of the two a consumer acts on;
//! both are always reported.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{self, BeamParameters, ParameterField, DEFAULT_GRID};
use crate::quadrature::{cumulative_trapezoid, simpson};

/// Default number of quadrature intervals for [`StateFunction`].
pub const DEFAULT_QUADRATURE: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovWeights {
    pub n0: f64,
    pub n1: f64,
    pub n2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
}

impl LyapunovWeights {
    pub fn new(n0: f64, n1: f64, n2: f64, alpha1: f64, alpha2: f64, alpha3: f64) -> Result<Self> {
        let w = LyapunovWeights {
            n0,
            n1,
            n2,
            alpha1,
            alpha2,
            alpha3,
        };
        w.validate()?;
        Ok(w)
    }

    /// Hand-tuned weights `(37, 67, 39, 5, 1, 6)` for [`BeamParameters::benchmark`].
    pub fn benchmark() -> Self {
        LyapunovWeights {
            n0: 37.0,
            n1: 67.0,
            n2: 39.0,
            alpha1: 5.0,
            alpha2: 1.0,
            alpha3: 6.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let names = ["n0", "n1", "n2", "alpha1", "alpha2", "alpha3"];
        for (name, v) in names.iter().zip(self.to_array()) {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidWeights(format!(
                    "{name} must be strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn to_array(&self) -> [f64; 6] {
        [
            self.n0,
            self.n1,
            self.n2,
            self.alpha1,
            self.alpha2,
            self.alpha3,
        ]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        LyapunovWeights {
            n0: a[0],
            n1: a[1],
            n2: a[2],
            alpha1: a[3],
            alpha2: a[4],
            alpha3: a[5],
        }
    }

    /// Scales the combination weights `n0, n1, n2`; the splitting
    /// parameters are untouched.
    pub fn scaled(&self, t: f64) -> Self {
        LyapunovWeights {
            n0: t * self.n0,
            n1: t * self.n1,
            n2: t * self.n2,
            ..*self
        }
    }
}

/// One of the sign conditions a certificate must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Constraint {
    Kappa1,
    /// Essential infimum of coefficient `c_i`, `i` in `1..=6`.
    Coefficient(usize),
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Kappa1 => write!(f, "kappa1"),
            Constraint::Coefficient(i) => write!(f, "c{i}"),
        }
    }
}

/// Which coefficients a certificate must keep positive to be acted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gate {
    /// `κ1 > 0` and `inf c_i > 0` for all six coefficients; rate `β / η`.
    Strict,
    /// Same, but `c1` is left out; rate `β' / η`.
    #[default]
    ExcludeC1,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub k1: f64,
    pub k2: f64,
    pub kappa1: f64,
    pub eta: f64,
    pub c_essinf: [f64; 6],
    pub beta: f64,
    pub beta_prime: f64,
    pub kappa2: f64,
    pub kappa2_prime: f64,
    pub feasible: bool,
    pub feasible_prime: bool,
    pub margins: BTreeMap<String, f64>,
}

impl Certificate {
    fn assemble(k1: f64, k2: f64, kappa1: f64, eta: f64, c: [f64; 6]) -> Self {
        let beta = c[..4].iter().copied().fold(f64::INFINITY, f64::min);
        let beta_prime = c[1..4].iter().copied().fold(f64::INFINITY, f64::min);
        let boundary_ok = c[4] > 0.0 && c[5] > 0.0;
        let feasible_prime = kappa1 > 0.0 && beta_prime > 0.0 && boundary_ok;
        let feasible = feasible_prime && c[0] > 0.0;
        let mut margins = BTreeMap::new();
        margins.insert("kappa1".to_string(), kappa1);
        for (i, ci) in c.iter().enumerate() {
            margins.insert(format!("c{}", i + 1), *ci);
        }
        Certificate {
            k1,
            k2,
            kappa1,
            eta,
            c_essinf: c,
            beta,
            beta_prime,
            kappa2: beta / eta,
            kappa2_prime: beta_prime / eta,
            feasible,
            feasible_prime,
            margins,
        }
    }

    pub fn is_feasible(&self, gate: Gate) -> bool {
        match gate {
            Gate::Strict => self.feasible,
            Gate::ExcludeC1 => self.feasible_prime,
        }
    }

    /// Certified decay rate under `gate`, or `None` when the gate fails.
    pub fn decay_rate(&self, gate: Gate) -> Option<f64> {
        if !self.is_feasible(gate) {
            return None;
        }
        Some(match gate {
            Gate::Strict => self.kappa2,
            Gate::ExcludeC1 => self.kappa2_prime,
        })
    }

    /// First violated constraint under `gate`, in the order κ1, c1..c6.
    pub fn blocking_constraint(&self, gate: Gate) -> Option<Constraint> {
        if !(self.kappa1 > 0.0) {
            return Some(Constraint::Kappa1);
        }
        let skip_c1 = gate == Gate::ExcludeC1;
        self.c_essinf
            .iter()
            .enumerate()
            .filter(|(i, _)| !(skip_c1 && *i == 0))
            .find(|(_, c)| !(**c > 0.0))
            .map(|(i, _)| Constraint::Coefficient(i + 1))
    }

    /// Right-hand side of the exponential estimate at time `t`.
    pub fn bound_at(&self, v0: f64, t: f64, gate: Gate) -> Option<f64> {
        let rate = self.decay_rate(gate)?;
        Some((v0 / self.kappa1).sqrt() * (-0.5 * rate * t).exp())
    }
}

/// Field values at one position, shared by every coefficient formula.
#[derive(Debug, Clone, Copy)]
struct PointValues {
    rho: f64,
    i_rho: f64,
    k: f64,
    ei: f64,
    gamma: f64,
    delta: f64,
    k_d: f64,
    ei_d: f64,
}

/// `c1..c4` at one position.
fn interior_coefficients(w: &LyapunovWeights, p: &PointValues, length: f64) -> [f64; 4] {
    let two_l_pi = 2.0 * length / PI;
    let wirt = two_l_pi * two_l_pi;
    let LyapunovWeights {
        n0,
        n1,
        n2,
        alpha1,
        alpha2,
        alpha3,
    } = *w;
    let c1 = n0 * p.gamma / (p.rho * p.rho)
        - n1 * alpha1 * p.gamma * p.gamma / (2.0 * p.rho)
        - n1 * p.k
        - n1 * p.rho
        - n1 / (2.0 * p.rho) * (two_l_pi * p.k_d).powi(2);
    let c2 = n0 * p.delta / (p.i_rho * p.i_rho)
        - n1 / (2.0 * p.i_rho) * (two_l_pi * p.k).powi(2)
        - n2 * alpha3 * p.delta * p.delta / (2.0 * p.i_rho)
        - n2 * p.ei
        - n2 * p.i_rho / 2.0
        - n2 / (2.0 * p.i_rho) * (two_l_pi * p.ei_d).powi(2);
    let c3 = n1 * p.k / 2.0 - n1 * p.k / (2.0 * alpha1) * wirt - n2 * alpha2 * p.k / 2.0;
    let c4 = n2 * p.ei / 2.0 - n2 * p.ei * wirt / (2.0 * alpha2) - n2 * p.ei * wirt / (2.0 * alpha3);
    [c1, c2, c3, c4]
}

/// `c5, c6` from the damper values at the free end.
fn boundary_coefficients(w: &LyapunovWeights, gamma_l: f64, delta_l: f64, length: f64) -> [f64; 2] {
    [
        w.n0 * gamma_l - length * w.n1 * gamma_l * gamma_l / 2.0,
        w.n0 * delta_l - length * w.n2 * delta_l * delta_l / 2.0,
    ]
}

/// Pointwise-evaluable dissipation coefficients for fixed weights and beam.
#[derive(Debug, Clone)]
pub struct CoefficientFields {
    weights: LyapunovWeights,
    params: BeamParameters,
    k_d: ParameterField,
    ei_d: ParameterField,
}

impl CoefficientFields {
    fn point(&self, xi: f64) -> PointValues {
        let p = &self.params;
        PointValues {
            rho: p.rho.value_at(xi),
            i_rho: p.i_rho.value_at(xi),
            k: p.k_shear.value_at(xi),
            ei: p.ei.value_at(xi),
            gamma: p.gamma.value_at(xi),
            delta: p.delta.value_at(xi),
            k_d: self.k_d.value_at(xi),
            ei_d: self.ei_d.value_at(xi),
        }
    }

    /// `c_index(xi)` for `index` in `1..=4`.
    pub fn eval(&self, index: usize, xi: f64) -> f64 {
        assert!((1..=4).contains(&index), "interior coefficients are c1..c4");
        interior_coefficients(&self.weights, &self.point(xi), self.params.length)[index - 1]
    }

    pub fn all_at(&self, xi: f64) -> [f64; 4] {
        interior_coefficients(&self.weights, &self.point(xi), self.params.length)
    }

    pub fn c5(&self) -> f64 {
        self.boundary()[0]
    }

    pub fn c6(&self) -> f64 {
        self.boundary()[1]
    }

    fn boundary(&self) -> [f64; 2] {
        let l = self.params.length;
        boundary_coefficients(
            &self.weights,
            self.params.gamma.value_at(l),
            self.params.delta.value_at(l),
            l,
        )
    }

    pub fn ess_inf(&self, index: usize, n_grid: usize) -> f64 {
        match index {
            5 => self.c5(),
            6 => self.c6(),
            _ => params::dense_extrema(|x| self.eval(index, x), self.params.length, n_grid).0,
        }
    }
}

pub fn coefficient_fields(weights: &LyapunovWeights, params: &BeamParameters) -> CoefficientFields {
    CoefficientFields {
        weights: *weights,
        params: params.clone(),
        k_d: params.k_shear.derivative(),
        ei_d: params.ei.derivative(),
    }
}

/// `(k1, k2)` bounding `∫(∫_0^ξ K z3)² ≤ k1 ∫ K z3²` and its `EI` analogue.
pub fn wirtinger_constants(params: &BeamParameters) -> (f64, f64) {
    let c = (2.0 * params.length / PI).powi(2);
    (c * params.k_shear.ess_sup(), c * params.ei.ess_sup())
}

fn kappa1_from(w: &LyapunovWeights, rho_sup: f64, i_rho_sup: f64, k1: f64, k2: f64) -> f64 {
    let h = w.n0 / 2.0;
    [
        h - w.n1 * rho_sup / 2.0,
        h - w.n2 * i_rho_sup / 2.0,
        h - w.n1 * k1 / 2.0,
        h - w.n2 * k2 / 2.0,
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min)
}

fn eta_from(w: &LyapunovWeights, rho_sup: f64, i_rho_sup: f64, k1: f64, k2: f64) -> f64 {
    [
        w.n0 + w.n1 * rho_sup,
        w.n0 + w.n2 * i_rho_sup,
        w.n0 + w.n1 * k1,
        w.n0 + w.n2 * k2,
    ]
    .into_iter()
    .fold(f64::NEG_INFINITY, f64::max)
}

/// Lower bound `V(z) ≥ κ1 ‖z‖²`; may be non-positive for poor weights.
pub fn kappa1(weights: &LyapunovWeights, params: &BeamParameters) -> f64 {
    let (k1, k2) = wirtinger_constants(params);
    kappa1_from(weights, params.rho.ess_sup(), params.i_rho.ess_sup(), k1, k2)
}

/// Upper bound `V(z) ≤ η E`.
pub fn eta(weights: &LyapunovWeights, params: &BeamParameters) -> f64 {
    let (k1, k2) = wirtinger_constants(params);
    eta_from(weights, params.rho.ess_sup(), params.i_rho.ess_sup(), k1, k2)
}

/// Certifier with the beam's fields cached on the extremum grid, for
/// evaluating many weight tuples against one beam.
#[derive(Debug, Clone)]
pub struct Certifier {
    fields: CoefficientFields,
    samples: Vec<PointValues>,
    rho_sup: f64,
    i_rho_sup: f64,
    k1: f64,
    k2: f64,
    gamma_l: f64,
    delta_l: f64,
}

impl Certifier {
    pub fn new(params: &BeamParameters) -> Self {
        Self::with_grid(params, DEFAULT_GRID)
    }

    pub fn with_grid(params: &BeamParameters, n_grid: usize) -> Self {
        let n = n_grid.max(2);
        let fields = coefficient_fields(&LyapunovWeights::benchmark(), params);
        let h = params.length / n as f64;
        let samples = (0..=n).map(|k| fields.point(k as f64 * h)).collect();
        let (k1, k2) = wirtinger_constants(params);
        let l = params.length;
        Certifier {
            samples,
            rho_sup: params.rho.ess_sup(),
            i_rho_sup: params.i_rho.ess_sup(),
            k1,
            k2,
            gamma_l: params.gamma.value_at(l),
            delta_l: params.delta.value_at(l),
            fields,
        }
    }

    pub fn params(&self) -> &BeamParameters {
        &self.fields.params
    }

    pub fn certify(&self, weights: &LyapunovWeights) -> Certificate {
        let length = self.fields.params.length;
        let kappa1 = kappa1_from(weights, self.rho_sup, self.i_rho_sup, self.k1, self.k2);
        let eta = eta_from(weights, self.rho_sup, self.i_rho_sup, self.k1, self.k2);

        let mut columns: [Vec<f64>; 4] = Default::default();
        for col in columns.iter_mut() {
            col.reserve(self.samples.len());
        }
        for s in &self.samples {
            let c = interior_coefficients(weights, s, length);
            for (col, v) in columns.iter_mut().zip(c) {
                col.push(v);
            }
        }
        let fields = CoefficientFields {
            weights: *weights,
            ..self.fields.clone()
        };
        let mut c = [0.0; 6];
        for (i, col) in columns.iter().enumerate() {
            c[i] = params::refined_min(col, length, &|x| fields.eval(i + 1, x));
        }
        let [c5, c6] = boundary_coefficients(weights, self.gamma_l, self.delta_l, length);
        c[4] = c5;
        c[5] = c6;
        Certificate::assemble(self.k1, self.k2, kappa1, eta, c)
    }
}

/// Full certificate on the default extremum grid.
pub fn certify(weights: &LyapunovWeights, params: &BeamParameters) -> Certificate {
    Certifier::new(params).certify(weights)
}

pub fn certify_with_grid(
    weights: &LyapunovWeights,
    params: &BeamParameters,
    n_grid: usize,
) -> Certificate {
    Certifier::with_grid(params, n_grid).certify(weights)
}

/// A coefficient on which the general and constant-parameter formulas disagree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientDifference {
    pub index: usize,
    pub general: f64,
    pub closed_form: f64,
}

/// Both certificate variants for a beam with constant coefficients.
///
/// The closed forms differ structurally from the general ones in two places:
/// `c2` carries `-3 n2 EI / 2` instead of `-n2 EI - n2 I_ρ / 2`, and `c3`
/// carries `n1 K (2L/π)² / α1` instead of `n1 K (2L/π)² / (2 α1)`. The
/// remaining coefficients and `κ1`, `η` coincide.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantCertificate {
    pub closed_form: Certificate,
    pub general: Certificate,
    pub differences: Vec<CoefficientDifference>,
}

/// Constant-parameter closed forms of `c1..c6`.
pub fn constant_coefficients(weights: &LyapunovWeights, params: &BeamParameters) -> Result<[f64; 6]> {
    if !params.all_constant() {
        return Err(Error::Precondition(
            "closed-form certificate needs constant fields".into(),
        ));
    }
    let l = params.length;
    let rho = params.rho.value_at(0.0);
    let i_rho = params.i_rho.value_at(0.0);
    let k = params.k_shear.value_at(0.0);
    let ei = params.ei.value_at(0.0);
    let gamma = params.gamma.value_at(0.0);
    let delta = params.delta.value_at(0.0);
    let LyapunovWeights {
        n0,
        n1,
        n2,
        alpha1,
        alpha2,
        alpha3,
    } = *weights;
    let wirt = (2.0 * l / PI).powi(2);
    let c1 = n0 * gamma / (rho * rho) - n1 * alpha1 * gamma * gamma / (2.0 * rho) - n1 * k - n1 * rho;
    let c2 = n0 * delta / (i_rho * i_rho)
        - n1 / (2.0 * i_rho) * wirt * k * k
        - n2 * alpha3 * delta * delta / (2.0 * i_rho)
        - 1.5 * n2 * ei;
    let c3 = n1 * k / 2.0 - n1 * k / alpha1 * wirt - n2 * alpha2 * k / 2.0;
    let c4 = n2 * ei / 2.0 - n2 * ei * wirt / (2.0 * alpha2) - n2 * ei * wirt / (2.0 * alpha3);
    let c5 = n0 * gamma - l * n1 * gamma * gamma / 2.0;
    let c6 = n0 * delta - l * n2 * delta * delta / 2.0;
    Ok([c1, c2, c3, c4, c5, c6])
}

pub fn certify_constant(weights: &LyapunovWeights, params: &BeamParameters) -> Result<ConstantCertificate> {
    let c = constant_coefficients(weights, params)?;
    let (k1, k2) = wirtinger_constants(params);
    let closed_form = Certificate::assemble(
        k1,
        k2,
        kappa1(weights, params),
        eta(weights, params),
        c,
    );
    let general = certify(weights, params);
    let differences = general
        .c_essinf
        .iter()
        .zip(closed_form.c_essinf.iter())
        .enumerate()
        .filter(|(_, (g, cf))| (*g - *cf).abs() > 1e-12 * g.abs().max(cf.abs()).max(1.0))
        .map(|(i, (g, cf))| CoefficientDifference {
            index: i + 1,
            general: *g,
            closed_form: *cf,
        })
        .collect();
    Ok(ConstantCertificate {
        closed_form,
        general,
        differences,
    })
}

/// The four components `z1..z4` sampled on a uniform quadrature grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StateFunction {
    length: f64,
    components: [Vec<f64>; 4],
}

impl StateFunction {
    /// Builds from samples on `n + 1` equispaced points, `n` even.
    pub fn new(length: f64, components: [Vec<f64>; 4]) -> Result<Self> {
        let len = components[0].len();
        if components.iter().any(|c| c.len() != len) {
            return Err(Error::Structure(format!(
                "state components have different lengths: {:?}",
                components.iter().map(Vec::len).collect::<Vec<_>>()
            )));
        }
        if len < 3 || !(len - 1).is_multiple_of(2) {
            return Err(Error::Structure(format!(
                "quadrature grid needs an even number of intervals, got {} points",
                len
            )));
        }
        Ok(StateFunction { length, components })
    }

    /// Samples `f(component, xi)` on `n_intervals + 1` points.
    pub fn from_fn<F: Fn(usize, f64) -> f64>(length: f64, n_intervals: usize, f: F) -> Result<Self> {
        let h = length / n_intervals as f64;
        let components = std::array::from_fn(|c| {
            (0..=n_intervals).map(|k| f(c, k as f64 * h)).collect()
        });
        Self::new(length, components)
    }

    pub fn zero(length: f64, n_intervals: usize) -> Result<Self> {
        Self::from_fn(length, n_intervals, |_, _| 0.0)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn intervals(&self) -> usize {
        self.components[0].len() - 1
    }

    pub fn component(&self, i: usize) -> &[f64] {
        &self.components[i]
    }

    pub fn components_mut(&mut self) -> &mut [Vec<f64>; 4] {
        &mut self.components
    }
}

/// Beam fields cached on a quadrature grid, reused across many states.
#[derive(Debug, Clone)]
pub struct LyapunovEvaluator {
    length: f64,
    inv_rho: Vec<f64>,
    inv_i_rho: Vec<f64>,
    k: Vec<f64>,
    ei: Vec<f64>,
}

impl LyapunovEvaluator {
    pub fn new(params: &BeamParameters, n_intervals: usize) -> Self {
        let l = params.length;
        let h = l / n_intervals as f64;
        let sample = |f: &ParameterField, inv: bool| -> Vec<f64> {
            (0..=n_intervals)
                .map(|k| {
                    let v = f.value_at(k as f64 * h);
                    if inv {
                        1.0 / v
                    } else {
                        v
                    }
                })
                .collect()
        };
        LyapunovEvaluator {
            length: l,
            inv_rho: sample(&params.rho, true),
            inv_i_rho: sample(&params.i_rho, true),
            k: sample(&params.k_shear, false),
            ei: sample(&params.ei, false),
        }
    }

    pub fn intervals(&self) -> usize {
        self.k.len() - 1
    }

    fn check(&self, state: &StateFunction) -> Result<f64> {
        if state.intervals() != self.intervals() || (state.length - self.length).abs() > 1e-12 * self.length {
            return Err(Error::Structure(format!(
                "state grid ({} intervals on L={}) does not match evaluator grid ({} on L={})",
                state.intervals(),
                state.length,
                self.intervals(),
                self.length
            )));
        }
        Ok(self.length / self.intervals() as f64)
    }

    pub fn energy(&self, state: &StateFunction) -> Result<f64> {
        let h = self.check(state)?;
        let [z1, z2, z3, z4] = &state.components;
        let density: Vec<f64> = (0..z1.len())
            .map(|k| {
                z1[k] * z1[k] * self.inv_rho[k]
                    + z2[k] * z2[k] * self.inv_i_rho[k]
                    + self.k[k] * z3[k] * z3[k]
                    + self.ei[k] * z4[k] * z4[k]
            })
            .collect();
        Ok(0.5 * simpson(&density, h))
    }

    /// `(F1, F2)`; inner integrals by cumulative trapezoid on the same grid.
    pub fn cross_terms(&self, state: &StateFunction) -> Result<(f64, f64)> {
        let h = self.check(state)?;
        let [z1, z2, z3, z4] = &state.components;
        let cross = |outer: &[f64], coef: &[f64], inner: &[f64]| {
            let integrand: Vec<f64> = coef.iter().zip(inner).map(|(c, z)| c * z).collect();
            let running = cumulative_trapezoid(&integrand, h);
            let prod: Vec<f64> = outer.iter().zip(&running).map(|(a, b)| a * b).collect();
            simpson(&prod, h)
        };
        Ok((cross(z1, &self.k, z3), cross(z2, &self.ei, z4)))
    }

    pub fn lyapunov(&self, state: &StateFunction, weights: &LyapunovWeights) -> Result<f64> {
        let e = self.energy(state)?;
        let (f1, f2) = self.cross_terms(state)?;
        Ok(weights.n0 * e + weights.n1 * f1 + weights.n2 * f2)
    }
}

/// `E = ½ ∫ (z1²/ρ + z2²/I_ρ + K z3² + EI z4²)`.
pub fn energy(state: &StateFunction, params: &BeamParameters) -> Result<f64> {
    LyapunovEvaluator::new(params, state.intervals()).energy(state)
}

pub fn cross_terms(state: &StateFunction, params: &BeamParameters) -> Result<(f64, f64)> {
    LyapunovEvaluator::new(params, state.intervals()).cross_terms(state)
}

/// `V = n0 E + n1 F1 + n2 F2`.
pub fn lyapunov_value(state: &StateFunction, weights: &LyapunovWeights, params: &BeamParameters) -> Result<f64> {
    LyapunovEvaluator::new(params, state.intervals()).lyapunov(state, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn bench() -> (LyapunovWeights, BeamParameters) {
        (LyapunovWeights::benchmark(), BeamParameters::benchmark())
    }

    #[test]
    fn weights_must_be_positive() {
        assert!(LyapunovWeights::new(1.0, 1.0, 1.0, 1.0, 1.0, 1.0).is_ok());
        assert!(LyapunovWeights::new(1.0, 0.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(LyapunovWeights::new(1.0, 1.0, 1.0, -1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn wirtinger_constants_closed_form() {
        let (_, p) = bench();
        let (k1, k2) = wirtinger_constants(&p);
        assert_relative_eq!(k1, 4.0 / (PI * PI) * 0.41, epsilon = 1e-15);
        assert_relative_eq!(k1, 0.16617, epsilon = 1e-5);
        assert_relative_eq!(k2, k1);
        let (k1, _) = wirtinger_constants(&BeamParameters::uniform(1.0, 1.0));
        assert_relative_eq!(k1, 0.405284735, epsilon = 1e-9);
    }

    #[test]
    fn kappa1_and_eta_on_benchmark() {
        let (w, p) = bench();
        assert_relative_eq!(kappa1(&w, &p), 4.765, epsilon = 1e-12);
        assert_relative_eq!(eta(&w, &p), 64.47, epsilon = 1e-12);
    }

    #[test]
    fn kappa1_limits() {
        let p = BeamParameters::benchmark();
        let tiny = LyapunovWeights {
            n1: 1e-12,
            n2: 1e-12,
            ..LyapunovWeights::benchmark()
        };
        assert_relative_eq!(kappa1(&tiny, &p), 18.5, epsilon = 1e-9);
        let zero = LyapunovWeights {
            n1: 0.0,
            n2: 0.0,
            ..LyapunovWeights::benchmark()
        };
        assert_eq!(eta(&zero, &p), 37.0);
        let huge = LyapunovWeights {
            n1: 1e6,
            ..LyapunovWeights::benchmark()
        };
        assert!(kappa1(&huge, &p) < 0.0);
        assert!(!certify(&huge, &p).feasible_prime);
    }

    #[test]
    fn eta_is_homogeneous() {
        let (w, p) = bench();
        assert_relative_eq!(eta(&w.scaled(2.0), &p), 2.0 * eta(&w, &p), epsilon = 1e-12);
    }

    #[test]
    fn coefficient_infima_on_benchmark() {
        let (w, p) = bench();
        let c = coefficient_fields(&w, &p);
        let c4 = c.ess_inf(4, DEFAULT_GRID);
        let scalar4 = 39.0 * (0.5 - 4.0 / (2.0 * PI * PI) - 4.0 / (12.0 * PI * PI));
        assert_relative_eq!(c4, scalar4 * 0.39, epsilon = 1e-9);
        assert_relative_eq!(c4, 4.01, epsilon = 0.01);
        let c3 = c.ess_inf(3, DEFAULT_GRID);
        let scalar3 = 33.5 - 67.0 / 10.0 * 4.0 / (PI * PI) - 19.5;
        assert_relative_eq!(c3, scalar3 * 0.39, epsilon = 1e-9);
        assert_relative_eq!(c3, 4.40, epsilon = 0.01);
        // dense grid cross-check of the default grid
        let fine = c.ess_inf(4, 65536);
        assert_relative_eq!(c4, fine, epsilon = 1e-10);
        assert!(c.ess_inf(1, DEFAULT_GRID) < 0.0);
    }

    #[test]
    fn undamped_cross_weights_reduce_to_energy_dissipation() {
        let g = 0.7;
        let mut p = BeamParameters::uniform(1.3, 1.0);
        p.gamma = ParameterField::constant(g, 1.0);
        p.delta = ParameterField::constant(g, 1.0);
        let w = LyapunovWeights {
            n0: 2.0,
            n1: 0.0,
            n2: 0.0,
            alpha1: 1.0,
            alpha2: 1.0,
            alpha3: 1.0,
        };
        let c = coefficient_fields(&w, &p);
        let v = c.all_at(0.4);
        assert_relative_eq!(v[0], 2.0 * g / (1.3 * 1.3), epsilon = 1e-15);
        assert_relative_eq!(v[1], 2.0 * g / (1.3 * 1.3), epsilon = 1e-15);
        assert_eq!(v[2], 0.0);
        assert_eq!(v[3], 0.0);
        assert_relative_eq!(c.c5(), 2.0 * g);
        assert_relative_eq!(c.c6(), 2.0 * g);
    }

    #[test]
    fn benchmark_certificate() {
        let (w, p) = bench();
        let cert = certify(&w, &p);
        assert_relative_eq!(cert.kappa1, 4.765, epsilon = 1e-12);
        assert_relative_eq!(cert.eta, 64.47, epsilon = 1e-12);
        assert_relative_eq!(cert.beta_prime, 4.01, epsilon = 0.02);
        assert_relative_eq!(cert.kappa2_prime, 0.0622, epsilon = 0.0005);
        assert!(cert.feasible_prime);
        assert!(!cert.feasible, "c1 is negative for these weights");
        assert_eq!(cert.blocking_constraint(Gate::Strict), Some(Constraint::Coefficient(1)));
        assert_eq!(cert.blocking_constraint(Gate::ExcludeC1), None);
        assert_eq!(cert.decay_rate(Gate::Strict), None);
        assert_eq!(cert.decay_rate(Gate::ExcludeC1), Some(cert.kappa2_prime));
    }

    #[test]
    fn small_n0_is_infeasible() {
        let (mut w, p) = bench();
        w.n0 = 1.0;
        let cert = certify(&w, &p);
        assert!(!cert.feasible_prime);
        assert!(cert.margins["kappa1"] < 0.0);
        assert_relative_eq!(cert.kappa1, 0.5 - 67.0 * 0.41 / 2.0, epsilon = 1e-12);
        assert_eq!(cert.blocking_constraint(Gate::ExcludeC1), Some(Constraint::Kappa1));
    }

    #[test]
    fn certificate_json_shape() {
        let (w, p) = bench();
        let json = serde_json::to_value(certify(&w, &p)).unwrap();
        for key in ["k1", "k2", "kappa1", "eta", "c_essinf", "beta", "beta_prime", "kappa2", "feasible", "margins"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        assert_eq!(json["c_essinf"].as_array().unwrap().len(), 6);
    }

    #[test]
    fn constant_paths_agree_on_shared_coefficients() {
        let p = BeamParameters::uniform(1.0, 1.0);
        let w = LyapunovWeights::new(40.0, 6.0, 1.0, 2.0, 2.0, 2.0).unwrap();
        let both = certify_constant(&w, &p).unwrap();
        for i in [0, 3, 4, 5] {
            assert_relative_eq!(
                both.general.c_essinf[i],
                both.closed_form.c_essinf[i],
                epsilon = 1e-12
            );
        }
        assert_eq!(both.general.kappa1, both.closed_form.kappa1);
        assert_eq!(both.general.eta, both.closed_form.eta);
        // rho = I_rho = EI = 1 makes c2 agree; c3 differs structurally
        assert_eq!(both.differences.len(), 1);
        assert_eq!(both.differences[0].index, 3);
    }

    #[test]
    fn closed_form_rejects_varying_fields() {
        let (w, p) = bench();
        assert!(matches!(certify_constant(&w, &p), Err(Error::Precondition(_))));
    }

    #[test]
    fn closed_form_c3_negative_without_n1() {
        let p = BeamParameters::uniform(2.0, 1.0);
        let w = LyapunovWeights {
            n1: 0.0,
            ..LyapunovWeights::benchmark()
        };
        let c = constant_coefficients(&w, &p).unwrap();
        assert_relative_eq!(c[2], -39.0 * 1.0 * 2.0 / 2.0);
    }

    #[test]
    fn closed_form_symmetric_collapse() {
        let p = BeamParameters::uniform(0.8, 1.5);
        let w = LyapunovWeights::new(10.0, 2.0, 3.0, 4.0, 7.0, 7.0).unwrap();
        let c = constant_coefficients(&w, &p).unwrap();
        let expected = 3.0 * 0.8 * (0.5 - (3.0f64).powi(2) / (7.0 * PI * PI));
        assert_relative_eq!(c[3], expected, epsilon = 1e-13);
    }

    #[test]
    fn zero_state_has_zero_functionals() {
        let (w, p) = bench();
        let z = StateFunction::zero(1.0, 64).unwrap();
        assert_eq!(energy(&z, &p).unwrap(), 0.0);
        assert_eq!(lyapunov_value(&z, &w, &p).unwrap(), 0.0);
    }

    #[test]
    fn state_grid_mismatch_is_structural() {
        let bad = StateFunction::new(1.0, [vec![0.0; 5], vec![0.0; 5], vec![0.0; 4], vec![0.0; 5]]);
        assert!(matches!(bad, Err(Error::Structure(_))));
        let odd = StateFunction::new(1.0, [vec![0.0; 4], vec![0.0; 4], vec![0.0; 4], vec![0.0; 4]]);
        assert!(matches!(odd, Err(Error::Structure(_))));
        let (w, p) = bench();
        let eval = LyapunovEvaluator::new(&p, 32);
        let z = StateFunction::zero(1.0, 64).unwrap();
        assert!(eval.lyapunov(&z, &w).is_err());
    }

    #[test]
    fn initial_condition_energy_converges() {
        let (w, p) = bench();
        let ic = |n: usize| {
            StateFunction::from_fn(1.0, n, |c, x| {
                let b = 1.0 - (2.0 * PI * x).cos();
                match c {
                    2 => 0.5 * b,
                    3 => b,
                    _ => 0.0,
                }
            })
            .unwrap()
        };
        let e512 = energy(&ic(512), &p).unwrap();
        let e2048 = energy(&ic(2048), &p).unwrap();
        assert_relative_eq!(e512, e2048, epsilon = 1e-10);
        // nominal 0.4 coefficients give ½·0.4·(3/8 + 3/2)
        assert_relative_eq!(e2048, 0.375, epsilon = 0.01);
        let v = lyapunov_value(&ic(2048), &w, &p).unwrap();
        assert_relative_eq!(v, 37.0 * e2048, epsilon = 1e-13);
    }

    proptest! {
        #[test]
        fn rate_invariant_under_rescaling(t in 0.01f64..100.0) {
            let (w, p) = bench();
            let certifier = Certifier::with_grid(&p, 512);
            let a = certifier.certify(&w);
            let b = certifier.certify(&w.scaled(t));
            prop_assert!((b.kappa1 - t * a.kappa1).abs() <= 1e-12 * (t * a.kappa1).abs());
            prop_assert!((b.eta - t * a.eta).abs() <= 1e-12 * t * a.eta);
            prop_assert!((b.beta_prime - t * a.beta_prime).abs() <= 1e-11 * (t * a.beta_prime).abs());
            prop_assert!((b.kappa2_prime - a.kappa2_prime).abs() <= 1e-12 * a.kappa2_prime.abs());
        }
    }
}
