//! Time integration of the discrete beam and checking of the certified
//! exponential bound along the trajectory.

use std::f64::consts::TAU;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::certificate::{Certificate, Gate, LyapunovEvaluator, LyapunovWeights, StateFunction};
use crate::discretize::DiscreteSystem;
use crate::error::{Error, Result};
use crate::params::{BoundaryLayout, ParameterField};

/// Relative slack allowed when comparing the norm against the bound.
pub const BOUND_SLACK: f64 = 1e-6;

/// One component of an initial state, as a function of the physical position.
#[derive(Debug, Clone, PartialEq)]
pub enum IcComponent {
    Zero,
    /// `scale · (1 − cos(2πξ/L))`
    CosineBump { scale: f64 },
    /// Linearly interpolated samples on a uniform grid over `[0, L]`.
    Tabulated(ParameterField),
}

impl IcComponent {
    pub fn eval(&self, xi: f64, length: f64) -> f64 {
        match self {
            IcComponent::Zero => 0.0,
            IcComponent::CosineBump { scale } => scale * (1.0 - (TAU * xi / length).cos()),
            IcComponent::Tabulated(f) => f.value_at(xi * f.length() / length),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialCondition {
    pub components: [IcComponent; 4],
}

impl InitialCondition {
    pub fn zero() -> Self {
        InitialCondition {
            components: [IcComponent::Zero, IcComponent::Zero, IcComponent::Zero, IcComponent::Zero],
        }
    }

    /// Beam at rest with shear strain `½(1 − cos 2πξ/L)` and curvature
    /// `1 − cos 2πξ/L`.
    pub fn benchmark() -> Self {
        InitialCondition {
            components: [
                IcComponent::Zero,
                IcComponent::Zero,
                IcComponent::CosineBump { scale: 0.5 },
                IcComponent::CosineBump { scale: 1.0 },
            ],
        }
    }

    /// Value of component `c` at assembly coordinate `s` for the given layout.
    /// Strains change sign under the reflection `s = L − ξ`.
    fn eval_oriented(&self, c: usize, s: f64, length: f64, layout: BoundaryLayout) -> f64 {
        match layout {
            BoundaryLayout::ClampedAtZero => self.components[c].eval(s, length),
            BoundaryLayout::ClampedAtLength => {
                let v = self.components[c].eval(length - s, length);
                if c >= 2 {
                    -v
                } else {
                    v
                }
            }
        }
    }

    /// Continuous state on a quadrature grid, in assembly coordinates.
    pub fn state_function(&self, length: f64, n_intervals: usize, layout: BoundaryLayout) -> Result<StateFunction> {
        StateFunction::from_fn(length, n_intervals, |c, s| self.eval_oriented(c, s, length, layout))
    }
}

/// Samples `ic` at the staggered unknown positions of `sys`.
pub fn sample_initial_condition(ic: &InitialCondition, sys: &DiscreteSystem) -> DVector<f64> {
    let n = sys.n_elements();
    let l = sys.length();
    let layout = sys.layout();
    DVector::from_fn(4 * n, |k, _| {
        let (c, i) = (k / n, k % n);
        let pos = if c < 2 { sys.centers()[i] } else { sys.nodes()[i] };
        ic.eval_oriented(c, pos, l, layout)
    })
}

#[derive(Debug, Clone, Copy)]
pub struct IntegrationOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Keep every `record_every`-th step (the initial state is always kept).
    pub record_every: usize,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        IntegrationOptions {
            dt: 1e-3,
            t_end: 50.0,
            record_every: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    /// `‖z‖_Z = sqrt(zᵀ Q z)`
    pub norm_z: Vec<f64>,
    pub energy: Vec<f64>,
    /// Filled by [`Trajectory::annotate`].
    pub lyapunov: Vec<f64>,
    /// Filled by [`Trajectory::annotate`].
    pub bound: Vec<f64>,
}

pub fn integrate(sys: &DiscreteSystem, z0: &DVector<f64>, dt: f64, t_end: f64) -> Result<Trajectory> {
    integrate_with(
        sys,
        z0,
        IntegrationOptions {
            dt,
            t_end,
            record_every: 1,
        },
    )
}

/// Implicit midpoint: `(I − dt/2 A) z⁺ = (I + dt/2 A) z` with `A = (J − R) Q`.
/// The step operator is formed once from a single LU factorization.
pub fn integrate_with(sys: &DiscreteSystem, z0: &DVector<f64>, opts: IntegrationOptions) -> Result<Trajectory> {
    let IntegrationOptions {
        dt,
        t_end,
        record_every,
    } = opts;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Precondition(format!("dt must be positive, got {dt}")));
    }
    if !(t_end >= dt) {
        return Err(Error::Precondition(format!("t_end {t_end} must be at least dt {dt}")));
    }
    if z0.len() != sys.dim() {
        return Err(Error::Structure(format!(
            "initial state has length {}, system dimension is {}",
            z0.len(),
            sys.dim()
        )));
    }
    let stride = record_every.max(1);
    let dim = sys.dim();
    let a = sys.system_matrix();
    let eye = DMatrix::<f64>::identity(dim, dim);
    let implicit = &eye - &a * (0.5 * dt);
    let explicit = &eye + &a * (0.5 * dt);
    let lu = implicit.lu();
    let step = lu
        .solve(&explicit)
        .ok_or_else(|| Error::Numerical("implicit midpoint matrix is singular".into()))?;

    let steps = (t_end / dt).round() as usize;
    let capacity = steps / stride + 1;
    let mut traj = Trajectory {
        times: Vec::with_capacity(capacity),
        states: Vec::with_capacity(capacity),
        norm_z: Vec::with_capacity(capacity),
        energy: Vec::with_capacity(capacity),
        lyapunov: Vec::new(),
        bound: Vec::new(),
    };
    let mut z = z0.clone();
    let mut next = DVector::zeros(dim);
    traj.push(0.0, &z, sys)?;
    for k in 1..=steps {
        step.mul_to(&z, &mut next);
        std::mem::swap(&mut z, &mut next);
        if k % stride == 0 || k == steps {
            traj.push(k as f64 * dt, &z, sys)?;
        }
    }
    Ok(traj)
}

impl Trajectory {
    fn push(&mut self, t: f64, z: &DVector<f64>, sys: &DiscreteSystem) -> Result<()> {
        let e = sys.discrete_energy(z)?;
        self.times.push(t);
        self.norm_z.push((2.0 * e).sqrt());
        self.energy.push(e);
        self.states.push(z.clone());
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Lyapunov value of every sample on a reconstruction grid of
    /// `8 · N` intervals.
    pub fn lyapunov_values(&self, sys: &DiscreteSystem, weights: &LyapunovWeights) -> Result<Vec<f64>> {
        let n_q = 8 * sys.n_elements();
        let eval = LyapunovEvaluator::new(sys.params(), n_q);
        self.states
            .iter()
            .map(|z| eval.lyapunov(&sys.to_state_function(z, n_q)?, weights))
            .collect()
    }

    /// Fills the Lyapunov and bound columns. The bound column stays at
    /// `NaN` when the certificate fails `gate`.
    pub fn annotate(
        &mut self,
        sys: &DiscreteSystem,
        weights: &LyapunovWeights,
        cert: &Certificate,
        gate: Gate,
    ) -> Result<()> {
        self.lyapunov = self.lyapunov_values(sys, weights)?;
        let v0 = self.lyapunov.first().copied().unwrap_or(0.0);
        self.bound = self
            .times
            .iter()
            .map(|&t| cert.bound_at(v0, t, gate).unwrap_or(f64::NAN))
            .collect();
        Ok(())
    }

    /// CSV with columns `t,norm_Z,energy,lyapunov,bound,ratio`, 12
    /// significant digits, LF line endings.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,norm_Z,energy,lyapunov,bound,ratio")?;
        for k in 0..self.len() {
            let v = self.lyapunov.get(k).copied().unwrap_or(f64::NAN);
            let b = self.bound.get(k).copied().unwrap_or(f64::NAN);
            let norm = self.norm_z[k];
            let ratio = if norm == 0.0 { 0.0 } else { norm / b };
            writeln!(
                out,
                "{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e}",
                self.times[k], norm, self.energy[k], v, b, ratio
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub passed: bool,
    pub failure: Option<String>,
    pub samples: usize,
    pub violations: usize,
    pub max_ratio: f64,
    pub t_max_ratio: f64,
    /// Least-squares decay rate of `‖z‖` over the second half of the run.
    pub empirical_rate: Option<f64>,
    /// `κ2 / 2`, the rate the bound guarantees for `‖z‖`.
    pub certified_rate: f64,
}

impl BoundReport {
    fn failed(reason: String, samples: usize) -> Self {
        BoundReport {
            passed: false,
            failure: Some(reason),
            samples,
            violations: 0,
            max_ratio: f64::NAN,
            t_max_ratio: f64::NAN,
            empirical_rate: None,
            certified_rate: f64::NAN,
        }
    }

    /// Whether the observed decay is at least as fast as the certified one.
    pub fn is_conservative(&self) -> bool {
        self.empirical_rate.is_some_and(|r| r >= self.certified_rate)
    }
}

/// Checks `‖z(t_k)‖ ≤ sqrt(V(z0)/κ1) e^{−κ2 t_k/2} (1 + 1e-6)` at every
/// sample. The trajectory must have been annotated with Lyapunov values.
pub fn check_bound(traj: &Trajectory, cert: &Certificate, gate: Gate) -> BoundReport {
    let samples = traj.len();
    let Some(rate) = cert.decay_rate(gate) else {
        return BoundReport::failed(
            format!(
                "certificate infeasible under {gate:?} gate (blocking {})",
                cert.blocking_constraint(gate)
                    .map(|c| c.to_string())
                    .unwrap_or_default()
            ),
            samples,
        );
    };
    let Some(&v0) = traj.lyapunov.first() else {
        return BoundReport::failed("trajectory has no Lyapunov values".into(), samples);
    };
    let amplitude = (v0.max(0.0) / cert.kappa1).sqrt();
    let mut violations = 0;
    let mut max_ratio = 0.0;
    let mut t_max_ratio = 0.0;
    for (&t, &norm) in traj.times.iter().zip(&traj.norm_z) {
        let bound = amplitude * (-0.5 * rate * t).exp();
        if norm > bound * (1.0 + BOUND_SLACK) {
            violations += 1;
        }
        let ratio = if norm == 0.0 { 0.0 } else { norm / bound };
        if ratio > max_ratio {
            max_ratio = ratio;
            t_max_ratio = t;
        }
    }
    BoundReport {
        passed: violations == 0,
        failure: (violations > 0).then(|| format!("{violations} samples exceed the bound")),
        samples,
        violations,
        max_ratio,
        t_max_ratio,
        empirical_rate: tail_decay_rate(&traj.times, &traj.norm_z),
        certified_rate: 0.5 * rate,
    }
}

/// Negative slope of the least-squares line through `ln ‖z‖` over the second
/// half of the time window.
pub fn tail_decay_rate(times: &[f64], norms: &[f64]) -> Option<f64> {
    let t_last = *times.last()?;
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(norms)
        .filter(|(t, n)| **t >= 0.5 * t_last && **n > 0.0)
        .map(|(t, n)| (*t, n.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    (sxx > 0.0).then(|| -sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificate::certify;
    use crate::discretize::build_system;
    use crate::params::BeamParameters;
    use approx::assert_relative_eq;

    #[test]
    fn benchmark_ic_values() {
        let ic = InitialCondition::benchmark();
        assert_eq!(ic.components[2].eval(0.0, 1.0), 0.0);
        assert_eq!(ic.components[3].eval(0.0, 1.0), 0.0);
        assert_relative_eq!(ic.components[2].eval(0.5, 1.0), 1.0);
        assert_relative_eq!(ic.components[3].eval(0.5, 1.0), 2.0);
    }

    #[test]
    fn sampling_respects_staggering() {
        let sys = build_system(&BeamParameters::uniform(1.0, 1.0), 4).unwrap();
        let z = sample_initial_condition(&InitialCondition::benchmark(), &sys);
        assert_eq!(z.len(), 16);
        assert!(z.rows(0, 8).iter().all(|&v| v == 0.0));
        // nodes at 0, 0.25, 0.5, 0.75
        assert_eq!(z[8], 0.0);
        assert_relative_eq!(z[10], 1.0);
        assert_relative_eq!(z[14], 2.0);
        assert_relative_eq!(z[13], 1.0, epsilon = 1e-15);
        let zero = sample_initial_condition(&InitialCondition::zero(), &sys);
        assert_eq!(zero, DVector::zeros(16));
    }

    #[test]
    fn reflected_sampling_flips_strains() {
        use crate::discretize::{build_system_with, SystemOptions};
        let ic = InitialCondition {
            components: [
                IcComponent::Zero,
                IcComponent::Zero,
                IcComponent::Tabulated(ParameterField::tabulated(vec![0.0, 2.0], 1.0).unwrap()),
                IcComponent::Zero,
            ],
        };
        let opts = SystemOptions {
            layout: BoundaryLayout::ClampedAtLength,
            ..Default::default()
        };
        let sys = build_system_with(&BeamParameters::uniform(1.0, 1.0), 4, opts).unwrap();
        let z = sample_initial_condition(&ic, &sys);
        // assembly node s = 0.25 is physical xi = 0.75
        assert_relative_eq!(z[9], -1.5);
    }

    #[test]
    fn zero_state_stays_zero() {
        let sys = build_system(&BeamParameters::benchmark(), 8).unwrap();
        let traj = integrate(&sys, &DVector::zeros(32), 0.01, 1.0).unwrap();
        assert_eq!(traj.len(), 101);
        assert!(traj.states.iter().all(|z| z.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn integration_preconditions() {
        let sys = build_system(&BeamParameters::benchmark(), 4).unwrap();
        let z = DVector::zeros(16);
        assert!(integrate(&sys, &z, 0.0, 1.0).is_err());
        assert!(integrate(&sys, &z, 0.1, 0.01).is_err());
        assert!(integrate(&sys, &DVector::zeros(3), 0.1, 1.0).is_err());
    }

    #[test]
    fn record_stride_keeps_endpoints() {
        let sys = build_system(&BeamParameters::benchmark(), 4).unwrap();
        let z0 = sample_initial_condition(&InitialCondition::benchmark(), &sys);
        let opts = IntegrationOptions {
            dt: 0.01,
            t_end: 1.05,
            record_every: 10,
        };
        let traj = integrate_with(&sys, &z0, opts).unwrap();
        assert_eq!(traj.times.first(), Some(&0.0));
        assert_relative_eq!(*traj.times.last().unwrap(), 1.05, epsilon = 1e-12);
        assert_eq!(traj.len(), 12);
    }

    #[test]
    fn energy_decays_monotonically() {
        let sys = build_system(&BeamParameters::benchmark(), 20).unwrap();
        let z0 = sample_initial_condition(&InitialCondition::benchmark(), &sys);
        let traj = integrate(&sys, &z0, 1e-2, 10.0).unwrap();
        for w in traj.energy.windows(2) {
            assert!(w[1] <= w[0] + 1e-10);
        }
        assert!(traj.energy.last().unwrap() < &(0.1 * traj.energy[0]));
    }

    #[test]
    fn lossless_energy_conserved() {
        let sys = build_system(&BeamParameters::benchmark(), 10).unwrap().lossless();
        let z0 = sample_initial_condition(&InitialCondition::benchmark(), &sys);
        let traj = integrate(&sys, &z0, 1e-3, 10.0).unwrap();
        assert_eq!(traj.len(), 10_001);
        let e0 = traj.energy[0];
        let drift = traj
            .energy
            .iter()
            .map(|e| (e - e0).abs() / e0)
            .fold(0.0, f64::max);
        assert!(drift <= 1e-10, "relative drift {drift}");
    }

    #[test]
    fn zero_trajectory_passes_with_zero_ratio() {
        let p = BeamParameters::benchmark();
        let w = LyapunovWeights::benchmark();
        let cert = certify(&w, &p);
        let sys = build_system(&p, 4).unwrap();
        let mut traj = integrate(&sys, &DVector::zeros(16), 0.1, 1.0).unwrap();
        traj.annotate(&sys, &w, &cert, Gate::ExcludeC1).unwrap();
        let report = check_bound(&traj, &cert, Gate::ExcludeC1);
        assert!(report.passed);
        assert_eq!(report.max_ratio, 0.0);
    }

    #[test]
    fn unannotated_or_infeasible_fails() {
        let p = BeamParameters::benchmark();
        let w = LyapunovWeights::benchmark();
        let cert = certify(&w, &p);
        let sys = build_system(&p, 4).unwrap();
        let z0 = sample_initial_condition(&InitialCondition::benchmark(), &sys);
        let mut traj = integrate(&sys, &z0, 0.1, 1.0).unwrap();
        assert!(!check_bound(&traj, &cert, Gate::ExcludeC1).passed);
        traj.annotate(&sys, &w, &cert, Gate::ExcludeC1).unwrap();
        let strict = check_bound(&traj, &cert, Gate::Strict);
        assert!(!strict.passed);
        assert!(strict.failure.unwrap().contains("c1"));
    }

    #[test]
    fn csv_layout() {
        let p = BeamParameters::benchmark();
        let w = LyapunovWeights::benchmark();
        let cert = certify(&w, &p);
        let sys = build_system(&p, 4).unwrap();
        let z0 = sample_initial_condition(&InitialCondition::benchmark(), &sys);
        let mut traj = integrate(&sys, &z0, 0.1, 0.3).unwrap();
        traj.annotate(&sys, &w, &cert, Gate::ExcludeC1).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.split('\n').collect();
        assert_eq!(lines[0], "t,norm_Z,energy,lyapunov,bound,ratio");
        // header, four samples, trailing newline
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[5], "");
        assert!(!text.contains('\r'));
        let first: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(first.len(), 6);
        assert_eq!(first[0], "0.00000000000e0");
    }

    #[test]
    fn tail_rate_of_pure_exponential() {
        let times: Vec<f64> = (0..=100).map(|k| k as f64 * 0.1).collect();
        let norms: Vec<f64> = times.iter().map(|t| 3.0 * (-0.7 * t).exp()).collect();
        assert_relative_eq!(tail_decay_rate(&times, &norms).unwrap(), 0.7, epsilon = 1e-10);
        assert_eq!(tail_decay_rate(&[0.0], &[1.0]), None);
    }
}
