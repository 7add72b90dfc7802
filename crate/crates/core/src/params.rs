//! Space-varying beam parameters and the field calculus built on them.
//!
//! A [`ParameterField`] is a scalar profile on `[0, L]`. Physical parameters
//! must be strictly positive; derived fields such as derivatives and the
//! certificate coefficients need not be, so positivity is checked by
//! [`validate`] rather than by the constructors.
//!
//! Essential suprema and infima are exact for constant, sinusoidal and
//! tabulated fields. For arbitrary profiles (the certificate coefficients)
//! [`dense_extrema`] samples a uniform grid of [`DEFAULT_GRID`] intervals and
//! polishes the best sample with a golden-section search to `1e-10`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::Serialize;

use crate::error::{Error, Result};

/// Default number of grid intervals for dense extremum searches.
pub const DEFAULT_GRID: usize = 4096;

const REFINE_TOL: f64 = 1e-10;

/// Relative slack when checking that a position lies inside `[0, L]`.
const DOMAIN_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum FieldKind {
    Constant(f64),
    /// `base + amplitude * sin(frequency * xi + phase)`
    Sinusoid {
        base: f64,
        amplitude: f64,
        frequency: f64,
        phase: f64,
    },
    /// Samples on a uniform grid spanning `[0, L]`, linearly interpolated.
    Tabulated(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterField {
    kind: FieldKind,
    length: f64,
}

impl ParameterField {
    pub fn constant(value: f64, length: f64) -> Self {
        ParameterField {
            kind: FieldKind::Constant(value),
            length,
        }
    }

    pub fn sinusoid(base: f64, amplitude: f64, frequency: f64, phase: f64, length: f64) -> Self {
        ParameterField {
            kind: FieldKind::Sinusoid {
                base,
                amplitude,
                frequency,
                phase,
            },
            length,
        }
    }

    pub fn tabulated(values: Vec<f64>, length: f64) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidField(format!(
                "tabulated field needs at least 2 samples, got {}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!("non-finite sample {v}")));
        }
        Ok(ParameterField {
            kind: FieldKind::Tabulated(values),
            length,
        })
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, FieldKind::Constant(_))
    }

    /// Evaluates the field, rejecting positions outside `[0, L]`.
    pub fn eval(&self, xi: f64) -> Result<f64> {
        let slack = DOMAIN_SLACK * self.length.max(1.0);
        if !(xi >= -slack && xi <= self.length + slack) {
            return Err(Error::Domain {
                xi,
                length: self.length,
            });
        }
        Ok(self.value_at(xi))
    }

    /// Unchecked evaluation; positions are clamped into `[0, L]`.
    pub fn value_at(&self, xi: f64) -> f64 {
        let xi = xi.clamp(0.0, self.length);
        match &self.kind {
            FieldKind::Constant(c) => *c,
            FieldKind::Sinusoid {
                base,
                amplitude,
                frequency,
                phase,
            } => base + amplitude * (frequency * xi + phase).sin(),
            FieldKind::Tabulated(v) => {
                let n = v.len() - 1;
                let s = xi / self.length * n as f64;
                let k = (s.floor() as usize).min(n - 1);
                let t = s - k as f64;
                v[k] + t * (v[k + 1] - v[k])
            }
        }
    }

    /// Spatial derivative. The result may change sign.
    pub fn derivative(&self) -> ParameterField {
        let kind = match &self.kind {
            FieldKind::Constant(_) => FieldKind::Constant(0.0),
            // a f cos(f x + p) = a f sin(f x + p + pi/2)
            FieldKind::Sinusoid {
                amplitude,
                frequency,
                phase,
                ..
            } => FieldKind::Sinusoid {
                base: 0.0,
                amplitude: amplitude * frequency,
                frequency: *frequency,
                phase: phase + FRAC_PI_2,
            },
            FieldKind::Tabulated(v) => {
                let n = v.len() - 1;
                let h = self.length / n as f64;
                let d = (0..=n)
                    .map(|k| {
                        if n == 1 {
                            (v[1] - v[0]) / h
                        } else if k == 0 {
                            (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
                        } else if k == n {
                            (3.0 * v[n] - 4.0 * v[n - 1] + v[n - 2]) / (2.0 * h)
                        } else {
                            (v[k + 1] - v[k - 1]) / (2.0 * h)
                        }
                    })
                    .collect();
                FieldKind::Tabulated(d)
            }
        };
        ParameterField {
            kind,
            length: self.length,
        }
    }

    /// The same profile seen from the other end: `f'(s) = f(L - s)`.
    pub fn reflected(&self) -> ParameterField {
        let kind = match &self.kind {
            FieldKind::Constant(c) => FieldKind::Constant(*c),
            FieldKind::Sinusoid {
                base,
                amplitude,
                frequency,
                phase,
            } => FieldKind::Sinusoid {
                base: *base,
                amplitude: *amplitude,
                frequency: -frequency,
                phase: frequency * self.length + phase,
            },
            FieldKind::Tabulated(v) => FieldKind::Tabulated(v.iter().rev().copied().collect()),
        };
        ParameterField {
            kind,
            length: self.length,
        }
    }

    pub fn ess_sup(&self) -> f64 {
        self.extrema().1
    }

    pub fn ess_inf(&self) -> f64 {
        self.extrema().0
    }

    /// `(ess_inf, ess_sup)` in closed form.
    pub fn extrema(&self) -> (f64, f64) {
        match &self.kind {
            FieldKind::Constant(c) => (*c, *c),
            FieldKind::Sinusoid {
                base,
                amplitude,
                frequency,
                phase,
            } => sinusoid_extrema(*base, *amplitude, *frequency, *phase, self.length),
            FieldKind::Tabulated(v) => v
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                    (lo.min(x), hi.max(x))
                }),
        }
    }
}

fn sinusoid_extrema(base: f64, amplitude: f64, frequency: f64, phase: f64, length: f64) -> (f64, f64) {
    let a = amplitude.abs();
    if frequency.abs() * length >= TAU {
        return (base - a, base + a);
    }
    let f = |x: f64| base + amplitude * (frequency * x + phase).sin();
    let mut lo = f(0.0).min(f(length));
    let mut hi = f(0.0).max(f(length));
    if frequency != 0.0 {
        // stationary points: frequency * x + phase = pi/2 + k pi
        let (t0, t1) = {
            let a0 = phase;
            let a1 = frequency * length + phase;
            (a0.min(a1), a0.max(a1))
        };
        let k_start = ((t0 - FRAC_PI_2) / PI).ceil() as i64;
        let k_end = ((t1 - FRAC_PI_2) / PI).floor() as i64;
        for k in k_start..=k_end {
            let theta = FRAC_PI_2 + k as f64 * PI;
            let x = (theta - phase) / frequency;
            if (0.0..=length).contains(&x) {
                let v = base + amplitude * theta.sin();
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    (lo, hi)
}

/// Golden-section minimisation of `f` on `[a, b]`.
fn golden_min<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Minimum of `f` given its samples on a uniform grid over `[0, length]`,
/// polished around the best sample.
pub(crate) fn refined_min<F: Fn(f64) -> f64>(samples: &[f64], length: f64, f: &F) -> f64 {
    let n = samples.len() - 1;
    let h = length / n as f64;
    let (k, &best) = samples
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty grid");
    let a = k.saturating_sub(1) as f64 * h;
    let b = (k + 1).min(n) as f64 * h;
    let (_, refined) = golden_min(f, a, b, REFINE_TOL);
    best.min(refined)
}

/// `(inf, sup)` of an arbitrary profile on `[0, length]` using a dense grid of
/// `n_grid` intervals plus local refinement.
pub fn dense_extrema<F: Fn(f64) -> f64>(f: F, length: f64, n_grid: usize) -> (f64, f64) {
    let n = n_grid.max(2);
    let h = length / n as f64;
    let samples: Vec<f64> = (0..=n).map(|k| f(k as f64 * h)).collect();
    let lo = refined_min(&samples, length, &f);
    let neg: Vec<f64> = samples.iter().map(|v| -v).collect();
    let hi = -refined_min(&neg, length, &|x| -f(x));
    (lo, hi)
}

/// Which end of the beam is clamped. The damper sits at the opposite end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryLayout {
    /// Clamped at `xi = 0`, damper at `xi = L`.
    #[default]
    ClampedAtZero,
    /// Clamped at `xi = L`, damper at `xi = 0`.
    ClampedAtLength,
}

/// The seven quantities defining a damped Timoshenko beam.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamParameters {
    pub rho: ParameterField,
    pub i_rho: ParameterField,
    pub k_shear: ParameterField,
    pub ei: ParameterField,
    pub gamma: ParameterField,
    pub delta: ParameterField,
    pub length: f64,
}

pub const FIELD_NAMES: [&str; 6] = ["rho", "i_rho", "k_shear", "ei", "gamma", "delta"];

impl BeamParameters {
    /// Every field set to the same constant.
    pub fn uniform(value: f64, length: f64) -> Self {
        let f = ParameterField::constant(value, length);
        BeamParameters {
            rho: f.clone(),
            i_rho: f.clone(),
            k_shear: f.clone(),
            ei: f.clone(),
            gamma: f.clone(),
            delta: f,
            length,
        }
    }

    /// Unit-length beam whose fields all read `0.4 + 0.01 sin(2 pi xi + phase)`
    /// with per-field phases (rho pi/4, I_rho 3pi/4, K pi/6, EI 2pi/3, gamma 0,
    /// delta pi/2).
    pub fn benchmark() -> Self {
        let s = |phase: f64| ParameterField::sinusoid(0.4, 0.01, TAU, phase, 1.0);
        BeamParameters {
            rho: s(PI / 4.0),
            i_rho: s(3.0 * PI / 4.0),
            k_shear: s(PI / 6.0),
            ei: s(2.0 * PI / 3.0),
            gamma: s(0.0),
            delta: s(PI / 2.0),
            length: 1.0,
        }
    }

    pub fn fields(&self) -> [&ParameterField; 6] {
        [
            &self.rho,
            &self.i_rho,
            &self.k_shear,
            &self.ei,
            &self.gamma,
            &self.delta,
        ]
    }

    pub fn all_constant(&self) -> bool {
        self.fields().iter().all(|f| f.is_constant())
    }

    pub fn reflected(&self) -> Self {
        BeamParameters {
            rho: self.rho.reflected(),
            i_rho: self.i_rho.reflected(),
            k_shear: self.k_shear.reflected(),
            ei: self.ei.reflected(),
            gamma: self.gamma.reflected(),
            delta: self.delta.reflected(),
            length: self.length,
        }
    }

    /// Parameters expressed in coordinates where the clamped end sits at zero.
    pub fn oriented(&self, layout: BoundaryLayout) -> Self {
        match layout {
            BoundaryLayout::ClampedAtZero => self.clone(),
            BoundaryLayout::ClampedAtLength => self.reflected(),
        }
    }

    /// Validates and returns `self`, or the collected failures as one error.
    pub fn validated(self) -> Result<Self> {
        let report = validate(&self);
        if report.is_valid() {
            Ok(self)
        } else {
            Err(Error::InvalidParameters(report.failures.join("; ")))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldMargin {
    pub name: &'static str,
    pub ess_inf: f64,
    pub ess_sup: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub margins: Vec<FieldMargin>,
    pub failures: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn min_margin(&self) -> f64 {
        self.margins
            .iter()
            .map(|m| m.ess_inf)
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn validate(params: &BeamParameters) -> ValidationReport {
    let mut failures = Vec::new();
    let mut margins = Vec::new();
    let length = params.length;
    if !(length.is_finite() && length > 0.0) {
        failures.push(format!("length must be positive and finite, got {length}"));
    }
    for (name, field) in FIELD_NAMES.iter().zip(params.fields()) {
        if field.length() != length {
            failures.push(format!(
                "{name}: field length {} differs from beam length {length}",
                field.length()
            ));
        }
        if let FieldKind::Sinusoid {
            base,
            amplitude,
            frequency,
            phase,
        } = field.kind()
        {
            if ![base, amplitude, frequency, phase].iter().all(|v| v.is_finite()) {
                failures.push(format!("{name}: non-finite sinusoid coefficient"));
            } else if amplitude.abs() >= *base {
                failures.push(format!(
                    "{name}: sinusoid amplitude {amplitude} must be below base {base}"
                ));
            }
        }
        let (lo, hi) = field.extrema();
        if !(lo > 0.0) || !lo.is_finite() {
            failures.push(format!(
                "{name}: field must be strictly positive, ess_inf = {lo}"
            ));
        }
        margins.push(FieldMargin {
            name,
            ess_inf: lo,
            ess_sup: hi,
        });
    }
    ValidationReport { margins, failures }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn sinusoid_eval() {
        let f = ParameterField::sinusoid(0.4, 0.01, TAU, PI / 4.0, 1.0);
        assert_relative_eq!(f.eval(0.0).unwrap(), 0.4 + 0.01 * (PI / 4.0).sin());
        assert_relative_eq!(f.eval(0.0).unwrap(), 0.407071, epsilon = 1e-6);
    }

    #[test]
    fn constant_and_tabulated_eval() {
        let c = ParameterField::constant(1.0, 3.0);
        assert_eq!(c.eval(2.2).unwrap(), 1.0);
        let t = ParameterField::tabulated(vec![1.0, 3.0], 1.0).unwrap();
        assert_relative_eq!(t.eval(0.5).unwrap(), 2.0);
        assert_relative_eq!(t.eval(1.0).unwrap(), 3.0);
    }

    #[test]
    fn eval_outside_domain_fails() {
        let c = ParameterField::constant(1.0, 1.0);
        assert!(matches!(c.eval(1.5), Err(Error::Domain { .. })));
        assert!(matches!(c.eval(-0.1), Err(Error::Domain { .. })));
        assert!(c.eval(f64::NAN).is_err());
    }

    #[test]
    fn tabulated_needs_two_samples() {
        assert!(ParameterField::tabulated(vec![1.0], 1.0).is_err());
    }

    #[test]
    fn derivatives() {
        let s = ParameterField::sinusoid(0.4, 0.01, TAU, PI / 6.0, 1.0).derivative();
        match s.kind() {
            FieldKind::Sinusoid { base, amplitude, .. } => {
                assert_eq!(*base, 0.0);
                assert_relative_eq!(*amplitude, 0.02 * PI);
            }
            k => panic!("unexpected {k:?}"),
        }
        assert_eq!(
            ParameterField::constant(0.4, 1.0).derivative().kind(),
            &FieldKind::Constant(0.0)
        );
        let t = ParameterField::tabulated(vec![0.0, 1.0], 1.0).unwrap().derivative();
        for x in [0.0, 0.3, 1.0] {
            assert_relative_eq!(t.value_at(x), 1.0, epsilon = 1e-14);
        }
        // finite differences on a finer linear table agree as well
        let t = ParameterField::tabulated((0..11).map(|k| 2.0 * k as f64 / 10.0).collect(), 1.0)
            .unwrap()
            .derivative();
        assert_relative_eq!(t.ess_inf(), 2.0, epsilon = 1e-12);
        assert_relative_eq!(t.ess_sup(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn full_period_extrema_exact() {
        for phase in [0.0, 0.3, PI / 4.0, 2.0] {
            let f = ParameterField::sinusoid(0.4, 0.01, TAU, phase, 1.0);
            assert_relative_eq!(f.ess_sup(), 0.4 + 0.01, epsilon = 1e-15);
            assert_relative_eq!(f.ess_inf(), 0.4 - 0.01, epsilon = 1e-15);
        }
        let c = ParameterField::constant(2.5, 1.0);
        assert_eq!(c.extrema(), (2.5, 2.5));
    }

    #[test]
    fn partial_period_extrema_match_dense_grid() {
        let f = ParameterField::sinusoid(1.0, 0.3, 2.0, 0.4, 1.7);
        let (lo, hi) = f.extrema();
        let (glo, ghi) = dense_extrema(|x| f.value_at(x), 1.7, 65536);
        assert_relative_eq!(lo, glo, epsilon = 1e-10);
        assert_relative_eq!(hi, ghi, epsilon = 1e-10);
    }

    #[test]
    fn reflection_reverses_profile() {
        let f = ParameterField::sinusoid(1.0, 0.3, 2.0, 0.4, 1.7);
        let r = f.reflected();
        let t = ParameterField::tabulated(vec![1.0, 2.0, 5.0], 2.0).unwrap();
        let tr = t.reflected();
        for x in [0.0, 0.2, 0.9, 1.7] {
            assert_relative_eq!(r.value_at(x), f.value_at(1.7 - x), epsilon = 1e-14);
        }
        for x in [0.0, 0.5, 1.3, 2.0] {
            assert_relative_eq!(tr.value_at(x), t.value_at(2.0 - x), epsilon = 1e-14);
        }
    }

    #[test]
    fn benchmark_is_valid() {
        let report = validate(&BeamParameters::benchmark());
        assert!(report.is_valid(), "{:?}", report.failures);
        assert_relative_eq!(report.min_margin(), 0.39, epsilon = 1e-15);
    }

    #[test]
    fn zero_damping_rejected() {
        let mut p = BeamParameters::benchmark();
        p.gamma = ParameterField::constant(0.0, 1.0);
        let report = validate(&p);
        assert!(!report.is_valid());
        assert!(report.failures[0].contains("gamma"));
    }

    #[test]
    fn large_amplitude_rejected() {
        let mut p = BeamParameters::benchmark();
        p.k_shear = ParameterField::sinusoid(0.4, 0.5, TAU, 0.0, 1.0);
        assert!(!validate(&p).is_valid());
    }

    #[test]
    fn mismatched_length_rejected() {
        let mut p = BeamParameters::uniform(1.0, 1.0);
        p.ei = ParameterField::constant(1.0, 2.0);
        let report = validate(&p);
        assert!(report.failures.iter().any(|f| f.contains("ei")));
    }

    proptest! {
        #[test]
        fn eval_within_extrema(
            base in 0.5f64..5.0,
            amp_frac in 0.0f64..0.99,
            freq in -20.0f64..20.0,
            phase in -4.0f64..4.0,
            length in 0.1f64..5.0,
            xs in prop::collection::vec(0.0f64..1.0, 100),
        ) {
            let f = ParameterField::sinusoid(base, amp_frac * base, freq, phase, length);
            let (lo, hi) = f.extrema();
            for x in xs {
                let v = f.eval(x * length).unwrap();
                prop_assert!(v >= lo - 1e-14 && v <= hi + 1e-14);
            }
        }

        #[test]
        fn tabulated_eval_within_extrema(
            values in prop::collection::vec(0.1f64..10.0, 2..40),
            xs in prop::collection::vec(0.0f64..1.0, 100),
        ) {
            let f = ParameterField::tabulated(values, 2.0).unwrap();
            let (lo, hi) = f.extrema();
            for x in xs {
                let v = f.value_at(2.0 * x);
                prop_assert!(v >= lo - 1e-14 && v <= hi + 1e-14);
            }
        }

        #[test]
        fn sinusoid_derivative_matches_finite_differences(
            amp in 0.01f64..1.0,
            freq in -10.0f64..10.0,
            phase in -4.0f64..4.0,
            x in 0.01f64..0.99,
        ) {
            let f = ParameterField::sinusoid(2.0, amp, freq, phase, 1.0);
            let d = f.derivative();
            let step = 1e-5;
            let fd = (f.value_at(x + step) - f.value_at(x - step)) / (2.0 * step);
            let exact = d.value_at(x);
            prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(amp * freq.abs()).max(1e-3));
        }
    }

    #[test]
    fn eval_within_extrema_on_many_random_points() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let p = BeamParameters::benchmark();
        for f in p.fields() {
            let (lo, hi) = f.extrema();
            for _ in 0..10_000 {
                let v = f.eval(rng.gen::<f64>()).unwrap();
                assert!(v >= lo && v <= hi);
            }
        }
    }
}
