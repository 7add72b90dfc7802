//! Structure-preserving discretization `ż = (J − R) Q z` of the damped beam.
//!
//! The beam is split into `N` cells of width `h = L/N`. The momenta `z1, z2`
//! live at cell centers `(i + ½) h`; the strains `z3, z4` live at nodes
//! `j h`, `j = 0..N-1`, each owning the dual cell around it (half a cell for
//! the clamped node `j = 0`). The state vector is block ordered
//! `[z1 | z2 | z3 | z4]`, each block of length `N`.
//!
//! `Q` holds the cell measure times the energy weight (`1/ρ`, `1/I_ρ`, `K`,
//! `EI`) sampled at cell midpoints. The difference operators are arranged so
//! that the momentum-to-strain block is the exact negative transpose of the
//! strain-to-momentum block, which makes `J` skew-symmetric entry by entry.
//! The clamped end removes the boundary velocity; at the free end the shear
//! force and moment equal minus the damper constant times the adjacent
//! velocity, which lands on the diagonal of `R` next to the interior viscous
//! damping.
//!
//! When the beam is clamped at `ξ = L` the system is assembled in the
//! reflected coordinate `s = L − ξ`, where the strains change sign and the
//! shear coupling flips.

use std::io::Write;

use nalgebra::{Complex, DMatrix, DVector};

use crate::certificate::StateFunction;
use crate::error::{Error, Result};
use crate::params::{BeamParameters, BoundaryLayout};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TipCondition {
    /// Boundary force and torque oppose the tip velocities.
    #[default]
    Damper,
    /// Force- and moment-free tip; no boundary dissipation.
    Free,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SystemOptions {
    pub layout: BoundaryLayout,
    pub tip: TipCondition,
}

#[derive(Debug, Clone)]
pub struct DiscreteSystem {
    n: usize,
    length: f64,
    layout: BoundaryLayout,
    j: DMatrix<f64>,
    r: DMatrix<f64>,
    q: DVector<f64>,
    centers: Vec<f64>,
    nodes: Vec<f64>,
    params: BeamParameters,
}

pub fn build_system(params: &BeamParameters, n_elements: usize) -> Result<DiscreteSystem> {
    build_system_with(params, n_elements, SystemOptions::default())
}

pub fn build_system_with(
    params: &BeamParameters,
    n_elements: usize,
    options: SystemOptions,
) -> Result<DiscreteSystem> {
    let n = n_elements;
    if n < 2 {
        return Err(Error::Precondition(format!(
            "need at least 2 elements, got {n}"
        )));
    }
    let p = params.oriented(options.layout);
    let coupling = match options.layout {
        BoundaryLayout::ClampedAtZero => 1.0,
        BoundaryLayout::ClampedAtLength => -1.0,
    };
    let l = p.length;
    let h = l / n as f64;
    let dim = 4 * n;
    let (z1, z2, z3, z4) = (0, n, 2 * n, 3 * n);

    let centers: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * h).collect();
    let nodes: Vec<f64> = (0..n).map(|j| j as f64 * h).collect();
    let node_measure = |j: usize| if j == 0 { 0.5 * h } else { h };
    let node_midpoint = |j: usize| if j == 0 { 0.25 * h } else { j as f64 * h };

    let mut q = DVector::zeros(dim);
    for i in 0..n {
        q[z1 + i] = h / p.rho.value_at(centers[i]);
        q[z2 + i] = h / p.i_rho.value_at(centers[i]);
        q[z3 + i] = node_measure(i) * p.k_shear.value_at(node_midpoint(i));
        q[z4 + i] = node_measure(i) * p.ei.value_at(node_midpoint(i));
    }

    let mut j = DMatrix::zeros(dim, dim);
    let mut put = |row: usize, col: usize, v: f64| {
        j[(row, col)] = v;
        j[(col, row)] = -v;
    };
    for (vel, strain) in [(z1, z3), (z2, z4)] {
        for i in 0..n {
            // center i sits between node i and node i + 1 (or the tip)
            put(vel + i, strain + i, -1.0 / (h * node_measure(i)));
            if i + 1 < n {
                put(vel + i, strain + i + 1, 1.0 / (h * node_measure(i + 1)));
            }
        }
    }
    // shear coupling weighted by the overlap of cell i with the dual cells of
    // nodes i and i + 1 (h/2 each): ż2 += e3 averaged to centers, ż3 -= e2
    // averaged over each dual cell
    for i in 0..n {
        put(z2 + i, z3 + i, coupling * 0.5 / node_measure(i));
        if i + 1 < n {
            put(z2 + i, z3 + i + 1, coupling * 0.5 / node_measure(i + 1));
        }
    }

    let mut r = DMatrix::zeros(dim, dim);
    for i in 0..n {
        r[(z1 + i, z1 + i)] = p.gamma.value_at(centers[i]) / h;
        r[(z2 + i, z2 + i)] = p.delta.value_at(centers[i]) / h;
    }
    if options.tip == TipCondition::Damper {
        r[(z1 + n - 1, z1 + n - 1)] += p.gamma.value_at(l) / (h * h);
        r[(z2 + n - 1, z2 + n - 1)] += p.delta.value_at(l) / (h * h);
    }

    Ok(DiscreteSystem {
        n,
        length: l,
        layout: options.layout,
        j,
        r,
        q,
        centers,
        nodes,
        params: p,
    })
}

impl DiscreteSystem {
    pub fn n_elements(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        4 * self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn step(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn layout(&self) -> BoundaryLayout {
        self.layout
    }

    /// Beam parameters in the assembly coordinates (clamped end at zero).
    pub fn params(&self) -> &BeamParameters {
        &self.params
    }

    pub fn j(&self) -> &DMatrix<f64> {
        &self.j
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    /// Diagonal of `Q`.
    pub fn q(&self) -> &DVector<f64> {
        &self.q
    }

    pub fn q_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.q)
    }

    /// Positions of the momentum unknowns.
    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// Positions of the strain unknowns.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// `(J − R) Q`.
    pub fn system_matrix(&self) -> DMatrix<f64> {
        let mut a = &self.j - &self.r;
        for (c, mut col) in a.column_iter_mut().enumerate() {
            col *= self.q[c];
        }
        a
    }

    /// Copy with `R = 0`.
    pub fn lossless(&self) -> Self {
        DiscreteSystem {
            r: DMatrix::zeros(self.dim(), self.dim()),
            ..self.clone()
        }
    }

    fn check_len(&self, z: &DVector<f64>) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::Structure(format!(
                "state has length {}, system dimension is {}",
                z.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// `E_h = ½ zᵀ Q z`.
    pub fn discrete_energy(&self, z: &DVector<f64>) -> Result<f64> {
        self.check_len(z)?;
        Ok(0.5 * z.iter().zip(self.q.iter()).map(|(zi, qi)| qi * zi * zi).sum::<f64>())
    }

    /// `|(Qz)ᵀ J (Qz)|`: the part of `dE_h/dt + (Qz)ᵀ R (Qz)` that must
    /// vanish for a skew interconnection.
    pub fn power_balance_residual(&self, z: &DVector<f64>) -> Result<f64> {
        self.check_len(z)?;
        let e = z.component_mul(&self.q);
        Ok(e.dot(&(&self.j * &e)).abs())
    }

    /// `(Qz)ᵀ R (Qz)`, the instantaneous dissipated power.
    pub fn dissipation(&self, z: &DVector<f64>) -> Result<f64> {
        self.check_len(z)?;
        let e = z.component_mul(&self.q);
        Ok(e.dot(&(&self.r * &e)))
    }

    /// Eigenvalues of `(J − R) Q`, computed on the similar matrix
    /// `Q^½ (J − R) Q^½`.
    pub fn eigenvalues(&self) -> Result<Vec<Complex<f64>>> {
        let s = self.q.map(f64::sqrt);
        let mut m = &self.j - &self.r;
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                m[(r, c)] *= s[r] * s[c];
            }
        }
        let schur = nalgebra::linalg::Schur::try_new(m, 1e-15, 100_000)
            .ok_or_else(|| Error::Numerical("Schur iteration did not converge".into()))?;
        Ok(schur.complex_eigenvalues().iter().copied().collect())
    }

    /// Largest real part of the spectrum of `(J − R) Q`.
    pub fn spectral_abscissa(&self) -> Result<f64> {
        Ok(self
            .eigenvalues()?
            .iter()
            .map(|l| l.re)
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// Piecewise-linear reconstruction of a discrete state on a uniform grid
    /// of `n_intervals` (even) intervals, in assembly coordinates.
    ///
    /// Momenta are pinned to zero at the clamped end; every component is held
    /// constant beyond its last unknown.
    pub fn to_state_function(&self, z: &DVector<f64>, n_intervals: usize) -> Result<StateFunction> {
        self.check_len(z)?;
        let n = self.n;
        let h = self.length / n_intervals as f64;
        let grid: Vec<f64> = (0..=n_intervals).map(|k| k as f64 * h).collect();

        let mut vel_x = Vec::with_capacity(n + 1);
        vel_x.push(0.0);
        vel_x.extend_from_slice(&self.centers);
        let components = std::array::from_fn(|c| {
            let block = z.rows(c * n, n);
            if c < 2 {
                let mut ys = Vec::with_capacity(n + 1);
                ys.push(0.0);
                ys.extend(block.iter());
                interpolate(&vel_x, &ys, &grid)
            } else {
                let ys: Vec<f64> = block.iter().copied().collect();
                interpolate(&self.nodes, &ys, &grid)
            }
        });
        StateFunction::new(self.length, components)
    }

    /// Dense dump of `J`, `R` and `Q`: a `# name rows cols` header per
    /// matrix, then one row per line with 17 significant digits.
    pub fn write_dense<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let q = self.q_matrix();
        for (name, m) in [("J", &self.j), ("R", &self.r), ("Q", &q)] {
            writeln!(out, "# {name} {} {}", m.nrows(), m.ncols())?;
            for row in m.row_iter() {
                let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
                writeln!(out, "{}", line.join(" "))?;
            }
        }
        Ok(())
    }
}

/// Linear interpolation through ascending `xs`, constant outside.
fn interpolate(xs: &[f64], ys: &[f64], grid: &[f64]) -> Vec<f64> {
    let last = xs.len() - 1;
    let mut seg = 0;
    grid.iter()
        .map(|&x| {
            if x <= xs[0] {
                return ys[0];
            }
            if x >= xs[last] {
                return ys[last];
            }
            while xs[seg + 1] < x {
                seg += 1;
            }
            let t = (x - xs[seg]) / (xs[seg + 1] - xs[seg]);
            ys[seg] + t * (ys[seg + 1] - ys[seg])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ParameterField;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn random_state(dim: usize, seed: u64) -> DVector<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn dimension_matches_four_per_element() {
        let sys = build_system(&BeamParameters::benchmark(), 50).unwrap();
        assert_eq!(sys.dim(), 200);
        assert!(build_system(&BeamParameters::benchmark(), 1).is_err());
    }

    #[test]
    fn structure_invariants() {
        for n in [2, 4, 17, 50] {
            let sys = build_system(&BeamParameters::benchmark(), n).unwrap();
            let skew = sys.j() + sys.j().transpose();
            assert!(skew.amax() <= 1e-13);
            let asym = sys.r() - sys.r().transpose();
            assert!(asym.amax() == 0.0);
            let eig = sys.r().clone().symmetric_eigenvalues();
            assert!(eig.min() >= -1e-12);
            assert!(sys.q().iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn power_balance_residual_vanishes() {
        let sys = build_system(&BeamParameters::benchmark(), 50).unwrap();
        for seed in 0..20 {
            let z = random_state(sys.dim(), seed);
            let qz = z.component_mul(sys.q());
            let res = sys.power_balance_residual(&z).unwrap();
            assert!(res <= 1e-12 * qz.norm_squared(), "residual {res}");
            // dE/dt computed from the vector field equals minus the dissipation
            let zdot = sys.system_matrix() * &z;
            let de = qz.dot(&zdot);
            let diss = sys.dissipation(&z).unwrap();
            assert_relative_eq!(de, -diss, epsilon = 1e-10 * diss.max(1.0));
        }
    }

    #[test]
    fn energy_of_zero_state() {
        let sys = build_system(&BeamParameters::uniform(1.0, 1.0), 4).unwrap();
        assert_eq!(sys.discrete_energy(&DVector::zeros(16)).unwrap(), 0.0);
        assert!(sys.discrete_energy(&DVector::zeros(15)).is_err());
        assert!(sys.power_balance_residual(&DVector::zeros(3)).is_err());
    }

    #[test]
    fn discrete_spectrum_is_dissipative() {
        let sys = build_system(&BeamParameters::benchmark(), 50).unwrap();
        let abscissa = sys.spectral_abscissa().unwrap();
        assert!(abscissa < 0.0, "abscissa {abscissa}");
    }

    #[test]
    fn lossless_limit_is_conservative() {
        let mut p = BeamParameters::benchmark();
        p.gamma = ParameterField::constant(1e-14, 1.0);
        p.delta = ParameterField::constant(1e-14, 1.0);
        let opts = SystemOptions {
            tip: TipCondition::Free,
            ..Default::default()
        };
        let sys = build_system_with(&p, 20, opts).unwrap();
        assert!(sys.r().amax() < 1e-11);
        for l in sys.eigenvalues().unwrap() {
            assert!(l.re.abs() <= 1e-8, "eigenvalue {l}");
        }
    }

    #[test]
    fn reflected_layout_preserves_structure() {
        let opts = SystemOptions {
            layout: BoundaryLayout::ClampedAtLength,
            ..Default::default()
        };
        let sys = build_system_with(&BeamParameters::benchmark(), 30, opts).unwrap();
        assert!((sys.j() + sys.j().transpose()).amax() <= 1e-13);
        assert!(sys.spectral_abscissa().unwrap() < 0.0);
        // physical rho(L) sits at the clamped end of the assembly coordinates
        let p = BeamParameters::benchmark();
        assert_relative_eq!(
            sys.params().rho.value_at(0.0),
            p.rho.value_at(1.0),
            epsilon = 1e-14
        );
    }

    #[test]
    fn reconstruction_reproduces_samples() {
        let sys = build_system(&BeamParameters::uniform(1.0, 1.0), 8).unwrap();
        let z = random_state(sys.dim(), 3);
        let s = sys.to_state_function(&z, 64).unwrap();
        // grid spacing 1/64: center i at (2i+1)/16 -> index 8i + 4; node j at 8j
        for i in 0..8 {
            assert_eq!(s.component(0)[8 * i + 4], z[i]);
            assert_eq!(s.component(2)[8 * i], z[16 + i]);
        }
        assert_eq!(s.component(1)[0], 0.0);
    }

    #[test]
    fn dense_dump_format() {
        let sys = build_system(&BeamParameters::uniform(1.0, 1.0), 2).unwrap();
        let mut buf = Vec::new();
        sys.write_dense(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3 * 9);
        assert_eq!(lines[0], "# J 8 8");
        assert_eq!(lines[9], "# R 8 8");
        assert_eq!(lines[18], "# Q 8 8");
        assert_eq!(lines[1].split(' ').count(), 8);
        let v: f64 = lines[19].split(' ').next().unwrap().parse().unwrap();
        assert_eq!(v, sys.q()[0]);
    }
}
