// Port-Hamiltonian structure of the discrete benchmark beam.

use timo::{build_system, BeamParameters};

#[derive(Debug)]
#[allow(dead_code)]
struct Structure {
    skew_defect: f64,
    min_r_eigenvalue: f64,
    spectral_abscissa: f64,
}

fn run_example() -> Result<Structure, Box<dyn std::error::Error>> {
    let params = BeamParameters::benchmark().validated()?;
    let sys = build_system(&params, 50)?;
    let j = sys.j();
    let skew_defect = (j + j.transpose()).amax();
    let min_r_eigenvalue = sys.r().clone().symmetric_eigenvalues().min();
    let spectral_abscissa = sys.spectral_abscissa()?;

    println!("states: {}", sys.dim());
    println!("max |J + J^T| = {skew_defect:.3e}");
    println!("min eig R     = {min_r_eigenvalue:.3e}");
    println!("max Re eig (J - R) Q = {spectral_abscissa:.6}");
    Ok(Structure {
        skew_defect,
        min_r_eigenvalue,
        spectral_abscissa,
    })
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(|_| ())
}
