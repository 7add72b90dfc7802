// Beam clamped at the far end with the damper at the origin.

use timo::discretize::{build_system_with, SystemOptions};
use timo::simulate::sample_initial_condition;
use timo::{certify, check_bound, integrate, BeamParameters, BoundaryLayout, Gate, InitialCondition, LyapunovWeights};

fn run_example() -> Result<bool, Box<dyn std::error::Error>> {
    let params = BeamParameters::benchmark().validated()?;
    let layout = BoundaryLayout::ClampedAtLength;
    let weights = LyapunovWeights::benchmark();
    // the certificate is stated with the clamped end at zero
    let cert = certify(&weights, &params.oriented(layout));
    println!("kappa2' = {:.5}", cert.kappa2_prime);

    let sys = build_system_with(
        &params,
        40,
        SystemOptions {
            layout,
            ..Default::default()
        },
    )?;
    let z0 = sample_initial_condition(&InitialCondition::benchmark(), &sys);
    let mut traj = integrate(&sys, &z0, 2e-3, 5.0)?;
    traj.annotate(&sys, &weights, &cert, Gate::ExcludeC1)?;
    let report = check_bound(&traj, &cert, Gate::ExcludeC1);
    println!("spectral abscissa: {:.5}", sys.spectral_abscissa()?);
    println!("bound holds: {}, max ratio {:.4}", report.passed, report.max_ratio);
    Ok(report.passed)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(|_| ())
}
