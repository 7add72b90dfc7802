// Implicit-midpoint run of the benchmark beam against the certified bound.

use timo::simulate::{sample_initial_condition, BoundReport};
use timo::{build_system, check_bound, certify, integrate, BeamParameters, Gate, InitialCondition, LyapunovWeights};

fn run_example() -> Result<BoundReport, Box<dyn std::error::Error>> {
    let params = BeamParameters::benchmark().validated()?;
    let weights = LyapunovWeights::benchmark();
    let cert = certify(&weights, &params);
    let sys = build_system(&params, 50)?;
    let z0 = sample_initial_condition(&InitialCondition::benchmark(), &sys);

    let mut traj = integrate(&sys, &z0, 1e-3, 10.0)?;
    traj.annotate(&sys, &weights, &cert, Gate::ExcludeC1)?;
    let report = check_bound(&traj, &cert, Gate::ExcludeC1);

    println!("samples: {}", report.samples);
    println!("bound holds: {}", report.passed);
    println!("max norm/bound ratio: {:.4} at t = {:.3}", report.max_ratio, report.t_max_ratio);
    if let Some(rate) = report.empirical_rate {
        println!("observed rate {rate:.4} vs certified {:.4}", report.certified_rate);
    }
    Ok(report)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(|_| ())
}
