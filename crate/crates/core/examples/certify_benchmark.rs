// Certificate for the sinusoidally varying benchmark beam with the
// hand-tuned weights (37, 67, 39, 5, 1, 6).

use timo::{certify, BeamParameters, Certificate, Gate, LyapunovWeights};

fn run_example() -> Result<Certificate, Box<dyn std::error::Error>> {
    let params = BeamParameters::benchmark().validated()?;
    let weights = LyapunovWeights::benchmark();
    let cert = certify(&weights, &params);

    println!("kappa1 = {:.4}", cert.kappa1);
    println!("eta    = {:.4}", cert.eta);
    for (i, c) in cert.c_essinf.iter().enumerate() {
        println!("ess inf c{} = {:+.4}", i + 1, c);
    }
    println!("beta' = {:.4}, kappa2' = {:.5}", cert.beta_prime, cert.kappa2_prime);
    println!(
        "feasible: strict {}, excluding c1 {}",
        cert.is_feasible(Gate::Strict),
        cert.is_feasible(Gate::ExcludeC1)
    );
    Ok(cert)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(|_| ())
}
