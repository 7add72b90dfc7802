// Constructive seed and log-space search for the benchmark beam.

use timo::weight_search::SearchOutcome;
use timo::{feasible_seed, maximize_kappa2, BeamParameters, LyapunovWeights, SearchConfig};

fn run_example() -> Result<SearchOutcome, Box<dyn std::error::Error>> {
    let params = BeamParameters::benchmark().validated()?;
    let seed = feasible_seed(&params)?;
    println!("seed weights: {:?}", seed.to_array());

    let config = SearchConfig {
        initial: Some(LyapunovWeights::benchmark()),
        seed: 7,
        ..Default::default()
    };
    let outcome = maximize_kappa2(&params, &config)?;
    println!("evaluations: {}", outcome.trace.len());
    println!("best weights: {:?}", outcome.weights.to_array());
    println!("kappa2 = {:.5}", outcome.kappa2());
    Ok(outcome)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(|_| ())
}
