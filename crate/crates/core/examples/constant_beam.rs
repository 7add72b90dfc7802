// Constant-coefficient beam: general certificate next to the closed forms.

use timo::certificate::{certify_constant, ConstantCertificate};
use timo::{BeamParameters, LyapunovWeights};

fn run_example() -> Result<ConstantCertificate, Box<dyn std::error::Error>> {
    let params = BeamParameters::uniform(1.0, 1.0).validated()?;
    let weights = LyapunovWeights::new(40.0, 6.0, 1.0, 2.0, 2.0, 2.0)?;
    let both = certify_constant(&weights, &params)?;

    println!("kappa1 = {:.6}, eta = {:.6}", both.general.kappa1, both.general.eta);
    for i in 0..6 {
        println!(
            "c{}: general {:+.6}  closed form {:+.6}",
            i + 1,
            both.general.c_essinf[i],
            both.closed_form.c_essinf[i]
        );
    }
    for d in &both.differences {
        println!("c{} differs by {:.3e}", d.index, d.general - d.closed_form);
    }
    Ok(both)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(|_| ())
}
