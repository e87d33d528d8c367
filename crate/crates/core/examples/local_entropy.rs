//! FK local entropy of empirical measures: a single point's rate profile and
//! integrated estimates for Bernoulli measures on the 2-shift.

use fkmdim::local_entropy::{integrated_local_entropy, local_entropy, MeasureDescriptor};
use fkmdim::SystemSpec;

fn main() -> fkmdim::Result<()> {
    let sys = SystemSpec::build("full-shift-2", &[])?;
    let fair: MeasureDescriptor = "bernoulli:0.5".parse()?;
    let mu = fair.build(&sys, 1000, 1)?;

    let x = mu.atoms()[0].0.clone();
    let est = local_entropy(&sys, &mu, &x, 0.1, (4, 12))?;
    println!("one point at ε = 0.1: lower {:.3}, upper {:.3}", est.lower, est.upper);
    for row in &est.per_n {
        println!("  n = {:2}: ball mass {:.4}, rate {:.3}", row.n, row.ball_mass, row.rate);
    }

    println!("integrated over 100 points (log 2 = {:.3}):", 2f64.ln());
    for p in [0.5, 0.2, 0.05] {
        let mu = MeasureDescriptor::Bernoulli(p).build(&sys, 1000, 1)?;
        let h = integrated_local_entropy(&sys, &mu, 0.1, (4, 12), 100, 1)?;
        println!(
            "  bernoulli({p}): lower {:.3} ± {:.3}, upper {:.3} ± {:.3}",
            h.lower, h.lower_stderr, h.upper, h.upper_stderr
        );
    }
    Ok(())
}
