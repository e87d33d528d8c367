//! Weighted (fractional) FK covers, their comparison with plain covers, and the
//! measure read off the optimal dual whose balls obey the mass bound.

use fkmdim::covering::caratheodory_value_small;
use fkmdim::weighted::{frostman_measure_small, sandwich_check, smallest_admissible_length, weighted_cover_value_small};
use fkmdim::{SeedStreams, SystemSpec};

fn main() -> fkmdim::Result<()> {
    let sys = SystemSpec::build("rotation-alpha", &[])?;
    let mut rng = SeedStreams::new(11).stream("example/weighted");
    let k: Vec<_> = (0..6).map(|_| sys.sample(&mut rng)).collect();
    let (eps, s, n_min, n_max) = (0.1, 0.4, 3, 6);

    let w = weighted_cover_value_small(&sys, &k, &k, eps, s, n_min, n_max)?;
    let m = caratheodory_value_small(&sys, &k, eps, s, n_min, n_max)?;
    println!("weighted cover {:.5} <= plain cover {:.5}", w.value, m);
    for item in &w.items {
        println!("  ball of length {} with weight {:.3}", item.n, item.weight);
    }

    let delta = 1.0;
    println!("length hypothesis for δ = {delta} first holds at N = {:?}", smallest_admissible_length(delta));
    let r = sandwich_check(&sys, &k, &k, eps, s, delta, n_min, n_max)?;
    println!(
        "sandwich: {:.5} <= {:.5} <= {:.5} holds = {}",
        r.lower,
        r.weighted,
        r.upper,
        r.holds()
    );

    let f = frostman_measure_small(&sys, &k, eps, s, n_min, n_max)?;
    println!(
        "measure with c = {:.5}: {} ball constraints, max excess {:.2e}",
        f.c, f.constraints_checked, f.max_excess
    );
    for (x, mass) in f.measure.atoms() {
        println!("  atom {:.4} mass {:.4}", x.coords()[0], mass);
    }
    Ok(())
}
