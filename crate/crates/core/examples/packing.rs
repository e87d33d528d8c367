//! Disjoint families of FK balls with mixed lengths: the best weighted packing,
//! a family whose weight lands in a prescribed interval, and certification.

use fkmdim::packing::{greedy_fk_packing, packing_family, packing_sum_in_interval, verify_packing};
use fkmdim::{SeedStreams, SystemSpec};

fn main() -> fkmdim::Result<()> {
    let sys = SystemSpec::build("doubling-map", &[])?;
    let mut rng = SeedStreams::new(5).stream("example/packing");
    let sample: Vec<_> = (0..8).map(|_| sys.sample(&mut rng)).collect();

    let greedy = greedy_fk_packing(&sys, &sys.orbits(&sample, 4)?, 0.1)?;
    println!("greedy single-length packing at n = 4, ε = 0.1: {} balls", greedy.count);

    for s in [0.0, 0.3, 0.8] {
        let fam = packing_family(&sys, &sample, 0.1, s, 2, 5)?;
        println!(
            "s = {s}: best family weight {:.4} from {} balls, lengths {:?}, certified = {}",
            fam.sum_value.unwrap_or(0.0),
            fam.count,
            fam.lengths,
            verify_packing(&sys, &fam)?
        );
    }

    let (a, b) = (0.05, 0.3);
    match packing_sum_in_interval(&sys, &sample, 0.1, 0.5, 2, a, b) {
        Ok(fam) => println!(
            "family with weight in ({a}, {b}): {:.4} from lengths {:?}",
            fam.sum_value.unwrap_or(0.0),
            fam.lengths
        ),
        Err(e) => println!("no family in ({a}, {b}): {e}"),
    }
    Ok(())
}
