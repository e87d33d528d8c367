//! Covers of an orbit sample by FK balls: greedy vs exact minimum, maximal
//! separated sets, cover counts across lengths and the 5r selection.

use fkmdim::covering::{cover_counts, exact_min_cover, five_r_check, greedy_fk_cover, max_separated_set};
use fkmdim::{SeedStreams, SystemSpec};
use rand::Rng;

fn main() -> fkmdim::Result<()> {
    let sys = SystemSpec::build("unit-cube-shift", &[])?;
    let mut rng = SeedStreams::new(3).stream("example/covering");
    let sample: Vec<_> = (0..40).map(|_| sys.sample(&mut rng)).collect();

    let n = 6;
    let orbits = sys.orbits(&sample, n)?;
    for eps in [0.3, 0.2, 0.1] {
        let greedy = greedy_fk_cover(&sys, &orbits, eps)?;
        let sep = max_separated_set(&sys, &orbits, eps)?;
        println!("n = {n}, ε = {eps}: greedy cover {}, separated set {}", greedy.count, sep.len());
    }
    let small = &orbits[..16];
    let exact = exact_min_cover(&sys, small, 0.2, 20)?;
    let greedy = greedy_fk_cover(&sys, small, 0.2)?;
    println!("16 points at ε = 0.2: exact minimum {}, greedy {}", exact.count, greedy.count);

    println!("cover counts at ε = 0.15:");
    for (n, count) in cover_counts(&sys, &sample, 0.15, 2..=10)? {
        println!("  n = {n:2}: {count}");
    }

    let balls: Vec<_> = sample[..12]
        .iter()
        .map(|x| Ok((sys.orbit(x, 5)?, rng.gen_range(0.05..0.15))))
        .collect::<fkmdim::Result<_>>()?;
    let report = five_r_check(&sys, &balls)?;
    println!(
        "5r selection: kept {:?} of 12 balls, disjoint = {}, all centers covered = {}",
        report.chosen, report.disjoint, report.covered
    );
    Ok(())
}
