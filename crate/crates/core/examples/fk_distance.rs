//! FK distance between orbit segments: exact breakpoint, bisection, the match
//! certificate behind the value, and the comparison with Bowen distances.

use fkmdim::metrics::{average_distance, bowen_distance, fk_distance, CrossDistances, FkMode, Threshold};
use fkmdim::{SeedStreams, SystemSpec};

fn main() -> fkmdim::Result<()> {
    let shift = SystemSpec::build("full-shift-2", &[])?;
    let x = shift.periodic_point(&[0.0, 1.0])?;
    let y = shift.periodic_point(&[1.0, 0.0])?;
    for n in [2, 3, 8] {
        let (a, b) = (shift.orbit(&x, n)?, shift.orbit(&y, n)?);
        let d = fk_distance(&shift, &a, &b, FkMode::ExactBreakpoint, 0.0)?;
        println!(
            "0101… vs 1010…, n = {n}: fk = {:.4}, bowen = {:.4}, mean = {:.4}",
            d.value,
            bowen_distance(&shift, &a, &b)?,
            average_distance(&shift, &a, &b)?
        );
        if let Some(cert) = &d.certificate {
            println!("  certificate: {} pairs at delta {:.4}: {:?}", cert.size(), cert.delta, cert.pairs);
        }
    }

    let doubling = SystemSpec::build("doubling-map", &[])?;
    let mut rng = SeedStreams::new(7).stream("example/fk");
    let (x, y) = (doubling.sample(&mut rng), doubling.sample(&mut rng));
    let (a, b) = (doubling.orbit(&x, 24)?, doubling.orbit(&y, 24)?);
    let exact = fk_distance(&doubling, &a, &b, FkMode::ExactBreakpoint, 0.0)?;
    let bisect = fk_distance(&doubling, &a, &b, FkMode::Bisection, 1e-6)?;
    println!("doubling map, n = 24: exact {:.6}, bisection {:.6}", exact.value, bisect.value);

    let cross = CrossDistances::new(&doubling, &a, &b)?;
    for delta in [0.05, 0.1, 0.2, 0.4] {
        let matched = cross.optimal_match(delta, Threshold::Strict);
        println!(
            "  delta {delta}: {} of 24 indices matched, unmatched fraction {:.3}",
            matched.len(),
            cross.f_bar(delta, Threshold::Strict)
        );
    }
    Ok(())
}
