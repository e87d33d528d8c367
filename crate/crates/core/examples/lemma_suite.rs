//! Runs every structural check on seeded random instances of the built-in systems.

use fkmdim::lemmas::{default_systems, run_check, LemmaCheck};

fn main() -> fkmdim::Result<()> {
    let systems = default_systems();
    for check in LemmaCheck::ALL {
        let r = run_check(check, &systems, 10, 42)?;
        println!(
            "{:<16} passed {:3}  failed {}  skipped {}",
            check.name(),
            r.passed,
            r.failed,
            r.skipped
        );
    }
    Ok(())
}
