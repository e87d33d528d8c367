//! Runs a TOML experiment file the same way the `fk` binary does and writes its
//! artifacts. Usage: `cargo run --example experiment_config -- <file.toml> [out-dir]`.

use std::path::Path;

use fkmdim::config::{ConfigFile, Overrides};
use fkmdim::harness::{run_experiment, write_artifacts};

fn main() -> fkmdim::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/mdim_cube.toml").into());
    let mut file = ConfigFile::load(Path::new(&path))?;
    file.apply(&Overrides::default());
    let cfg = file.resolve()?;
    let outcome = run_experiment(&cfg)?;
    print!("{}", outcome.summary);
    if let Some(dir) = args.next() {
        for written in write_artifacts(&outcome, Path::new(&dir))? {
            println!("wrote {}", written.display());
        }
    }
    println!("verified: {}", outcome.verified);
    Ok(())
}
