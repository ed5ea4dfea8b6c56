//! Regenerates the bundled synthetic dataset.
//!
//! `cargo run -p fairalign --example gen_synthetic [-- <dir>]`

use std::path::PathBuf;

use fairalign::synthetic::{generate, CONFIG_TOML, SYNTHETIC_SEED};

fn main() -> std::io::Result<()> {
    let dir = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/synthetic"));
    std::fs::create_dir_all(&dir)?;
    let f = generate(SYNTHETIC_SEED);
    std::fs::write(dir.join("ratings.dat"), f.ratings)?;
    std::fs::write(dir.join("movies.dat"), f.movies)?;
    std::fs::write(dir.join("users.dat"), f.users)?;
    std::fs::write(dir.join("config.toml"), CONFIG_TOML)?;
    println!("wrote {}", dir.display());
    Ok(())
}
