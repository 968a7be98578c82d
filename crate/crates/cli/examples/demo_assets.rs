//! Regenerates the procedural demo assets.
//!
//! cargo run -p facedepth-cli --example demo_assets -- assets/demo

use std::path::PathBuf;

fn main() -> anyhow::Result<()> {
    let dir = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("assets/demo"));
    let config = facedepth_cli::demo::write_demo_assets(&dir, 64, 32)?;
    eprintln!("wrote {}", config.display());
    Ok(())
}
