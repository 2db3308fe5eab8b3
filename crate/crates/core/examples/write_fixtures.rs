//! Regenerate `fixtures/models/*.json` and `fixtures/demo_scores.csv`.
//!
//!     cargo run -p benchsubset --example write_fixtures

use std::fs;
use std::path::Path;

use benchsubset::fixtures::{model_files, normalization_table};
use benchsubset::synthetic::{demo_raw_table, DemoConfig};

fn main() -> benchsubset::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let models = root.join("models");
    fs::create_dir_all(&models).expect("create models dir");
    for (name, json) in model_files()? {
        fs::write(models.join(&name), json + "\n").expect("write model");
        println!("wrote models/{name}");
    }
    let demo = demo_raw_table(&normalization_table(), DemoConfig::default())?;
    fs::write(root.join("demo_scores.csv"), demo.to_csv()?).expect("write demo");
    println!("wrote demo_scores.csv");
    Ok(())
}
