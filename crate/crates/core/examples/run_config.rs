//! The batch driver used by the `starshift` binary, called as a library.

use std::path::Path;

use starshift::cli::{parse_config_str, run, RunOptions};

const CONFIG: &str = r#"
tasks = ["eigencount", "levinson", "resonance"]
seed = 3

[graph]
edges = [
  { kind = "square_well", depth = -5.0, width = 1.0 },
  { kind = "exponential", amplitude = -1.0, rate = 1.5 },
]

[parameters]
sweep = 3
"#;

fn main() -> starshift::Result<()> {
    let config = parse_config_str(CONFIG, Path::new("."))?;
    let dir = std::env::temp_dir().join("starshift-example");
    let summary = run(
        &config,
        &RunOptions {
            output_dir: dir.clone(),
            tolerance_scale: 1.0,
            verbose: true,
        },
    )?;
    for t in &summary.tasks {
        println!("{:<12} {:?}", t.task.name(), t.status);
        for c in &t.checks {
            println!("  {:<28} residual {:.2e} (tolerance {:.0e}) {}", c.name, c.residual, c.tolerance, if c.passed { "ok" } else { "FAIL" });
        }
    }
    println!("artifacts in {}, exit code {}", dir.display(), summary.exit_code);
    Ok(())
}
