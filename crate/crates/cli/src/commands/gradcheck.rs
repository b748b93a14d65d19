use anyhow::{bail, Result};
use sketch_core::trainer::GradTarget;

use crate::{GradcheckArgs, UsageError};

/// Relative error below which a target passes.
pub const TOLERANCE: f64 = 1e-4;

pub fn run(args: &GradcheckArgs) -> Result<()> {
    let targets: Vec<GradTarget> = if args.target == "all" {
        GradTarget::ALL.to_vec()
    } else {
        match GradTarget::from_name(&args.target) {
            Some(t) => vec![t],
            None => {
                let names: Vec<&str> = GradTarget::ALL.iter().map(|t| t.name()).collect();
                return Err(UsageError(format!(
                    "unknown gradcheck target `{}`\n\nUsage: sketchgen gradcheck <TARGET> [--seed N] [--epsilon E]\n\nTargets: {}, all",
                    args.target,
                    names.join(", ")
                ))
                .into());
            }
        }
    };
    if !(1e-7..=1e-3).contains(&args.epsilon) {
        return Err(UsageError(format!("--epsilon must lie in [1e-7, 1e-3], got {}", args.epsilon)).into());
    }
    let mut failed = Vec::new();
    for t in targets {
        let report = t.run(args.seed, args.epsilon)?;
        let ok = report.max_relative_error < TOLERANCE;
        println!("{:<10} {}  {report}", t.name(), if ok { "PASS" } else { "FAIL" });
        if !ok {
            failed.push(t.name());
        }
    }
    if !failed.is_empty() {
        bail!("gradient check failed for {}", failed.join(", "));
    }
    Ok(())
}
