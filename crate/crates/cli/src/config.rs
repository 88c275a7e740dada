use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use clap::Args;
use transparent_core::backlund::{Gates, LOWERING_GATE, PDE_GATE, SEED_GATE};
use transparent_core::transport::TRUNCATION_PER_LENGTH;
use transparent_core::{Metric, TorusGrid};

pub const DEFAULT_HOLONOMY_THRESHOLD: f64 = 1e-5;

/// Options shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Grid points per direction for newly created fields.
    #[arg(long, global = true, default_value_t = 64)]
    pub grid: usize,
    /// Period of the torus in x.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub lx: f64,
    /// Period of the torus in y.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub ly: f64,
    /// Largest fiber mode an output field may carry.
    #[arg(long, global = true, default_value_t = 8)]
    pub mode_cap: i32,
    /// Largest |p|, |q| of the closed geodesic family.
    #[arg(long, global = true, default_value_t = 3)]
    pub max_pq: u32,
    /// Base points per loop direction.
    #[arg(long, global = true, default_value_t = 2)]
    pub loops_per_dir: usize,
    /// Seed for base points and descent starts.
    #[arg(long, global = true, default_value_t = 0)]
    pub rng_seed: u64,
    /// Holomorphicity gate for seeds.
    #[arg(long, global = true, default_value_t = SEED_GATE)]
    pub tol_seed: f64,
    /// Gate on transport, connection and curvature residuals.
    #[arg(long, global = true, default_value_t = PDE_GATE)]
    pub tol_pde: f64,
    /// Relative tail allowed after lowering.
    #[arg(long, global = true, default_value_t = LOWERING_GATE)]
    pub tol_lowering: f64,
    /// Largest acceptable holonomy defect.
    #[arg(long, global = true, default_value_t = DEFAULT_HOLONOMY_THRESHOLD)]
    pub tol_holonomy: f64,
    /// RK4 truncation target per unit loop length; sets the step density.
    #[arg(long, global = true, default_value_t = TRUNCATION_PER_LENGTH)]
    pub tol_truncation: f64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tol-seed", self.tol_seed),
            ("tol-pde", self.tol_pde),
            ("tol-lowering", self.tol_lowering),
            ("tol-holonomy", self.tol_holonomy),
            ("tol-truncation", self.tol_truncation),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                bail!("--{name} must be positive, got {v}");
            }
        }
        if self.mode_cap < 2 {
            bail!("--mode-cap must be at least 2, got {}", self.mode_cap);
        }
        if self.loops_per_dir == 0 {
            bail!("--loops-per-dir must be at least 1");
        }
        Ok(())
    }

    pub fn gates(&self) -> Gates {
        Gates {
            seed: self.tol_seed,
            pde: self.tol_pde,
            lowering: self.tol_lowering,
        }
    }

    pub fn metric(&self) -> Result<std::sync::Arc<Metric>> {
        Ok(Metric::flat(TorusGrid::new(self.grid, self.grid, self.lx, self.ly)?))
    }
}

fn normalized(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}

/// Fails when an output path coincides with an input path.
pub fn check_distinct(inputs: &[&Path], outputs: &[&Path]) -> Result<()> {
    for o in outputs {
        let on = normalized(o);
        if inputs.iter().any(|i| normalized(i) == on) {
            bail!("output {} would overwrite an input", o.display());
        }
    }
    for (k, a) in outputs.iter().enumerate() {
        if outputs[k + 1..].iter().any(|b| normalized(a) == normalized(b)) {
            bail!("output {} is given twice", a.display());
        }
    }
    Ok(())
}
