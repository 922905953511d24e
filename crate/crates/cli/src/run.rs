use std::time::Instant;

use crate::config::Loaded;
use crate::error::{CliError, Result};
use crate::manifest::Manifest;
use crate::stages::Stage;

/// Runs `stages` in order, recording each report in the manifest as it
/// finishes. `threads` caps the worker pool used inside stages.
pub fn run_stages(loaded: &Loaded, stages: &[Stage], threads: Option<usize>) -> Result<Manifest> {
    let cfg = &loaded.config;
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| CliError::Validation(format!("cannot create {}: {e}", cfg.output_dir.display())))?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    let mut manifest = Manifest::open(&cfg.output_dir, &loaded.hash, cfg.seed);
    pool.install(|| {
        for &stage in stages {
            let start = Instant::now();
            log::info!("stage {} started", stage.name());
            let report = stage.run(cfg)?;
            log::info!("stage {} finished in {:.2?}", stage.name(), start.elapsed());
            manifest.stages.insert(stage.name().to_string(), report);
            manifest.save(&cfg.output_dir)?;
        }
        Ok(manifest)
    })
}
