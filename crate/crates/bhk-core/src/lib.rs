//! Discrete function-space laboratory: weak-Lp, Herz and Besov-type norms
//! over dyadic decompositions, Fourier-multiplier calculus on a periodic
//! grid, and a Picard solver for the incompressible Navier-Stokes integral
//! equation, with an integrating-factor reference integrator.
//!
//! All operations are pure: fields are immutable after construction and
//! every operator returns a new field, so values can be shared freely
//! across threads.

pub mod besov;
pub mod error;
pub mod fft;
pub mod field;
pub mod grid;
pub mod herz;
pub mod io;
pub mod lp;
pub mod mild;
pub mod multiplier;
pub mod ops;
pub mod presets;
pub mod report;
pub mod weak_lp;

pub use besov::{
    besov_classical, besov_wh_norm, doubling_pair, sobolev_embedding_check, sobolev_wh_norm,
    BesovParams, BlockProfile, EmbeddingReport,
};
pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use field::{Field, Representation};
pub use grid::Grid;
pub use herz::{holder_check, morrey_norm, weak_herz_norm, AnnulusProfile, HerzParams};
pub use lp::{bony, dealiased_product, riesz_potential, BonyDecomposition, LpFamily};
pub use mild::{
    admissible, asymptotic_compare, duhamel_all, duhamel_bilinear, fixed_point_residual,
    load_trajectory, nonlinear_term, picard_solve, reference_solve, save_trajectory,
    self_similar_check, x_norm, Convergence, DecayCurve, MildParams, PicardStart,
    QuadratureConfig, SelfSimilarReport, TimeGrid, Trajectory, TrajectoryManifest, XNorm,
};
pub use multiplier::{
    apply_multiplier, divergence, divergence_defect, gradient, heat, leray_project,
    riesz_transform, MultiplierSymbol,
};
pub use ops::{convolve, rescale, Rescaled};
pub use report::NormReport;
pub use presets::{preset_field, singular_cell_value, unit_ball_volume, Preset};
pub use weak_lp::{lp_region, weak_lp_region};

/// Thread budget for internally parallel operations: `BHK_THREADS` if set,
/// otherwise the available parallelism.
pub fn max_threads() -> usize {
    std::env::var("BHK_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|v| v.get())
                .unwrap_or(1)
        })
}

/// Run a job per item of `inputs`, writing results in input order, using at
/// most [`max_threads`] worker threads. Deterministic: each output slot is
/// written by exactly one job.
pub fn parallel_map<T: Send, U: Send>(
    inputs: Vec<T>,
    job: impl Fn(T) -> U + Sync,
) -> Vec<U> {
    let workers = max_threads().min(inputs.len().max(1));
    if workers <= 1 {
        return inputs.into_iter().map(job).collect();
    }
    let mut slots: Vec<Option<U>> = Vec::new();
    slots.resize_with(inputs.len(), || None);
    let items: Vec<(usize, T)> = inputs.into_iter().enumerate().collect();
    let queue = std::sync::Mutex::new(items);
    let slot_refs = std::sync::Mutex::new(&mut slots);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let next = queue.lock().unwrap().pop();
                match next {
                    Some((i, item)) => {
                        let out = job(item);
                        let mut guard = slot_refs.lock().unwrap();
                        guard[i] = Some(out);
                    }
                    None => break,
                }
            });
        }
    });
    slots.into_iter().map(|s| s.unwrap()).collect()
}
