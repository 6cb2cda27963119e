//! Data-parallel ensemble evolution on the ambient rayon pool.
//!
//! Rotors are split into contiguous chunks, one workspace per chunk. Each
//! rotor draws its noise from its own counter-keyed stream and histograms are
//! summed in rotor order, so results do not depend on the number of threads.

use qam_core::ensemble::{step_rotor, MomentumHistogram};
use qam_core::fft::SpectralTransform;
use qam_core::quantum::{FloquetPropagator, RotorState, SeModel};
use rayon::prelude::*;

/// Returned by an observer to continue or end the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

/// Evolves `states` for up to `kicks` periods.
///
/// `observe` sees the histogram before the first kick and after every kick and
/// may stop the run early. Returns the number of kicks performed.
pub fn evolve_parallel<T, F, E>(
    states: &mut [RotorState],
    prop: &FloquetPropagator<T>,
    kicks: u64,
    se: &SeModel,
    seed: u64,
    mut observe: F,
) -> Result<u64, E>
where
    T: SpectralTransform + Sync,
    F: FnMut(&MomentumHistogram) -> Result<Flow, E>,
    E: From<qam_core::Error>,
{
    if states.is_empty() {
        return Ok(0);
    }
    let start = states[0].kick_index;
    if observe(&MomentumHistogram::from_states(states, start))? == Flow::Stop {
        return Ok(0);
    }
    let chunk = states.len().div_ceil(rayon::current_num_threads().max(1));
    let mut workspaces: Vec<_> = (0..states.len().div_ceil(chunk))
        .map(|_| prop.workspace())
        .collect();
    for done in 1..=kicks {
        states
            .par_chunks_mut(chunk)
            .zip(workspaces.par_iter_mut())
            .enumerate()
            .map(|(c, (rotors, ws))| {
                for (i, state) in rotors.iter_mut().enumerate() {
                    step_rotor(state, c * chunk + i, prop, ws, se, seed)?;
                }
                Ok(())
            })
            .collect::<Result<Vec<()>, qam_core::Error>>()?;
        let h = MomentumHistogram::from_states(states, start + done);
        if observe(&h)? == Flow::Stop {
            return Ok(done);
        }
    }
    Ok(kicks)
}
