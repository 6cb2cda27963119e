use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// Amplitude reached the edge of the momentum basis.
    #[error("basis overflow at kick {kick} (rotor {rotor:?}): edge amplitude {amplitude:e}")]
    BasisOverflow {
        rotor: Option<usize>,
        kick: u64,
        amplitude: f64,
    },

    #[error("no period-1 stable fixed point for these map parameters")]
    NoStableFixedPoint,

    #[error("no chaotic seed escaped; the map looks fully regular")]
    NoChaoticSeed,

    #[error("mode window [{n_lo}, {n_hi}] at kick {kick} leaves the histogram support")]
    WindowOutOfBasis { kick: u64, n_lo: i64, n_hi: i64 },

    #[error("insufficient data: need {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    /// Too few positive survival values remain after dropping `p <= 0`.
    #[error("only {remaining} positive survival points in the fit window, need {needed}")]
    NonPositiveSurvival { remaining: usize, needed: usize },

    #[error("the accelerator mode never separated from the bulk")]
    ModeNotSeparated,
}

impl Error {
    pub(crate) fn invalid(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }

    /// Attach a rotor index to a basis overflow raised inside a single-rotor
    /// routine.
    pub fn with_rotor(self, id: usize) -> Self {
        match self {
            Error::BasisOverflow {
                kick, amplitude, ..
            } => Error::BasisOverflow {
                rotor: Some(id),
                kick,
                amplitude,
            },
            other => other,
        }
    }
}
