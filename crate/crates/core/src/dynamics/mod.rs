//! Time evolution of a single ensemble member.

mod bloch_ode;
mod leakage;
mod torrey;

pub use bloch_ode::{
    evolve_bloch, evolve_bloch_traced, evolve_sequence, propagate_sequence, sample_plan,
    sample_times, Member, OdeOptions, StateTrace, EQUILIBRIUM_INVERSION,
};
pub use leakage::{leakage_populations, LeakageChannel, LeakageOptions, LeakageResult};
pub use torrey::{torrey_inversion, torrey_population, DriveParams};
pub(crate) use torrey::{DecayFactors, TorreyCoefficients};
