//! Exact entropy solutions of one-dimensional convex balance laws
//! `u_t + f(u)_x = alpha(t) u`, fractional total variation of their
//! profiles, and the counterexample constructions built from them.

pub mod config;
pub mod error;
pub mod exact;
pub mod exec;
pub mod family;
pub mod flux;
pub mod godunov;
pub mod kk;
pub mod numeric;
pub mod psi;
pub mod source;
pub mod triangular;
pub mod variation;

pub use error::{Error, Result};
pub use exact::{Packet, PiecewiseProfile, Region, Segment, Shock};
pub use family::{AsspCell, AsspFamily, PacketFamily, PowerLawFamily};
pub use flux::{Decay, Degeneracy, Flux, FluxKind};
pub use psi::PsiContext;
pub use source::{Alpha, SourceProfile};
pub use variation::{SampledFunction, VariationReport};
pub use triangular::{Anchor, FlowPoint, TriangularSetup};
pub use kk::{bv_grid_norm, GridField, KKFields, KKSetup};
pub use config::FluxSpec;
