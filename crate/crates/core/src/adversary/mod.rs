//! Lower-bound drivers: the rewinding bipartite adversary, the z-recurrence
//! behind the matching lower bound, and the star-graph adversary for
//! downward-closed systems.

mod recurrence;
mod rewind;
mod star;

pub use recurrence::{discriminant, positivity_check, z_sequence, Positivity, ZSequence, NEGATIVE_THRESHOLD};
pub use rewind::{
    empty_bipartite, k2_adversary, verify_sequence_inequality, AdversaryEdge, AdversaryReport, Divergence, EdgeRole,
    K2Config, SequenceCheck,
};
pub use star::{graph_family, star_adversary, StarReport, VertexAlgorithm};
