//! Quasi-deterministic millimeter-wave channel generation.
//!
//! Deterministic specular rays are traced in a box room with the method of
//! images, then each reflected ray is dressed with stochastic pre- and
//! post-cursor diffuse components whose statistics come from a per-material
//! parameter library. Generated ensembles can be compared against reference
//! traces with two-sample Kolmogorov-Smirnov distances.
//!
//! ```
//! use qdchan::{generate_channel, MaterialLibrary, Point3, QdConfig, RngStream, Room};
//!
//! let library = MaterialLibrary::lecture_room().with_fallback("Floor", "Ceiling (TX1)");
//! let channel = generate_channel(
//!     &Room::lecture_room(),
//!     Point3::new(2.0, 3.0, 2.5),
//!     Point3::new(5.0, 8.0, 1.5),
//!     &library,
//!     &QdConfig::default(),
//!     &RngStream::new(42),
//! )
//! .unwrap();
//! assert!(channel.direct.is_some());
//! assert!(channel.clusters.iter().all(|(_, c)| c.len() <= 39));
//! ```

pub mod distributions;
pub mod error;
pub mod geometry;
pub mod materials;
pub mod metrics;
pub mod pipeline;
pub mod qd;
pub mod scenario;
pub mod tables;

pub use distributions::RngStream;
pub use error::{Error, Result};
pub use geometry::{trace, DRay, Point3, Propagation, Room};
pub use materials::{MaterialLibrary, MaterialParams, RicianParams, Side};
pub use metrics::{
    compare_ensembles, ks_statistic, rms_delay_spread, ComparisonReport, EmpiricalCdf,
};
pub use qd::{
    generate_channel, ChannelInstance, Cluster, ModelVariant, Mpc, MpcKind, PruneReference,
    QdConfig,
};
pub use scenario::ScenarioConfig;
