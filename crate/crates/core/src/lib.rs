//! Estimators for Weyl-type mean pseudometrics of random dynamical systems over
//! amenable groups, with Banach densities and an evidence-level classifier for
//! mean equicontinuity versus mean sensitivity.
//!
//! Every infinite limit is replaced by a finite window reduction; each estimate
//! records the truncation (`n_max`, `m_max`, search radius) it was computed at.
//!
//! ```
//! use weylmean::catalog::system;
//! use weylmean::group::FolnerFamily;
//! use weylmean::pseudometric::{banach, EstimatorConfig};
//! use weylmean::torus::PhasePoint;
//!
//! let rot = system("rot1-trivial").unwrap();
//! let x = PhasePoint::new(vec![0.0]).unwrap();
//! let y = PhasePoint::new(vec![0.1]).unwrap();
//! let family = FolnerFamily::boxes(rot.group().clone());
//! let cfg = EstimatorConfig { n_max: 64, m_max: 16, search_radius: 4, ..Default::default() };
//! let est = banach(&rot.separation_oracle(&x, &y).unwrap(), &family, &cfg).unwrap();
//! assert!((est.value - 0.1).abs() < 1e-12);
//! ```

pub mod catalog;
pub mod classify;
pub mod density;
pub mod error;
pub mod group;
pub mod oracle;
pub mod pseudometric;
pub mod rds;
pub mod torus;
pub mod window;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/groups.md")]
    mod groups {}
    #[doc = include_str!("../../../book/src/systems.md")]
    mod systems {}
    #[doc = include_str!("../../../book/src/pseudometrics.md")]
    mod pseudometrics {}
    #[doc = include_str!("../../../book/src/densities.md")]
    mod densities {}
    #[doc = include_str!("../../../book/src/classification.md")]
    mod classification {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/truncation.md")]
    mod truncation {}
}
