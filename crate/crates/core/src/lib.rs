//! Image-target recognition engine for the herb-learning platform.
//!
//! Reference pictures are registered into a [`targetdb::TargetDatabase`] as
//! binary feature sets. Camera frames are recognized by descriptor matching
//! followed by RANSAC homography verification ([`matcher::recognize`]); the
//! verified homography yields a planar camera pose ([`pose`]) used to draw a
//! wireframe model over the frame, and the target's content id joins the
//! detection to its [`content::HerbEntry`].

pub mod bench;
pub mod content;
pub mod features;
pub mod fixtures;
pub mod geometry;
pub mod imaging;
pub mod matcher;
pub mod pose;
pub mod rng;
pub mod targetdb;

pub use geometry::Homography;
pub use imaging::{ColorImage, Image};
