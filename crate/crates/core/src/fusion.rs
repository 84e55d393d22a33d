//! Interlaced view fusion.
//!
//! `V` views of `d` channels each are fused into `V * d` channels where fused
//! channel `j` is channel `j / V` of view `j % V`. This is the normative
//! channel order for anything consuming a fused feature.

use crate::error::{Error, Result};
use crate::netgraph::FeatureShape;

/// Per-view channel payloads; all views carry the same `(d, s)` feature.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewBundle<T> {
    pub spatial: u64,
    pub views: Vec<Vec<T>>,
}

impl<T> ViewBundle<T> {
    pub fn new(spatial: u64, views: Vec<Vec<T>>) -> Result<Self> {
        let Some(first) = views.first() else {
            return Err(Error::ViewMismatch("a bundle needs at least one view".into()));
        };
        let d = first.len();
        if let Some((i, v)) = views.iter().enumerate().find(|(_, v)| v.len() != d) {
            return Err(Error::ViewMismatch(format!("view {i} has {} channels, view 0 has {d}", v.len())));
        }
        Ok(ViewBundle { spatial, views })
    }

    pub fn num_views(&self) -> usize {
        self.views.len()
    }

    pub fn channels_per_view(&self) -> usize {
        self.views[0].len()
    }

    pub fn fused_shape(&self) -> FeatureShape {
        FeatureShape::new((self.num_views() * self.channels_per_view()) as u64, self.spatial)
    }
}

/// `(view, channel)` feeding fused channel `j`.
pub fn source(j: usize, views: usize) -> (usize, usize) {
    (j % views, j / views)
}

pub fn interlace<T: Clone>(bundle: &ViewBundle<T>) -> Vec<T> {
    let v = bundle.num_views();
    (0..v * bundle.channels_per_view())
        .map(|j| {
            let (view, ch) = source(j, v);
            bundle.views[view][ch].clone()
        })
        .collect()
}

pub fn deinterlace<T: Clone>(fused: &[T], views: usize, spatial: u64) -> Result<ViewBundle<T>> {
    if views == 0 || !fused.len().is_multiple_of(views) {
        return Err(Error::NotDivisible { channels: fused.len(), views });
    }
    let d = fused.len() / views;
    let out = (0..views).map(|v| (0..d).map(|c| fused[c * views + v].clone()).collect()).collect();
    ViewBundle::new(spatial, out)
}
