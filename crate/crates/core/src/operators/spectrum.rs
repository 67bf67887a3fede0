//! Closed-form spectra and the circle test.
//!
//! Points, closed disks and closed annuli are all stored as annuli
//! `{z : r_in <= |z - center| <= r_out}`. Overlapping pieces are merged into
//! connected components before circles are tested against them.

use serde::{Deserialize, Serialize};

use super::OperatorSpec;
use crate::error::{Error, Result};
use crate::space::Scalar;

/// Tolerance for a circle passing through an isolated point or touching a boundary.
pub const CIRCLE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SpectralComponent {
    Point { value: [f64; 2] },
    Disk { center: [f64; 2], radius: f64 },
    Annulus { center: [f64; 2], r_in: f64, r_out: f64 },
}

impl SpectralComponent {
    pub fn point(z: Scalar) -> Self {
        SpectralComponent::Point { value: [z.re, z.im] }
    }

    pub fn disk(center: Scalar, radius: f64) -> Self {
        SpectralComponent::Disk { center: [center.re, center.im], radius }
    }

    pub fn annulus(center: Scalar, r_in: f64, r_out: f64) -> Self {
        SpectralComponent::Annulus { center: [center.re, center.im], r_in, r_out }
    }

    fn as_annulus(&self) -> (Scalar, f64, f64) {
        match *self {
            SpectralComponent::Point { value } => (Scalar::new(value[0], value[1]), 0.0, 0.0),
            SpectralComponent::Disk { center, radius } => (Scalar::new(center[0], center[1]), 0.0, radius),
            SpectralComponent::Annulus { center, r_in, r_out } => {
                (Scalar::new(center[0], center[1]), r_in, r_out)
            }
        }
    }

    fn scaled(&self, c: Scalar) -> Self {
        let (z, r_in, r_out) = self.as_annulus();
        let m = c.norm();
        match self {
            SpectralComponent::Point { .. } => SpectralComponent::point(c * z),
            SpectralComponent::Disk { .. } => SpectralComponent::disk(c * z, m * r_out),
            SpectralComponent::Annulus { .. } => SpectralComponent::annulus(c * z, m * r_in, m * r_out),
        }
    }

    /// `[min |z|, max |z|]` over the component.
    pub fn radial_interval(&self) -> (f64, f64) {
        let (z, r_in, r_out) = self.as_annulus();
        let d = z.norm();
        ((r_in - d).max(d - r_out).max(0.0), d + r_out)
    }

    fn is_valid(&self) -> bool {
        let (z, r_in, r_out) = self.as_annulus();
        z.re.is_finite() && z.im.is_finite() && r_in >= 0.0 && r_in <= r_out && r_out.is_finite()
    }

    /// Whether two closed pieces share a point.
    ///
    /// Circles of radii `s`, `t` about centres at distance `d` meet iff
    /// `|s - t| <= d <= s + t`; eliminating `t` leaves an interval condition on `s`.
    fn meets(&self, other: &SpectralComponent) -> bool {
        let (c1, a1, b1) = self.as_annulus();
        let (c2, a2, b2) = other.as_annulus();
        let d = (c1 - c2).norm();
        let lo = a1.max(a2 - d).max(d - b2);
        let hi = b1.min(d + b2);
        lo <= hi + CIRCLE_TOLERANCE
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpectrumDescription {
    pub components: Vec<SpectralComponent>,
}

impl SpectrumDescription {
    pub fn new(components: Vec<SpectralComponent>) -> Result<Self> {
        if let Some(bad) = components.iter().find(|c| !c.is_valid()) {
            return Err(Error::InvalidParameter(format!("invalid spectral component {bad:?}")));
        }
        Ok(Self { components })
    }

    /// Radial intervals of the connected components of the union.
    pub fn connected_radial_intervals(&self) -> Vec<(f64, f64)> {
        let n = self.components.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], i: usize) -> usize {
            let mut r = i;
            while parent[r] != r {
                r = parent[r];
            }
            let mut j = i;
            while parent[j] != r {
                let next = parent[j];
                parent[j] = r;
                j = next;
            }
            r
        }
        for i in 0..n {
            for j in i + 1..n {
                if self.components[i].meets(&self.components[j]) {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
        let mut groups: Vec<(usize, (f64, f64))> = Vec::new();
        for i in 0..n {
            let root = find(&mut parent, i);
            let (lo, hi) = self.components[i].radial_interval();
            match groups.iter_mut().find(|(r, _)| *r == root) {
                Some((_, iv)) => *iv = (iv.0.min(lo), iv.1.max(hi)),
                None => groups.push((root, (lo, hi))),
            }
        }
        groups.into_iter().map(|(_, iv)| iv).collect()
    }

    /// The exact set of radii whose circle meets every component, if nonempty.
    pub fn passing_radii(&self) -> Option<(f64, f64)> {
        let groups = self.connected_radial_intervals();
        let lo = groups.iter().map(|g| g.0).fold(0.0, f64::max);
        let hi = groups.iter().map(|g| g.1).fold(f64::INFINITY, f64::min);
        (lo <= hi + CIRCLE_TOLERANCE).then_some((lo, hi.max(lo)))
    }

    /// Every radius at which the verdict of the circle test can change.
    pub fn boundary_radii(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .connected_radial_intervals()
            .into_iter()
            .flat_map(|(lo, hi)| [lo, hi])
            .collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

/// Whether the circle `|z| = r` meets every connected component of `s`.
pub fn circle_intersects_all_components(s: &SpectrumDescription, r: f64) -> bool {
    s.connected_radial_intervals()
        .iter()
        .all(|&(lo, hi)| r >= lo - CIRCLE_TOLERANCE && r <= hi + CIRCLE_TOLERANCE)
}

pub(super) fn analytic_spectrum(op: &OperatorSpec) -> Result<SpectrumDescription> {
    let components = match op {
        OperatorSpec::Diagonal(values) => values.iter().map(|&z| SpectralComponent::point(z)).collect(),
        OperatorSpec::AdjointMultiplication { a, .. } => vec![SpectralComponent::disk(*a, 1.0)],
        OperatorSpec::Scaled { c, inner } => analytic_spectrum(inner)?
            .components
            .iter()
            .map(|k| k.scaled(*c))
            .collect(),
        OperatorSpec::DirectSum(blocks) => {
            let mut all = Vec::new();
            for b in blocks {
                all.extend(analytic_spectrum(b)?.components);
            }
            all
        }
        OperatorSpec::BackwardShift { .. } => return Err(Error::NoAnalyticSpectrum("backward_shift")),
        OperatorSpec::ForwardShift { .. } => return Err(Error::NoAnalyticSpectrum("forward_shift")),
        OperatorSpec::PerturbedForwardShift(_) => {
            return Err(Error::NoAnalyticSpectrum("perturbed_forward_shift"))
        }
    };
    SpectrumDescription::new(components)
}
