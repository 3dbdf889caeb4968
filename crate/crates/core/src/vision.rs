//! Linear (one-row) camera. Each pixel is a ray; its reading is a
//! normalised proximity, `1 - distance / max_range`, clamped to `[0, 1]`.

use serde::{Deserialize, Serialize};

use crate::arena::{cast_ray, Pose, World};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CameraSpec {
    pub fov_deg: f64,
    pub pixel_count: usize,
    pub max_range: f64,
}

impl Default for CameraSpec {
    fn default() -> Self {
        Self {
            fov_deg: 45.0,
            pixel_count: 16,
            max_range: 1.0,
        }
    }
}

impl CameraSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=180.0).contains(&self.fov_deg) {
            return Err(Error::config("camera.fov_deg", "must lie in [0, 180] degrees"));
        }
        if self.pixel_count == 0 {
            return Err(Error::config("camera.pixel_count", "must be at least 1"));
        }
        if !(self.max_range.is_finite() && self.max_range > 0.0) {
            return Err(Error::config("camera.max_range", "must be a positive number"));
        }
        Ok(())
    }

    pub fn with_fov(self, fov_deg: f64) -> Self {
        Self { fov_deg, ..self }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraImage {
    pub readings: Vec<f64>,
}

impl CameraImage {
    pub fn len(&self) -> usize {
        self.readings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.readings.is_empty()
    }
}

/// Pixel ray directions, evenly spaced across the field of view including
/// both edges. A zero FOV or a single pixel collapses onto the heading.
pub fn pixel_angles(camera: &CameraSpec, heading: f64) -> Vec<f64> {
    let n = camera.pixel_count;
    if n <= 1 || camera.fov_deg == 0.0 {
        return vec![heading; n];
    }
    let fov = camera.fov_deg.to_radians();
    let spacing = fov / (n - 1) as f64;
    (0..n)
        .map(|i| heading - 0.5 * fov + i as f64 * spacing)
        .collect()
}

pub fn render_camera(world: &World, pose: &Pose, camera: &CameraSpec) -> Result<CameraImage> {
    let mut readings = Vec::with_capacity(camera.pixel_count);
    render_into(world, pose, camera, &mut readings)?;
    Ok(CameraImage { readings })
}

/// Allocation-free variant of [`render_camera`] used inside simulation loops.
pub(crate) fn render_into(
    world: &World,
    pose: &Pose,
    camera: &CameraSpec,
    readings: &mut Vec<f64>,
) -> Result<()> {
    readings.clear();
    let n = camera.pixel_count;
    let origin = (pose.x, pose.y);
    if n <= 1 || camera.fov_deg == 0.0 {
        let r = proximity(cast_ray(world, origin, pose.heading)?, camera.max_range);
        readings.resize(n, r);
        return Ok(());
    }
    for angle in pixel_angles(camera, pose.heading) {
        readings.push(proximity(cast_ray(world, origin, angle)?, camera.max_range));
    }
    Ok(())
}

fn proximity(distance: f64, max_range: f64) -> f64 {
    (1.0 - distance / max_range).clamp(0.0, 1.0)
}
