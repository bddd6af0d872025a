//! Application state profiles.

use serde::{Deserialize, Serialize};

use crate::error::SimError;

/// A group of identical state objects.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObjectGroup {
    pub count: usize,
    pub size_bytes: usize,
    /// Whole-object overwrites per second; 0 = static.
    pub update_rate_per_s: f64,
}

/// The server-side state shape: object sizes and update rates.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StateProfile {
    pub objects: Vec<ObjectGroup>,
}

/// One concrete object expanded from the groups.
#[derive(Debug, Clone, Copy)]
pub struct ObjectSpec {
    pub size_bytes: usize,
    pub update_rate_per_s: f64,
}

impl StateProfile {
    pub fn expand(&self) -> Vec<ObjectSpec> {
        self.objects
            .iter()
            .flat_map(|g| {
                std::iter::repeat_n(
                    ObjectSpec {
                        size_bytes: g.size_bytes,
                        update_rate_per_s: g.update_rate_per_s,
                    },
                    g.count,
                )
            })
            .collect()
    }

    pub fn total_bytes(&self) -> usize {
        self.objects.iter().map(|g| g.count * g.size_bytes).sum()
    }

    /// Share of bytes belonging to objects with a positive update rate.
    pub fn dynamic_fraction(&self) -> f64 {
        let total = self.total_bytes();
        if total == 0 {
            return 0.0;
        }
        let dynamic: usize = self
            .objects
            .iter()
            .filter(|g| g.update_rate_per_s > 0.0)
            .map(|g| g.count * g.size_bytes)
            .sum();
        dynamic as f64 / total as f64
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.objects.iter().all(|g| g.count == 0) {
            return Err(SimError::InvalidScenario("profile has no objects".into()));
        }
        for g in &self.objects {
            if g.size_bytes == 0 {
                return Err(SimError::InvalidScenario("object size must be > 0".into()));
            }
            if g.update_rate_per_s < 0.0 {
                return Err(SimError::InvalidScenario("update rate must be >= 0".into()));
            }
        }
        Ok(())
    }

    /// Profile shaped like a map-building vehicular app: 2.3 MB total with
    /// 4.1% of bytes dynamic at 50 updates/s.
    pub fn carmap_like() -> Self {
        Self {
            objects: vec![
                ObjectGroup {
                    count: 220,
                    size_bytes: 10_026,
                    update_rate_per_s: 0.0,
                },
                ObjectGroup {
                    count: 10,
                    size_bytes: 9_430,
                    update_rate_per_s: 50.0,
                },
            ],
        }
    }

    /// Profile shaped like an edge perception-sharing app: 0.46 MB, fully
    /// dynamic at 50 updates/s.
    pub fn emp_like() -> Self {
        Self {
            objects: vec![ObjectGroup {
                count: 46,
                size_bytes: 10_000,
                update_rate_per_s: 50.0,
            }],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn carmap_profile_shape() {
        let p = StateProfile::carmap_like();
        let total = p.total_bytes();
        assert!((2_250_000..=2_350_000).contains(&total), "total {total}");
        let dynamic = p.dynamic_fraction();
        assert!((dynamic - 0.041).abs() < 0.001, "dynamic {dynamic}");
    }

    #[test]
    fn emp_profile_is_fully_dynamic() {
        let p = StateProfile::emp_like();
        assert_eq!(p.total_bytes(), 460_000);
        assert_eq!(p.dynamic_fraction(), 1.0);
    }
}
