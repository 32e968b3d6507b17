use crate::error::{Error, Result};

/// Architecture of the coefficient regression network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    /// Frames per input window (`F`).
    pub frames: usize,
    /// Trajectory bases (`K`).
    pub num_bases: usize,
    /// Joints (`J`).
    pub joints: usize,
    pub feat_layers: usize,
    pub feat_width: usize,
    pub feat_dropout: f64,
    pub reg_layers: usize,
    pub reg_width: usize,
    pub reg_dropout: f64,
    pub pool_window: usize,
    pub dense_connections: bool,
    /// Multiplies the regressed coefficients, so the network can work at
    /// unit scale while targets are in mm.
    pub output_scale: f64,
    pub seed: u64,
}

impl NetworkConfig {
    pub fn new(frames: usize, num_bases: usize, joints: usize) -> Self {
        Self {
            frames,
            num_bases,
            joints,
            feat_layers: 4,
            feat_width: 256,
            feat_dropout: 0.25,
            reg_layers: 5,
            reg_width: 1024,
            reg_dropout: 0.5,
            pool_window: 5,
            dense_connections: true,
            output_scale: 1.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 || self.joints == 0 {
            return Err(Error::param("frames and joints must be positive"));
        }
        if self.num_bases == 0 || self.num_bases > self.frames {
            return Err(Error::param(format!(
                "K={} must satisfy 1 <= K <= F={}",
                self.num_bases, self.frames
            )));
        }
        if self.pool_window == 0 || self.pool_window % 2 == 0 {
            return Err(Error::param(format!(
                "pool_window must be odd, got {}",
                self.pool_window
            )));
        }
        if self.pool_window > self.frames {
            return Err(Error::param(format!(
                "pool_window {} exceeds F={}",
                self.pool_window, self.frames
            )));
        }
        for (name, rate) in [
            ("feat_dropout", self.feat_dropout),
            ("reg_dropout", self.reg_dropout),
        ] {
            if !(0.0..1.0).contains(&rate) {
                return Err(Error::param(format!(
                    "{name} must be in [0, 1), got {rate}"
                )));
            }
        }
        if !(self.output_scale > 0.0 && self.output_scale.is_finite()) {
            return Err(Error::param("output_scale must be positive and finite"));
        }
        if self.feat_width == 0 || self.reg_width == 0 {
            return Err(Error::param("layer widths must be positive"));
        }
        Ok(())
    }
}

/// Optimizer and schedule settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr0: f64,
    pub epochs: usize,
    /// Epochs at which the learning rate is multiplied by `shrink`.
    pub decay_epochs: Vec<usize>,
    pub shrink: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub batch_size: usize,
    pub flip_augment: bool,
    /// Probability of replacing a sample by its mirror image when
    /// `flip_augment` is set.
    pub flip_prob: f64,
    /// Fit the network's input standardization on the training inputs
    /// before the first epoch.
    pub standardize_inputs: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr0: 1e-4,
            epochs: 100,
            decay_epochs: vec![60, 85],
            shrink: 0.1,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            batch_size: 64,
            flip_augment: true,
            flip_prob: 0.5,
            standardize_inputs: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::param("epochs must be positive"));
        }
        if let Some(e) = self.decay_epochs.iter().find(|&&e| e >= self.epochs) {
            return Err(Error::param(format!(
                "decay epoch {e} outside [0, {})",
                self.epochs
            )));
        }
        if !(self.lr0 > 0.0) || !(self.shrink > 0.0) {
            return Err(Error::param("lr0 and shrink must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::param("Adam betas must be in [0, 1)"));
        }
        if !(self.eps > 0.0) {
            return Err(Error::param("Adam eps must be positive"));
        }
        if self.batch_size < 2 {
            return Err(Error::param(
                "batch_size must be at least 2 for batch normalization",
            ));
        }
        if !(0.0..=1.0).contains(&self.flip_prob) {
            return Err(Error::param("flip_prob must be in [0, 1]"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        NetworkConfig::new(50, 8, 17).validate().unwrap();
        TrainConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let base = NetworkConfig::new(10, 3, 2);
        for bad in [
            NetworkConfig {
                num_bases: 11,
                ..base.clone()
            },
            NetworkConfig {
                pool_window: 4,
                ..base.clone()
            },
            NetworkConfig {
                pool_window: 11,
                ..base.clone()
            },
            NetworkConfig {
                feat_dropout: 1.0,
                ..base.clone()
            },
            NetworkConfig {
                reg_dropout: -0.1,
                ..base.clone()
            },
            NetworkConfig {
                feat_width: 0,
                ..base.clone()
            },
            NetworkConfig {
                output_scale: 0.0,
                ..base.clone()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
        let t = TrainConfig::default();
        assert!(TrainConfig {
            decay_epochs: vec![100],
            ..t.clone()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            batch_size: 1,
            ..t.clone()
        }
        .validate()
        .is_err());
        assert!(TrainConfig { epochs: 0, ..t }.validate().is_err());
    }
}
