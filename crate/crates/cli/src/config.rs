//! Line-oriented `key=value` settings for training. Blank lines and `#`
//! comments are ignored; unknown keys are errors.

use std::str::FromStr;

use trajlift::network::{NetworkConfig, TrainConfig};

pub const SEED_ENV: &str = "TRAJLIFT_SEED";

/// Applies every setting in `text` on top of the defaults in `net`/`train`.
/// `seed` sets both the initialization and the training seed.
pub fn apply(text: &str, net: &mut NetworkConfig, train: &mut TrainConfig) -> Result<(), String> {
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key=value, got '{line}'", i + 1))?;
        set(key.trim(), value.trim(), net, train).map_err(|e| format!("line {}: {e}", i + 1))?;
    }
    Ok(())
}

/// Reads `TRAJLIFT_SEED` if set.
pub fn seed_override() -> Result<Option<u64>, String> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| format!("{SEED_ENV}='{v}' is not an unsigned integer")),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(format!("{SEED_ENV}: {e}")),
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("bad value '{value}' for '{key}'"))
}

fn set(key: &str, v: &str, net: &mut NetworkConfig, train: &mut TrainConfig) -> Result<(), String> {
    match key {
        "feat_layers" => net.feat_layers = num(key, v)?,
        "feat_width" => net.feat_width = num(key, v)?,
        "feat_dropout" => net.feat_dropout = num(key, v)?,
        "reg_layers" => net.reg_layers = num(key, v)?,
        "reg_width" => net.reg_width = num(key, v)?,
        "reg_dropout" => net.reg_dropout = num(key, v)?,
        "pool_window" => net.pool_window = num(key, v)?,
        "dense_connections" => net.dense_connections = num(key, v)?,
        "output_scale" => net.output_scale = num(key, v)?,
        "lr0" => train.lr0 = num(key, v)?,
        "epochs" => train.epochs = num(key, v)?,
        "decay_epochs" => {
            train.decay_epochs = v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| num(key, s))
                .collect::<Result<_, _>>()?
        }
        "shrink" => train.shrink = num(key, v)?,
        "beta1" => train.beta1 = num(key, v)?,
        "beta2" => train.beta2 = num(key, v)?,
        "eps" => train.eps = num(key, v)?,
        "batch_size" => train.batch_size = num(key, v)?,
        "flip_augment" => train.flip_augment = num(key, v)?,
        "flip_prob" => train.flip_prob = num(key, v)?,
        "standardize_inputs" => train.standardize_inputs = num(key, v)?,
        "seed" => {
            let s = num(key, v)?;
            net.seed = s;
            train.seed = s;
        }
        _ => return Err(format!("unknown setting '{key}'")),
    }
    Ok(())
}
