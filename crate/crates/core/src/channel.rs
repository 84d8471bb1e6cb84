//! Seeded multipath downlink channels and their on-disk format.
//!
//! User `i` sees `h_i = sqrt(L(d_i)) Σ_q c_{i,q} a(θ_{i,q})` with
//! `c_{i,q} ~ CN(0, 1)`, `θ_{i,q} ~ U[0, 2π)` and path loss
//! `L(d) = P_0 (d / d_0)^(-η)`.
//!
//! Every (user, path) pair draws from its own ChaCha20 stream
//! (`stream = user * n_paths + path`) of a generator seeded with
//! `rng_seed`, in the fixed order angle, Re(c), Im(c). Channels therefore do
//! not depend on how many users or paths are generated alongside them.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::array::{steering_vector, ArrayConfig};
use crate::linalg::cn01;
use crate::serde_complex::{cvec_to_pairs, pairs_to_cvec};
use crate::{CVec, JcasError, Result, C64};

pub const CHANNEL_FILE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathlossConvention {
    /// `P_0 (d/d_0)^(-η)`: loss grows with distance.
    #[default]
    Attenuation,
    /// `P_0 (d/d_0)^η` as literally printed, gain grows with distance.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub n_users: usize,
    pub n_paths: usize,
    pub pathloss_exponent: f64,
    pub ref_distance_m: f64,
    /// `P_0`, linear.
    pub ref_loss: f64,
    pub user_distances_m: Vec<f64>,
    pub rng_seed: u64,
    /// Downlink noise variance, linear (mW).
    pub sigma_c2: f64,
    #[serde(default)]
    pub pathloss_convention: PathlossConvention,
}

impl ChannelConfig {
    /// Defaults: six paths, `η = 3.2`, `d_0 = 1 m`, `P_0 = 1`, every user at
    /// `d_0` and unit noise.
    pub fn standard(n_users: usize, rng_seed: u64) -> Self {
        ChannelConfig {
            n_users,
            n_paths: 6,
            pathloss_exponent: 3.2,
            ref_distance_m: 1.0,
            ref_loss: 1.0,
            user_distances_m: vec![1.0; n_users],
            rng_seed,
            sigma_c2: 1.0,
            pathloss_convention: PathlossConvention::Attenuation,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 {
            return Err(JcasError::config("channel.n_users", "must be at least 1"));
        }
        if self.n_paths == 0 {
            return Err(JcasError::config("channel.n_paths", "must be at least 1"));
        }
        if self.user_distances_m.len() != self.n_users {
            return Err(JcasError::config(
                "channel.user_distances_m",
                format!(
                    "expected {} distances, got {}",
                    self.n_users,
                    self.user_distances_m.len()
                ),
            ));
        }
        if let Some(d) = self
            .user_distances_m
            .iter()
            .find(|d| !(d.is_finite() && **d > 0.0))
        {
            return Err(JcasError::config(
                "channel.user_distances_m",
                format!("distance {d} is not positive"),
            ));
        }
        if !(self.ref_distance_m.is_finite() && self.ref_distance_m > 0.0) {
            return Err(JcasError::config(
                "channel.ref_distance_m",
                "must be positive",
            ));
        }
        if !(self.ref_loss.is_finite() && self.ref_loss > 0.0) {
            return Err(JcasError::config("channel.ref_loss", "must be positive"));
        }
        if !self.pathloss_exponent.is_finite() {
            return Err(JcasError::config(
                "channel.pathloss_exponent",
                "must be finite",
            ));
        }
        if !(self.sigma_c2.is_finite() && self.sigma_c2 > 0.0) {
            return Err(JcasError::config("channel.sigma_c2", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: Option<u64>,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// Raw (not noise-normalized) downlink channels, one per user.
    pub h: Vec<CVec>,
    pub sigma_c2: f64,
    pub provenance: Provenance,
}

impl ChannelSet {
    /// Channels given directly, e.g. for tests or external tools.
    pub fn from_vectors(h: Vec<CVec>, sigma_c2: f64) -> Result<Self> {
        if h.is_empty() {
            return Err(JcasError::config(
                "channels",
                "at least one user is required",
            ));
        }
        let n = h[0].len();
        if n == 0 || h.iter().any(|v| v.len() != n) {
            return Err(JcasError::Dimension(
                "all channel vectors must share a nonzero length".to_string(),
            ));
        }
        if !(sigma_c2.is_finite() && sigma_c2 > 0.0) {
            return Err(JcasError::config("channel.sigma_c2", "must be positive"));
        }
        let mut set = ChannelSet {
            h,
            sigma_c2,
            provenance: Provenance {
                seed: None,
                config_hash: String::new(),
            },
        };
        set.provenance.config_hash = set.content_hash();
        Ok(set)
    }

    pub fn n_users(&self) -> usize {
        self.h.len()
    }

    pub fn n_tx(&self) -> usize {
        self.h[0].len()
    }

    /// Channels divided by `σ_c`, so rate formulas carry unit noise.
    pub fn normalized(&self) -> Vec<CVec> {
        let s = 1.0 / self.sigma_c2.sqrt();
        self.h.iter().map(|v| v.scale(s)).collect()
    }

    /// SHA-256 over the little-endian bits of every channel entry and the
    /// noise variance.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for v in &self.h {
            hasher.update((v.len() as u64).to_le_bytes());
            for z in v.iter() {
                hasher.update(z.re.to_bits().to_le_bytes());
                hasher.update(z.im.to_bits().to_le_bytes());
            }
        }
        hasher.update(self.sigma_c2.to_bits().to_le_bytes());
        hex::encode(hasher.finalize())
    }
}

pub fn path_loss(cfg: &ChannelConfig, d_m: f64) -> Result<f64> {
    if !(d_m.is_finite() && d_m > 0.0) {
        return Err(JcasError::config(
            "distance",
            format!("{d_m} is not positive"),
        ));
    }
    let ratio = d_m / cfg.ref_distance_m;
    let exponent = match cfg.pathloss_convention {
        PathlossConvention::Attenuation => -cfg.pathloss_exponent,
        PathlossConvention::Literal => cfg.pathloss_exponent,
    };
    Ok(cfg.ref_loss * ratio.powf(exponent))
}

/// `sqrt(loss) Σ_q gains[q] a(angles[q])`.
pub fn channel_from_paths(array: &ArrayConfig, loss: f64, gains: &[C64], angles: &[f64]) -> CVec {
    let mut h = CVec::zeros(array.n_tx);
    for (&c, &theta) in gains.iter().zip(angles) {
        h += steering_vector(array, array.n_tx, theta) * c;
    }
    h * C64::new(loss.sqrt(), 0.0)
}

fn path_stream(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draw `(angle, gain)` for one user path from its dedicated stream.
pub fn draw_path(seed: u64, n_paths: usize, user: usize, path: usize) -> (f64, C64) {
    let mut rng = path_stream(seed, (user * n_paths + path) as u64);
    let theta = rng.random::<f64>() * std::f64::consts::TAU;
    (theta, cn01(&mut rng))
}

pub fn config_hash(cfg: &ChannelConfig, array: &ArrayConfig) -> String {
    let body = serde_json::to_string(&(cfg, array)).expect("config serializes");
    hex::encode(Sha256::digest(body.as_bytes()))
}

pub fn generate_channels(cfg: &ChannelConfig, array: &ArrayConfig) -> Result<ChannelSet> {
    cfg.validate()?;
    array.validate()?;
    let mut h = Vec::with_capacity(cfg.n_users);
    for user in 0..cfg.n_users {
        let loss = path_loss(cfg, cfg.user_distances_m[user])?;
        let (angles, gains): (Vec<f64>, Vec<C64>) = (0..cfg.n_paths)
            .map(|q| draw_path(cfg.rng_seed, cfg.n_paths, user, q))
            .unzip();
        let v = channel_from_paths(array, loss, &gains, &angles);
        if v.iter().all(|z| z.norm() == 0.0)
            || v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(JcasError::Schema(format!(
                "degenerate channel draw for user {user}"
            )));
        }
        h.push(v);
    }
    Ok(ChannelSet {
        h,
        sigma_c2: cfg.sigma_c2,
        provenance: Provenance {
            seed: Some(cfg.rng_seed),
            config_hash: config_hash(cfg, array),
        },
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FileBody {
    version: u32,
    seed: Option<u64>,
    config: FileConfig,
    sigma_c2: f64,
    h: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FileConfig {
    config_hash: String,
    n_users: usize,
    n_tx: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct ChannelFile {
    #[serde(flatten)]
    body: FileBody,
    checksum: String,
}

fn body_checksum(body: &FileBody) -> String {
    let canon = serde_json::to_string(body).expect("body serializes");
    hex::encode(Sha256::digest(canon.as_bytes()))
}

/// Serialize to the versioned JSON channel format.
pub fn channels_to_json(cs: &ChannelSet) -> String {
    let body = FileBody {
        version: CHANNEL_FILE_VERSION,
        seed: cs.provenance.seed,
        config: FileConfig {
            config_hash: cs.provenance.config_hash.clone(),
            n_users: cs.n_users(),
            n_tx: cs.n_tx(),
        },
        sigma_c2: cs.sigma_c2,
        h: cs.h.iter().map(cvec_to_pairs).collect(),
    };
    let checksum = body_checksum(&body);
    let mut out =
        serde_json::to_string_pretty(&ChannelFile { body, checksum }).expect("file serializes");
    out.push('\n');
    out
}

/// Parse the JSON channel format, checking version, checksum and, when
/// given, the transmit array size.
pub fn channels_from_json(text: &str, expected_n_tx: Option<usize>) -> Result<ChannelSet> {
    let file: ChannelFile =
        serde_json::from_str(text).map_err(|e| JcasError::Schema(e.to_string()))?;
    let body = file.body;
    if body.version != CHANNEL_FILE_VERSION {
        return Err(JcasError::Schema(format!(
            "unsupported channel file version {} (expected {CHANNEL_FILE_VERSION})",
            body.version
        )));
    }
    let computed = body_checksum(&body);
    if computed != file.checksum {
        return Err(JcasError::Checksum {
            stored: file.checksum,
            computed,
        });
    }
    if body.h.len() != body.config.n_users || body.h.is_empty() {
        return Err(JcasError::Schema(
            "user count disagrees with channel list".to_string(),
        ));
    }
    if body.h.iter().any(|v| v.len() != body.config.n_tx) {
        return Err(JcasError::Schema(
            "channel length disagrees with n_tx".to_string(),
        ));
    }
    if let Some(n) = expected_n_tx {
        if n != body.config.n_tx {
            return Err(JcasError::Dimension(format!(
                "channel file has n_tx = {}, array has {n}",
                body.config.n_tx
            )));
        }
    }
    Ok(ChannelSet {
        h: body.h.iter().map(|p| pairs_to_cvec(p)).collect(),
        sigma_c2: body.sigma_c2,
        provenance: Provenance {
            seed: body.seed,
            config_hash: body.config.config_hash,
        },
    })
}

pub fn save_channels(cs: &ChannelSet, path: &Path) -> Result<()> {
    fs::write(path, channels_to_json(cs)).map_err(|source| JcasError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_channels(path: &Path, expected_n_tx: Option<usize>) -> Result<ChannelSet> {
    let text = fs::read_to_string(path).map_err(|source| JcasError::Io {
        path: path.display().to_string(),
        source,
    })?;
    channels_from_json(&text, expected_n_tx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn array(n: usize) -> ArrayConfig {
        ArrayConfig::new(n, n, 0.5).unwrap()
    }

    #[test]
    fn path_loss_values() {
        let cfg = ChannelConfig::standard(1, 0);
        assert_eq!(path_loss(&cfg, 1.0).unwrap(), 1.0);
        let at10 = path_loss(&cfg, 10.0).unwrap();
        assert!((at10 - 10f64.powf(-3.2)).abs() < 1e-18);
        assert!((at10 - 6.309_573e-4).abs() < 1e-9);
        let ratio = path_loss(&cfg, 20.0).unwrap() / at10;
        assert!((ratio - 2f64.powf(-3.2)).abs() < 1e-14);
        assert!(path_loss(&cfg, 0.0).is_err());
        assert!(path_loss(&cfg, -1.0).is_err());

        let literal = ChannelConfig {
            pathloss_convention: PathlossConvention::Literal,
            ..cfg
        };
        assert!((path_loss(&literal, 10.0).unwrap() - 10f64.powf(3.2)).abs() < 1e-9);
    }

    #[test]
    fn single_broadside_path() {
        let h = channel_from_paths(&array(4), 0.25, &[C64::new(1.0, 0.0)], &[0.0]);
        assert!(h.iter().all(|z| (z - C64::new(0.5, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn deterministic_and_stream_isolated() {
        let cfg = ChannelConfig::standard(3, 42);
        let a = generate_channels(&cfg, &array(6)).unwrap();
        let b = generate_channels(&cfg, &array(6)).unwrap();
        assert_eq!(a, b);
        // user 0 is unaffected by how many users are drawn
        let single = generate_channels(&ChannelConfig::standard(1, 42), &array(6)).unwrap();
        assert_eq!(single.h[0], a.h[0]);
        let other = generate_channels(&ChannelConfig::standard(3, 43), &array(6)).unwrap();
        assert_ne!(other.h[0], a.h[0]);
    }

    #[test]
    fn ref_loss_scales_norms_exactly() {
        let cfg = ChannelConfig::standard(2, 5);
        let scaled = ChannelConfig {
            ref_loss: 4.0,
            ..cfg.clone()
        };
        let a = generate_channels(&cfg, &array(5)).unwrap();
        let b = generate_channels(&scaled, &array(5)).unwrap();
        for (x, y) in a.h.iter().zip(&b.h) {
            assert!((y.norm_squared() - 4.0 * x.norm_squared()).abs() < 1e-12 * y.norm_squared());
        }
    }

    #[test]
    fn gain_marginals() {
        let n = 100_000;
        let (mut sr, mut si) = (0.0, 0.0);
        for k in 0..n {
            let (_, c) = draw_path(7, 1, k, 0);
            sr += c.re * c.re;
            si += c.im * c.im;
        }
        let (vr, vi) = (sr / n as f64, si / n as f64);
        assert!((0.45..=0.55).contains(&vr), "{vr}");
        assert!((0.45..=0.55).contains(&vi), "{vi}");
    }

    #[test]
    fn validation() {
        let mut cfg = ChannelConfig::standard(2, 0);
        cfg.user_distances_m = vec![1.0];
        assert!(cfg.validate().is_err());
        cfg.user_distances_m = vec![1.0, 0.0];
        assert!(cfg.validate().is_err());
        let mut cfg = ChannelConfig::standard(2, 0);
        cfg.n_paths = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn json_round_trip_and_errors() {
        let cs = generate_channels(&ChannelConfig::standard(2, 9), &array(3)).unwrap();
        let text = channels_to_json(&cs);
        let back = channels_from_json(&text, Some(3)).unwrap();
        assert_eq!(back, cs);

        let truncated = &text[..text.len() / 2];
        assert!(matches!(
            channels_from_json(truncated, None),
            Err(JcasError::Schema(_))
        ));
        assert!(matches!(
            channels_from_json(&text, Some(4)),
            Err(JcasError::Dimension(_))
        ));
        let tampered = text.replacen("\"sigma_c2\": 1.0", "\"sigma_c2\": 2.0", 1);
        assert_ne!(tampered, text);
        assert!(matches!(
            channels_from_json(&tampered, None),
            Err(JcasError::Checksum { .. })
        ));
        let bumped = text.replacen("\"version\": 1", "\"version\": 99", 1);
        assert!(matches!(
            channels_from_json(&bumped, None),
            Err(JcasError::Schema(_))
        ));
    }
}
