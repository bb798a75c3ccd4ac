//! Network instances: radio formulas, file catalog, scenario generation and
//! candidate transmissions.

use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

pub type ChannelId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

fn positive<S: Scalar>(name: &str, v: S) -> Result<(), ModelError> {
    if v > S::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(ModelError::Domain(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Distance at which the received power drops to `threshold`:
/// `(g·P/threshold)^(1/γ)`.
pub fn transmission_range<S: Scalar>(power: S, threshold: S, gain: S, path_loss: S) -> Result<S, ModelError> {
    positive("power", power)?;
    positive("threshold", threshold)?;
    positive("gain", gain)?;
    positive("path loss", path_loss)?;
    Ok((gain * power / threshold).powf(path_loss.recip()))
}

/// Same law as [`transmission_range`] evaluated at the interference threshold.
pub fn interference_range<S: Scalar>(power: S, threshold: S, gain: S, path_loss: S) -> Result<S, ModelError> {
    transmission_range(power, threshold, gain, path_loss)
}

/// Inverse of [`transmission_range`]: the power that reaches `threshold` at `range`.
pub fn power_for_range<S: Scalar>(range: S, threshold: S, gain: S, path_loss: S) -> Result<S, ModelError> {
    positive("range", range)?;
    positive("threshold", threshold)?;
    positive("gain", gain)?;
    positive("path loss", path_loss)?;
    Ok(threshold * range.powf(path_loss) / gain)
}

/// Shannon capacity `W·log2(1 + g·d^-γ·P/η)` in bits per second.
pub fn link_capacity<S: Scalar>(
    bandwidth: S,
    distance: S,
    power: S,
    gain: S,
    path_loss: S,
    noise: S,
) -> Result<S, ModelError> {
    positive("bandwidth", bandwidth)?;
    positive("distance", distance)?;
    positive("noise", noise)?;
    positive("path loss", path_loss)?;
    if power < S::zero() || !power.is_finite() {
        return Err(ModelError::Domain(format!("power must be nonnegative, got {power}")));
    }
    let snr = gain * distance.powf(-path_loss) * power / noise;
    Ok(bandwidth * snr.ln_1p() / S::of(std::f64::consts::LN_2))
}

/// Zipf probability of the file with 1-based `rank` among `n_files`.
pub fn zipf_popularity<S: Scalar>(rank: usize, zeta: S, n_files: usize) -> Result<S, ModelError> {
    if rank == 0 || rank > n_files {
        return Err(ModelError::Domain(format!("rank {rank} outside 1..={n_files}")));
    }
    if zeta < S::zero() || !zeta.is_finite() {
        return Err(ModelError::Domain(format!("zipf exponent must be >= 0, got {zeta}")));
    }
    let norm: S = (1..=n_files).map(|j| S::of(j as f64).powf(-zeta)).sum();
    Ok(S::of(rank as f64).powf(-zeta) / norm)
}

/// Whole Zipf vector, ranks 1..=n_files.
pub fn zipf_distribution<S: Scalar>(zeta: S, n_files: usize) -> Result<Vec<S>, ModelError> {
    (1..=n_files).map(|m| zipf_popularity(m, zeta, n_files)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioConstants<S> {
    pub gain: S,
    pub path_loss: S,
    /// Receiver noise power in watts.
    pub noise: S,
    /// `P_T^c` per channel id.
    pub rx_threshold: Vec<S>,
    /// `P_I^c` per channel id; never above the matching `rx_threshold`.
    pub interference_threshold: Vec<S>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel<S> {
    pub id: ChannelId,
    pub bandwidth_hz: S,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Mbs,
    Sbs,
    User,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point<S> {
    pub x: S,
    pub y: S,
}

impl<S: Scalar> Point<S> {
    pub fn new(x: S, y: S) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point<S>) -> S {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(&self) -> S {
        self.x.hypot(self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node<S> {
    pub kind: NodeKind,
    pub position: Point<S>,
    pub antennas: u32,
    /// Sorted usable channel ids. Users list only secondary channels; the
    /// primary channel 0 is always receivable from the MBS.
    pub channels: Vec<ChannelId>,
    /// Cache size in bits for SBSs; `None` for the MBS (holds everything)
    /// and for users.
    pub cache_bits: Option<S>,
    /// Transmit power in watts, parallel to `channels`. Empty for users.
    pub tx_power: Vec<S>,
}

impl<S: Scalar> Node<S> {
    pub fn uses_channel(&self, c: ChannelId) -> bool {
        self.channels.binary_search(&c).is_ok()
    }

    pub fn power_on(&self, c: ChannelId) -> Option<S> {
        self.channels
            .binary_search(&c)
            .ok()
            .and_then(|i| self.tx_power.get(i).copied())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileCatalog<S> {
    pub sizes_bits: Vec<S>,
    pub popularity: Vec<S>,
}

impl<S: Scalar> FileCatalog<S> {
    pub fn len(&self) -> usize {
        self.sizes_bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes_bits.is_empty()
    }
}

/// `α_kj`: requests per slot, indexed `[user][file]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestMatrix<S> {
    pub rates: Vec<Vec<S>>,
}

impl<S: Scalar> RequestMatrix<S> {
    pub fn zeros(users: usize, files: usize) -> Self {
        Self {
            rates: vec![vec![S::zero(); files]; users],
        }
    }

    pub fn rate(&self, user: usize, file: usize) -> S {
        self.rates[user][file]
    }

    /// `(user, file)` pairs with positive demand, in index order.
    pub fn demanded(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (k, row) in self.rates.iter().enumerate() {
            for (j, &a) in row.iter().enumerate() {
                if a > S::zero() {
                    out.push((k, j));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario<S> {
    /// MBS first (when present), then SBSs.
    pub transmitters: Vec<Node<S>>,
    pub users: Vec<Node<S>>,
    /// Indexed by channel id; channel 0 is the primary channel.
    pub channels: Vec<Channel<S>>,
    pub catalog: FileCatalog<S>,
    pub requests: RequestMatrix<S>,
    pub radio: RadioConstants<S>,
    pub cell_radius: S,
    pub slot_seconds: S,
    pub seed: u64,
}

/// Candidate single-hop transmission `((tx, rx), channel)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommTuple<S> {
    pub tx: usize,
    pub rx: usize,
    pub channel: ChannelId,
    pub distance: S,
    /// Link capacity in bits per slot.
    pub capacity: S,
}

impl<S: Scalar> Scenario<S> {
    pub fn mbs(&self) -> Option<usize> {
        self.transmitters.iter().position(|n| n.kind == NodeKind::Mbs)
    }

    pub fn is_mbs(&self, tx: usize) -> bool {
        self.transmitters[tx].kind == NodeKind::Mbs
    }

    pub fn sbs_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.transmitters.len()).filter(|&n| self.transmitters[n].kind == NodeKind::Sbs)
    }

    pub fn n_files(&self) -> usize {
        self.catalog.len()
    }

    pub fn user_can_receive(&self, user: usize, c: ChannelId) -> bool {
        c == 0 || self.users[user].uses_channel(c)
    }

    pub fn distance(&self, tx: usize, user: usize) -> S {
        self.transmitters[tx].position.distance(&self.users[user].position)
    }

    pub fn transmission_range(&self, tx: usize, c: ChannelId) -> Option<S> {
        let p = self.transmitters[tx].power_on(c)?;
        if p <= S::zero() {
            return Some(S::zero());
        }
        transmission_range(p, self.radio.rx_threshold[c], self.radio.gain, self.radio.path_loss).ok()
    }

    pub fn interference_range(&self, tx: usize, c: ChannelId) -> Option<S> {
        let p = self.transmitters[tx].power_on(c)?;
        if p <= S::zero() {
            return Some(S::zero());
        }
        interference_range(p, self.radio.interference_threshold[c], self.radio.gain, self.radio.path_loss).ok()
    }

    /// Σ_k Σ_j α_kj·S_j in bits per slot.
    pub fn total_demand_bits(&self) -> S {
        let mut total = S::zero();
        for row in &self.requests.rates {
            for (j, &a) in row.iter().enumerate() {
                total += a * self.catalog.sizes_bits[j];
            }
        }
        total
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let invalid = |m: String| Err(ModelError::Invalid(m));
        if self.channels.is_empty() || self.channels[0].id != 0 {
            return invalid("channel list must start with primary channel 0".into());
        }
        for (i, ch) in self.channels.iter().enumerate() {
            if ch.id != i {
                return invalid(format!("channel at position {i} has id {}", ch.id));
            }
            if !(ch.bandwidth_hz > S::zero()) {
                return invalid(format!("channel {i} bandwidth must be positive"));
            }
        }
        let nc = self.channels.len();
        let r = &self.radio;
        if r.rx_threshold.len() != nc || r.interference_threshold.len() != nc {
            return invalid("radio thresholds must have one entry per channel".into());
        }
        if !(r.path_loss > S::zero()) || !(r.noise > S::zero()) || !(r.gain > S::zero()) {
            return invalid("gain, path loss and noise must be positive".into());
        }
        for c in 0..nc {
            if !(r.rx_threshold[c] > S::zero()) || !(r.interference_threshold[c] > S::zero()) {
                return invalid(format!("thresholds on channel {c} must be positive"));
            }
            if r.interference_threshold[c] > r.rx_threshold[c] {
                return invalid(format!("interference threshold above reception threshold on channel {c}"));
            }
        }
        if self.transmitters.iter().filter(|n| n.kind == NodeKind::Mbs).count() > 1 {
            return invalid("at most one MBS".into());
        }
        if let Some(m) = self.mbs() {
            if m != 0 {
                return invalid("the MBS must be transmitter 0".into());
            }
            if self.transmitters[m].channels != (0..nc).collect::<Vec<_>>() {
                return invalid("the MBS must use every channel".into());
            }
        }
        for (n, node) in self.transmitters.iter().enumerate() {
            if node.kind == NodeKind::User {
                return invalid(format!("transmitter {n} is a user"));
            }
            if node.antennas == 0 {
                return invalid(format!("transmitter {n} has no antennas"));
            }
            if node.tx_power.len() != node.channels.len() {
                return invalid(format!("transmitter {n} power list does not match its channels"));
            }
            if !node.channels.windows(2).all(|w| w[0] < w[1]) || node.channels.iter().any(|&c| c >= nc) {
                return invalid(format!("transmitter {n} channel list must be sorted, unique and known"));
            }
            if node.kind == NodeKind::Sbs {
                if node.channels.contains(&0) {
                    return invalid(format!("SBS {n} may not use the primary channel"));
                }
                match node.cache_bits {
                    Some(c) if c >= S::zero() => {}
                    _ => return invalid(format!("SBS {n} needs a nonnegative cache size")),
                }
            }
        }
        for (k, node) in self.users.iter().enumerate() {
            if node.kind != NodeKind::User || node.antennas == 0 {
                return invalid(format!("user {k} malformed"));
            }
            if node.channels.contains(&0) || node.channels.iter().any(|&c| c >= nc) {
                return invalid(format!("user {k} channel set must be secondary channels only"));
            }
            if node.position.norm() > self.cell_radius * (S::one() + S::of(1e-9)) {
                return invalid(format!("user {k} lies outside the cell"));
            }
            for (n, tx) in self.transmitters.iter().enumerate() {
                if tx.position.distance(&node.position) <= S::zero() {
                    return invalid(format!("user {k} colocated with transmitter {n}"));
                }
            }
        }
        let files = self.catalog.len();
        if self.catalog.popularity.len() != files {
            return invalid("popularity vector length differs from catalog".into());
        }
        if self.catalog.sizes_bits.iter().any(|&s| !(s > S::zero())) {
            return invalid("file sizes must be positive".into());
        }
        if files > 0 {
            let sum: S = self.catalog.popularity.iter().copied().sum();
            if (sum - S::one()).abs() > S::of(1e-6) {
                return invalid(format!("popularities sum to {sum}"));
            }
        }
        if self.requests.rates.len() != self.users.len()
            || self.requests.rates.iter().any(|r| r.len() != files)
        {
            return invalid("request matrix shape must be users x files".into());
        }
        if self.requests.rates.iter().flatten().any(|&a| a < S::zero() || !a.is_finite()) {
            return invalid("request rates must be nonnegative".into());
        }
        Ok(())
    }
}

/// All in-range transmissions ordered by (transmitter, user, channel).
pub fn enumerate_tuples<S: Scalar>(scenario: &Scenario<S>) -> Vec<CommTuple<S>> {
    let r = &scenario.radio;
    let mut out = Vec::new();
    for (n, tx) in scenario.transmitters.iter().enumerate() {
        for k in 0..scenario.users.len() {
            let d = scenario.distance(n, k);
            for (ci, &c) in tx.channels.iter().enumerate() {
                if !scenario.user_can_receive(k, c) {
                    continue;
                }
                let Some(tr) = scenario.transmission_range(n, c) else { continue };
                if d > tr {
                    continue;
                }
                let power = tx.tx_power[ci];
                let Ok(rate) = link_capacity(
                    scenario.channels[c].bandwidth_hz,
                    d,
                    power,
                    r.gain,
                    r.path_loss,
                    r.noise,
                ) else {
                    continue;
                };
                out.push(CommTuple {
                    tx: n,
                    rx: k,
                    channel: c,
                    distance: d,
                    capacity: rate * scenario.slot_seconds,
                });
            }
        }
    }
    out
}

/// Cache size: one value for every SBS or an explicit per-SBS list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CacheSpec {
    Uniform(f64),
    PerSbs(Vec<f64>),
}

/// Generation parameters. Sizes are in bytes, distances in metres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub radius_m: f64,
    pub n_sbs: usize,
    pub n_users: usize,
    pub n_files: usize,
    pub cache_bytes: CacheSpec,
    /// Relative spread of per-SBS cache sizes around the mean (0 = homogeneous).
    pub cache_spread: f64,
    pub zipf_zeta: f64,
    pub n_secondary_channels: usize,
    pub secondary_bw_hz: f64,
    pub primary_bw_hz: f64,
    pub channels_per_sbs: usize,
    pub channels_per_user: usize,
    pub avg_file_bytes: f64,
    pub tx_range_m: f64,
    pub ir_factor: f64,
    pub antennas_mbs: u32,
    pub antennas_sbs: u32,
    pub antennas_user: u32,
    pub requests_per_user: usize,
    pub request_rate: f64,
    pub gain: f64,
    pub path_loss: f64,
    pub noise_w: f64,
    pub rx_threshold_w: f64,
    pub slot_seconds: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::table1()
    }
}

impl ScenarioConfig {
    /// Full-size evaluation setting.
    pub fn table1() -> Self {
        Self {
            radius_m: 400.0,
            n_sbs: 14,
            n_users: 200,
            n_files: 200,
            cache_bytes: CacheSpec::Uniform(4e9),
            cache_spread: 0.0,
            zipf_zeta: 0.8,
            n_secondary_channels: 10,
            secondary_bw_hz: 400e3,
            primary_bw_hz: 1e6,
            channels_per_sbs: 5,
            channels_per_user: 5,
            avg_file_bytes: 400e6,
            tx_range_m: 100.0,
            ir_factor: 2.0,
            antennas_mbs: 1,
            antennas_sbs: 1,
            antennas_user: 1,
            requests_per_user: 1,
            request_rate: 1.0,
            gain: 1.0,
            path_loss: 3.0,
            noise_w: 1e-13,
            rx_threshold_w: 1e-12,
            slot_seconds: 1.0,
        }
    }

    /// Scaled-down profile used for trend sweeps.
    pub fn desk() -> Self {
        Self {
            n_sbs: 6,
            n_users: 30,
            n_files: 30,
            cache_bytes: CacheSpec::Uniform(1e9),
            n_secondary_channels: 4,
            channels_per_sbs: 2,
            channels_per_user: 2,
            ..Self::table1()
        }
    }

    /// Small enough for exhaustive independent-set enumeration.
    pub fn tiny() -> Self {
        Self {
            radius_m: 120.0,
            n_sbs: 2,
            n_users: 3,
            n_files: 3,
            cache_bytes: CacheSpec::Uniform(400e6),
            n_secondary_channels: 2,
            channels_per_sbs: 1,
            channels_per_user: 1,
            tx_range_m: 80.0,
            ..Self::table1()
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let err = |m: &str| Err(ModelError::Config(m.to_string()));
        if self.n_users == 0 {
            return err("n_users must be at least 1");
        }
        if self.n_secondary_channels == 0 {
            return err("n_secondary_channels must be at least 1");
        }
        if self.n_files == 0 {
            return err("n_files must be at least 1");
        }
        if self.channels_per_sbs == 0 || self.channels_per_sbs > self.n_secondary_channels {
            return err("channels_per_sbs must lie in 1..=n_secondary_channels");
        }
        if self.channels_per_user == 0 || self.channels_per_user > self.n_secondary_channels {
            return err("channels_per_user must lie in 1..=n_secondary_channels");
        }
        for (name, v) in [
            ("radius_m", self.radius_m),
            ("secondary_bw_hz", self.secondary_bw_hz),
            ("primary_bw_hz", self.primary_bw_hz),
            ("avg_file_bytes", self.avg_file_bytes),
            ("tx_range_m", self.tx_range_m),
            ("gain", self.gain),
            ("path_loss", self.path_loss),
            ("noise_w", self.noise_w),
            ("rx_threshold_w", self.rx_threshold_w),
            ("slot_seconds", self.slot_seconds),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ModelError::Config(format!("{name} must be positive")));
            }
        }
        if !(self.ir_factor >= 1.0) {
            return err("ir_factor must be >= 1");
        }
        if !(self.zipf_zeta >= 0.0) {
            return err("zipf_zeta must be >= 0");
        }
        if !(0.0..1.0).contains(&self.cache_spread) {
            return err("cache_spread must lie in [0, 1)");
        }
        if !(self.request_rate >= 0.0) {
            return err("request_rate must be >= 0");
        }
        if self.antennas_mbs == 0 || self.antennas_sbs == 0 || self.antennas_user == 0 {
            return err("antenna counts must be at least 1");
        }
        match &self.cache_bytes {
            CacheSpec::Uniform(v) if *v >= 0.0 => {}
            CacheSpec::PerSbs(list) if list.len() == self.n_sbs && list.iter().all(|v| *v >= 0.0) => {}
            CacheSpec::Uniform(_) => return err("cache_bytes must be nonnegative"),
            CacheSpec::PerSbs(_) => return err("cache_bytes list needs one nonnegative entry per SBS"),
        }
        Ok(())
    }

    fn cache_sizes_bytes(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match &self.cache_bytes {
            CacheSpec::PerSbs(list) => list.clone(),
            CacheSpec::Uniform(mean) => {
                if self.cache_spread == 0.0 || self.n_sbs == 0 {
                    return vec![*mean; self.n_sbs];
                }
                let s = self.cache_spread;
                let raw: Vec<f64> = (0..self.n_sbs).map(|_| rng.gen_range(1.0 - s..=1.0 + s)).collect();
                let avg = raw.iter().sum::<f64>() / raw.len() as f64;
                raw.iter().map(|f| mean * f / avg).collect()
            }
        }
    }
}

// independent RNG streams so that growing one population leaves the others intact
const STREAM_SBS_POS: u64 = 1;
const STREAM_SBS_CH: u64 = 2;
const STREAM_USER_POS: u64 = 3;
const STREAM_USER_CH: u64 = 4;
const STREAM_DEMAND: u64 = 5;
const STREAM_CACHE: u64 = 6;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn point_in_disc(rng: &mut ChaCha8Rng, radius: f64) -> (f64, f64) {
    let r = radius * rng.gen::<f64>().sqrt();
    let theta = std::f64::consts::TAU * rng.gen::<f64>();
    (r * theta.cos(), r * theta.sin())
}

fn channel_subset(rng: &mut ChaCha8Rng, n_secondary: usize, size: usize) -> Vec<ChannelId> {
    let mut chosen: Vec<ChannelId> = sample(rng, n_secondary, size).into_iter().map(|c| c + 1).collect();
    chosen.sort_unstable();
    chosen
}

/// Draws a seeded instance: MBS at the centre, SBSs and users uniform in the
/// disc, channel subsets uniform, one Zipf draw per requested file.
pub fn generate_scenario<S: Scalar>(config: &ScenarioConfig, seed: u64) -> Result<Scenario<S>, ModelError> {
    config.validate()?;
    let nc = config.n_secondary_channels + 1;
    let s = S::of;
    let rx_threshold = vec![s(config.rx_threshold_w); nc];
    let p_i = config.rx_threshold_w / config.ir_factor.powf(config.path_loss);
    let interference_threshold = vec![s(p_i); nc];
    let radio = RadioConstants {
        gain: s(config.gain),
        path_loss: s(config.path_loss),
        noise: s(config.noise_w),
        rx_threshold,
        interference_threshold,
    };
    let mut channels = vec![Channel {
        id: 0,
        bandwidth_hz: s(config.primary_bw_hz),
    }];
    for c in 1..nc {
        channels.push(Channel {
            id: c,
            bandwidth_hz: s(config.secondary_bw_hz),
        });
    }

    let power = |range: f64| -> Result<S, ModelError> {
        power_for_range(s(range), s(config.rx_threshold_w), s(config.gain), s(config.path_loss))
    };

    let mut placed: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    let mut draw = |rng: &mut ChaCha8Rng| -> (f64, f64) {
        loop {
            let p = point_in_disc(rng, config.radius_m);
            if placed.iter().all(|q| *q != p) {
                placed.push(p);
                return p;
            }
        }
    };

    let mbs_channels: Vec<ChannelId> = (0..nc).collect();
    let mbs_power = power(2.0 * config.radius_m)?;
    let mut transmitters = vec![Node {
        kind: NodeKind::Mbs,
        position: Point::new(S::zero(), S::zero()),
        antennas: config.antennas_mbs,
        tx_power: vec![mbs_power; nc],
        channels: mbs_channels,
        cache_bits: None,
    }];

    let mut pos_rng = stream(seed, STREAM_SBS_POS);
    let mut ch_rng = stream(seed, STREAM_SBS_CH);
    let mut cache_rng = stream(seed, STREAM_CACHE);
    let caches = config.cache_sizes_bytes(&mut cache_rng);
    let sbs_power = power(config.tx_range_m)?;
    for cache in caches.iter().take(config.n_sbs) {
        let (x, y) = draw(&mut pos_rng);
        let chans = channel_subset(&mut ch_rng, config.n_secondary_channels, config.channels_per_sbs);
        transmitters.push(Node {
            kind: NodeKind::Sbs,
            position: Point::new(s(x), s(y)),
            antennas: config.antennas_sbs,
            tx_power: vec![sbs_power; chans.len()],
            channels: chans,
            cache_bits: Some(s(cache * 8.0)),
        });
    }

    let mut pos_rng = stream(seed, STREAM_USER_POS);
    let mut ch_rng = stream(seed, STREAM_USER_CH);
    let mut users = Vec::with_capacity(config.n_users);
    for _ in 0..config.n_users {
        let (x, y) = draw(&mut pos_rng);
        users.push(Node {
            kind: NodeKind::User,
            position: Point::new(s(x), s(y)),
            antennas: config.antennas_user,
            channels: channel_subset(&mut ch_rng, config.n_secondary_channels, config.channels_per_user),
            cache_bits: None,
            tx_power: Vec::new(),
        });
    }

    let popularity = zipf_distribution::<f64>(config.zipf_zeta, config.n_files)?;
    let mut cdf = Vec::with_capacity(popularity.len());
    let mut acc = 0.0;
    for p in &popularity {
        acc += p;
        cdf.push(acc);
    }
    let mut demand_rng = stream(seed, STREAM_DEMAND);
    let mut requests = RequestMatrix::<S>::zeros(config.n_users, config.n_files);
    let per_user = config.requests_per_user.min(config.n_files);
    for row in requests.rates.iter_mut() {
        let mut picked = 0;
        while picked < per_user {
            let u: f64 = demand_rng.gen();
            let j = cdf.partition_point(|&c| c < u * acc).min(config.n_files - 1);
            if row[j].is_zero() {
                row[j] = s(config.request_rate);
                picked += 1;
            }
        }
    }

    let scenario = Scenario {
        transmitters,
        users,
        channels,
        catalog: FileCatalog {
            sizes_bits: vec![s(config.avg_file_bytes * 8.0); config.n_files],
            popularity: popularity.into_iter().map(s).collect(),
        },
        requests,
        radio,
        cell_radius: s(config.radius_m),
        slot_seconds: s(config.slot_seconds),
        seed,
    };
    scenario.validate()?;
    Ok(scenario)
}
