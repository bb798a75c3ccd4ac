//! Hand-built scenarios with known answers, shared by tests, the CLI's
//! self-check and the docs.

use crate::model::{
    power_for_range, Channel, ChannelId, FileCatalog, ModelError, Node, NodeKind, Point,
    RadioConstants, RequestMatrix, Scenario,
};
use crate::scalar::Scalar;

/// Incremental scenario construction where transmitters are described by
/// their transmission range instead of their power.
#[derive(Debug, Clone)]
pub struct ScenarioBuilder<S> {
    secondary_bw: Vec<S>,
    primary_bw: S,
    gain: S,
    path_loss: S,
    noise: S,
    rx_threshold: S,
    ir_factor: S,
    radius: S,
    /// kind, position, channels, cache bits, range, antennas
    #[allow(clippy::type_complexity)]
    transmitters: Vec<(NodeKind, Point<S>, Vec<ChannelId>, Option<S>, S, u32)>,
    users: Vec<(Point<S>, Vec<ChannelId>, u32)>,
    files: Vec<S>,
    requests: Vec<(usize, usize, S)>,
}

impl<S: Scalar> ScenarioBuilder<S> {
    /// `secondary_channels` secondary channels of `bandwidth_hz` each, plus
    /// a primary channel of the same width.
    pub fn new(secondary_channels: usize, bandwidth_hz: f64) -> Self {
        Self {
            secondary_bw: vec![S::of(bandwidth_hz); secondary_channels],
            primary_bw: S::of(bandwidth_hz),
            gain: S::one(),
            path_loss: S::of(3.0),
            noise: S::of(1e-13),
            rx_threshold: S::of(1e-12),
            ir_factor: S::of(2.0),
            radius: S::of(1e4),
            transmitters: Vec::new(),
            users: Vec::new(),
            files: Vec::new(),
            requests: Vec::new(),
        }
    }

    pub fn ir_factor(mut self, factor: f64) -> Self {
        self.ir_factor = S::of(factor);
        self
    }

    pub fn radius(mut self, radius: f64) -> Self {
        self.radius = S::of(radius);
        self
    }

    /// MBS at the origin using every channel; must be added first.
    pub fn mbs(mut self, range: f64, antennas: u32) -> Self {
        let chans = (0..=self.secondary_bw.len()).collect();
        self.transmitters.push((
            NodeKind::Mbs,
            Point::new(S::zero(), S::zero()),
            chans,
            None,
            S::of(range),
            antennas,
        ));
        self
    }

    pub fn sbs(mut self, x: f64, y: f64, channels: &[ChannelId], cache_bits: f64, range: f64, antennas: u32) -> Self {
        self.transmitters.push((
            NodeKind::Sbs,
            Point::new(S::of(x), S::of(y)),
            channels.to_vec(),
            Some(S::of(cache_bits)),
            S::of(range),
            antennas,
        ));
        self
    }

    pub fn user(mut self, x: f64, y: f64, channels: &[ChannelId], antennas: u32) -> Self {
        self.users.push((Point::new(S::of(x), S::of(y)), channels.to_vec(), antennas));
        self
    }

    pub fn file(mut self, size_bits: f64) -> Self {
        self.files.push(S::of(size_bits));
        self
    }

    pub fn request(mut self, user: usize, file: usize, rate: f64) -> Self {
        self.requests.push((user, file, S::of(rate)));
        self
    }

    pub fn build(self) -> Result<Scenario<S>, ModelError> {
        let nc = self.secondary_bw.len() + 1;
        let mut channels = vec![Channel {
            id: 0,
            bandwidth_hz: self.primary_bw,
        }];
        for (i, &bw) in self.secondary_bw.iter().enumerate() {
            channels.push(Channel { id: i + 1, bandwidth_hz: bw });
        }
        let p_i = self.rx_threshold / self.ir_factor.powf(self.path_loss);
        let radio = RadioConstants {
            gain: self.gain,
            path_loss: self.path_loss,
            noise: self.noise,
            rx_threshold: vec![self.rx_threshold; nc],
            interference_threshold: vec![p_i; nc],
        };
        let mut transmitters = Vec::new();
        for (kind, position, mut chans, cache, range, antennas) in self.transmitters {
            chans.sort_unstable();
            chans.dedup();
            let p = power_for_range(range, self.rx_threshold, self.gain, self.path_loss)?;
            transmitters.push(Node {
                kind,
                position,
                antennas,
                tx_power: vec![p; chans.len()],
                channels: chans,
                cache_bits: cache,
            });
        }
        let users = self
            .users
            .into_iter()
            .map(|(position, mut chans, antennas)| {
                chans.sort_unstable();
                chans.dedup();
                Node {
                    kind: NodeKind::User,
                    position,
                    antennas,
                    channels: chans,
                    cache_bits: None,
                    tx_power: Vec::new(),
                }
            })
            .collect::<Vec<_>>();
        let n_files = self.files.len();
        let mut requests = RequestMatrix::zeros(users.len(), n_files);
        for (k, j, a) in self.requests {
            if k >= users.len() || j >= n_files {
                return Err(ModelError::Invalid(format!("request ({k},{j}) out of range")));
            }
            requests.rates[k][j] = a;
        }
        let popularity = if n_files == 0 {
            Vec::new()
        } else {
            vec![S::one() / S::of(n_files as f64); n_files]
        };
        let scenario = Scenario {
            transmitters,
            users,
            channels,
            catalog: FileCatalog {
                sizes_bits: self.files,
                popularity,
            },
            requests,
            radio,
            cell_radius: self.radius,
            slot_seconds: S::one(),
            seed: 0,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

/// Two SBSs and three users on a line.
///
/// SBS 0 reaches users 0 and 1 (user 1 on channels 1 and 2), SBS 1 reaches
/// users 1 and 2 on channel 1. The five tuples in canonical order are
/// `((0,0),1) ((0,1),1) ((0,1),2) ((1,1),1) ((1,2),1)`. SBSs carry two
/// antennas so that `{0, 2, 4}` is a (maximal) independent set.
pub fn conflict_example<S: Scalar>() -> Scenario<S> {
    ScenarioBuilder::new(2, 400e3)
        .sbs(0.0, 0.0, &[1, 2], 8e9, 100.0, 2)
        .sbs(150.0, 0.0, &[1], 8e9, 100.0, 2)
        .user(-60.0, 0.0, &[1], 1)
        .user(75.0, 0.0, &[1, 2], 1)
        .user(210.0, 0.0, &[1], 1)
        .file(1e6)
        .build()
        .expect("conflict example is valid")
}

/// One SBS, one user, one channel, one cached file; demand `rate · size`.
pub fn single_link<S: Scalar>(size_bits: f64, rate: f64) -> Scenario<S> {
    ScenarioBuilder::new(1, 400e3)
        .sbs(0.0, 0.0, &[1], size_bits, 100.0, 1)
        .user(50.0, 0.0, &[1], 1)
        .file(size_bits)
        .request(0, 0, rate)
        .build()
        .expect("single link is valid")
}

/// Two SBS-user pairs on the same channel, far enough apart not to interfere.
pub fn two_far_links<S: Scalar>(size_bits: f64) -> Scenario<S> {
    ScenarioBuilder::new(1, 400e3)
        .sbs(0.0, 0.0, &[1], size_bits, 100.0, 1)
        .sbs(1000.0, 0.0, &[1], size_bits, 100.0, 1)
        .user(50.0, 0.0, &[1], 1)
        .user(1050.0, 0.0, &[1], 1)
        .file(size_bits)
        .request(0, 0, 1.0)
        .request(1, 0, 1.0)
        .build()
        .expect("two far links are valid")
}
