//! Abstract model of the ad-hoc WiFi network carrying secondary-control
//! packets and beacons.
//!
//! Links exist between stations within range `ρ`. Each secondary period every
//! station transmits once (measurement packet or dummy beacon); contention is
//! folded into an independent drop probability. A jammer silences every
//! station within its radius in both directions.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn distance(self, other: Point) -> f64 {
        libm::hypot(self.x - other.x, self.y - other.y)
    }
}

/// Station positions and the log-distance link budget that fixes `ρ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeGeometry {
    pub positions: Vec<Point>,
    /// Communication range in meters.
    pub rho: f64,
    pub pathloss_exponent: f64,
    /// Path loss at 1 m, dB.
    pub ref_loss_db: f64,
    pub tx_power_dbm: f64,
    pub sensitivity_dbm: f64,
}

impl NodeGeometry {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Path loss at `distance` meters.
    pub fn path_loss_db(&self, distance: f64) -> f64 {
        self.ref_loss_db + 10.0 * self.pathloss_exponent * libm::log10(distance)
    }

    /// Range at which the path loss consumes the whole link budget.
    pub fn budget_range(&self) -> f64 {
        let budget = self.tx_power_dbm - self.sensitivity_dbm;
        libm::pow(10.0, (budget - self.ref_loss_db) / (10.0 * self.pathloss_exponent))
    }

    /// Mismatch in dB between the configured `rho` and the link budget.
    pub fn budget_mismatch_db(&self) -> f64 {
        (self.path_loss_db(self.rho) - (self.tx_power_dbm - self.sensitivity_dbm)).abs()
    }

    /// Pairwise distances, used as the reconfiguration metric.
    pub fn distances(&self) -> Vec<Vec<f64>> {
        self.positions
            .iter()
            .map(|a| self.positions.iter().map(|b| a.distance(*b)).collect())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JammerSpec {
    pub position: Point,
    /// Jamming radius in meters.
    pub range: f64,
    /// Activation interval `[active_from, active_to)` in seconds.
    pub active_from: f64,
    pub active_to: f64,
}

impl JammerSpec {
    pub fn is_active(&self, t_secs: f64) -> bool {
        t_secs >= self.active_from && t_secs < self.active_to
    }

    pub fn covers(&self, p: Point) -> bool {
        self.position.distance(p) <= self.range
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WirelessError {
    DisconnectedTopology,
}

impl fmt::Display for WirelessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WirelessError::DisconnectedTopology => f.write_str("wireless topology is not connected"),
        }
    }
}

impl core::error::Error for WirelessError {}

/// Symmetric range adjacency with zero diagonal. Fails when the full graph is
/// not connected.
pub fn adjacency(geom: &NodeGeometry) -> Result<Vec<Vec<bool>>, WirelessError> {
    let n = geom.len();
    let adj: Vec<Vec<bool>> = (0..n)
        .map(|u| {
            (0..n)
                .map(|j| u != j && geom.positions[u].distance(geom.positions[j]) <= geom.rho)
                .collect()
        })
        .collect();
    if n > 0 && !is_connected(&adj) {
        return Err(WirelessError::DisconnectedTopology);
    }
    Ok(adj)
}

fn is_connected(adj: &[Vec<bool>]) -> bool {
    let n = adj.len();
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for j in 0..n {
            if adj[u][j] && !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Outcome of one ordered transmitter → receiver pair in one period.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkOutcome {
    Delivered,
    OutOfRange,
    TxJammed,
    RxJammed,
    Dropped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeliveryReport {
    pub period: u64,
    /// `outcomes[tx][rx]`; `None` on the diagonal and for silent stations.
    pub outcomes: Vec<Vec<Option<LinkOutcome>>>,
    /// Random access delay `T^ad` per transmitter, seconds.
    pub access_delay: Vec<Option<f64>>,
    /// Stations inside an active jammer's radius.
    pub jammed: Vec<bool>,
}

impl DeliveryReport {
    pub fn outcome(&self, tx: usize, rx: usize) -> Option<LinkOutcome> {
        self.outcomes[tx][rx]
    }

    pub fn delivered(&self, tx: usize, rx: usize) -> bool {
        self.outcomes[tx][rx] == Some(LinkOutcome::Delivered)
    }

    /// Number of packets `rx` received this period.
    pub fn received_count(&self, rx: usize) -> usize {
        (0..self.outcomes.len()).filter(|&tx| self.delivered(tx, rx)).count()
    }

    pub fn transmitted(&self, tx: usize) -> bool {
        self.access_delay[tx].is_some()
    }
}

/// The network: geometry, its adjacency and MAC abstraction parameters.
#[derive(Debug, Clone)]
pub struct WirelessNetwork {
    pub geometry: NodeGeometry,
    pub adjacency: Vec<Vec<bool>>,
    pub p_drop: f64,
    /// Upper bound `τ_d` of the random access delay, seconds.
    pub tau_d: f64,
}

impl WirelessNetwork {
    pub fn new(geometry: NodeGeometry, p_drop: f64, tau_d: f64) -> Result<Self, WirelessError> {
        let adjacency = adjacency(&geometry)?;
        Ok(WirelessNetwork { geometry, adjacency, p_drop, tau_d })
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    /// Stations silenced by any of `jammers` (all assumed active).
    pub fn jammed_nodes(&self, jammers: &[&JammerSpec]) -> Vec<bool> {
        self.geometry
            .positions
            .iter()
            .map(|p| jammers.iter().any(|j| j.covers(*p)))
            .collect()
    }

    /// Runs one secondary period. Draw order is fixed (access delays, then
    /// drop draws in row-major pair order) so results depend only on the rng
    /// state.
    pub fn step_period(
        &self,
        period: u64,
        transmitters: &[bool],
        active_jammers: &[&JammerSpec],
        rng: &mut SimRng,
    ) -> DeliveryReport {
        let n = self.len();
        let jammed = self.jammed_nodes(active_jammers);
        let access_delay: Vec<Option<f64>> = (0..n)
            .map(|u| transmitters[u].then(|| rng.random::<f64>() * self.tau_d))
            .collect();
        let mut outcomes = vec![vec![None; n]; n];
        for tx in 0..n {
            if !transmitters[tx] {
                continue;
            }
            for rx in 0..n {
                if tx == rx {
                    continue;
                }
                // One draw per pair regardless of outcome keeps streams aligned.
                let draw: f64 = rng.random();
                outcomes[tx][rx] = Some(if !self.adjacency[tx][rx] {
                    LinkOutcome::OutOfRange
                } else if jammed[tx] {
                    LinkOutcome::TxJammed
                } else if jammed[rx] {
                    LinkOutcome::RxJammed
                } else if draw < self.p_drop {
                    LinkOutcome::Dropped
                } else {
                    LinkOutcome::Delivered
                });
            }
        }
        DeliveryReport { period, outcomes, access_delay, jammed }
    }
}

/// Flags a station as jammed after `n_det` consecutive periods in which it
/// heard nothing although a neighbor transmitted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JamDetector {
    pub n_det: u32,
    pub silent: Vec<u32>,
}

impl JamDetector {
    pub fn new(n_det: u32, nodes: usize) -> Self {
        JamDetector { n_det, silent: vec![0; nodes] }
    }

    pub fn is_flagged(&self, node: usize) -> bool {
        self.silent[node] >= self.n_det
    }
}

/// Updates the counter of `node` from one period's report.
pub fn update_jam_detector(
    det: &JamDetector,
    node: usize,
    report: &DeliveryReport,
    adjacency: &[Vec<bool>],
) -> JamDetector {
    let mut next = det.clone();
    let neighbor_spoke = (0..adjacency.len()).any(|j| adjacency[node][j] && report.transmitted(j));
    if neighbor_spoke && report.received_count(node) == 0 {
        next.silent[node] = next.silent[node].saturating_add(1);
    } else {
        next.silent[node] = 0;
    }
    next
}
