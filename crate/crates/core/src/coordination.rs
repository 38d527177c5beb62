//! Coordinator election from least average distance (LAD).
//!
//! Every vehicle advertises the SCH it will tune to. From the e1 beacons each
//! vehicle computes its mean distance to the members of every other SCH
//! cluster, shares those means in e3, and ranks itself against its own
//! cluster-mates. A vehicle ranked first toward SCH z relays emergency
//! messages to z during the SCHI.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::sim::SimTime;
use crate::types::{Position, Sch, VehicleId};

#[derive(Debug, Clone, PartialEq)]
pub struct Bsm {
    pub sender_id: VehicleId,
    pub position: Position,
    pub selected_sch: Sch,
    /// Empty in e1 beacons.
    pub avg_distances: BTreeMap<Sch, f64>,
    pub timestamp: SimTime,
}

/// Mean distance from `self_pos` to the peers that selected `z`.
pub fn average_distance_to_sch(self_pos: &Position, peers: &[(Position, Sch)], z: Sch) -> Option<f64> {
    let (sum, n) = peers
        .iter()
        .filter(|(_, sch)| *sch == z)
        .fold((0.0, 0usize), |(s, n), (p, _)| (s + self_pos.distance(p), n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Averages toward every SCH other than `own`.
pub fn own_averages(self_pos: &Position, own: Sch, peers: &[(Position, Sch)]) -> BTreeMap<Sch, f64> {
    let targets: BTreeSet<Sch> = peers.iter().map(|(_, s)| *s).filter(|s| *s != own).collect();
    targets
        .into_iter()
        .filter_map(|z| average_distance_to_sch(self_pos, peers, z).map(|d| (z, d)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
struct PeerRecord {
    timestamp: SimTime,
    avgs: BTreeMap<Sch, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CfibEntry {
    pub sch_z: Sch,
    pub own_avg: f64,
    pub peer_avgs: Vec<(VehicleId, f64)>,
    pub fitness: u32,
}

/// Coordination fitness information base held by one vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct Cfib {
    owner: VehicleId,
    own_sch: Sch,
    own_avgs: BTreeMap<Sch, f64>,
    peers: BTreeMap<VehicleId, PeerRecord>,
}

impl Cfib {
    pub fn new(owner: VehicleId, own_sch: Sch, own_avgs: BTreeMap<Sch, f64>) -> Self {
        Cfib {
            owner,
            own_sch,
            own_avgs,
            peers: BTreeMap::new(),
        }
    }

    pub fn owner(&self) -> VehicleId {
        self.owner
    }

    pub fn own_sch(&self) -> Sch {
        self.own_sch
    }

    pub fn own_avgs(&self) -> &BTreeMap<Sch, f64> {
        &self.own_avgs
    }

    /// Records a cluster-mate's e3 averages. Beacons from other clusters,
    /// from the owner, or older than the stored one are ignored.
    pub fn update(&mut self, bsm: &Bsm) {
        if bsm.sender_id == self.owner || bsm.selected_sch != self.own_sch {
            return;
        }
        match self.peers.get(&bsm.sender_id) {
            Some(r) if r.timestamp > bsm.timestamp => {}
            _ => {
                self.peers.insert(
                    bsm.sender_id,
                    PeerRecord {
                        timestamp: bsm.timestamp,
                        avgs: bsm.avg_distances.clone(),
                    },
                );
            }
        }
    }

    /// Rank toward `z`: 1 + peers strictly closer + equally close peers with a lower id.
    pub fn fitness(&self, z: Sch) -> Option<u32> {
        let own = *self.own_avgs.get(&z)?;
        let better = self
            .peers
            .iter()
            .filter_map(|(id, r)| r.avgs.get(&z).map(|d| (*id, *d)))
            .filter(|&(id, d)| d < own || (d == own && id < self.owner))
            .count();
        Some(1 + better as u32)
    }

    pub fn entries(&self) -> Vec<CfibEntry> {
        self.own_avgs
            .iter()
            .map(|(&z, &own_avg)| CfibEntry {
                sch_z: z,
                own_avg,
                peer_avgs: self
                    .peers
                    .iter()
                    .filter_map(|(id, r)| r.avgs.get(&z).map(|d| (*id, *d)))
                    .collect(),
                fitness: self.fitness(z).expect("own average present"),
            })
            .collect()
    }

    /// Targets this vehicle coordinates toward, with its LAD.
    pub fn self_elected(&self) -> Vec<(Sch, f64)> {
        self.own_avgs
            .iter()
            .filter(|(z, _)| self.fitness(**z) == Some(1))
            .map(|(z, d)| (*z, *d))
            .collect()
    }
}

pub fn update_cfib(cfib: &mut Cfib, incoming: &Bsm) {
    cfib.update(incoming);
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterView {
    pub sch: Sch,
    pub members: Vec<VehicleId>,
    pub advertised_y: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoordinatorAssignment {
    pub from_sch: Sch,
    pub to_sch: Sch,
    pub coordinator: VehicleId,
    pub lad: f64,
}

/// Collects every member's autonomous self-election. Under beacon loss more
/// than one member may claim the same target.
pub fn elect_coordinators(
    cluster: &ClusterView,
    cfibs: &BTreeMap<VehicleId, Cfib>,
) -> Vec<CoordinatorAssignment> {
    let mut out: Vec<CoordinatorAssignment> = cluster
        .members
        .iter()
        .filter_map(|id| cfibs.get(id))
        .flat_map(|cfib| {
            cfib.self_elected()
                .into_iter()
                .map(move |(z, lad)| CoordinatorAssignment {
                    from_sch: cluster.sch,
                    to_sch: z,
                    coordinator: cfib.owner(),
                    lad,
                })
        })
        .collect();
    out.sort_by(|a, b| a.to_sch.cmp(&b.to_sch).then(a.coordinator.cmp(&b.coordinator)));
    out
}

/// One (cluster, target) line of an election report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ElectionRow {
    pub cluster_k: Sch,
    pub target_z: Sch,
    pub coordinator_id: VehicleId,
    pub lad_m: f64,
    /// Claimants beyond the first.
    pub duplicates_count: u32,
}

/// Groups assignments per (cluster, target), keeping the smallest LAD (lowest
/// id on ties) as the reported coordinator.
pub fn election_rows(assignments: &[CoordinatorAssignment]) -> Vec<ElectionRow> {
    let mut groups: BTreeMap<(Sch, Sch), Vec<&CoordinatorAssignment>> = BTreeMap::new();
    for a in assignments {
        groups.entry((a.from_sch, a.to_sch)).or_default().push(a);
    }
    groups
        .into_iter()
        .map(|((k, z), claims)| {
            let best = claims
                .iter()
                .min_by(|a, b| a.lad.total_cmp(&b.lad).then(a.coordinator.cmp(&b.coordinator)))
                .expect("non-empty group");
            ElectionRow {
                cluster_k: k,
                target_z: z,
                coordinator_id: best.coordinator,
                lad_m: best.lad,
                duplicates_count: claims.len() as u32 - 1,
            }
        })
        .collect()
}

/// Runs the whole exchange with lossless delivery: e1 positions, e3 averages,
/// then election in every populated cluster.
pub fn lossless_election(
    vehicles: &[(VehicleId, Position, Sch)],
    advertised_y: u8,
) -> Vec<CoordinatorAssignment> {
    let peers = |me: VehicleId| -> Vec<(Position, Sch)> {
        vehicles
            .iter()
            .filter(|(id, _, _)| *id != me)
            .map(|(_, p, s)| (*p, *s))
            .collect()
    };
    let beacons: Vec<Bsm> = vehicles
        .iter()
        .map(|(id, pos, sch)| Bsm {
            sender_id: *id,
            position: *pos,
            selected_sch: *sch,
            avg_distances: own_averages(pos, *sch, &peers(*id)),
            timestamp: SimTime::ZERO,
        })
        .collect();
    let mut cfibs: BTreeMap<VehicleId, Cfib> = beacons
        .iter()
        .map(|b| {
            (
                b.sender_id,
                Cfib::new(b.sender_id, b.selected_sch, b.avg_distances.clone()),
            )
        })
        .collect();
    for cfib in cfibs.values_mut() {
        for b in &beacons {
            cfib.update(b);
        }
    }
    let mut clusters: BTreeMap<Sch, Vec<VehicleId>> = BTreeMap::new();
    for (id, _, sch) in vehicles {
        clusters.entry(*sch).or_default().push(*id);
    }
    clusters
        .into_iter()
        .flat_map(|(sch, members)| {
            elect_coordinators(
                &ClusterView {
                    sch,
                    members,
                    advertised_y,
                },
                &cfibs,
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bsm(id: u32, sch: u8, avgs: &[(u8, f64)], t: u64) -> Bsm {
        Bsm {
            sender_id: VehicleId(id),
            position: Position::default(),
            selected_sch: Sch(sch),
            avg_distances: avgs.iter().map(|&(z, d)| (Sch(z), d)).collect(),
            timestamp: SimTime(t),
        }
    }

    #[test]
    fn average_distance_examples() {
        let me = Position::new(0.0, 0.0);
        let peers = [
            (Position::new(200.0, 0.0), Sch(2)),
            (Position::new(300.0, 0.0), Sch(2)),
            (Position::new(5.0, 0.0), Sch(1)),
        ];
        assert_eq!(average_distance_to_sch(&me, &peers, Sch(2)), Some(250.0));
        assert_eq!(
            average_distance_to_sch(&me, &[(Position::new(0.0, 42.0), Sch(3))], Sch(3)),
            Some(42.0)
        );
        assert_eq!(average_distance_to_sch(&me, &peers, Sch(4)), None);
        let own = own_averages(&me, Sch(1), &peers);
        assert_eq!(own.keys().copied().collect::<Vec<_>>(), vec![Sch(2)]);
    }

    #[test]
    fn fitness_ranks() {
        let mut c = Cfib::new(VehicleId(0), Sch(1), [(Sch(2), 150.0)].into());
        c.update(&bsm(1, 1, &[(2, 250.0)], 1));
        assert_eq!(c.fitness(Sch(2)), Some(1));

        let mut c = Cfib::new(VehicleId(0), Sch(1), [(Sch(2), 250.0)].into());
        c.update(&bsm(1, 1, &[(2, 150.0)], 1));
        c.update(&bsm(2, 1, &[(2, 100.0)], 1));
        assert_eq!(c.fitness(Sch(2)), Some(3));
        assert_eq!(c.entries()[0].peer_avgs.len(), 2);
    }

    #[test]
    fn duplicates_and_stale_beacons() {
        let mut c = Cfib::new(VehicleId(0), Sch(1), [(Sch(2), 200.0)].into());
        let b = bsm(1, 1, &[(2, 150.0)], 5);
        c.update(&b);
        let once = c.clone();
        c.update(&b);
        assert_eq!(c, once);
        c.update(&bsm(1, 1, &[(2, 300.0)], 3));
        assert_eq!(c, once);
        c.update(&bsm(1, 1, &[(2, 300.0)], 9));
        assert_eq!(c.fitness(Sch(2)), Some(1));
        // Other clusters do not compete.
        c.update(&bsm(7, 3, &[(2, 1.0)], 9));
        assert_eq!(c.fitness(Sch(2)), Some(1));
    }

    #[test]
    fn tie_goes_to_lower_id() {
        let mut a = Cfib::new(VehicleId(3), Sch(1), [(Sch(2), 100.0)].into());
        a.update(&bsm(5, 1, &[(2, 100.0)], 0));
        let mut b = Cfib::new(VehicleId(5), Sch(1), [(Sch(2), 100.0)].into());
        b.update(&bsm(3, 1, &[(2, 100.0)], 0));
        assert_eq!(a.fitness(Sch(2)), Some(1));
        assert_eq!(b.fitness(Sch(2)), Some(2));
    }

    #[test]
    fn two_member_cluster_example() {
        let v = [
            (VehicleId(0), Position::new(0.0, 0.0), Sch(1)),
            (VehicleId(1), Position::new(100.0, 0.0), Sch(1)),
            (VehicleId(2), Position::new(200.0, 0.0), Sch(2)),
            (VehicleId(3), Position::new(300.0, 0.0), Sch(2)),
        ];
        let a = lossless_election(&v, 2);
        let from1: Vec<_> = a.iter().filter(|x| x.from_sch == Sch(1)).collect();
        assert_eq!(from1.len(), 1);
        assert_eq!(from1[0].coordinator, VehicleId(1));
        assert_eq!(from1[0].lad, 150.0);
    }

    #[test]
    fn single_member_covers_every_target() {
        let v = [
            (VehicleId(0), Position::new(0.0, 0.0), Sch(1)),
            (VehicleId(1), Position::new(10.0, 0.0), Sch(2)),
            (VehicleId(2), Position::new(20.0, 0.0), Sch(3)),
            (VehicleId(3), Position::new(30.0, 0.0), Sch(3)),
        ];
        let a = lossless_election(&v, 3);
        let mine: Vec<_> = a
            .iter()
            .filter(|x| x.coordinator == VehicleId(0))
            .map(|x| x.to_sch)
            .collect();
        assert_eq!(mine, vec![Sch(2), Sch(3)]);
    }

    #[test]
    fn report_rows_count_duplicates() {
        let mk = |id, lad| CoordinatorAssignment {
            from_sch: Sch(1),
            to_sch: Sch(2),
            coordinator: VehicleId(id),
            lad,
        };
        let rows = election_rows(&[mk(4, 120.0), mk(2, 90.0), mk(9, 90.0)]);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].coordinator_id, VehicleId(2));
        assert_eq!(rows[0].duplicates_count, 2);
    }

    fn scenario() -> impl Strategy<Value = Vec<(VehicleId, Position, Sch)>> {
        prop::collection::vec((0.0f64..1500.0, 0.0f64..1500.0, 1u8..=3), 2..20).prop_map(|v| {
            v.into_iter()
                .enumerate()
                .map(|(i, (x, y, s))| (VehicleId(i as u32), Position::new(x, y), Sch(s)))
                .collect()
        })
    }

    fn ids(a: &[CoordinatorAssignment]) -> Vec<(Sch, Sch, VehicleId)> {
        a.iter().map(|x| (x.from_sch, x.to_sch, x.coordinator)).collect()
    }

    proptest! {
        #[test]
        fn translation_and_scale_invariance(v in scenario(), dx in -500.0f64..500.0, s in 0.1f64..10.0) {
            let base = lossless_election(&v, 3);
            let shifted: Vec<_> = v.iter().map(|(i, p, c)| (*i, p.offset(dx, -dx), *c)).collect();
            prop_assert_eq!(ids(&lossless_election(&shifted, 3)), ids(&base));
            let scaled: Vec<_> = v.iter().map(|(i, p, c)| (*i, p.scale(s), *c)).collect();
            let scaled_a = lossless_election(&scaled, 3);
            prop_assert_eq!(ids(&scaled_a), ids(&base));
            for (a, b) in scaled_a.iter().zip(&base) {
                prop_assert!((a.lad - s * b.lad).abs() <= 1e-9 * (1.0 + a.lad));
            }
        }

        #[test]
        fn one_coordinator_per_populated_pair(v in scenario()) {
            let a = lossless_election(&v, 3);
            let populated: BTreeSet<Sch> = v.iter().map(|x| x.2).collect();
            let expected = populated.len() * populated.len().saturating_sub(1);
            prop_assert_eq!(a.len(), expected);
            prop_assert!(election_rows(&a).iter().all(|r| r.duplicates_count == 0));
        }
    }
}
