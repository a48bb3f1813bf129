//! Arm events against a brute-force oracle that enumerates simple crossing
//! paths and tests alternation by graph separation.

use std::collections::HashMap;

use dynperc::lattice::{closed_neighbours, open_neighbours, Annulus, AnnulusKind, CellId, Length, Model, Point, Side};
use dynperc::lattice::Rect;
use dynperc::percolation::{linked_within, ArmGeometry, ArmSpec, CellState, ClusterEvent, Colour, FnState};
use proptest::prelude::*;

struct Oracle {
    model: Model,
    pieces: Vec<Rect>,
    cells: Vec<CellId>,
    index: HashMap<CellId, usize>,
    source: [Vec<bool>; 2],
    target: [Vec<bool>; 2],
}

impl Oracle {
    fn new(event: &ClusterEvent, pieces: Vec<Rect>) -> Oracle {
        let d = event.domain().expect("nontrivial event");
        let cells = d.cells().to_vec();
        let index = cells.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let flags = |colour: Colour| {
            let sources: Vec<CellId> = d.sources(colour).collect();
            (
                cells.iter().map(|c| sources.contains(c)).collect(),
                cells.iter().map(|&c| d.is_target(c, colour)).collect(),
            )
        };
        let (so, to) = flags(Colour::Open);
        let (sc, tc) = flags(Colour::Closed);
        Oracle {
            model: d.model(),
            pieces,
            source: [so, sc],
            target: [to, tc],
            cells,
            index,
        }
    }

    fn neighbours(&self, i: usize, colour: Colour) -> Vec<usize> {
        let c = self.cells[i];
        let ns = match colour {
            Colour::Open => open_neighbours(self.model, c),
            Colour::Closed => closed_neighbours(self.model, c),
        };
        ns.iter()
            .filter(|&&n| linked_within(self.model, c, n, colour, &self.pieces))
            .filter_map(|n| self.index.get(n).copied())
            .collect()
    }

    /// All simple source-to-target paths of one colour, as cell bitmasks.
    fn paths(&self, open: &[bool], colour: Colour) -> Vec<u64> {
        let want = colour == Colour::Open;
        let mut out = Vec::new();
        for s in 0..self.cells.len() {
            if self.source[colour as usize][s] && open[s] == want {
                self.extend(s, 1u64 << s, open, colour, &mut out);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    fn extend(&self, v: usize, mask: u64, open: &[bool], colour: Colour, out: &mut Vec<u64>) {
        if self.target[colour as usize][v] {
            out.push(mask);
            return;
        }
        for w in self.neighbours(v, colour) {
            if mask >> w & 1 == 0 && open[w] == (colour == Colour::Open) {
                self.extend(w, mask | 1 << w, open, colour, out);
            }
        }
    }

    /// Whether two cell sets are joined inside `allowed` under `colour`
    /// adjacency, ignoring cell states.
    fn connected(&self, a: u64, b: u64, allowed: u64, colour: Colour) -> bool {
        let mut seen = a & allowed;
        let mut stack: Vec<usize> = (0..self.cells.len()).filter(|&i| seen >> i & 1 == 1).collect();
        while let Some(v) = stack.pop() {
            if b >> v & 1 == 1 {
                return true;
            }
            for w in self.neighbours(v, colour) {
                if allowed >> w & 1 == 1 && seen >> w & 1 == 0 {
                    seen |= 1 << w;
                    stack.push(w);
                }
            }
        }
        false
    }

    fn decide(&self, open: &[bool], spec: &ArmSpec) -> bool {
        let all = if self.cells.len() == 64 { u64::MAX } else { (1u64 << self.cells.len()) - 1 };
        let x = spec.first;
        let y = x.other();
        let px = self.paths(open, x);
        let py = self.paths(open, y);
        match (spec.geometry, spec.k) {
            (_, 1) => !px.is_empty(),
            (_, 2) => !px.is_empty() && !py.is_empty(),
            (ArmGeometry::Plane, 4) => {
                for (i, &p1) in px.iter().enumerate() {
                    for &p2 in &px[i + 1..] {
                        if p1 & p2 != 0 {
                            continue;
                        }
                        for (j, &q1) in py.iter().enumerate() {
                            for &q2 in &py[j + 1..] {
                                if q1 & q2 == 0 && !self.connected(p1, p2, all & !(q1 | q2), x) {
                                    return true;
                                }
                            }
                        }
                    }
                }
                false
            }
            (_, 3) => {
                for (i, &p1) in px.iter().enumerate() {
                    for &p2 in &px[i + 1..] {
                        if p1 & p2 != 0 {
                            continue;
                        }
                        for &q in &py {
                            if !self.connected(p1, p2, all & !q, x) {
                                return true;
                            }
                        }
                    }
                }
                false
            }
            _ => unimplemented!("oracle covers k <= 4"),
        }
    }
}

struct Case {
    model: Model,
    annulus: Annulus,
    spec: ArmSpec,
}

/// The annulus restricted to the arm geometry: open rectangles covering the
/// interior for sites, closed rectangles covering it for bonds.
fn pieces(case: &Case) -> Vec<Rect> {
    let a = &case.annulus;
    let c = a.center;
    let mut clip = a.outer_square();
    let mut cut = |s: Side| match s {
        Side::Lower => clip.y1 = c.y,
        Side::Upper => clip.y0 = c.y,
        Side::Left => clip.x1 = c.x,
        Side::Right => clip.x0 = c.x,
    };
    match case.spec.geometry {
        ArmGeometry::Plane => {}
        ArmGeometry::HalfPlane(s) => cut(s),
        ArmGeometry::QuarterPlane(s, t) => {
            cut(s);
            cut(t);
        }
    }
    match case.model {
        Model::TriangularSite => {
            a.open_strips().iter().map(|r| r.intersection(&clip)).filter(|r| r.x0 < r.x1 && r.y0 < r.y1).collect()
        }
        Model::SquareBond => a.strips().iter().map(|r| r.intersection(&clip)).filter(|r| !r.is_empty()).collect(),
    }
}

fn l(x: f64) -> Length {
    Length::from_f64(x).unwrap()
}

fn centred(model: Model, r: f64, big: f64, spec: ArmSpec) -> Case {
    Case { model, annulus: Annulus::centered(l(r), l(big)), spec }
}

fn cases() -> Vec<Case> {
    use Colour::*;
    use Model::*;
    let mut v = Vec::new();
    for m in [TriangularSite, SquareBond] {
        for (r, big) in [(0.0, 1.0), (0.0, 1.5), (1.0, 1.5), (1.0, 2.0), (0.0, 2.0), (1.0, 2.5)] {
            for k in [1, 2, 4] {
                v.push(centred(m, r, big, ArmSpec::plane(k)));
            }
            v.push(centred(m, r, big, ArmSpec { k: 1, geometry: ArmGeometry::Plane, first: Closed }));
            for side in [Side::Lower, Side::Upper, Side::Left, Side::Right] {
                for first in [Open, Closed] {
                    for k in [2, 3] {
                        v.push(centred(m, r, big, ArmSpec::half_plane(k, side, first)));
                    }
                }
            }
            v.push(centred(m, r, big, ArmSpec::quarter_plane(3, Side::Right, Side::Upper, Open)));
            v.push(centred(m, r, big, ArmSpec::quarter_plane(3, Side::Left, Side::Lower, Closed)));
        }
    }
    // off-centre annulus
    v.push(Case {
        model: TriangularSite,
        annulus: Annulus::new(Point::new(l(3.0), l(-1.0)), l(1.0), l(1.5), AnnulusKind::Interior).unwrap(),
        spec: ArmSpec::plane(4),
    });
    v
}

#[test]
fn exhaustive_agreement_on_small_domains() {
    let mut checked = 0;
    for case in cases() {
        let event = ClusterEvent::arms(case.model, &case.annulus, &case.spec).unwrap();
        let oracle = Oracle::new(&event, pieces(&case));
        let n = oracle.cells.len();
        if n > 16 {
            continue;
        }
        for mask in 0u32..(1 << n) {
            let open: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
            let state = FnState(|c: CellId| oracle.index.get(&c).is_some_and(|&i| open[i]));
            assert_eq!(
                event.holds(&state),
                oracle.decide(&open, &case.spec),
                "{:?} {:?} {:?} mask {mask:#x}",
                case.model,
                case.annulus,
                case.spec
            );
        }
        checked += 1;
    }
    assert!(checked >= 20, "only {checked} small domains");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn random_configurations_on_larger_domains(case_ix in 0usize..200, bits in any::<u64>()) {
        let cases: Vec<Case> = cases()
            .into_iter()
            .filter(|c| {
                let e = ClusterEvent::arms(c.model, &c.annulus, &c.spec).unwrap();
                let n = e.support().len();
                n > 16 && n <= 30
            })
            .collect();
        prop_assume!(!cases.is_empty());
        let case = &cases[case_ix % cases.len()];
        let event = ClusterEvent::arms(case.model, &case.annulus, &case.spec).unwrap();
        let oracle = Oracle::new(&event, pieces(&case));
        let open: Vec<bool> = (0..oracle.cells.len()).map(|i| bits >> i & 1 == 1).collect();
        let state = FnState(|c: CellId| oracle.index.get(&c).is_some_and(|&i| open[i]));
        prop_assert_eq!(event.holds(&state), oracle.decide(&open, &case.spec));
    }
}

#[test]
fn pinwheel_has_four_alternating_arms() {
    let model = Model::TriangularSite;
    let annulus = Annulus::centered(l(1.0), l(5.0));
    // quadrants alternate open/closed
    let pinwheel = FnState(|c: CellId| {
        let (x, y) = dynperc::lattice::position(model, c);
        (x >= 0.0) == (y >= 0.0)
    });
    // explicit arms: rows along ±x are open in the two open quadrants,
    // zigzags along ±y are closed
    let east: Vec<CellId> = (1..=6).map(|q| CellId::new(q, 0)).collect();
    let west: Vec<CellId> = (1..=6).map(|q| CellId::new(-q, -1)).collect();
    let north: Vec<CellId> = (1..=6).map(|s| CellId::new(-(s + 1) / 2 - 1, s)).collect();
    let south: Vec<CellId> = (1..=6).map(|s| CellId::new(s / 2 + 1, -s)).collect();
    for c in &east {
        assert!(pinwheel.is_open(*c));
    }
    for c in &west {
        assert!(pinwheel.is_open(*c));
    }
    for c in north.iter().chain(&south) {
        assert!(!pinwheel.is_open(*c));
    }
    for path in [&east, &west, &north, &south] {
        for w in path.windows(2) {
            assert!(open_neighbours(model, w[0]).contains(&w[1]));
        }
    }
    let four = ClusterEvent::arms(model, &annulus, &ArmSpec::plane(4)).unwrap();
    assert!(four.holds(&pinwheel));
    let six = ClusterEvent::arms(model, &annulus, &ArmSpec::plane(6)).unwrap();
    assert!(!six.holds(&pinwheel));
}
