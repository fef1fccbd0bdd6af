//! Parallelepiped geometries and their bond structure.
//!
//! A [`LatticeSpec`] fixes the base block Λ (d sides). [`build_geometry`]
//! turns it into one of three bond graphs:
//!
//! * `FreeBlock`: nearest-neighbor bonds inside the block, open edges;
//! * `Torus`: the same sides with wrap bonds closing every axis; the wrap
//!   bonds form the cut, and removing them unfolds the torus back to the
//!   free block;
//! * `MagnifiedTorus(k)`: the torus on sides k·L_i, partitioned into k^d
//!   translated copies of Λ; bonds joining different copies (wrap bonds
//!   included) form the corridor.
//!
//! Sites are indexed lexicographically with axis 0 fastest; bond lists are
//! sorted by (direction, site_a, site_b), so equal inputs always produce
//! identical geometries.

use crate::{Error, Result};
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Side lengths of the base block Λ.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    sides: Vec<usize>,
}

impl LatticeSpec {
    /// Requires at least one dimension; per-kind side minimums are checked
    /// at build time.
    pub fn new(sides: Vec<usize>) -> Result<Self> {
        if sides.is_empty() {
            return Err(Error::EmptyDimension);
        }
        for &side in &sides {
            if side < 2 {
                return Err(Error::SideTooSmall {
                    side,
                    minimum: 2,
                    context: "any geometry (a side of 1 carries no bond)",
                });
            }
        }
        Ok(Self { sides })
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    pub fn sides(&self) -> &[usize] {
        &self.sides
    }

    pub fn site_count(&self) -> usize {
        self.sides.iter().product()
    }

    /// Boundary face count |∂Λ| = 2·Σ_i |Λ|/L_i.
    pub fn surface_faces(&self) -> usize {
        2 * self.cross_sections()
    }

    /// Σ_i |Λ|/L_i, the per-axis cross sections (= wrap-bond count of the
    /// Λ-torus).
    pub fn cross_sections(&self) -> usize {
        let volume = self.site_count();
        self.sides.iter().map(|&l| volume / l).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryKind {
    FreeBlock,
    Torus,
    MagnifiedTorus { k: usize },
}

impl GeometryKind {
    /// Magnification factor: 1 except for `MagnifiedTorus`.
    pub fn magnification(&self) -> usize {
        match self {
            GeometryKind::MagnifiedTorus { k } => *k,
            _ => 1,
        }
    }

    pub fn is_torus(&self) -> bool {
        !matches!(self, GeometryKind::FreeBlock)
    }
}

/// Nearest-neighbor bond; `site_a < site_b` in lexicographic site order,
/// `wrap` marks bonds crossing the torus seam in their direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bond {
    pub site_a: usize,
    pub site_b: usize,
    /// Axis of the bond, 0-based.
    pub direction: usize,
    pub wrap: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BondRole {
    /// Inside block number s (block 0 is the whole lattice for non-magnified
    /// kinds).
    BlockInterior(usize),
    /// Wrap bond of a plain torus.
    Cut,
    /// Bond joining two different blocks of a magnified torus.
    Corridor,
}

/// A concrete bond graph: the base spec, the kind, and the ordered bond
/// list with per-bond roles.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeGeometry {
    pub spec: LatticeSpec,
    pub kind: GeometryKind,
    bonds: Vec<Bond>,
    roles: Vec<BondRole>,
    sides: Vec<usize>,
}

impl LatticeGeometry {
    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn roles(&self) -> &[BondRole] {
        &self.roles
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    /// Actual side lengths (k·L_i for a magnified torus).
    pub fn sides(&self) -> &[usize] {
        &self.sides
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    pub fn site_count(&self) -> usize {
        self.sides.iter().product()
    }

    /// Per-site list of (bond index, opposite site), in bond order.
    pub fn site_adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.site_count()];
        for (i, bond) in self.bonds.iter().enumerate() {
            adj[bond.site_a].push((i, bond.site_b));
            adj[bond.site_b].push((i, bond.site_a));
        }
        adj
    }
}

fn strides(sides: &[usize]) -> Vec<usize> {
    let mut strides = Vec::with_capacity(sides.len());
    let mut acc = 1usize;
    for &side in sides {
        strides.push(acc);
        acc *= side;
    }
    strides
}

fn site_coords(index: usize, sides: &[usize], out: &mut [usize]) {
    let mut rest = index;
    for (c, &side) in out.iter_mut().zip(sides) {
        *c = rest % side;
        rest /= side;
    }
}

/// Block index of a site of the magnified torus (blocks are the k^d copies
/// of Λ, indexed lexicographically like sites).
fn block_of(coords: &[usize], base_sides: &[usize], k: usize) -> usize {
    let mut block = 0usize;
    let mut stride = 1usize;
    for (c, &l) in coords.iter().zip(base_sides) {
        block += (c / l) * stride;
        stride *= k;
    }
    block
}

/// Construct the bond graph for `spec` under the requested kind.
pub fn build_geometry(spec: &LatticeSpec, kind: GeometryKind) -> Result<LatticeGeometry> {
    let k = kind.magnification();
    let (minimum, context) = match kind {
        GeometryKind::FreeBlock => (2, "a free block"),
        GeometryKind::Torus => (3, "a torus (smaller sides duplicate bonds)"),
        GeometryKind::MagnifiedTorus { .. } => {
            (3, "a magnified torus (smaller k·L duplicate bonds)")
        }
    };
    if k == 0 {
        return Err(Error::SideTooSmall {
            side: 0,
            minimum: 1,
            context: "the magnification factor",
        });
    }
    let sides: Vec<usize> = spec.sides().iter().map(|&l| l * k).collect();
    for &side in &sides {
        if side < minimum {
            return Err(Error::SideTooSmall {
                side,
                minimum,
                context,
            });
        }
    }

    let dim = sides.len();
    let strides = strides(&sides);
    let sites: usize = sides.iter().product();
    let mut bonds = Vec::new();
    let mut coords = vec![0usize; dim];
    for direction in 0..dim {
        for site in 0..sites {
            site_coords(site, &sides, &mut coords);
            let at_edge = coords[direction] == sides[direction] - 1;
            if at_edge && kind == GeometryKind::FreeBlock {
                continue;
            }
            let neighbor = if at_edge {
                site - strides[direction] * (sides[direction] - 1)
            } else {
                site + strides[direction]
            };
            bonds.push(Bond {
                site_a: site.min(neighbor),
                site_b: site.max(neighbor),
                direction,
                wrap: at_edge,
            });
        }
    }
    bonds.sort_unstable_by_key(|b| (b.direction, b.site_a, b.site_b));

    let roles = bonds
        .iter()
        .map(|bond| match kind {
            GeometryKind::FreeBlock => BondRole::BlockInterior(0),
            GeometryKind::Torus => {
                if bond.wrap {
                    BondRole::Cut
                } else {
                    BondRole::BlockInterior(0)
                }
            }
            GeometryKind::MagnifiedTorus { k } => {
                let mut ca = vec![0usize; dim];
                let mut cb = vec![0usize; dim];
                site_coords(bond.site_a, &sides, &mut ca);
                site_coords(bond.site_b, &sides, &mut cb);
                let ba = block_of(&ca, spec.sides(), k);
                let bb = block_of(&cb, spec.sides(), k);
                if bond.wrap || ba != bb {
                    BondRole::Corridor
                } else {
                    BondRole::BlockInterior(ba)
                }
            }
        })
        .collect();

    Ok(LatticeGeometry {
        spec: spec.clone(),
        kind,
        bonds,
        roles,
        sides,
    })
}

/// Indices of the torus wrap bonds (the standard orthogonal cut).
pub fn cut_set(geometry: &LatticeGeometry) -> Result<Vec<usize>> {
    if geometry.kind != GeometryKind::Torus {
        return Err(Error::NotATorus);
    }
    Ok(geometry
        .roles()
        .iter()
        .enumerate()
        .filter(|(_, r)| **r == BondRole::Cut)
        .map(|(i, _)| i)
        .collect())
}

/// The k-magnified torus with corridor/block roles.
pub fn magnified_partition(spec: &LatticeSpec, k: usize) -> Result<LatticeGeometry> {
    build_geometry(spec, GeometryKind::MagnifiedTorus { k })
}

/// Indices of the corridor bonds of a magnified torus.
pub fn corridor_set(geometry: &LatticeGeometry) -> Result<Vec<usize>> {
    match geometry.kind {
        GeometryKind::MagnifiedTorus { .. } => Ok(geometry
            .roles()
            .iter()
            .enumerate()
            .filter(|(_, r)| **r == BondRole::Corridor)
            .map(|(i, _)| i)
            .collect()),
        _ => Err(Error::NotATorus),
    }
}

/// Role counts plus the surface-face arithmetic they must reproduce.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BondCensus {
    pub sites: usize,
    pub bonds: usize,
    pub blocks: usize,
    /// Interior bond count of each block (equal across blocks).
    pub interior_per_block: usize,
    pub cut: usize,
    pub corridor: usize,
    /// |∂Λ| = 2·Σ_i |Λ|/L_i of the base block.
    pub surface_faces: usize,
}

/// Count roles and check them against the closed-form block arithmetic.
///
/// For any magnification k (a plain torus counts as k = 1 with the cut in
/// place of the corridor) the counts satisfy 2·|C| = k^d·|∂Λ|.
pub fn bond_census(geometry: &LatticeGeometry) -> BondCensus {
    let blocks = geometry
        .kind
        .magnification()
        .pow(geometry.dim() as u32)
        .max(1);
    let mut cut = 0usize;
    let mut corridor = 0usize;
    let mut interior = 0usize;
    for role in geometry.roles() {
        match role {
            BondRole::BlockInterior(_) => interior += 1,
            BondRole::Cut => cut += 1,
            BondRole::Corridor => corridor += 1,
        }
    }
    debug_assert_eq!(interior % blocks, 0);
    BondCensus {
        sites: geometry.site_count(),
        bonds: geometry.bond_count(),
        blocks,
        interior_per_block: interior / blocks,
        cut,
        corridor,
        surface_faces: geometry.spec.surface_faces(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(sides: &[usize]) -> LatticeSpec {
        LatticeSpec::new(sides.to_vec()).unwrap()
    }

    #[test]
    fn one_dimensional_free_chain() {
        let g = build_geometry(&spec(&[3]), GeometryKind::FreeBlock).unwrap();
        let pairs: Vec<(usize, usize)> = g.bonds().iter().map(|b| (b.site_a, b.site_b)).collect();
        assert_eq!(pairs, vec![(0, 1), (1, 2)]);
        assert!(g.bonds().iter().all(|b| !b.wrap));
    }

    #[test]
    fn torus_three_by_three() {
        let g = build_geometry(&spec(&[3, 3]), GeometryKind::Torus).unwrap();
        assert_eq!(g.bond_count(), 18);
        assert_eq!(g.bonds().iter().filter(|b| b.wrap).count(), 6);
        let census = bond_census(&g);
        assert_eq!(census.cut, 6);
        assert_eq!(census.surface_faces, 12);
    }

    #[test]
    fn small_torus_rejected() {
        let err = build_geometry(&spec(&[2, 2]), GeometryKind::Torus).unwrap_err();
        assert!(matches!(err, Error::SideTooSmall { side: 2, minimum: 3, .. }));
    }

    #[test]
    fn zero_dimension_rejected() {
        assert_eq!(LatticeSpec::new(vec![]).unwrap_err(), Error::EmptyDimension);
    }

    #[test]
    fn cut_unfolds_torus_to_free_block() {
        for sides in [vec![4usize], vec![3, 3], vec![3, 4], vec![3, 3, 3]] {
            let s = spec(&sides);
            let torus = build_geometry(&s, GeometryKind::Torus).unwrap();
            let free = build_geometry(&s, GeometryKind::FreeBlock).unwrap();
            let cut = cut_set(&torus).unwrap();
            assert_eq!(cut.len(), s.cross_sections());
            let residual: Vec<Bond> = torus
                .bonds()
                .iter()
                .enumerate()
                .filter(|(i, _)| !cut.contains(i))
                .map(|(_, b)| *b)
                .collect();
            let free_bonds: Vec<Bond> = free
                .bonds()
                .iter()
                .map(|b| Bond { wrap: false, ..*b })
                .collect();
            assert_eq!(residual, free_bonds);
        }
    }

    #[test]
    fn cut_set_requires_torus() {
        let g = build_geometry(&spec(&[3, 3]), GeometryKind::FreeBlock).unwrap();
        assert_eq!(cut_set(&g).unwrap_err(), Error::NotATorus);
        let m = magnified_partition(&spec(&[3, 3]), 2).unwrap();
        assert_eq!(cut_set(&m).unwrap_err(), Error::NotATorus);
    }

    #[test]
    fn one_dimensional_magnification() {
        let g = magnified_partition(&spec(&[3]), 2).unwrap();
        assert_eq!(g.site_count(), 6);
        assert_eq!(g.bond_count(), 6);
        let census = bond_census(&g);
        assert_eq!(census.blocks, 2);
        assert_eq!(census.interior_per_block, 2);
        assert_eq!(census.corridor, 2);
    }

    #[test]
    fn two_dimensional_magnification() {
        let g = magnified_partition(&spec(&[3, 3]), 2).unwrap();
        assert_eq!(g.bond_count(), 72);
        let census = bond_census(&g);
        assert_eq!(census.corridor, 24);
        assert_eq!(census.blocks, 4);
        assert_eq!(census.interior_per_block, 12);
        // 2|C| = k^d·|∂Λ|
        assert_eq!(2 * census.corridor, 4 * census.surface_faces);
    }

    #[test]
    fn unit_magnification_corridor_is_the_cut() {
        for sides in [vec![4usize], vec![3, 3], vec![3, 4, 5]] {
            let s = spec(&sides);
            let torus = build_geometry(&s, GeometryKind::Torus).unwrap();
            let mag = magnified_partition(&s, 1).unwrap();
            assert_eq!(torus.bonds(), mag.bonds());
            assert_eq!(cut_set(&torus).unwrap(), corridor_set(&mag).unwrap());
        }
    }

    #[test]
    fn block_interiors_are_free_block_copies() {
        let s = spec(&[3, 3]);
        let free = build_geometry(&s, GeometryKind::FreeBlock).unwrap();
        let mag = magnified_partition(&s, 2).unwrap();
        let census = bond_census(&mag);
        for block in 0..census.blocks {
            // Collect the block's interior bonds as coordinate offsets
            // relative to the block origin and compare with the free block.
            let mut offsets: Vec<(usize, usize, usize)> = Vec::new();
            let mut ca = vec![0usize; 2];
            let mut cb = vec![0usize; 2];
            let origin = |b: usize| -> (usize, usize) {
                // blocks indexed lexicographically, axis 0 fastest
                (b % 2 * 3, b / 2 * 3)
            };
            let (ox, oy) = origin(block);
            for (bond, role) in mag.bonds().iter().zip(mag.roles()) {
                if *role != BondRole::BlockInterior(block) {
                    continue;
                }
                site_coords(bond.site_a, mag.sides(), &mut ca);
                site_coords(bond.site_b, mag.sides(), &mut cb);
                let a = (ca[0] - ox) + 3 * (ca[1] - oy);
                let b = (cb[0] - ox) + 3 * (cb[1] - oy);
                offsets.push((bond.direction, a.min(b), a.max(b)));
            }
            offsets.sort_unstable();
            let free_bonds: Vec<(usize, usize, usize)> = free
                .bonds()
                .iter()
                .map(|b| (b.direction, b.site_a, b.site_b))
                .collect();
            assert_eq!(offsets, free_bonds, "block {block}");
        }
    }

    #[test]
    fn three_dimensional_cut_count() {
        let g = build_geometry(&spec(&[3, 3, 3]), GeometryKind::Torus).unwrap();
        let census = bond_census(&g);
        assert_eq!(g.bond_count(), 81);
        assert_eq!(census.cut, 27);
        // Brute-force recount: endpoints differ by L_i−1 along their axis.
        let mut wraps = 0;
        let mut ca = vec![0usize; 3];
        let mut cb = vec![0usize; 3];
        for bond in g.bonds() {
            site_coords(bond.site_a, g.sides(), &mut ca);
            site_coords(bond.site_b, g.sides(), &mut cb);
            let delta = ca[bond.direction].abs_diff(cb[bond.direction]);
            if delta == g.sides()[bond.direction] - 1 {
                wraps += 1;
                assert!(bond.wrap);
            }
        }
        assert_eq!(wraps, 27);
    }

    #[test]
    fn free_block_bond_formula() {
        let g = build_geometry(&spec(&[4, 2]), GeometryKind::FreeBlock).unwrap();
        assert_eq!(g.bond_count(), 10); // 3·2 + 1·4
    }

    proptest! {
        #[test]
        fn torus_sites_have_full_degree(sides in proptest::collection::vec(3usize..6, 1..=3)) {
            let s = LatticeSpec::new(sides).unwrap();
            let g = build_geometry(&s, GeometryKind::Torus).unwrap();
            prop_assert_eq!(g.bond_count(), g.dim() * g.site_count());
            for adj in g.site_adjacency() {
                prop_assert_eq!(adj.len(), 2 * g.dim());
            }
        }

        #[test]
        fn free_block_degrees_bounded(sides in proptest::collection::vec(2usize..5, 1..=3)) {
            let s = LatticeSpec::new(sides).unwrap();
            let g = build_geometry(&s, GeometryKind::FreeBlock).unwrap();
            let expected: usize = (0..s.dim())
                .map(|i| (s.sides()[i] - 1) * s.site_count() / s.sides()[i])
                .sum();
            prop_assert_eq!(g.bond_count(), expected);
            for adj in g.site_adjacency() {
                prop_assert!(adj.len() >= s.dim() && adj.len() <= 2 * s.dim());
            }
        }

        #[test]
        fn corridor_count_matches_formula(
            sides in proptest::collection::vec(3usize..5, 1..=2),
            k in 1usize..=3,
        ) {
            let s = LatticeSpec::new(sides).unwrap();
            let g = magnified_partition(&s, k).unwrap();
            let census = bond_census(&g);
            let kd = k.pow(s.dim() as u32);
            prop_assert_eq!(census.corridor, kd * s.cross_sections());
            prop_assert_eq!(2 * census.corridor, kd * census.surface_faces);
            prop_assert_eq!(
                census.interior_per_block * census.blocks + census.corridor,
                census.bonds
            );
        }

        #[test]
        fn bond_lists_deterministic_and_sorted(
            sides in proptest::collection::vec(3usize..6, 1..=2),
        ) {
            let s = LatticeSpec::new(sides).unwrap();
            let a = build_geometry(&s, GeometryKind::Torus).unwrap();
            let b = build_geometry(&s, GeometryKind::Torus).unwrap();
            prop_assert_eq!(a.bonds(), b.bonds());
            for pair in a.bonds().windows(2) {
                let ka = (pair[0].direction, pair[0].site_a, pair[0].site_b);
                let kb = (pair[1].direction, pair[1].site_a, pair[1].site_b);
                prop_assert!(ka < kb);
            }
            for bond in a.bonds() {
                prop_assert!(bond.site_a < bond.site_b);
            }
        }
    }
}
