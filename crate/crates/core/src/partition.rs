//! Nonoverlapping subdomain decomposition and coarse agglomeration.
//!
//! Subdomains come from recursive coordinate bisection of element centroids,
//! followed by a connectivity repair pass. Coarse elements (agglomerates) are
//! obtained by bisecting each subdomain again, so they never cross a
//! subdomain boundary.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    subdomain_of: Vec<usize>,
    agglomerate_of: Vec<usize>,
    n_subdomains: usize,
    n_coarse: usize,
    adjacency: Vec<Vec<usize>>,
    max_neighbors: usize,
}

impl Partition {
    /// Validates and wraps precomputed maps.
    pub fn new(mesh: &Mesh, subdomain_of: Vec<usize>, agglomerate_of: Vec<usize>) -> Result<Self> {
        Error::check_len(mesh.n_elements(), subdomain_of.len())?;
        Error::check_len(mesh.n_elements(), agglomerate_of.len())?;
        let n_subdomains = count_labels(&subdomain_of, "subdomain")?;
        let n_coarse = count_labels(&agglomerate_of, "agglomerate")?;
        let mut owner = vec![usize::MAX; n_coarse];
        for (&s, &a) in subdomain_of.iter().zip(&agglomerate_of) {
            if owner[a] == usize::MAX {
                owner[a] = s;
            } else if owner[a] != s {
                return Err(Error::Partition(format!(
                    "agglomerate {a} spans subdomains {} and {s}",
                    owner[a]
                )));
            }
        }
        let (adjacency, max_neighbors) = subdomain_adjacency(mesh, &subdomain_of);
        Ok(Self {
            subdomain_of,
            agglomerate_of,
            n_subdomains,
            n_coarse,
            adjacency,
            max_neighbors,
        })
    }

    /// Partitions into `n_subdomains` parts, each split into `parts_per_subdomain` agglomerates.
    pub fn build(
        mesh: &Mesh,
        n_subdomains: usize,
        parts_per_subdomain: usize,
        respect_materials: bool,
        seed: u64,
    ) -> Result<Self> {
        let sub = partition_mesh(mesh, n_subdomains, respect_materials, seed)?;
        let agg = agglomerate_coarse(mesh, &sub, parts_per_subdomain, seed)?;
        Self::new(mesh, sub, agg)
    }

    pub fn subdomain_of(&self) -> &[usize] {
        &self.subdomain_of
    }

    pub fn agglomerate_of(&self) -> &[usize] {
        &self.agglomerate_of
    }

    pub fn n_subdomains(&self) -> usize {
        self.n_subdomains
    }

    pub fn n_coarse(&self) -> usize {
        self.n_coarse
    }

    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adjacency
    }

    /// Largest number of edge-adjacent subdomains (`N_S`).
    pub fn max_neighbors(&self) -> usize {
        self.max_neighbors
    }

    pub fn subdomain_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_subdomains];
        for &s in &self.subdomain_of {
            sizes[s] += 1;
        }
        sizes
    }

    pub fn agglomerate_elements(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_coarse];
        for (k, &a) in self.agglomerate_of.iter().enumerate() {
            out[a].push(k);
        }
        out
    }

    /// Long over short side of each agglomerate's bounding box. Shape
    /// regularity of agglomerates is not enforced; this is for reporting.
    pub fn agglomerate_aspect_ratios(&self, mesh: &Mesh) -> Vec<f64> {
        let mut lo = vec![[f64::INFINITY; 2]; self.n_coarse];
        let mut hi = vec![[f64::NEG_INFINITY; 2]; self.n_coarse];
        for (k, &a) in self.agglomerate_of.iter().enumerate() {
            for v in mesh.corners(k) {
                for d in 0..2 {
                    lo[a][d] = lo[a][d].min(v[d]);
                    hi[a][d] = hi[a][d].max(v[d]);
                }
            }
        }
        lo.iter()
            .zip(&hi)
            .map(|(l, h)| {
                let (w, t) = (h[0] - l[0], h[1] - l[1]);
                w.max(t) / w.min(t)
            })
            .collect()
    }

    /// One `subdomain agglomerate` line per element.
    pub fn to_dump(&self) -> String {
        let mut s = String::with_capacity(self.subdomain_of.len() * 8);
        for (a, b) in self.subdomain_of.iter().zip(&self.agglomerate_of) {
            let _ = writeln!(s, "{a} {b}");
        }
        s
    }

    pub fn save_dump(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_dump())?;
        Ok(())
    }
}

/// Parses a partition dump into `(subdomain_of, agglomerate_of)`.
pub fn parse_partition_dump(text: &str) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut sub = Vec::new();
    let mut agg = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 2 {
            return Err(Error::parse(i + 1, "expected `subdomain agglomerate`"));
        }
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::parse(i + 1, format!("invalid index `{s}`")))
        };
        sub.push(parse(f[0])?);
        agg.push(parse(f[1])?);
    }
    Ok((sub, agg))
}

fn count_labels(labels: &[usize], what: &str) -> Result<usize> {
    let n = labels.iter().max().map_or(0, |m| m + 1);
    let mut used = vec![false; n];
    for &l in labels {
        used[l] = true;
    }
    if let Some(missing) = used.iter().position(|u| !u) {
        return Err(Error::Partition(format!("{what} {missing} is empty")));
    }
    Ok(n)
}

/// Subdomains sharing at least one interior face, and the maximum degree.
pub fn subdomain_adjacency(mesh: &Mesh, subdomain_of: &[usize]) -> (Vec<Vec<usize>>, usize) {
    let n = subdomain_of.iter().max().map_or(0, |m| m + 1);
    let mut adj = vec![Vec::new(); n];
    for (k, nbrs) in mesh.element_neighbors().iter().enumerate() {
        for &j in nbrs {
            let (a, b) = (subdomain_of[k], subdomain_of[j]);
            if a != b {
                adj[a].push(b);
            }
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    let max = adj.iter().map(Vec::len).max().unwrap_or(0);
    (adj, max)
}

/// splitmix64, used to break ties between collinear centroids.
fn tie_break(seed: u64, k: usize) -> u64 {
    let mut z = seed.wrapping_add((k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Recursive coordinate multisection of `elems` into `parts` pieces labelled
/// `first_label..first_label + parts`.
///
/// The longest bounding-box axis is cut into `c ≈ √(parts · aspect)` slabs
/// holding element counts proportional to their part counts, so that the
/// final pieces are close to square. With `c = 2` this is plain bisection.
fn bisect(
    elems: &mut [usize],
    parts: usize,
    centroids: &[Point],
    snap: f64,
    seed: u64,
    first_label: usize,
    out: &mut [usize],
) {
    if parts <= 1 || elems.len() <= 1 {
        for &k in elems.iter() {
            out[k] = first_label;
        }
        return;
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for &k in elems.iter() {
        for d in 0..2 {
            lo[d] = lo[d].min(centroids[k][d]);
            hi[d] = hi[d].max(centroids[k][d]);
        }
    }
    let extent = [hi[0] - lo[0], hi[1] - lo[1]];
    let axis = if extent[0] >= extent[1] { 0 } else { 1 };
    let other = 1 - axis;
    elems.sort_by(|&a, &b| {
        centroids[a][axis]
            .total_cmp(&centroids[b][axis])
            .then(centroids[a][other].total_cmp(&centroids[b][other]))
            .then(tie_break(seed, a).cmp(&tie_break(seed, b)))
    });
    let aspect = extent[axis] / extent[other].max(f64::MIN_POSITIVE);
    let slabs = ((parts as f64 * aspect).sqrt().round() as usize).clamp(2, parts);
    let len = elems.len();
    let mut start = 0;
    let mut done_parts = 0;
    for i in 0..slabs {
        let k = parts / slabs + usize::from(i < parts % slabs);
        let end = if i + 1 == slabs {
            len
        } else {
            let cut = ((len * (done_parts + k)) as f64 / parts as f64).round() as usize;
            // every remaining part keeps at least one element
            let (lo, hi) = (
                (start + k).min(len),
                len - (parts - done_parts - k).min(len),
            );
            // a shift is shared by all parts of the two slabs it separates
            let next = parts / slabs + usize::from(i + 1 < parts % slabs);
            let window = (snap * k.min(next) as f64 * len as f64 / parts as f64) as usize;
            snap_cut(
                elems,
                centroids,
                axis,
                cut.clamp(lo, hi),
                window,
                lo.max(1),
                hi,
            )
        };
        bisect(
            &mut elems[start..end],
            k,
            centroids,
            snap,
            seed,
            first_label + done_parts,
            out,
        );
        start = end;
        done_parts += k;
    }
}

/// Largest shifts of a cut, as fractions of the average part size, tried in
/// order until the parts are balanced.
const SNAP_WINDOWS: [f64; 3] = [0.1, 0.05, 0.0];

/// Allowed relative deviation of a part size from the mean.
pub const BALANCE_TOLERANCE: f64 = 0.2;

fn balanced(labels: &[usize], group: &[usize], parts: usize) -> bool {
    let mut sizes: HashMap<usize, usize> = HashMap::new();
    for &k in group {
        *sizes.entry(labels[k]).or_default() += 1;
    }
    let mean = group.len() as f64 / parts as f64;
    sizes.len() == parts
        && sizes
            .values()
            .all(|&s| (s as f64 - mean).abs() <= BALANCE_TOLERANCE * mean + 1.0)
}

/// Moves `cut` by at most `window` positions to the widest gap between
/// consecutive sorted coordinates, so that cuts follow element rows.
fn snap_cut(
    elems: &[usize],
    centroids: &[Point],
    axis: usize,
    cut: usize,
    window: usize,
    lo: usize,
    hi: usize,
) -> usize {
    let from = cut.saturating_sub(window).max(lo);
    let to = (cut + window).min(hi);
    let gap = |c: usize| centroids[elems[c]][axis] - centroids[elems[c - 1]][axis];
    let mut best = cut;
    for c in from..=to {
        let (g, b) = (gap(c), gap(best));
        if g > b * (1.0 + 1e-9) || (g >= b * (1.0 - 1e-9) && c.abs_diff(cut) < best.abs_diff(cut)) {
            best = c;
        }
    }
    best
}

/// Connected components (by shared edges) of `members`.
fn components(members: &[usize], in_set: &[bool], neighbors: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; in_set.len()];
    let mut comps = Vec::new();
    for &start in members {
        if seen[start] {
            continue;
        }
        let mut comp = vec![start];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(k) = queue.pop_front() {
            for &j in &neighbors[k] {
                if in_set[j] && !seen[j] {
                    seen[j] = true;
                    comp.push(j);
                    queue.push_back(j);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps
}

/// Merges every non-largest fragment of a part into the neighboring part
/// (within the same group) sharing the most faces with it. Returns `false`
/// if some fragment has no such neighbor.
fn repair_connectivity(labels: &mut [usize], group: &[usize], neighbors: &[Vec<usize>]) -> bool {
    let n = labels.len();
    let mut in_group = vec![false; n];
    for &k in group {
        in_group[k] = true;
    }
    loop {
        let mut parts: Vec<usize> = group.iter().map(|&k| labels[k]).collect();
        parts.sort_unstable();
        parts.dedup();
        let mut changed = false;
        for &p in &parts {
            let members: Vec<usize> = group.iter().copied().filter(|&k| labels[k] == p).collect();
            let mut in_part = vec![false; n];
            for &k in &members {
                in_part[k] = true;
            }
            let mut comps = components(&members, &in_part, neighbors);
            if comps.len() <= 1 {
                continue;
            }
            // keep the largest (first on ties)
            let keep = (0..comps.len())
                .max_by_key(|&i| (comps[i].len(), usize::MAX - i))
                .unwrap();
            comps.swap(0, keep);
            for frag in &comps[1..] {
                let mut shared: Vec<(usize, usize)> = Vec::new();
                for &k in frag {
                    for &j in &neighbors[k] {
                        if in_group[j] && labels[j] != p {
                            match shared.iter_mut().find(|e| e.0 == labels[j]) {
                                Some(e) => e.1 += 1,
                                None => shared.push((labels[j], 1)),
                            }
                        }
                    }
                }
                let Some(&(target, _)) = shared.iter().max_by_key(|e| (e.1, usize::MAX - e.0))
                else {
                    return false;
                };
                for &k in frag {
                    labels[k] = target;
                }
                changed = true;
            }
        }
        if !changed {
            return true;
        }
    }
}

/// Splits the element set into `n` subdomains.
pub fn partition_mesh(
    mesh: &Mesh,
    n: usize,
    respect_materials: bool,
    seed: u64,
) -> Result<Vec<usize>> {
    let ne = mesh.n_elements();
    if n == 0 || n > ne {
        return Err(Error::Partition(format!(
            "cannot split {ne} elements into {n} subdomains"
        )));
    }
    let centroids: Vec<Point> = (0..ne).map(|k| mesh.centroid(k)).collect();
    let neighbors = mesh.element_neighbors();
    let mut labels = vec![0; ne];

    let groups: Vec<Vec<usize>> = if respect_materials {
        material_components(mesh, &neighbors)
    } else {
        components(&(0..ne).collect::<Vec<_>>(), &vec![true; ne], &neighbors)
    };
    if groups.len() > n {
        return Err(Error::Partition(format!(
            "{} connected material components need at least as many subdomains, got {n}",
            groups.len()
        )));
    }
    let counts = proportional_counts(&groups.iter().map(Vec::len).collect::<Vec<_>>(), n);
    let mut next = 0;
    for (group, &parts) in groups.iter().zip(&counts) {
        if parts > group.len() {
            return Err(Error::Partition(format!(
                "component of {} elements cannot host {parts} subdomains",
                group.len()
            )));
        }
        for snap in SNAP_WINDOWS {
            let mut elems = group.clone();
            bisect(&mut elems, parts, &centroids, snap, seed, next, &mut labels);
            if !repair_connectivity(&mut labels, group, &neighbors) {
                return Err(Error::Partition("connectivity repair failed".into()));
            }
            if balanced(&labels, group, parts) {
                break;
            }
        }
        next += parts;
    }
    Ok(compact_labels(&labels))
}

/// Largest-remainder apportionment of `n` parts, at least one per group.
fn proportional_counts(sizes: &[usize], n: usize) -> Vec<usize> {
    let total: usize = sizes.iter().sum();
    let mut counts: Vec<usize> = sizes.iter().map(|&s| ((s * n) / total).max(1)).collect();
    let mut assigned: usize = counts.iter().sum();
    while assigned > n {
        // remove from the group with the most parts per element
        let i = (0..sizes.len())
            .filter(|&i| counts[i] > 1)
            .max_by(|&a, &b| {
                (counts[a] * sizes[b])
                    .cmp(&(counts[b] * sizes[a]))
                    .then(b.cmp(&a))
            })
            .expect("n >= number of groups");
        counts[i] -= 1;
        assigned -= 1;
    }
    while assigned < n {
        // add to the group with the most elements per part
        let i = (0..sizes.len())
            .max_by(|&a, &b| {
                (sizes[a] * counts[b])
                    .cmp(&(sizes[b] * counts[a]))
                    .then(b.cmp(&a))
            })
            .unwrap();
        counts[i] += 1;
        assigned += 1;
    }
    counts
}

/// Edge-connected components of equal material.
fn material_components(mesh: &Mesh, neighbors: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let ne = mesh.n_elements();
    let mut seen = vec![false; ne];
    let mut out = Vec::new();
    for start in 0..ne {
        if seen[start] {
            continue;
        }
        let m = mesh.material(start);
        let mut comp = vec![start];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(k) = queue.pop_front() {
            for &j in &neighbors[k] {
                if !seen[j] && mesh.material(j) == m {
                    seen[j] = true;
                    comp.push(j);
                    queue.push_back(j);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Renumbers labels to `0..n` in order of first appearance of the smallest element.
fn compact_labels(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

/// Splits every subdomain into `m` edge-connected agglomerates.
pub fn agglomerate_coarse(
    mesh: &Mesh,
    subdomain_of: &[usize],
    m: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    Error::check_len(mesh.n_elements(), subdomain_of.len())?;
    if m == 0 {
        return Err(Error::Agglomeration(
            "parts per subdomain must be at least 1".into(),
        ));
    }
    let n_sub = subdomain_of.iter().max().map_or(0, |x| x + 1);
    let mut members = vec![Vec::new(); n_sub];
    for (k, &s) in subdomain_of.iter().enumerate() {
        members[s].push(k);
    }
    let neighbors = mesh.element_neighbors();
    let centroids: Vec<Point> = (0..mesh.n_elements()).map(|k| mesh.centroid(k)).collect();
    let mut labels = vec![0; mesh.n_elements()];
    let mut next = 0;
    for (s, group) in members.iter().enumerate() {
        if group.is_empty() {
            return Err(Error::Agglomeration(format!("subdomain {s} is empty")));
        }
        let mut in_set = vec![false; mesh.n_elements()];
        for &k in group {
            in_set[k] = true;
        }
        if components(group, &in_set, &neighbors).len() > 1 {
            return Err(Error::Agglomeration(format!(
                "subdomain {s} is not edge-connected"
            )));
        }
        if group.len() < m {
            return Err(Error::Agglomeration(format!(
                "subdomain {s} has {} elements, fewer than {m} agglomerates",
                group.len()
            )));
        }
        let mut elems = group.clone();
        bisect(
            &mut elems,
            m,
            &centroids,
            SNAP_WINDOWS[0],
            seed,
            next,
            &mut labels,
        );
        if !repair_connectivity(&mut labels, group, &neighbors) {
            return Err(Error::Agglomeration(format!(
                "subdomain {s} cannot be split into connected parts"
            )));
        }
        next += m;
    }
    Ok(compact_labels(&labels))
}

/// Edge-connectivity of every labelled set.
pub fn labels_connected(mesh: &Mesh, labels: &[usize]) -> bool {
    let neighbors = mesh.element_neighbors();
    let n = labels.iter().max().map_or(0, |x| x + 1);
    let mut members = vec![Vec::new(); n];
    for (k, &l) in labels.iter().enumerate() {
        members[l].push(k);
    }
    members.iter().all(|group| {
        let mut in_set = vec![false; labels.len()];
        for &k in group {
            in_set[k] = true;
        }
        components(group, &in_set, &neighbors).len() <= 1
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_uniform_square_mesh;

    #[test]
    fn single_subdomain() {
        let mesh = build_uniform_square_mesh(4);
        let p = Partition::build(&mesh, 1, 1, false, 0).unwrap();
        assert!(p.subdomain_of().iter().all(|&s| s == 0));
        assert_eq!(p.max_neighbors(), 0);
        assert!(p.adjacency()[0].is_empty());
    }

    #[test]
    fn balance_for_eleven_parts() {
        let mesh = build_uniform_square_mesh(24);
        let p = Partition::build(&mesh, 11, 1, false, 7).unwrap();
        assert_eq!(p.n_subdomains(), 11);
        for s in p.subdomain_sizes() {
            assert!((83..=125).contains(&s), "size {s}");
        }
        assert!(labels_connected(&mesh, p.subdomain_of()));
    }

    #[test]
    fn coarse_counts() {
        let mesh = build_uniform_square_mesh(32);
        let one = Partition::build(&mesh, 32, 1, false, 0).unwrap();
        assert_eq!(one.n_coarse(), 32);
        assert_eq!(one.agglomerate_of(), one.subdomain_of());
        let five = Partition::build(&mesh, 32, 5, false, 0).unwrap();
        assert_eq!(five.n_coarse(), 160);
        assert!(labels_connected(&mesh, five.agglomerate_of()));
    }

    #[test]
    fn four_squares_have_no_corner_adjacency() {
        let mesh = build_uniform_square_mesh(4);
        let sub: Vec<usize> = (0..mesh.n_elements())
            .map(|k| {
                let c = mesh.centroid(k);
                (c[0] > 0.5) as usize + 2 * (c[1] > 0.5) as usize
            })
            .collect();
        let (adj, ns) = subdomain_adjacency(&mesh, &sub);
        // diagonal pairs (0,3) and (1,2) only touch at the center vertex
        assert_eq!(adj[0], vec![1, 2]);
        assert_eq!(adj[3], vec![1, 2]);
        assert_eq!(adj[1], vec![0, 3]);
        assert_eq!(ns, 2);
    }

    #[test]
    fn respecting_materials() {
        let mesh = build_uniform_square_mesh(24)
            .with_materials(|c| (c[1] > 1.0 / 3.0 && c[1] < 2.0 / 3.0) as u32);
        let p = Partition::build(&mesh, 11, 1, true, 1).unwrap();
        let mut mat = vec![None; p.n_subdomains()];
        for (k, &s) in p.subdomain_of().iter().enumerate() {
            let m = mesh.material(k);
            assert_eq!(*mat[s].get_or_insert(m), m);
        }
        assert!(matches!(
            partition_mesh(&mesh, 2, true, 0),
            Err(Error::Partition(_))
        ));
    }

    #[test]
    fn deterministic() {
        let mesh = build_uniform_square_mesh(12);
        let a = Partition::build(&mesh, 7, 3, false, 42).unwrap();
        let b = Partition::build(&mesh, 7, 3, false, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn aspect_ratios() {
        let mesh = build_uniform_square_mesh(4);
        let one = Partition::build(&mesh, 1, 1, false, 0).unwrap();
        assert_eq!(one.agglomerate_aspect_ratios(&mesh), vec![1.0]);
        let strips = Partition::new(&mesh, vec![0; 32], (0..32).map(|k| k / 8).collect()).unwrap();
        assert_eq!(strips.agglomerate_aspect_ratios(&mesh), vec![4.0; 4]);
    }

    #[test]
    fn dump_round_trip() {
        let mesh = build_uniform_square_mesh(6);
        let p = Partition::build(&mesh, 4, 2, false, 3).unwrap();
        let (s, a) = parse_partition_dump(&p.to_dump()).unwrap();
        assert_eq!(Partition::new(&mesh, s, a).unwrap(), p);
        assert!(matches!(
            parse_partition_dump("0 1\n2\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn invalid_nesting_rejected() {
        let mesh = build_uniform_square_mesh(1);
        assert!(Partition::new(&mesh, vec![0, 1], vec![0, 0]).is_err());
        assert!(Partition::new(&mesh, vec![0, 2], vec![0, 1]).is_err());
    }

    #[test]
    fn proportional_apportionment() {
        assert_eq!(proportional_counts(&[10, 10, 10], 3), vec![1, 1, 1]);
        assert_eq!(
            proportional_counts(&[384, 384, 384], 11)
                .iter()
                .sum::<usize>(),
            11
        );
        assert_eq!(proportional_counts(&[1, 99], 2), vec![1, 1]);
        assert_eq!(proportional_counts(&[1, 99], 10), vec![1, 9]);
    }
}
