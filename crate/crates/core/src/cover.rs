//! Finite covers of a mesh by cell subsets, with every nonempty multi-index
//! intersection and the restriction matrices between nested intersections.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;
use crate::mesh::{extract_submesh, Mesh, SubMesh};

/// Strictly increasing tuple of cover-set indices.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() || indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::UnknownIndex(indices));
        }
        Ok(Self(indices))
    }

    pub fn single(i: usize) -> Self {
        Self(vec![i])
    }

    /// Sorts an arbitrary tuple of distinct indices, returning the increasing
    /// multi-index and the sign of the sorting permutation. Repeated indices
    /// give `None` (the antisymmetric extension vanishes there).
    pub fn oriented(indices: &[usize]) -> Option<(Self, i8)> {
        let mut v = indices.to_vec();
        let mut sign = 1i8;
        // insertion sort counting transpositions
        for i in 1..v.len() {
            let mut j = i;
            while j > 0 && v[j - 1] > v[j] {
                v.swap(j - 1, j);
                sign = -sign;
                j -= 1;
            }
        }
        if v.is_empty() || v.windows(2).any(|w| w[0] == w[1]) {
            return None;
        }
        Some((Self(v), sign))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    /// Čech degree `p`, one less than the tuple length.
    pub fn degree(&self) -> usize {
        self.0.len() - 1
    }

    /// The multi-index with its `j`-th entry removed.
    pub fn omit(&self, j: usize) -> Self {
        let mut v = self.0.clone();
        v.remove(j);
        Self(v)
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// One nonempty intersection `U_i` together with its closed sub-mesh.
#[derive(Clone, Debug)]
pub struct Patch {
    pub index: MultiIndex,
    pub submesh: SubMesh,
}

#[derive(Clone, Debug)]
pub struct Cover {
    mesh: Arc<Mesh>,
    sets: Vec<Vec<usize>>,
    levels: Vec<Vec<Patch>>,
    lookup: HashMap<MultiIndex, (usize, usize)>,
    restrictions: BTreeMap<(usize, MultiIndex, MultiIndex), SparseMatrix>,
}

impl Cover {
    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn num_sets(&self) -> usize {
        self.sets.len()
    }

    pub fn set(&self, i: usize) -> &[usize] {
        &self.sets[i]
    }

    /// Largest `p` with a nonempty `(p+1)`-fold intersection.
    pub fn max_level(&self) -> usize {
        self.levels.len() - 1
    }

    /// Patches of Čech degree `p`, ordered lexicographically by multi-index.
    pub fn level(&self, p: usize) -> &[Patch] {
        self.levels.get(p).map_or(&[], Vec::as_slice)
    }

    pub fn patch(&self, idx: &MultiIndex) -> Option<&Patch> {
        self.lookup.get(idx).map(|&(p, pos)| &self.levels[p][pos])
    }

    /// Position of a multi-index within its level.
    pub fn position(&self, idx: &MultiIndex) -> Option<usize> {
        self.lookup.get(idx).map(|&(_, pos)| pos)
    }

    /// Cells of the intersection named by `idx`; empty when the multi-index
    /// is valid but the intersection is empty.
    pub fn intersection_cells(&self, idx: &MultiIndex) -> Result<Vec<usize>> {
        if idx.indices().iter().any(|&i| i >= self.sets.len()) {
            return Err(Error::UnknownIndex(idx.indices().to_vec()));
        }
        if let Some(patch) = self.patch(idx) {
            return Ok(patch.submesh.cells().to_vec());
        }
        let mut acc: BTreeSet<usize> = self.sets[idx.indices()[0]].iter().copied().collect();
        for &i in &idx.indices()[1..] {
            let other: BTreeSet<usize> = self.sets[i].iter().copied().collect();
            acc = acc.intersection(&other).copied().collect();
        }
        Ok(acc.into_iter().collect())
    }

    /// 0/1 restriction of `q`-cochains from `U_from` to `U_to ⊂ U_from`.
    pub fn restriction(&self, q: usize, from: &MultiIndex, to: &MultiIndex) -> Option<&SparseMatrix> {
        self.restrictions.get(&(q, from.clone(), to.clone()))
    }

    /// Sign of the antisymmetric extension `𝟙_{i,j} = −𝟙_{j,i}` together with
    /// the stored increasing multi-index, or `None` if no such patch exists.
    pub fn oriented_patch(&self, indices: &[usize]) -> Option<(&Patch, i8)> {
        let (idx, sign) = MultiIndex::oriented(indices)?;
        self.patch(&idx).map(|p| (p, sign))
    }

    /// Whether every intersection is all of the mesh.
    pub fn is_full_overlap(&self) -> bool {
        let n = self.mesh.num_cells();
        self.levels.iter().flatten().all(|p| p.submesh.cells().len() == n)
    }
}

/// Builds the cover and all its nonempty intersections.
pub fn build_cover(mesh: &Arc<Mesh>, sets: Vec<Vec<usize>>) -> Result<Cover> {
    if sets.is_empty() {
        return Err(Error::EmptyCover);
    }
    let ncells = mesh.num_cells();
    let mut normalized = Vec::with_capacity(sets.len());
    let mut covered = vec![false; ncells];
    for (i, set) in sets.into_iter().enumerate() {
        let s: BTreeSet<usize> = set.into_iter().collect();
        if s.is_empty() {
            return Err(Error::EmptySet(i));
        }
        for &c in &s {
            *covered.get_mut(c).ok_or(Error::InvalidCell(c))? = true;
        }
        normalized.push(s.into_iter().collect::<Vec<_>>());
    }
    if let Some(missing) = covered.iter().position(|&c| !c) {
        return Err(Error::NotACover(missing));
    }

    // level p+1 extends each level-p intersection by a larger set index
    let mut raw_levels: Vec<Vec<(Vec<usize>, Vec<usize>)>> =
        vec![normalized.iter().enumerate().map(|(i, s)| (vec![i], s.clone())).collect()];
    loop {
        let last = raw_levels.last().unwrap();
        let mut next = Vec::new();
        for (idx, cells) in last {
            let top = *idx.last().unwrap();
            for j in top + 1..normalized.len() {
                let inter = intersect_sorted(cells, &normalized[j]);
                if !inter.is_empty() {
                    let mut ext = idx.clone();
                    ext.push(j);
                    next.push((ext, inter));
                }
            }
        }
        if next.is_empty() {
            break;
        }
        next.sort();
        raw_levels.push(next);
    }

    let levels: Vec<Vec<Patch>> = raw_levels
        .into_iter()
        .map(|level| {
            level
                .into_iter()
                .map(|(idx, cells)| {
                    Ok(Patch { index: MultiIndex(idx), submesh: extract_submesh(mesh, &cells)? })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut lookup = HashMap::new();
    for (p, level) in levels.iter().enumerate() {
        for (pos, patch) in level.iter().enumerate() {
            lookup.insert(patch.index.clone(), (p, pos));
        }
    }

    let mut restrictions = BTreeMap::new();
    for level in levels.iter().skip(1) {
        for patch in level {
            for j in 0..patch.index.0.len() {
                let from_idx = patch.index.omit(j);
                let &(fp, fpos) = lookup.get(&from_idx).expect("sub-intersections of nonempty sets are nonempty");
                let from = &levels[fp][fpos].submesh;
                for q in 0..=mesh.dim() {
                    let triplets = patch.submesh.dof_map(q).iter().enumerate().map(|(row, &parent)| {
                        let col = from.local_index(q, parent).expect("nested closures");
                        (row, col, 1.0)
                    });
                    let r = SparseMatrix::from_triplets(
                        patch.submesh.num_simplices(q),
                        from.num_simplices(q),
                        triplets,
                    )?;
                    restrictions.insert((q, from_idx.clone(), patch.index.clone()), r);
                }
            }
        }
    }

    Ok(Cover { mesh: Arc::clone(mesh), sets: normalized, levels, lookup, restrictions })
}

fn intersect_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}
