//! Candidate assignments and the ground set they form.
//!
//! An element is one `(user, RB allocation, precoder)` triple. A user may be
//! given at most two chunks of contiguous RBs, and spreads its power budget
//! evenly over every RB it is given.

use std::collections::HashMap;
use std::fmt;
use std::ops::Range;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMat;

/// Index of an element in its ground set. All tie-breaking uses this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ElementId(pub u32);

impl ElementId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

/// A run of contiguous RBs, `start..start + len`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Chunk {
    pub start: usize,
    pub len: usize,
}

impl Chunk {
    pub fn end(&self) -> usize {
        self.start + self.len
    }

    pub fn range(&self) -> Range<usize> {
        self.start..self.end()
    }
}

/// RB occupancy of one element: one chunk, or two chunks separated by at
/// least one unused RB.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Allocation {
    n_rbs: usize,
    first: Chunk,
    second: Option<Chunk>,
}

impl Allocation {
    pub fn single(n_rbs: usize, chunk: Chunk) -> Result<Self> {
        Self::checked(n_rbs, chunk, None)
    }

    pub fn double(n_rbs: usize, first: Chunk, second: Chunk) -> Result<Self> {
        Self::checked(n_rbs, first, Some(second))
    }

    fn checked(n_rbs: usize, first: Chunk, second: Option<Chunk>) -> Result<Self> {
        let ok_chunk = |c: &Chunk| c.len >= 1 && c.end() <= n_rbs;
        let valid =
            ok_chunk(&first) && second.is_none_or(|s| ok_chunk(&s) && s.start > first.end());
        if !valid {
            return Err(Error::invalid(format!(
                "invalid allocation {first:?}/{second:?} over {n_rbs} RBs"
            )));
        }
        Ok(Allocation {
            n_rbs,
            first,
            second,
        })
    }

    /// Parses an occupancy vector, enforcing the chunk rule.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::invalid("allocation bits must be 0 or 1"));
        }
        let mut chunks = Vec::new();
        let mut i = 0;
        while i < bits.len() {
            if bits[i] == 1 {
                let start = i;
                while i < bits.len() && bits[i] == 1 {
                    i += 1;
                }
                chunks.push(Chunk {
                    start,
                    len: i - start,
                });
            } else {
                i += 1;
            }
        }
        match chunks.as_slice() {
            [a] => Self::single(bits.len(), *a),
            [a, b] => Self::double(bits.len(), *a, *b),
            [] => Err(Error::invalid("allocation must use at least one RB")),
            _ => Err(Error::invalid("allocation has more than two chunks")),
        }
    }

    pub fn n_rbs(&self) -> usize {
        self.n_rbs
    }

    pub fn chunks(&self) -> impl Iterator<Item = Chunk> + '_ {
        std::iter::once(self.first).chain(self.second)
    }

    pub fn first_chunk(&self) -> Chunk {
        self.first
    }

    pub fn second_chunk(&self) -> Option<Chunk> {
        self.second
    }

    pub fn is_two_chunk(&self) -> bool {
        self.second.is_some()
    }

    /// Number of RBs used.
    pub fn size(&self) -> usize {
        self.chunks().map(|c| c.len).sum()
    }

    pub fn contains(&self, rb: usize) -> bool {
        self.chunks().any(|c| c.range().contains(&rb))
    }

    /// Occupied RB indices in increasing order.
    pub fn rbs(&self) -> impl Iterator<Item = usize> + '_ {
        self.chunks().flat_map(|c| c.range())
    }

    pub fn bits(&self) -> Vec<u8> {
        (0..self.n_rbs)
            .map(|i| u8::from(self.contains(i)))
            .collect()
    }
}

impl fmt::Display for Allocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// All valid allocations over `n_rbs` RBs.
///
/// Ordered by first-chunk start, first-chunk end, then second-chunk start and
/// end, with the one-chunk allocation ahead of the two-chunk ones sharing its
/// first chunk.
pub fn enumerate_allocations(n_rbs: usize) -> Result<Vec<Allocation>> {
    if n_rbs == 0 {
        return Err(Error::invalid("need at least one RB"));
    }
    let mut out = Vec::new();
    for s1 in 0..n_rbs {
        for e1 in (s1 + 1)..=n_rbs {
            let first = Chunk {
                start: s1,
                len: e1 - s1,
            };
            out.push(Allocation {
                n_rbs,
                first,
                second: None,
            });
            for s2 in (e1 + 1)..n_rbs {
                for e2 in (s2 + 1)..=n_rbs {
                    let second = Chunk {
                        start: s2,
                        len: e2 - s2,
                    };
                    out.push(Allocation {
                        n_rbs,
                        first,
                        second: Some(second),
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Per-RB power when `total_power` is split evenly over the allocation.
pub fn element_psd(allocation: &Allocation, total_power: f64) -> f64 {
    total_power / allocation.size() as f64
}

/// Precoding matrices shared by every user, each `n_t x streams`.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    matrices: Vec<CMat>,
}

impl Codebook {
    pub fn new(matrices: Vec<CMat>) -> Result<Self> {
        let Some(first) = matrices.first() else {
            return Err(Error::invalid("codebook must not be empty"));
        };
        let n_t = first.rows();
        for (i, w) in matrices.iter().enumerate() {
            if w.rows() != n_t {
                return Err(Error::invalid(format!(
                    "codebook matrix {i} has {} rows, expected {n_t}",
                    w.rows()
                )));
            }
            if w.cols() == 0 || w.cols() > n_t {
                return Err(Error::invalid(format!(
                    "codebook matrix {i} has {} streams for {n_t} antennas",
                    w.cols()
                )));
            }
            if !w.is_finite() {
                return Err(Error::invalid(format!("codebook matrix {i} is not finite")));
            }
        }
        Ok(Codebook { matrices })
    }

    /// Antenna selection: one column of the `n_t x n_t` identity per entry.
    pub fn antenna_selection(n_t: usize) -> Result<Self> {
        let eye = CMat::identity(n_t);
        Self::new((0..n_t).map(|j| eye.column(j)).collect())
    }

    /// The single scalar precoder `[1]`.
    pub fn scalar() -> Self {
        Codebook {
            matrices: vec![CMat::column_vector(&[Complex64::new(1.0, 0.0)])],
        }
    }

    pub fn n_t(&self) -> usize {
        self.matrices[0].rows()
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn get(&self, i: usize) -> &CMat {
        &self.matrices[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &CMat> {
        self.matrices.iter()
    }
}

/// Static per-user parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct UserProfile {
    /// Buffer size in bits; `f64::INFINITY` (or anything large enough) means
    /// uncapped.
    pub queue: f64,
    pub power: f64,
    pub constellation_size: u32,
    pub n_t: usize,
}

impl UserProfile {
    pub fn backlogged(power: f64, n_t: usize) -> Self {
        UserProfile {
            queue: f64::INFINITY,
            power,
            constellation_size: 4,
            n_t,
        }
    }

    fn validate(&self, user: usize) -> Result<()> {
        if !(self.power > 0.0) || !self.power.is_finite() {
            return Err(Error::invalid(format!(
                "user {user}: power must be positive"
            )));
        }
        if !(self.queue >= 0.0) {
            return Err(Error::invalid(format!(
                "user {user}: queue must be nonnegative"
            )));
        }
        if self.constellation_size < 2 {
            return Err(Error::invalid(format!(
                "user {user}: constellation size must be at least 2"
            )));
        }
        if self.n_t == 0 {
            return Err(Error::invalid(format!(
                "user {user}: needs a transmit antenna"
            )));
        }
        Ok(())
    }
}

/// Channel matrices `H[u][n]`, each `n_r x n_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    n_users: usize,
    n_rbs: usize,
    n_r: usize,
    n_t: usize,
    matrices: Vec<CMat>,
}

impl ChannelSet {
    /// `matrices` is user-major: entry `u * n_rbs + n` is user `u` on RB `n`.
    pub fn new(n_users: usize, n_rbs: usize, matrices: Vec<CMat>) -> Result<Self> {
        if matrices.len() != n_users * n_rbs || matrices.is_empty() {
            return Err(Error::invalid(format!(
                "expected {} channel matrices, got {}",
                n_users * n_rbs,
                matrices.len()
            )));
        }
        let (n_r, n_t) = (matrices[0].rows(), matrices[0].cols());
        for (i, h) in matrices.iter().enumerate() {
            if (h.rows(), h.cols()) != (n_r, n_t) {
                return Err(Error::invalid(format!(
                    "channel {i} is {}x{}, expected {n_r}x{n_t}",
                    h.rows(),
                    h.cols()
                )));
            }
            if !h.is_finite() {
                return Err(Error::Numeric(format!(
                    "channel of user {} on RB {} has non-finite entries",
                    i / n_rbs,
                    i % n_rbs
                )));
            }
        }
        Ok(ChannelSet {
            n_users,
            n_rbs,
            n_r,
            n_t,
            matrices,
        })
    }

    pub fn get(&self, user: usize, rb: usize) -> &CMat {
        &self.matrices[user * self.n_rbs + rb]
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_rbs(&self) -> usize {
        self.n_rbs
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub user: usize,
    /// Index into [`GroundSet::allocations`].
    pub allocation: usize,
    /// Index into the codebook.
    pub precoder: usize,
    pub psd: f64,
}

/// Every candidate element, user-major, then allocation, then precoder.
#[derive(Debug, Clone)]
pub struct GroundSet {
    n_rbs: usize,
    codebook: Codebook,
    profiles: Vec<UserProfile>,
    allocations: Vec<Allocation>,
    elements: Vec<Element>,
    single_chunk_index: HashMap<Chunk, usize>,
}

impl GroundSet {
    pub fn build(codebook: Codebook, n_rbs: usize, profiles: Vec<UserProfile>) -> Result<Self> {
        if profiles.is_empty() {
            return Err(Error::invalid("need at least one user"));
        }
        for (u, p) in profiles.iter().enumerate() {
            p.validate(u)?;
            if p.n_t != codebook.n_t() {
                return Err(Error::invalid(format!(
                    "user {u} has {} transmit antennas but the codebook expects {}",
                    p.n_t,
                    codebook.n_t()
                )));
            }
        }
        let allocations = enumerate_allocations(n_rbs)?;
        let total = profiles.len() * allocations.len() * codebook.len();
        if total > u32::MAX as usize {
            return Err(Error::invalid("ground set too large"));
        }
        let mut elements = Vec::with_capacity(total);
        for (user, p) in profiles.iter().enumerate() {
            for (a, alloc) in allocations.iter().enumerate() {
                let psd = element_psd(alloc, p.power);
                for precoder in 0..codebook.len() {
                    elements.push(Element {
                        user,
                        allocation: a,
                        precoder,
                        psd,
                    });
                }
            }
        }
        let single_chunk_index = allocations
            .iter()
            .enumerate()
            .filter(|(_, a)| !a.is_two_chunk())
            .map(|(i, a)| (a.first_chunk(), i))
            .collect();
        Ok(GroundSet {
            n_rbs,
            codebook,
            profiles,
            allocations,
            elements,
            single_chunk_index,
        })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn n_users(&self) -> usize {
        self.profiles.len()
    }

    pub fn n_rbs(&self) -> usize {
        self.n_rbs
    }

    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    pub fn profiles(&self) -> &[UserProfile] {
        &self.profiles
    }

    pub fn allocations(&self) -> &[Allocation] {
        &self.allocations
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn element(&self, id: ElementId) -> &Element {
        &self.elements[id.index()]
    }

    pub fn allocation_of(&self, id: ElementId) -> &Allocation {
        &self.allocations[self.element(id).allocation]
    }

    pub fn ids(&self) -> impl Iterator<Item = ElementId> + '_ {
        (0..self.elements.len() as u32).map(ElementId)
    }

    fn per_user(&self) -> usize {
        self.allocations.len() * self.codebook.len()
    }

    /// Element ids belonging to `user`.
    pub fn user_elements(&self, user: usize) -> Range<usize> {
        let per = self.per_user();
        user * per..(user + 1) * per
    }

    pub fn id_of(&self, user: usize, allocation: usize, precoder: usize) -> ElementId {
        ElementId((user * self.per_user() + allocation * self.codebook.len() + precoder) as u32)
    }

    /// For a two-chunk element, the two one-chunk elements of the same user
    /// and precoder that cover its chunks.
    pub fn constituents(&self, id: ElementId) -> Option<(ElementId, ElementId)> {
        let e = self.element(id);
        let alloc = &self.allocations[e.allocation];
        let second = alloc.second_chunk()?;
        let a = self.single_chunk_index[&alloc.first_chunk()];
        let b = self.single_chunk_index[&second];
        Some((
            self.id_of(e.user, a, e.precoder),
            self.id_of(e.user, b, e.precoder),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chunk_rule_count(n: usize) -> usize {
        (1u32..(1 << n))
            .filter(|mask| {
                let bits: Vec<u8> = (0..n).map(|i| ((mask >> i) & 1) as u8).collect();
                let runs = bits.windows(2).filter(|w| w[0] == 0 && w[1] == 1).count()
                    + usize::from(bits[0] == 1);
                runs <= 2
            })
            .count()
    }

    #[test]
    fn small_allocation_counts() {
        assert_eq!(enumerate_allocations(1).unwrap().len(), 1);
        let two: Vec<String> = enumerate_allocations(2)
            .unwrap()
            .iter()
            .map(|a| a.to_string())
            .collect();
        assert_eq!(two, ["10", "11", "01"]);
        let three = enumerate_allocations(3).unwrap();
        assert_eq!(three.len(), 7);
        assert_eq!(three.iter().filter(|a| a.is_two_chunk()).count(), 1);
        assert_eq!(enumerate_allocations(4).unwrap().len(), 15);
    }

    #[test]
    fn counts_match_exhaustive_filter() {
        for n in 1..=8 {
            let allocs = enumerate_allocations(n).unwrap();
            assert_eq!(allocs.len(), chunk_rule_count(n), "n = {n}");
            let mut seen = std::collections::HashSet::new();
            for a in &allocs {
                assert!(seen.insert(a.bits()));
                assert_eq!(&Allocation::from_bits(&a.bits()).unwrap(), a);
            }
        }
    }

    #[test]
    fn zero_rbs_rejected() {
        assert!(matches!(
            enumerate_allocations(0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn from_bits_rejects_three_chunks_and_empty() {
        assert!(Allocation::from_bits(&[1, 0, 1, 0, 1]).is_err());
        assert!(Allocation::from_bits(&[0, 0]).is_err());
        assert!(Allocation::from_bits(&[1, 0, 1]).is_ok());
    }

    #[test]
    fn psd_is_even_split() {
        let a = Allocation::from_bits(&[1, 1]).unwrap();
        assert_eq!(element_psd(&a, 4.0), 2.0);
        assert_eq!(element_psd(&Allocation::from_bits(&[1]).unwrap(), 1.0), 1.0);
        assert_eq!(
            element_psd(&Allocation::from_bits(&[1, 1, 1]).unwrap(), 3.0),
            1.0
        );
    }

    #[test]
    fn ground_set_cardinality() {
        let one =
            GroundSet::build(Codebook::scalar(), 1, vec![UserProfile::backlogged(1.0, 1)]).unwrap();
        assert_eq!(one.len(), 1);

        let cb = Codebook::antenna_selection(2).unwrap();
        let g = GroundSet::build(cb.clone(), 3, vec![UserProfile::backlogged(1.0, 2); 2]).unwrap();
        assert_eq!(g.len(), 28);

        let a20 = enumerate_allocations(20).unwrap().len();
        let big = GroundSet::build(cb, 20, vec![UserProfile::backlogged(1.0, 2); 10]).unwrap();
        assert_eq!(big.len(), 10 * 2 * a20);
    }

    #[test]
    fn codebook_profile_mismatch_rejected() {
        let err = GroundSet::build(
            Codebook::antenna_selection(2).unwrap(),
            2,
            vec![UserProfile::backlogged(1.0, 1)],
        );
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn element_layout_and_constituents() {
        let cb = Codebook::antenna_selection(2).unwrap();
        let profiles = vec![UserProfile::backlogged(3.0, 2); 2];
        let g = GroundSet::build(cb, 3, profiles).unwrap();
        for id in g.ids() {
            let e = g.element(id);
            assert_eq!(g.id_of(e.user, e.allocation, e.precoder), id);
            assert!(g.user_elements(e.user).contains(&id.index()));
            let alloc = g.allocation_of(id);
            assert_eq!(e.psd, 3.0 / alloc.size() as f64);
            match g.constituents(id) {
                Some((a, b)) => {
                    assert!(alloc.is_two_chunk());
                    let (ea, eb) = (g.element(a), g.element(b));
                    assert_eq!((ea.user, ea.precoder), (e.user, e.precoder));
                    assert_eq!((eb.user, eb.precoder), (e.user, e.precoder));
                    let mut rbs: Vec<usize> = g
                        .allocation_of(a)
                        .rbs()
                        .chain(g.allocation_of(b).rbs())
                        .collect();
                    rbs.sort();
                    assert_eq!(rbs, alloc.rbs().collect::<Vec<_>>());
                }
                None => assert!(!alloc.is_two_chunk()),
            }
        }
    }

    #[test]
    fn builds_are_reproducible() {
        let mk = || {
            GroundSet::build(
                Codebook::antenna_selection(2).unwrap(),
                4,
                vec![UserProfile::backlogged(1.0, 2); 3],
            )
            .unwrap()
        };
        assert_eq!(mk().elements(), mk().elements());
    }
}
