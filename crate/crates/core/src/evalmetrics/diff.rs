use std::collections::HashMap;
use std::hash::Hash;

/// A run of `len` equal items at `a[a_start..]` and `b[b_start..]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub a_start: usize,
    pub b_start: usize,
    pub len: usize,
}

struct Matcher<'a, T> {
    a: &'a [T],
    /// Positions of each item of `b`, ascending.
    b_positions: HashMap<&'a T, Vec<usize>>,
}

impl<'a, T: Eq + Hash> Matcher<'a, T> {
    fn new(a: &'a [T], b: &'a [T]) -> Self {
        let mut b_positions: HashMap<&T, Vec<usize>> = HashMap::new();
        for (j, item) in b.iter().enumerate() {
            b_positions.entry(item).or_default().push(j);
        }
        Self { a, b_positions }
    }

    /// Longest common run inside `a[alo..ahi]` and `b[blo..bhi]`; the one
    /// starting earliest in `a`, then in `b`, on ties.
    fn longest(&self, alo: usize, ahi: usize, blo: usize, bhi: usize) -> Block {
        let mut best = Block { a_start: alo, b_start: blo, len: 0 };
        // run length ending at (i - 1, j), keyed by j
        let mut prev: HashMap<usize, usize> = HashMap::new();
        for i in alo..ahi {
            let mut cur = HashMap::new();
            if let Some(js) = self.b_positions.get(&self.a[i]) {
                let from = js.partition_point(|&j| j < blo);
                for &j in js[from..].iter().take_while(|&&j| j < bhi) {
                    let k = if j > blo { prev.get(&(j - 1)).copied().unwrap_or(0) } else { 0 } + 1;
                    cur.insert(j, k);
                    if k > best.len {
                        best = Block { a_start: i + 1 - k, b_start: j + 1 - k, len: k };
                    }
                }
            }
            prev = cur;
        }
        best
    }
}

/// Matching blocks of the recursive longest-common-run alignment, in order.
pub fn matching_blocks<T: Eq + Hash>(a: &[T], b: &[T]) -> Vec<Block> {
    let matcher = Matcher::new(a, b);
    let mut blocks = Vec::new();
    let mut stack = vec![(0, a.len(), 0, b.len())];
    while let Some((alo, ahi, blo, bhi)) = stack.pop() {
        let m = matcher.longest(alo, ahi, blo, bhi);
        if m.len == 0 {
            continue;
        }
        blocks.push(m);
        if m.a_start + m.len < ahi && m.b_start + m.len < bhi {
            stack.push((m.a_start + m.len, ahi, m.b_start + m.len, bhi));
        }
        if alo < m.a_start && blo < m.b_start {
            stack.push((alo, m.a_start, blo, m.b_start));
        }
    }
    blocks.sort_by_key(|m| m.a_start);
    blocks
}

/// The items of `b` that the alignment of `a` onto `b` marks as replaced
/// or inserted, in order.
pub fn diff<T: Eq + Hash + Clone>(a: &[T], b: &[T]) -> Vec<T> {
    let mut out = Vec::new();
    let mut j = 0;
    for m in matching_blocks(a, b) {
        out.extend_from_slice(&b[j..m.b_start]);
        j = m.b_start + m.len;
    }
    out.extend_from_slice(&b[j..]);
    out
}
