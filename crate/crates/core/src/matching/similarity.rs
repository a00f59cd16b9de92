use std::collections::HashMap;

/// Gestalt pattern-matching ratio `2M / (|a| + |b|)` over characters.
///
/// `M` comes from the recursive longest-common-substring decomposition:
/// take a longest common block, then recurse on the pieces left and right
/// of it. When several blocks share the maximal length, the one giving the
/// most matched characters overall is used, which keeps the ratio
/// symmetric. Two empty strings are identical and score 1.
pub fn ro_similarity(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    ratio(&a, &b)
}

pub(crate) fn ratio(a: &[char], b: &[char]) -> f64 {
    let total = a.len() + b.len();
    if total == 0 {
        return 1.0;
    }
    2.0 * matched_chars(a, b) as f64 / total as f64
}

/// Total characters covered by the block decomposition.
pub fn matched_chars(a: &[char], b: &[char]) -> usize {
    Decomposer {
        a,
        b,
        memo: HashMap::new(),
    }
    .solve(0, a.len(), 0, b.len())
}

struct Decomposer<'s> {
    a: &'s [char],
    b: &'s [char],
    memo: HashMap<(usize, usize, usize, usize), usize>,
}

impl Decomposer<'_> {
    fn solve(&mut self, alo: usize, ahi: usize, blo: usize, bhi: usize) -> usize {
        if alo >= ahi || blo >= bhi {
            return 0;
        }
        let key = (alo, ahi, blo, bhi);
        if let Some(&m) = self.memo.get(&key) {
            return m;
        }
        let (len, starts) = longest_blocks(&self.a[alo..ahi], &self.b[blo..bhi]);
        let best = if len == 0 {
            0
        } else {
            starts
                .into_iter()
                .map(|(i, j)| {
                    let (i, j) = (alo + i, blo + j);
                    len + self.solve(alo, i, blo, j) + self.solve(i + len, ahi, j + len, bhi)
                })
                .max()
                .unwrap_or(0)
        };
        self.memo.insert(key, best);
        best
    }
}

/// Length of the longest common substring and every `(i, j)` where one
/// starts.
fn longest_blocks(a: &[char], b: &[char]) -> (usize, Vec<(usize, usize)>) {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    let mut best = 0;
    let mut ends = Vec::new();
    for (i, ca) in a.iter().enumerate() {
        for (j, cb) in b.iter().enumerate() {
            cur[j + 1] = if ca == cb { prev[j] + 1 } else { 0 };
            let l = cur[j + 1];
            if l > best {
                best = l;
                ends.clear();
            }
            if l == best && l > 0 {
                ends.push((i + 1, j + 1));
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    (best, ends.into_iter().map(|(i, j)| (i - best, j - best)).collect())
}
