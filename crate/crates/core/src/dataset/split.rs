use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LabeledExample;
use crate::corpus::OriginLabel;
use crate::{Error, Result};

pub const DEFAULT_RATIOS: [f64; 3] = [0.8, 0.1, 0.1];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitName {
    Train,
    Validation,
    Test,
}

impl SplitName {
    pub const ALL: [SplitName; 3] = [SplitName::Train, SplitName::Validation, SplitName::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Validation => "validation",
            SplitName::Test => "test",
        }
    }
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitBundle {
    pub train: Vec<LabeledExample>,
    pub validation: Vec<LabeledExample>,
    pub test: Vec<LabeledExample>,
    pub ratios: [f64; 3],
    pub seed: u64,
}

impl SplitBundle {
    pub fn get(&self, name: SplitName) -> &[LabeledExample] {
        match name {
            SplitName::Train => &self.train,
            SplitName::Validation => &self.validation,
            SplitName::Test => &self.test,
        }
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn class_count(&self, name: SplitName, label: OriginLabel) -> usize {
        self.get(name).iter().filter(|x| x.label == label).count()
    }
}

/// Apportions `total` items by `weights` using largest-remainder rounding.
/// Ties on the remainder go to the earlier slot.
pub fn largest_remainder(total: usize, weights: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = weights.iter().map(|w| w * total as f64).collect();
    let mut sizes: Vec<usize> = quotas.iter().map(|q| (q + 1e-9).floor().max(0.0) as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = (quotas[a] - sizes[a] as f64).max(0.0);
        let fb = (quotas[b] - sizes[b] as f64).max(0.0);
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(total.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    sizes
}

/// Stratified train/validation/test split.
///
/// Split sizes are the largest-remainder shares of N. Per-class counts are
/// then a controlled rounding of the exact proportional table
/// `n_class · |split| / N`: every cell is its floor or ceiling, and rows and
/// columns add up to the class and split sizes. Class members are shuffled
/// with a ChaCha8 stream seeded by `seed`, so membership depends only on the
/// inputs, the ratios and the seed.
pub fn stratified_split(examples: &[LabeledExample], ratios: [f64; 3], seed: u64) -> Result<SplitBundle> {
    if ratios.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(Error::InvalidInput(format!("invalid split ratios {ratios:?}")));
    }
    if (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("split ratios {ratios:?} do not sum to 1")));
    }

    let mut classes: BTreeMap<OriginLabel, Vec<&LabeledExample>> = BTreeMap::new();
    for x in examples {
        classes.entry(x.label).or_default().push(x);
    }
    for label in OriginLabel::ALL {
        let n = classes.get(&label).map_or(0, Vec::len);
        if n < ratios.len() {
            return Err(Error::InvalidInput(format!(
                "class {label} has {n} example(s); at least {} are needed for a stratified split",
                ratios.len()
            )));
        }
    }

    let total = examples.len();
    let sizes = largest_remainder(total, &ratios);
    let class_sizes: Vec<usize> = classes.values().map(Vec::len).collect();
    let table = controlled_rounding(&class_sizes, &sizes, total);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parts: [Vec<LabeledExample>; 3] = Default::default();
    for (row, members) in classes.values_mut().enumerate() {
        members.sort_by(|a, b| a.id.cmp(&b.id));
        members.shuffle(&mut rng);
        let mut offset = 0;
        for (s, part) in parts.iter_mut().enumerate() {
            let take = table[row][s];
            part.extend(members[offset..offset + take].iter().map(|x| (*x).clone()));
            offset += take;
        }
    }
    for part in &mut parts {
        part.sort_by(|a, b| a.id.cmp(&b.id));
    }
    let [train, validation, test] = parts;
    Ok(SplitBundle {
        train,
        validation,
        test,
        ratios,
        seed,
    })
}

/// Rounds `rows[c] · cols[s] / total` to floor or ceiling per cell while
/// preserving every row and column sum (`Σ rows = Σ cols = total`).
fn controlled_rounding(rows: &[usize], cols: &[usize], total: usize) -> Vec<Vec<usize>> {
    let mut table: Vec<Vec<usize>> = rows
        .iter()
        .map(|&r| cols.iter().map(|&c| r * c / total).collect())
        .collect();
    let remainder = |c: usize, s: usize| (rows[c] * cols[s]) % total;

    let row_need: Vec<usize> = rows
        .iter()
        .zip(&table)
        .map(|(&r, t)| r - t.iter().sum::<usize>())
        .collect();
    let col_need: Vec<usize> = (0..cols.len())
        .map(|s| cols[s] - table.iter().map(|t| t[s]).sum::<usize>())
        .collect();

    // Bipartite flow: source → class (row_need) → split (cells with a
    // non-zero remainder, capacity 1) → sink (col_need). A full flow exists
    // because the fractional table itself is a feasible fractional flow.
    let nr = rows.len();
    let nc = cols.len();
    let node_src = nr + nc;
    let node_sink = node_src + 1;
    let n = node_sink + 1;
    let mut cap = vec![vec![0usize; n]; n];
    for c in 0..nr {
        cap[node_src][c] = row_need[c];
        for s in 0..nc {
            if remainder(c, s) > 0 {
                cap[c][nr + s] = 1;
            }
        }
    }
    for s in 0..nc {
        cap[nr + s][node_sink] = col_need[s];
    }

    // Prefer cells with larger remainders when searching augmenting paths.
    let mut cell_order: Vec<Vec<usize>> = (0..nr)
        .map(|c| {
            let mut v: Vec<usize> = (0..nc).collect();
            v.sort_by(|&a, &b| remainder(c, b).cmp(&remainder(c, a)).then(a.cmp(&b)));
            v
        })
        .collect();
    let flow_needed: usize = row_need.iter().sum();
    let mut flow = 0;
    while flow < flow_needed {
        let Some(path) = augmenting_path(&cap, node_src, node_sink, nr, &mut cell_order) else {
            break;
        };
        for w in path.windows(2) {
            cap[w[0]][w[1]] -= 1;
            cap[w[1]][w[0]] += 1;
        }
        flow += 1;
    }
    debug_assert_eq!(flow, flow_needed, "controlled rounding must saturate");

    for c in 0..nr {
        for s in 0..nc {
            // residual back-edge split→class carries the assigned unit
            if remainder(c, s) > 0 && cap[nr + s][c] > 0 {
                table[c][s] += 1;
            }
        }
    }
    table
}

fn augmenting_path(
    cap: &[Vec<usize>],
    src: usize,
    sink: usize,
    nr: usize,
    cell_order: &mut [Vec<usize>],
) -> Option<Vec<usize>> {
    let n = cap.len();
    let mut prev = vec![usize::MAX; n];
    let mut queue = std::collections::VecDeque::from([src]);
    prev[src] = src;
    while let Some(u) = queue.pop_front() {
        if u == sink {
            break;
        }
        let neighbours: Vec<usize> = if u < nr {
            cell_order[u].iter().map(|s| nr + s).chain(std::iter::once(sink)).collect()
        } else {
            (0..n).collect()
        };
        for v in neighbours {
            if cap[u][v] > 0 && prev[v] == usize::MAX {
                prev[v] = u;
                queue.push_back(v);
            }
        }
    }
    if prev[sink] == usize::MAX {
        return None;
    }
    let mut path = vec![sink];
    let mut v = sink;
    while v != src {
        v = prev[v];
        path.push(v);
    }
    path.reverse();
    Some(path)
}
