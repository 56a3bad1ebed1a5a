use serde::{Deserialize, Serialize};

/// Word-level Levenshtein distance (insert, delete, substitute; unit costs).
pub fn word_levenshtein(a: &[&str], b: &[&str]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, wa) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, wb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(wa != wb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Percentage of word-level change from `original` to `edited`, in `[0, 100]`.
pub fn modification_rate(original: &str, edited: &str) -> f64 {
    let a: Vec<&str> = original.split_whitespace().collect();
    let b: Vec<&str> = edited.split_whitespace().collect();
    let d = word_levenshtein(&a, &b);
    100.0 * d as f64 / a.len().max(b.len()).max(1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScopeBucket {
    #[serde(rename = "unmodified")]
    Unmodified,
    #[serde(rename = "lt_10")]
    Lt10,
    #[serde(rename = "from_10_to_30")]
    From10To30,
    #[serde(rename = "gt_30")]
    Gt30,
}

impl ScopeBucket {
    pub const ALL: [ScopeBucket; 4] = [
        ScopeBucket::Unmodified,
        ScopeBucket::Lt10,
        ScopeBucket::From10To30,
        ScopeBucket::Gt30,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScopeBucket::Unmodified => "unmodified",
            ScopeBucket::Lt10 => "lt_10",
            ScopeBucket::From10To30 => "from_10_to_30",
            ScopeBucket::Gt30 => "gt_30",
        }
    }
}

impl std::str::FromStr for ScopeBucket {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScopeBucket::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| format!("unknown editing scope `{s}`"))
    }
}

/// 0 is unmodified; both 10 and 30 fall in the middle bucket.
pub fn scope_bucket(rate: f64) -> ScopeBucket {
    if rate <= 0.0 {
        ScopeBucket::Unmodified
    } else if rate < 10.0 {
        ScopeBucket::Lt10
    } else if rate <= 30.0 {
        ScopeBucket::From10To30
    } else {
        ScopeBucket::Gt30
    }
}
