use careloop_core::metrics::{modification_rate, scope_bucket, word_levenshtein, ScopeBucket};
use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Full (n+1) x (m+1) table, filled row by row.
fn dp_distance(a: &[&str], b: &[&str]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = if a[i - 1] == b[j - 1] { 0 } else { 1 };
            d[i][j] = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost);
        }
    }
    d[a.len()][b.len()]
}

fn oracle_rate(a: &str, b: &str) -> f64 {
    let wa: Vec<&str> = a.split_whitespace().collect();
    let wb: Vec<&str> = b.split_whitespace().collect();
    let denom = wa.len().max(wb.len()).max(1);
    dp_distance(&wa, &wb) as f64 * 100.0 / denom as f64
}

const VOCAB: [&str; 12] = [
    "blood", "pressure", "dose", "missed", "the", "patient", "reported", "stable", "review", "call",
    "weekly", "today",
];

fn random_text(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(0..30);
    (0..n).map(|_| *VOCAB.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

/// A random mutation of `base`, so pairs share structure.
fn mutate(rng: &mut ChaCha8Rng, base: &str) -> String {
    let mut words: Vec<&str> = base.split_whitespace().collect();
    for _ in 0..rng.random_range(0..6) {
        match rng.random_range(0..3) {
            0 if !words.is_empty() => {
                let i = rng.random_range(0..words.len());
                words.remove(i);
            }
            1 => {
                let i = rng.random_range(0..=words.len());
                words.insert(i, VOCAB.choose(rng).unwrap());
            }
            _ if !words.is_empty() => {
                let i = rng.random_range(0..words.len());
                words[i] = VOCAB.choose(rng).unwrap();
            }
            _ => {}
        }
    }
    words.join("  ")
}

#[test]
fn rate_matches_dp_oracle_on_100_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for i in 0..100 {
        let a = random_text(&mut rng);
        let b = if i % 2 == 0 { mutate(&mut rng, &a) } else { random_text(&mut rng) };
        let got = modification_rate(&a, &b);
        assert!((got - oracle_rate(&a, &b)).abs() < 1e-12, "{a:?} -> {b:?}");
    }
}

#[test]
fn one_word_in_twelve_is_a_light_edit() {
    let a = "Blood pressure stayed within range and the patient took every single dose.";
    let b = "Blood pressure stayed within range and the patient took every single tablet.";
    assert_eq!(a.split_whitespace().count(), 12);
    let rate = modification_rate(a, b);
    assert!((rate - 100.0 / 12.0).abs() < 1e-12);
    assert_eq!(scope_bucket(rate), ScopeBucket::Lt10);
}

#[test]
fn bucket_edges() {
    use ScopeBucket::*;
    let cases = [
        (0.0, Unmodified),
        (1e-9, Lt10),
        (9.999, Lt10),
        (10.0, From10To30),
        (30.0, From10To30),
        (30.0001, Gt30),
        (100.0, Gt30),
    ];
    for (rate, bucket) in cases {
        assert_eq!(scope_bucket(rate), bucket, "{rate}");
    }
}

fn words(max: usize) -> impl Strategy<Value = Vec<&'static str>> {
    prop::collection::vec(prop::sample::select(VOCAB.to_vec()), 0..max)
}

proptest! {
    #[test]
    fn distance_is_a_metric(a in words(15), b in words(15), c in words(15)) {
        let d = |x: &[&str], y: &[&str]| word_levenshtein(x, y);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert_eq!(d(&a, &a), 0);
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c));
        prop_assert_eq!(d(&a, &b), dp_distance(&a, &b));
        prop_assert!(d(&a, &b) <= a.len().max(b.len()));
    }

    #[test]
    fn rate_bounded_and_zero_only_for_identical_words(a in words(20), b in words(20)) {
        let (ta, tb) = (a.join(" "), b.join(" "));
        let r = modification_rate(&ta, &tb);
        prop_assert!((0.0..=100.0).contains(&r));
        prop_assert_eq!(r == 0.0, a == b);
        prop_assert_eq!(scope_bucket(r) == ScopeBucket::Unmodified, a == b);
    }

    #[test]
    fn buckets_total_and_monotone(x in 0.0f64..=100.0, y in 0.0f64..=100.0) {
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        let rank = |b: ScopeBucket| ScopeBucket::ALL.iter().position(|c| *c == b).unwrap();
        prop_assert!(rank(scope_bucket(lo)) <= rank(scope_bucket(hi)));
    }
}
