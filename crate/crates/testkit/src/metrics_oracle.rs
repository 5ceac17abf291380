//! Brute-force ROUGE/BLEU over explicit token sequences.
//!
//! n-gram counts come from scanning every position for every distinct gram;
//! the LCS comes from enumerating every subsequence of the candidate.

pub fn count(seq: &[&str], gram: &[&str]) -> usize {
    if gram.len() > seq.len() {
        return 0;
    }
    (0..=seq.len() - gram.len())
        .filter(|&i| &seq[i..i + gram.len()] == gram)
        .count()
}

fn distinct_grams<'a>(seq: &'a [&'a str], n: usize) -> Vec<&'a [&'a str]> {
    let mut out: Vec<&[&str]> = Vec::new();
    if seq.len() >= n {
        for i in 0..=seq.len() - n {
            let g = &seq[i..i + n];
            if !out.contains(&g) {
                out.push(g);
            }
        }
    }
    out
}

pub fn clipped_matches(cand: &[&str], refs: &[&str], n: usize) -> usize {
    distinct_grams(cand, n)
        .into_iter()
        .map(|g| count(cand, g).min(count(refs, g)))
        .sum()
}

fn is_subsequence(sub: &[&str], seq: &[&str]) -> bool {
    let mut it = seq.iter();
    sub.iter().all(|x| it.any(|y| y == x))
}

pub fn lcs(a: &[&str], b: &[&str]) -> usize {
    assert!(a.len() < 20, "enumeration is exponential");
    let mut best = 0;
    for mask in 0u32..(1 << a.len()) {
        let size = mask.count_ones() as usize;
        if size <= best {
            continue;
        }
        let sub: Vec<&str> = (0..a.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| a[i])
            .collect();
        if is_subsequence(&sub, b) {
            best = size;
        }
    }
    best
}

fn f1(hits: usize, c: usize, r: usize) -> f64 {
    if hits == 0 {
        return 0.0;
    }
    let p = hits as f64 / c as f64;
    let rc = hits as f64 / r as f64;
    2.0 * p * rc / (p + rc)
}

pub fn rouge_n(cand: &[&str], refs: &[&str], n: usize) -> f64 {
    let c = cand.len().saturating_sub(n - 1);
    let r = refs.len().saturating_sub(n - 1);
    if c == 0 && r == 0 {
        return if cand == refs { 1.0 } else { 0.0 };
    }
    if c == 0 || r == 0 {
        return 0.0;
    }
    f1(clipped_matches(cand, refs, n), c, r)
}

pub fn rouge_l(cand: &[&str], refs: &[&str]) -> f64 {
    f1(lcs(cand, refs), cand.len(), refs.len())
}

pub fn bleu(cand: &[&str], refs: &[&str]) -> f64 {
    let order = cand.len().min(4);
    let mut product = 1.0f64;
    for n in 1..=order {
        let m = clipped_matches(cand, refs, n);
        let m = if m == 0 { 1e-9 } else { m as f64 };
        product *= m / (cand.len() + 1 - n) as f64;
    }
    let geo = product.powf(1.0 / order as f64);
    let (c, r) = (cand.len() as f64, refs.len() as f64);
    let bp = if c >= r { 1.0 } else { (1.0 - r / c).exp() };
    bp * geo
}

/// Every sequence of length 1..=max_len over `alphabet`.
pub fn all_sequences<'a>(alphabet: &[&'a str], max_len: usize) -> Vec<Vec<&'a str>> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<&str>> = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .into_iter()
            .flat_map(|p| {
                alphabet.iter().map(move |a| {
                    let mut v = p.clone();
                    v.push(*a);
                    v
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}
