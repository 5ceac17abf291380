use intentgraph_core::metrics::{bleu, rouge, rouge_detail, RougeVariant};
use intentgraph_testkit::metrics_oracle as oracle;
use proptest::prelude::*;

fn words() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e", "task", "node"]), 1..12)
        .prop_map(|v| v.into_iter().map(String::from).collect())
}

#[test]
fn short_sequences_match_enumeration() {
    let seqs = oracle::all_sequences(&["a", "b", "c"], 4);
    for c in &seqs {
        for r in &seqs {
            let (ct, rt) = (c.join(" "), r.join(" "));
            let checks = [
                (rouge(&ct, &rt, RougeVariant::One).unwrap(), oracle::rouge_n(c, r, 1)),
                (rouge(&ct, &rt, RougeVariant::Two).unwrap(), oracle::rouge_n(c, r, 2)),
                (rouge(&ct, &rt, RougeVariant::L).unwrap(), oracle::rouge_l(c, r)),
                (bleu(&ct, &rt).unwrap(), oracle::bleu(c, r)),
            ];
            for (got, want) in checks {
                assert!((got - want).abs() < 1e-9, "{ct:?} vs {rt:?}: {got} != {want}");
            }
        }
    }
}

proptest! {
    #[test]
    fn self_similarity_is_perfect(x in words()) {
        let t = x.join(" ");
        for v in [RougeVariant::One, RougeVariant::Two, RougeVariant::L] {
            prop_assert!((rouge(&t, &t, v).unwrap() - 1.0).abs() < 1e-12);
        }
        prop_assert!((bleu(&t, &t).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scores_are_bounded(c in words(), r in words()) {
        let (c, r) = (c.join(" "), r.join(" "));
        for v in [RougeVariant::One, RougeVariant::Two, RougeVariant::L] {
            let s = rouge(&c, &r, v).unwrap();
            prop_assert!((0.0..=1.0).contains(&s));
        }
        let b = bleu(&c, &r).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&b));
    }

    #[test]
    fn appending_foreign_tokens_never_helps(c in words(), r in words(), extra in 1usize..4) {
        let base = c.join(" ");
        let longer = format!("{base} {}", vec!["zzz"; extra].join(" "));
        let rt = r.join(" ");
        for v in [RougeVariant::One, RougeVariant::Two, RougeVariant::L] {
            let before = rouge_detail(&base, &rt, v).unwrap().precision;
            let after = rouge_detail(&longer, &rt, v).unwrap().precision;
            prop_assert!(after <= before + 1e-12);
        }
        // The brevity penalty can reward length, so BLEU is only monotone once
        // the candidate is at least as long as the reference.
        if c.len() >= r.len() {
            prop_assert!(bleu(&longer, &rt).unwrap() <= bleu(&base, &rt).unwrap() + 1e-12);
        }
    }
}

#[test]
fn brevity_penalty_counterexample() {
    let reference = (0..12).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ");
    let short = "w0 w1 w2 w3";
    let padded = "w0 w1 w2 w3 zzz zzz";
    assert!(bleu(padded, &reference).unwrap() > bleu(short, &reference).unwrap());
}
