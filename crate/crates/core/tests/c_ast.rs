use decompkit::c_ast::{enumerate_identifiers, parse, Category, ParseStatus};
use decompkit_testkit::{cgen, fixtures_dir};
use proptest::prelude::*;

fn cat(c: cgen::Cat) -> Category {
    match c {
        cgen::Cat::Func => Category::Func,
        cgen::Cat::Type => Category::Type,
        cgen::Cat::Field => Category::Field,
        cgen::Cat::Var => Category::Var,
    }
}

/// Start of the next whole-word occurrence of `word` at or after `from`.
fn next_word(text: &str, word: &str, from: usize) -> usize {
    let is_ident = |b: u8| b == b'_' || b.is_ascii_alphanumeric();
    let bytes = text.as_bytes();
    let mut at = from;
    while let Some(i) = text[at..].find(word) {
        let s = at + i;
        let e = s + word.len();
        if (s == 0 || !is_ident(bytes[s - 1])) && (e == bytes.len() || !is_ident(bytes[e])) {
            return s;
        }
        at = s + 1;
    }
    panic!("`{word}` not found after {from}");
}

#[test]
fn golden_allocator_inventory() {
    let dir = fixtures_dir().join("golden");
    let src = std::fs::read_to_string(dir.join("arena.c")).unwrap();
    let golden = std::fs::read_to_string(dir.join("arena.inventory")).unwrap();
    let outcome = parse(&src, None);
    assert_eq!(outcome.status, ParseStatus::Ok);
    let got = enumerate_identifiers(&outcome.tree.unwrap());

    let mut cursor = 0;
    let mut expected = Vec::new();
    for line in golden.lines() {
        let (c, name) = line.split_once(' ').unwrap();
        let s = next_word(&src, name, cursor);
        cursor = s + name.len();
        expected.push((Category::from_prefix(c).unwrap(), name.to_string(), (s, cursor)));
    }
    let got: Vec<_> = got.into_iter().map(|o| (o.category, o.name, o.span)).collect();
    assert_eq!(got, expected);
}

#[test]
fn header_offsets_are_excluded() {
    let header = "typedef int arena_t;\n";
    let src = "arena_t x;";
    let outcome = parse(src, Some(header));
    let occ = enumerate_identifiers(&outcome.tree.unwrap());
    let spans: Vec<_> = occ.iter().map(|o| (o.name.as_str(), o.span)).collect();
    assert_eq!(spans, [("arena_t", (0, 7)), ("x", (8, 9))]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn occurrences_match_generator(seed in any::<u64>()) {
        let prog = cgen::generate(seed, &|_| false);
        let text = prog.text();
        let outcome = parse(&text, None);
        prop_assert_eq!(outcome.status, ParseStatus::Ok);
        let got = enumerate_identifiers(&outcome.tree.unwrap());
        let want: Vec<_> = prog
            .identifiers()
            .into_iter()
            .zip(prog.identifier_spans())
            .map(|((n, c), s)| (cat(c), n, s))
            .collect();
        let got: Vec<_> = got.into_iter().map(|o| (o.category, o.name, o.span)).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn spans_are_ordered_disjoint_and_exact(seed in any::<u64>()) {
        let text = cgen::generate(seed, &|_| false).text();
        let occ = enumerate_identifiers(&parse(&text, None).tree.unwrap());
        let mut prev_end = 0;
        for o in &occ {
            prop_assert!(o.span.0 >= prev_end && o.span.0 < o.span.1);
            prop_assert_eq!(&text[o.span.0..o.span.1], o.name.as_str());
            prev_end = o.span.1;
        }
    }

    #[test]
    fn arbitrary_bytes_never_panic(text in "[ -~\n]{0,200}") {
        let outcome = parse(&text, None);
        if let Some(tree) = outcome.tree {
            for o in enumerate_identifiers(&tree) {
                prop_assert!(o.span.1 <= text.len());
            }
        }
    }
}
