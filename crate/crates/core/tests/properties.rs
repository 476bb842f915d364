use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use std::collections::HashSet;
use svaforge::assertsynth::{oracle_antecedent, properties, synthesize, synthesize_module, PathKind, SynthOptions};
use svaforge::dynsem::{mutate, simulate, eval_property, MutOp, StimulusPlan, ALL_OPS};
use svaforge::hdl::*;
use svaforge::identifiers::{self, clean, corrupt, CorruptMode, IdentifierPool};
use svaforge::logic;
use svaforge::metrics::{self, ngrams, overlap};
use svaforge::parse::{parse_module, parse_properties};
use svaforge::synthgen::{self, gen_block, gen_condition, Category, GenConfig, CATEGORIES};

fn pool() -> IdentifierPool {
    identifiers::synthesize(80, 21).unwrap()
}

fn category() -> impl Strategy<Value = Category> {
    prop::sample::select(CATEGORIES.to_vec())
}

fn reparse(m: &RtlModule) -> RtlModule {
    let text = print_module(m);
    let p = parse_module(&text, &Default::default());
    assert!(!p.has_errors(), "{text}\n{:?}", p.diagnostics);
    p.module.unwrap()
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        "[a-z][a-z0-9_]{0,5}".prop_filter("reserved", |s| !svaforge::parse::is_reserved(s)).prop_map(Expr::ident),
        (1u32..=16, any::<u64>(), prop::sample::select(vec![Base::Bin, Base::Hex, Base::Dec]))
            .prop_map(|(w, v, b)| Expr::sized(w, b, v & mask(w))),
        any::<bool>().prop_map(Expr::fill),
    ]
}

fn expr() -> impl Strategy<Value = Expr> {
    let ops = vec![
        BinaryOp::LogAnd,
        BinaryOp::LogOr,
        BinaryOp::Eq,
        BinaryOp::Neq,
        BinaryOp::Lt,
        BinaryOp::Le,
        BinaryOp::Gt,
        BinaryOp::Ge,
        BinaryOp::Add,
        BinaryOp::Sub,
        BinaryOp::BitAnd,
        BinaryOp::BitOr,
        BinaryOp::BitXor,
    ];
    leaf().prop_recursive(4, 24, 3, move |inner| {
        prop_oneof![
            (prop::sample::select(ops.clone()), inner.clone(), inner.clone()).prop_map(|(op, l, r)| Expr::binary(op, l, r)),
            (prop::sample::select(vec![UnaryOp::LogNot, UnaryOp::BitNot, UnaryOp::Neg]), inner.clone())
                .prop_map(|(op, e)| Expr::unary(op, e)),
            (inner.clone(), inner.clone(), inner.clone()).prop_map(|(c, t, o)| Expr::Ternary {
                cond: Box::new(c),
                then: Box::new(t),
                other: Box::new(o)
            }),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn expression_round_trip(e in expr()) {
        let src = format!("module t(output logic [15:0] q); always_comb q = {}; endmodule", print_expr(&e));
        let p = parse_module(&src, &Default::default());
        prop_assert!(!p.has_errors(), "{src}");
        let m = p.module.unwrap();
        let Stmt::Assign(a) = &m.always_blocks[0].body[0] else { panic!("{src}") };
        prop_assert_eq!(&a.rhs, &e);
    }

    #[test]
    fn module_and_mutant_round_trip(cat in category(), sync in any::<bool>(), seed in any::<u64>()) {
        let (m, _) = gen_block(cat, sync, &pool(), seed, &GenConfig::default()).unwrap();
        let m = reparse(&m);
        prop_assert_eq!(&reparse(&m), &m);
        for mu in mutate(&m, &ALL_OPS) {
            prop_assert_ne!(&mu.module, &m);
            prop_assert_eq!(&reparse(&mu.module), &mu.module);
        }
    }

    #[test]
    fn condition_shape(atoms in 1usize..8, seed in any::<u64>()) {
        let c = gen_condition(&pool(), atoms, seed).unwrap();
        prop_assert_eq!(synthgen::atom_count(&c), atoms);
        let src = format!("property P; ({}) |-> 1'b1; endproperty", print_expr(&c));
        let parsed = parse_properties(&src);
        prop_assert_eq!(&parsed.properties[0].antecedent, &c);
        prop_assert_eq!(c, gen_condition(&pool(), atoms, seed).unwrap());
    }

    #[test]
    fn samples_only_use_pool_names(cat in category(), sync in any::<bool>(), seed in any::<u64>()) {
        let pool = pool();
        let names: HashSet<&str> = pool.names().into_iter().collect();
        let (m, _) = gen_block(cat, sync, &pool, seed, &GenConfig::default()).unwrap();
        for d in &m.decls {
            prop_assert!(names.contains(d.name.as_str()) || d.name == synthgen::CLOCK || d.name == synthgen::RESET);
        }
        for a in m.always_blocks[0].assigns() {
            prop_assert!(m.decl(&a.lhs.name).is_some());
            for n in a.rhs.idents() {
                prop_assert!(m.decl(&n).is_some());
            }
        }
    }

    #[test]
    fn paths_in_a_region_exclude_each_other(cat in category(), sync in any::<bool>(), seed in any::<u64>()) {
        let (m, _) = gen_block(cat, sync, &pool(), seed, &GenConfig::default()).unwrap();
        let paths = synthesize(&m.always_blocks[0], &SynthOptions::default()).unwrap();
        let w = |n: &str| m.width_of(n);
        let assign: Vec<_> = paths.iter().filter(|p| p.kind == PathKind::Assignment).collect();
        for (i, a) in assign.iter().enumerate() {
            for b in &assign[i + 1..] {
                if a.region == b.region {
                    prop_assert!(logic::relate(&a.path_condition, &b.path_condition, &w).unwrap().disjoint());
                }
            }
        }
        // every assignment lands on exactly one path
        let total: usize = assign.iter().map(|p| p.assignments.len()).sum();
        prop_assert_eq!(total, m.always_blocks[0].assigns().len());
        let text = print_properties(&properties(&paths));
        prop_assert!(!text.contains("|=>") && !text.contains('?'));
    }

    #[test]
    fn oracle_antecedent_agrees_with_trace(cat in category(), sync in any::<bool>(), seed in any::<u64>()) {
        let (m, gt) = gen_block(cat, sync, &pool(), seed, &GenConfig::default()).unwrap();
        let m = reparse(&m);
        let w = |n: &str| m.width_of(n);
        let paths = synthesize(&m.always_blocks[0], &SynthOptions::default()).unwrap();
        for p in paths.iter().filter(|p| p.kind == PathKind::Assignment) {
            let got = oracle_antecedent(&m.always_blocks[0], p.assign_spans[0]).unwrap();
            let names: Vec<(String, Expr)> = p.assignments.iter().map(|(l, r)| (l.name.clone(), r.clone())).collect();
            let hit = gt.paths.iter().filter(|t| t.assignments == names)
                .any(|t| logic::equivalent(&got, &t.condition, &w).unwrap());
            prop_assert!(hit, "{}", print_expr(&got));
        }
    }

    #[test]
    fn clean_undoes_corrupt(n in 1usize..200, rate in 0.0f64..=1.0, seed in any::<u64>(), mode in 0usize..3) {
        let pool = identifiers::synthesize(n, seed).unwrap();
        let mode = [CorruptMode::InvalidChars, CorruptMode::Duplicates, CorruptMode::Inconsistent][mode];
        let dirty = corrupt(&pool, mode, rate, seed).unwrap();
        let (cleaned, _) = clean(&dirty);
        prop_assert_eq!(cleaned.names(), pool.names());
        let (twice, summary) = clean(&cleaned);
        prop_assert_eq!(twice.names(), cleaned.names());
        prop_assert_eq!(summary.invalid + summary.duplicate + summary.inconsistent, 0);
    }

    #[test]
    fn pool_file_round_trip(n in 0usize..100, seed in any::<u64>()) {
        let pool = identifiers::synthesize(n, seed).unwrap();
        let back = IdentifierPool::from_file_str(&pool.to_file_string()).unwrap();
        prop_assert_eq!(back, pool);
    }

    #[test]
    fn nonblocking_order_is_irrelevant(cat in category(), seed in any::<u64>()) {
        let (m, _) = gen_block(cat, true, &pool(), seed, &GenConfig::default()).unwrap();
        let mut shuffled = m.clone();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        shuffle_stmts(&mut shuffled.always_blocks[0].body, &mut rng);
        let plan = StimulusPlan::new(200, seed);
        let a = simulate(&m, &plan).unwrap();
        let b = simulate(&shuffled, &plan).unwrap();
        prop_assert_eq!(&a.post, &b.post);
        prop_assert_eq!(a.dump(), simulate(&m, &plan).unwrap().dump());
    }

    #[test]
    fn oracle_holds_on_its_block(cat in category(), sync in any::<bool>(), seed in any::<u64>()) {
        let (m, _) = gen_block(cat, sync, &pool(), seed, &GenConfig::default()).unwrap();
        let t = simulate(&m, &StimulusPlan::new(300, seed)).unwrap();
        for p in properties(&synthesize_module(&m, &SynthOptions { stability: true, ..Default::default() }).unwrap()) {
            let v = eval_property(&p, &t).unwrap();
            prop_assert!(v.holds, "{} fails at {:?}", print_properties(std::slice::from_ref(&p)), v.failures);
        }
    }

    #[test]
    fn ngram_count_law(bytes in prop::collection::vec(0u8..4, 0..64), n in 1usize..8) {
        let g = ngrams(&bytes, n);
        let windows = bytes.len().saturating_sub(n - 1);
        prop_assert!(g.len() <= windows);
        let distinct: HashSet<&[u8]> = if bytes.len() >= n { bytes.windows(n).collect() } else { HashSet::new() };
        prop_assert_eq!(g.len(), distinct.len());
        prop_assert_eq!(g.len() == windows, distinct.len() == windows);
        for w in &distinct {
            prop_assert!(g.contains(w));
        }
    }

    #[test]
    fn overlap_is_symmetric_jaccard(a in prop::collection::vec(0u8..3, 0..80), b in prop::collection::vec(0u8..3, 0..80)) {
        let ab = overlap(&a, &b, 5);
        let ba = overlap(&b, &a, 5);
        prop_assert_eq!(ab.score, ba.score);
        prop_assert!((0.0..=1.0).contains(&ab.score));
        let sa: HashSet<&[u8]> = if a.len() >= 5 { a.windows(5).collect() } else { HashSet::new() };
        let sb: HashSet<&[u8]> = if b.len() >= 5 { b.windows(5).collect() } else { HashSet::new() };
        prop_assert_eq!(ab.intersection, sa.intersection(&sb).count());
        prop_assert_eq!(ab.union, sa.union(&sb).count());
        if a.len() >= 5 {
            prop_assert_eq!(overlap(&a, &a, 5).score, 1.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn more_operators_never_lose_kills(cat in category(), sync in any::<bool>(), seed in any::<u64>(), k in 1usize..7) {
        let (m, _) = gen_block(cat, sync, &pool(), seed, &GenConfig::default()).unwrap();
        let m = reparse(&m);
        let props = properties(&synthesize_module(&m, &SynthOptions::default()).unwrap());
        let plan = StimulusPlan::new(300, seed);
        let few: Vec<MutOp> = ALL_OPS[..k].to_vec();
        let small = metrics::eval_functional(&m, &props, &plan, &few).unwrap();
        let large = metrics::eval_functional(&m, &props, &plan, &ALL_OPS).unwrap();
        for (s, l) in small.verdicts.iter().zip(&large.verdicts) {
            prop_assert!(l.mutants_killed >= s.mutants_killed);
            prop_assert!(!s.functionally_correct || l.functionally_correct);
        }
        prop_assert_eq!(large, metrics::eval_functional(&m, &props, &plan, &ALL_OPS).unwrap());
        prop_assert_eq!(metrics::cpc(&m, &props).unwrap().cpc_pct, 100.0);
    }
}

fn shuffle_stmts(body: &mut [Stmt], rng: &mut rand_chacha::ChaCha8Rng) {
    body.shuffle(rng);
    for s in body {
        match s {
            Stmt::If(i) => {
                for a in &mut i.arms {
                    shuffle_stmts(&mut a.body, rng);
                }
                if let Some(e) = &mut i.else_arm {
                    shuffle_stmts(&mut e.body, rng);
                }
            }
            Stmt::Case(c) => {
                for a in &mut c.arms {
                    shuffle_stmts(&mut a.body, rng);
                }
                if let Some(d) = &mut c.default {
                    shuffle_stmts(&mut d.body, rng);
                }
            }
            Stmt::Block(b) => shuffle_stmts(b, rng),
            Stmt::Assign(_) => {}
        }
    }
}
