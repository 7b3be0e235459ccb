//! Algebraic law suites, run as seeded property tests plus a few exhaustive
//! sweeps over tiny sets. Failures carry proptest's minimized input.

use std::collections::BTreeSet;
use std::fmt;

use proptest::collection::vec;
use proptest::prelude::*;
use proptest::sample::Index;
use proptest::test_runner::{Config, RngAlgorithm, TestError, TestRng, TestRunner};

use crate::span::{
    canonical_subsets, image_unit, FinSet, Multiset, MultisetBag, NatMatrix, Powerset, Relation, Span, POWERSET_TABLE_LIMIT,
};

/// Sets in randomized laws have at most this many elements.
pub const MAX_SET: usize = 5;
const MAX_ENTRY: u64 = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LawOutcome {
    pub name: &'static str,
    pub cases: u32,
    /// Failure reason and minimized input.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LawReport {
    pub outcomes: Vec<LawOutcome>,
}

impl LawReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.failure.is_none())
    }

    pub fn failures(&self) -> impl Iterator<Item = &LawOutcome> {
        self.outcomes.iter().filter(|o| o.failure.is_some())
    }
}

impl fmt::Display for LawReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for o in &self.outcomes {
            match &o.failure {
                None => writeln!(f, "ok   {} ({} cases)", o.name, o.cases)?,
                Some(why) => writeln!(f, "FAIL {}: {}", o.name, why)?,
            }
        }
        Ok(())
    }
}

fn finset(prefix: &'static str) -> impl Strategy<Value = FinSet> {
    (0..=MAX_SET).prop_map(move |n| FinSet::numbered(prefix, n))
}

fn matrix(dom: FinSet, cod: FinSet, max: u64) -> BoxedStrategy<NatMatrix> {
    let cols = cod.len();
    vec(0..=max, dom.len() * cols)
        .prop_map(move |entries| {
            let mut m = NatMatrix::zero(dom.clone(), cod.clone());
            for (k, v) in entries.into_iter().enumerate() {
                m.set(k / cols, k % cols, v);
            }
            m
        })
        .boxed()
}

/// Spans from arbitrary foot lists, so apex order is not canonical.
fn span(dom: FinSet, cod: FinSet) -> BoxedStrategy<Span> {
    if dom.is_empty() || cod.is_empty() {
        return Just(Span::new(dom, cod, Vec::new()).expect("empty span")).boxed();
    }
    let (n, m) = (dom.len(), cod.len());
    vec((0..n, 0..m), 0..=2 * n * m)
        .prop_map(move |feet| Span::from_feet(dom.clone(), cod.clone(), feet).expect("feet in range"))
        .boxed()
}

fn relation(dom: FinSet, cod: FinSet) -> BoxedStrategy<Relation> {
    matrix(dom, cod, 1).prop_map(|m| m.support()).boxed()
}

fn multiset(base: FinSet, max: u64) -> BoxedStrategy<Multiset> {
    vec(0..=max, base.len())
        .prop_map(move |c| Multiset::new(base.clone(), c).expect("length matches"))
        .boxed()
}

fn two_sets() -> impl Strategy<Value = (FinSet, FinSet)> {
    (finset("a"), finset("b"))
}

fn three_sets() -> impl Strategy<Value = (FinSet, FinSet, FinSet)> {
    (finset("a"), finset("b"), finset("c"))
}

fn span_pair() -> impl Strategy<Value = (Span, Span)> {
    three_sets().prop_flat_map(|(a, b, c)| (span(a, b.clone()), span(b, c)))
}

fn iso(s: &Span, t: &Span) -> Result<bool, TestCaseError> {
    s.iso_eq(t).map_err(|e| TestCaseError::fail(e.to_string()))
}

fn lift<T, E: fmt::Display>(r: Result<T, E>) -> Result<T, TestCaseError> {
    r.map_err(|e| TestCaseError::fail(e.to_string()))
}

fn seed_rng(seed: u64, law: usize) -> TestRng {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&(law as u64).to_le_bytes());
    TestRng::from_seed(RngAlgorithm::ChaCha, &bytes)
}

struct Suite {
    seed: u64,
    cases: u32,
    outcomes: Vec<LawOutcome>,
}

impl Suite {
    fn law<S: Strategy>(&mut self, name: &'static str, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>)
    where
        S::Value: fmt::Debug,
    {
        let config = Config { cases: self.cases, failure_persistence: None, ..Config::default() };
        let mut runner = TestRunner::new_with_rng(config, seed_rng(self.seed, self.outcomes.len()));
        let failure = match runner.run(&strategy, test) {
            Ok(()) => None,
            Err(TestError::Fail(why, input)) => Some(format!("{why}; minimal input: {input:?}")),
            Err(TestError::Abort(why)) => Some(format!("aborted: {why}")),
        };
        self.outcomes.push(LawOutcome { name, cases: self.cases, failure });
    }

    fn exhaustive(&mut self, name: &'static str, check: impl FnOnce() -> Result<u32, String>) {
        let (cases, failure) = match check() {
            Ok(n) => (n, None),
            Err(why) => (0, Some(why)),
        };
        self.outcomes.push(LawOutcome { name, cases, failure });
    }
}

/// Runs every law with `cases` random instances each, seeded by `seed`.
pub fn run_laws(seed: u64, cases: u32) -> LawReport {
    let mut s = Suite { seed, cases, outcomes: Vec::new() };

    s.law(
        "multiset extension of a unit is a row",
        two_sets().prop_flat_map(|(a, b)| (matrix(a, b, MAX_ENTRY), any::<Index>())),
        |(m, i)| {
            if m.dom().is_empty() {
                return Ok(());
            }
            let a = i.index(m.dom().len());
            let v = lift(Multiset::unit(m.dom(), a))?;
            prop_assert_eq!(lift(m.extend(&v))?, m.row(a));
            Ok(())
        },
    );
    s.law(
        "multiset extension of the unit is the identity",
        finset("a").prop_flat_map(|a| multiset(a, MAX_ENTRY)),
        |v| {
            prop_assert_eq!(lift(NatMatrix::identity(v.base()).extend(&v))?, v);
            Ok(())
        },
    );
    s.law(
        "multiset extension is associative",
        three_sets().prop_flat_map(|(a, b, c)| (multiset(a.clone(), MAX_ENTRY), matrix(a, b.clone(), MAX_ENTRY), matrix(b, c, MAX_ENTRY))),
        |(v, m, n)| {
            let stepwise = lift(n.extend(&lift(m.extend(&v))?))?;
            prop_assert_eq!(stepwise, lift(lift(m.compose(&n))?.extend(&v))?);
            Ok(())
        },
    );
    s.law(
        "multiset extension is linear",
        two_sets().prop_flat_map(|(a, b)| (multiset(a.clone(), MAX_ENTRY), multiset(a.clone(), MAX_ENTRY), matrix(a, b, MAX_ENTRY))),
        |(v, w, m)| {
            let sum = lift(lift(m.extend(&v))?.add(&lift(m.extend(&w))?))?;
            prop_assert_eq!(lift(m.extend(&lift(v.add(&w))?))?, sum);
            Ok(())
        },
    );
    s.law(
        "flatten after the unit bag recovers the extension",
        two_sets().prop_flat_map(|(a, b)| (multiset(a.clone(), MAX_ENTRY), matrix(a, b, MAX_ENTRY))),
        |(v, f)| {
            let ext = lift(f.extend(&v))?;
            prop_assert_eq!(lift(MultisetBag::unit(&ext).flatten())?, ext);
            Ok(())
        },
    );
    s.law(
        "flatten is the weighted sum",
        finset("b").prop_flat_map(|b| (Just(b.clone()), vec((multiset(b, MAX_ENTRY), 1..=MAX_ENTRY), 0..=4))),
        |(b, items)| {
            let mut bag = MultisetBag::new(b.clone());
            let mut sum = Multiset::zero(b);
            for (v, w) in &items {
                lift(bag.insert(v, *w))?;
                sum = lift(sum.add(&lift(v.scale(*w))?))?;
            }
            prop_assert_eq!(lift(bag.flatten())?, sum);
            Ok(())
        },
    );
    s.law("singleton then membership is the identity relation", finset("a"), |a| {
        let p = lift(Powerset::new(&a, POWERSET_TABLE_LIMIT))?;
        prop_assert_eq!(lift(p.unit().graph().compose(&p.counit()))?, Relation::identity(&a));
        Ok(())
    });
    s.law(
        "membership lifted to powersets undoes the singleton",
        finset("a").prop_flat_map(|a| {
            let n = a.len();
            (Just(a), vec(any::<bool>(), n))
        }),
        |(a, mask)| {
            let p = lift(Powerset::new(&a, POWERSET_TABLE_LIMIT))?;
            let subset: BTreeSet<usize> = mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect();
            let idx = p.index_of(&subset).expect("every subset is listed");
            prop_assert_eq!(p.counit().powerset_map().apply(&BTreeSet::from([idx])), subset);
            Ok(())
        },
    );
    s.law("matrix to span to matrix is the identity", two_sets().prop_flat_map(|(a, b)| matrix(a, b, MAX_ENTRY)), |m| {
        prop_assert_eq!(Span::from_matrix(&m).to_matrix(), m);
        Ok(())
    });
    s.law("span to matrix to span is an isomorphism", two_sets().prop_flat_map(|(a, b)| span(a, b)), |s| {
        prop_assert!(iso(&Span::from_matrix(&s.to_matrix()), &s)?);
        Ok(())
    });
    s.law("counting matrices preserve composition and identities", span_pair(), |(s, t)| {
        prop_assert_eq!(lift(s.compose(&t))?.to_matrix(), lift(s.to_matrix().compose(&t.to_matrix()))?);
        prop_assert_eq!(Span::identity(s.dom()).to_matrix(), NatMatrix::identity(s.dom()));
        Ok(())
    });
    s.law("images preserve composition and identities", span_pair(), |(s, t)| {
        prop_assert_eq!(lift(s.compose(&t))?.image(), lift(s.image().compose(&t.image()))?);
        prop_assert_eq!(Span::identity(s.dom()).image(), Relation::identity(s.dom()));
        Ok(())
    });
    s.law(
        "powerset maps preserve composition and identities",
        (0..=3usize, 0..=3usize, 0..=3usize).prop_flat_map(|(x, y, z)| {
            let (a, b, c) = (FinSet::numbered("a", x), FinSet::numbered("b", y), FinSet::numbered("c", z));
            (relation(a.clone(), b.clone()), relation(b, c))
        }),
        |(r, q)| {
            let rq = lift(r.compose(&q))?.powerset_map();
            let (pr, pq) = (r.powerset_map(), q.powerset_map());
            let id = Relation::identity(r.dom()).powerset_map();
            for subset in canonical_subsets(r.dom().len()) {
                prop_assert_eq!(rq.apply(&subset), pq.apply(&pr.apply(&subset)));
                prop_assert_eq!(id.apply(&subset), subset);
            }
            Ok(())
        },
    );
    s.law("span dagger is an involution", two_sets().prop_flat_map(|(a, b)| span(a, b)), |s| {
        let back = s.dagger().dagger();
        prop_assert!(back.dom().same_order(s.dom()) && back.cod().same_order(s.cod()));
        prop_assert_eq!(back.tokens(), s.tokens());
        Ok(())
    });
    s.law("span dagger reverses composition", span_pair(), |(s, t)| {
        prop_assert!(iso(&lift(s.compose(&t))?.dagger(), &lift(t.dagger().compose(&s.dagger()))?)?);
        Ok(())
    });
    s.law("relation dagger is an involution", two_sets().prop_flat_map(|(a, b)| relation(a, b)), |r| {
        prop_assert_eq!(r.dagger().dagger(), r);
        Ok(())
    });
    s.law(
        "relation dagger reverses composition",
        three_sets().prop_flat_map(|(a, b, c)| (relation(a, b.clone()), relation(b, c))),
        |(r, q)| {
            prop_assert_eq!(lift(r.compose(&q))?.dagger(), lift(q.dagger().compose(&r.dagger()))?);
            Ok(())
        },
    );
    s.law(
        "span composition is associative up to isomorphism",
        (finset("a"), finset("b"), finset("c"), finset("d"))
            .prop_flat_map(|(a, b, c, d)| (span(a, b.clone()), span(b, c.clone()), span(c, d))),
        |(s, t, u)| {
            let left = lift(lift(s.compose(&t))?.compose(&u))?;
            let right = lift(s.compose(&lift(t.compose(&u))?))?;
            prop_assert!(iso(&left, &right)?);
            Ok(())
        },
    );
    s.law("identity spans are units up to isomorphism", two_sets().prop_flat_map(|(a, b)| span(a, b)), |s| {
        prop_assert!(iso(&lift(Span::identity(s.dom()).compose(&s))?, &s)?);
        prop_assert!(iso(&lift(s.compose(&Span::identity(s.cod())))?, &s)?);
        Ok(())
    });
    s.law("the image unit is an iso exactly on relation-like spans", two_sets().prop_flat_map(|(a, b)| span(a, b)), |s| {
        let h = image_unit(&s);
        prop_assert_eq!(h.is_iso(), s.is_relation_like());
        Ok(())
    });

    s.exhaustive("triangle identities on all subsets of sets up to 4", || {
        let mut n = 0;
        for size in 0..=4 {
            let a = FinSet::numbered("a", size);
            let p = Powerset::new(&a, POWERSET_TABLE_LIMIT).map_err(|e| e.to_string())?;
            let counit = p.counit();
            if p.unit().graph().compose(&counit).map_err(|e| e.to_string())? != Relation::identity(&a) {
                return Err(format!("singleton then membership on {size} elements"));
            }
            let lifted = counit.powerset_map();
            for (i, subset) in p.subsets().iter().enumerate() {
                if &lifted.apply(&BTreeSet::from([i])) != subset {
                    return Err(format!("membership on {subset:?}"));
                }
                n += 1;
            }
        }
        Ok(n)
    });
    s.exhaustive("powerset functoriality on all relations between sets up to 2", || {
        let mut n = 0;
        let relations = |a: &FinSet, b: &FinSet| -> Vec<Relation> {
            let pairs: Vec<(usize, usize)> = (0..a.len()).flat_map(|x| (0..b.len()).map(move |y| (x, y))).collect();
            (0..1usize << pairs.len())
                .map(|mask| {
                    let chosen = pairs.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &p)| p);
                    Relation::new(a.clone(), b.clone(), chosen).expect("pairs in range")
                })
                .collect()
        };
        for (x, y, z) in (0..=2).flat_map(|x| (0..=2).flat_map(move |y| (0..=2).map(move |z| (x, y, z)))) {
            let (a, b, c) = (FinSet::numbered("a", x), FinSet::numbered("b", y), FinSet::numbered("c", z));
            for r in relations(&a, &b) {
                for q in relations(&b, &c) {
                    let rq = r.compose(&q).map_err(|e| e.to_string())?.powerset_map();
                    for subset in canonical_subsets(x) {
                        if rq.apply(&subset) != q.powerset_map().apply(&r.powerset_map().apply(&subset)) {
                            return Err(format!("{r:?} then {q:?} on {subset:?}"));
                        }
                        n += 1;
                    }
                }
            }
        }
        Ok(n)
    });
    s.exhaustive("span associativity on all 0/1 spans between sets up to 2", || {
        let mut n = 0;
        let spans = |a: &FinSet, b: &FinSet| -> Vec<Span> {
            let cells = a.len() * b.len();
            (0..1usize << cells)
                .map(|mask| {
                    let mut m = NatMatrix::zero(a.clone(), b.clone());
                    for k in (0..cells).filter(|k| mask >> k & 1 == 1) {
                        m.set(k / b.len(), k % b.len(), 1 + (k as u64 % 2));
                    }
                    Span::from_matrix(&m)
                })
                .collect()
        };
        let sets: Vec<FinSet> = (1..=2).map(|k| FinSet::numbered("s", k)).collect();
        for a in &sets {
            for b in &sets {
                for c in &sets {
                    for d in &sets {
                        for st in spans(a, b) {
                            for t in spans(b, c) {
                                let left_inner = st.compose(&t).map_err(|e| e.to_string())?;
                                for u in spans(c, d) {
                                    let left = left_inner.compose(&u).map_err(|e| e.to_string())?;
                                    let right = st.compose(&t.compose(&u).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
                                    if !left.iso_eq(&right).map_err(|e| e.to_string())? {
                                        return Err(format!("{st:?}; {t:?}; {u:?}"));
                                    }
                                    n += 1;
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(n)
    });

    LawReport { outcomes: s.outcomes }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laws_hold_on_a_small_run() {
        let report = run_laws(0, 20);
        assert!(report.passed(), "{report}");
        assert!(report.outcomes.len() >= 20);
    }

    #[test]
    fn runs_are_reproducible() {
        assert_eq!(run_laws(5, 5), run_laws(5, 5));
    }
}
