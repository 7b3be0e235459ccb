//! Finite sets and the three morphism calculi built on them.
//!
//! * [`Span`]: `A <- S -> B`, composed by pullback; the apex carries multiplicity.
//! * [`Relation`]: subsets of `A x B`; the image of a span.
//! * [`NatMatrix`]: maps `A -> N^B`, i.e. the Kleisli morphisms of the multiset
//!   relative monad. [`Span::to_matrix`] and [`Span::from_matrix`] form a local
//!   equivalence: the round trip on matrices is the identity, the round trip on
//!   spans is an isomorphism of apexes.
//!
//! Elements are addressed by their position in the owning [`FinSet`]; labels are
//! only used for presentation and for aligning sets that list the same labels
//! in a different order.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Largest set whose powerset table is materialized eagerly.
pub const POWERSET_TABLE_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpanError {
    #[error("{0}: finite sets do not match")]
    Mismatch(&'static str),
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("duplicate element `{0}`")]
    DuplicateElement(String),
    #[error("duplicate token label `{0}`")]
    DuplicateToken(String),
    #[error("token `{token}` has a {side} foot outside its set")]
    ForeignFoot { token: String, side: &'static str },
    #[error("morphism map has {got} entries but the source has {expected} tokens")]
    BadMorphismArity { expected: usize, got: usize },
    #[error("token `{0}` is not sent to a token over the same feet")]
    NonCommuting(String),
    #[error("natural number overflow")]
    Overflow,
    #[error("powerset of a {size}-element set exceeds the limit of {limit}")]
    PowersetTooLarge { size: usize, limit: usize },
}

#[derive(Debug)]
struct FinSetInner {
    elements: Vec<String>,
    index: HashMap<String, usize>,
}

/// A finite set of distinct string labels, in a fixed order.
///
/// Equality compares label sets and ignores order. Cloning is cheap.
#[derive(Clone)]
pub struct FinSet(Arc<FinSetInner>);

impl FinSet {
    pub fn new<I, S>(labels: I) -> Result<Self, SpanError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let elements: Vec<String> = labels.into_iter().map(Into::into).collect();
        let mut index = HashMap::with_capacity(elements.len());
        for (i, e) in elements.iter().enumerate() {
            if index.insert(e.clone(), i).is_some() {
                return Err(SpanError::DuplicateElement(e.clone()));
            }
        }
        Ok(FinSet(Arc::new(FinSetInner { elements, index })))
    }

    pub fn empty() -> Self {
        FinSet::new(Vec::<String>::new()).expect("empty set")
    }

    /// `{prefix0, prefix1, ...}` with `n` elements.
    pub fn numbered(prefix: &str, n: usize) -> Self {
        FinSet::new((0..n).map(|i| format!("{prefix}{i}"))).expect("numbered labels are distinct")
    }

    pub fn len(&self) -> usize {
        self.0.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.elements.is_empty()
    }

    pub fn label(&self, i: usize) -> &str {
        &self.0.elements[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.0.elements
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.0.index.get(label).copied()
    }

    pub fn require(&self, label: &str) -> Result<usize, SpanError> {
        self.position(label)
            .ok_or_else(|| SpanError::UnknownElement(label.to_string()))
    }

    pub fn contains(&self, label: &str) -> bool {
        self.0.index.contains_key(label)
    }

    /// Same labels in the same order.
    pub fn same_order(&self, other: &FinSet) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.elements == other.0.elements
    }

    /// For each position of `self`, the position of the same label in `other`.
    pub fn translate_to(&self, other: &FinSet) -> Option<Vec<usize>> {
        if self.len() != other.len() {
            return None;
        }
        self.0
            .elements
            .iter()
            .map(|l| other.position(l))
            .collect()
    }
}

impl PartialEq for FinSet {
    fn eq(&self, other: &Self) -> bool {
        self.same_order(other)
            || (self.len() == other.len() && self.0.elements.iter().all(|l| other.contains(l)))
    }
}

impl Eq for FinSet {}

impl fmt::Debug for FinSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.0.elements.iter()).finish()
    }
}

/// Index map sending positions of `from` to positions of `to`; identity when
/// both list their labels in the same order.
fn align(from: &FinSet, to: &FinSet, what: &'static str) -> Result<Option<Vec<usize>>, SpanError> {
    if from.same_order(to) {
        return Ok(None);
    }
    from.translate_to(to).map(Some).ok_or(SpanError::Mismatch(what))
}

fn remap(map: &Option<Vec<usize>>, i: usize) -> usize {
    match map {
        Some(m) => m[i],
        None => i,
    }
}

fn checked_add(a: u64, b: u64) -> Result<u64, SpanError> {
    a.checked_add(b).ok_or(SpanError::Overflow)
}

fn checked_mul(a: u64, b: u64) -> Result<u64, SpanError> {
    a.checked_mul(b).ok_or(SpanError::Overflow)
}

/// One apex element of a span together with its two feet.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub label: String,
    pub left: usize,
    pub right: usize,
}

/// A span `dom <- apex -> cod` of finite sets.
#[derive(Debug, Clone)]
pub struct Span {
    dom: FinSet,
    cod: FinSet,
    tokens: Vec<Token>,
}

fn block_label(dom: &FinSet, cod: &FinSet, a: usize, b: usize, k: usize) -> String {
    format!("{}>{}#{}", dom.label(a), cod.label(b), k)
}

impl Span {
    pub fn new(dom: FinSet, cod: FinSet, tokens: Vec<Token>) -> Result<Self, SpanError> {
        let mut seen = BTreeSet::new();
        for t in &tokens {
            if t.left >= dom.len() {
                return Err(SpanError::ForeignFoot { token: t.label.clone(), side: "left" });
            }
            if t.right >= cod.len() {
                return Err(SpanError::ForeignFoot { token: t.label.clone(), side: "right" });
            }
            if !seen.insert(t.label.as_str()) {
                return Err(SpanError::DuplicateToken(t.label.clone()));
            }
        }
        Ok(Span { dom, cod, tokens })
    }

    /// Builds a span with one token per listed pair, labelled canonically by
    /// block and occurrence.
    pub fn from_feet<I>(dom: FinSet, cod: FinSet, feet: I) -> Result<Self, SpanError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
        let mut tokens = Vec::new();
        for (a, b) in feet {
            if a >= dom.len() || b >= cod.len() {
                return Err(SpanError::ForeignFoot {
                    token: format!("({a},{b})"),
                    side: if a >= dom.len() { "left" } else { "right" },
                });
            }
            let k = counts.entry((a, b)).or_insert(0);
            tokens.push(Token { label: block_label(&dom, &cod, a, b, *k), left: a, right: b });
            *k += 1;
        }
        Span::new(dom, cod, tokens)
    }

    /// Label-based convenience constructor.
    pub fn from_label_pairs(dom: FinSet, cod: FinSet, pairs: &[(&str, &str)]) -> Result<Self, SpanError> {
        let feet = pairs
            .iter()
            .map(|(a, b)| Ok((dom.require(a)?, cod.require(b)?)))
            .collect::<Result<Vec<_>, SpanError>>()?;
        Span::from_feet(dom, cod, feet)
    }

    pub fn identity(a: &FinSet) -> Span {
        let tokens = (0..a.len())
            .map(|i| Token { label: a.label(i).to_string(), left: i, right: i })
            .collect();
        Span { dom: a.clone(), cod: a.clone(), tokens }
    }

    pub fn dom(&self) -> &FinSet {
        &self.dom
    }

    pub fn cod(&self) -> &FinSet {
        &self.cod
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    /// Number of tokens over `(a, b)`.
    pub fn multiplicity(&self, a: usize, b: usize) -> usize {
        self.tokens.iter().filter(|t| t.left == a && t.right == b).count()
    }

    /// Pullback composite `self ; next`. Composite tokens are labelled
    /// `(x;y)` after their constituents.
    pub fn compose(&self, next: &Span) -> Result<Span, SpanError> {
        let mid = align(&next.dom, &self.cod, "span composition")?;
        let mut by_left: HashMap<usize, Vec<&Token>> = HashMap::new();
        for y in &next.tokens {
            by_left.entry(remap(&mid, y.left)).or_default().push(y);
        }
        let mut tokens = Vec::new();
        for x in &self.tokens {
            if let Some(ys) = by_left.get(&x.right) {
                for y in ys {
                    tokens.push(Token {
                        label: format!("({};{})", x.label, y.label),
                        left: x.left,
                        right: y.right,
                    });
                }
            }
        }
        Span::new(self.dom.clone(), next.cod.clone(), tokens)
    }

    /// The converse span: same apex, feet swapped.
    pub fn dagger(&self) -> Span {
        Span {
            dom: self.cod.clone(),
            cod: self.dom.clone(),
            tokens: self
                .tokens
                .iter()
                .map(|t| Token { label: t.label.clone(), left: t.right, right: t.left })
                .collect(),
        }
    }

    /// Equality up to isomorphism of apexes.
    pub fn iso_eq(&self, other: &Span) -> Result<bool, SpanError> {
        if self.dom != other.dom || self.cod != other.cod {
            return Err(SpanError::Mismatch("span comparison"));
        }
        Ok(self.to_matrix() == other.to_matrix())
    }

    pub fn image(&self) -> Relation {
        Relation {
            dom: self.dom.clone(),
            cod: self.cod.clone(),
            pairs: self.tokens.iter().map(|t| (t.left, t.right)).collect(),
        }
    }

    /// Entry `(a, b)` counts the tokens over `(a, b)`.
    pub fn to_matrix(&self) -> NatMatrix {
        let mut m = NatMatrix::zero(self.dom.clone(), self.cod.clone());
        for t in &self.tokens {
            m.data[t.left * m.cols + t.right] += 1;
        }
        m
    }

    /// `m(a, b)` tokens over each `(a, b)`, labelled `a>b#k`.
    pub fn from_matrix(m: &NatMatrix) -> Span {
        let mut tokens = Vec::new();
        for a in 0..m.rows {
            for b in 0..m.cols {
                for k in 0..m.data[a * m.cols + b] {
                    tokens.push(Token {
                        label: block_label(&m.dom, &m.cod, a, b, k as usize),
                        left: a,
                        right: b,
                    });
                }
            }
        }
        Span { dom: m.dom.clone(), cod: m.cod.clone(), tokens }
    }

    /// The inclusion of relations into spans: one token `a>b` per pair.
    pub fn from_relation(r: &Relation) -> Span {
        let tokens = r
            .pairs
            .iter()
            .map(|&(a, b)| Token {
                label: format!("{}>{}", r.dom.label(a), r.cod.label(b)),
                left: a,
                right: b,
            })
            .collect();
        Span { dom: r.dom.clone(), cod: r.cod.clone(), tokens }
    }

    pub fn from_function(f: &FinFunction) -> Span {
        Span::from_relation(&f.graph())
    }

    /// Every multiplicity is at most one.
    pub fn is_relation_like(&self) -> bool {
        self.to_matrix().data.iter().all(|&c| c <= 1)
    }
}

/// A relation between two finite sets.
#[derive(Debug, Clone)]
pub struct Relation {
    dom: FinSet,
    cod: FinSet,
    pairs: BTreeSet<(usize, usize)>,
}

impl Relation {
    pub fn new<I>(dom: FinSet, cod: FinSet, pairs: I) -> Result<Self, SpanError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let pairs: BTreeSet<_> = pairs.into_iter().collect();
        for &(a, b) in &pairs {
            if a >= dom.len() {
                return Err(SpanError::ForeignFoot { token: format!("({a},{b})"), side: "left" });
            }
            if b >= cod.len() {
                return Err(SpanError::ForeignFoot { token: format!("({a},{b})"), side: "right" });
            }
        }
        Ok(Relation { dom, cod, pairs })
    }

    pub fn from_label_pairs(dom: FinSet, cod: FinSet, pairs: &[(&str, &str)]) -> Result<Self, SpanError> {
        let idx = pairs
            .iter()
            .map(|(a, b)| Ok((dom.require(a)?, cod.require(b)?)))
            .collect::<Result<Vec<_>, SpanError>>()?;
        Relation::new(dom, cod, idx)
    }

    pub fn identity(a: &FinSet) -> Relation {
        Relation { dom: a.clone(), cod: a.clone(), pairs: (0..a.len()).map(|i| (i, i)).collect() }
    }

    pub fn empty(dom: FinSet, cod: FinSet) -> Relation {
        Relation { dom, cod, pairs: BTreeSet::new() }
    }

    pub fn dom(&self) -> &FinSet {
        &self.dom
    }

    pub fn cod(&self) -> &FinSet {
        &self.cod
    }

    pub fn pairs(&self) -> &BTreeSet<(usize, usize)> {
        &self.pairs
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.pairs.contains(&(a, b))
    }

    /// Elements related to `a`.
    pub fn successors(&self, a: usize) -> impl Iterator<Item = usize> + '_ {
        self.pairs.range((a, 0)..(a + 1, 0)).map(|&(_, b)| b)
    }

    pub fn compose(&self, next: &Relation) -> Result<Relation, SpanError> {
        let mid = align(&next.dom, &self.cod, "relation composition")?;
        let mut fwd: HashMap<usize, Vec<usize>> = HashMap::new();
        for &(b, c) in &next.pairs {
            fwd.entry(remap(&mid, b)).or_default().push(c);
        }
        let mut pairs = BTreeSet::new();
        for &(a, b) in &self.pairs {
            if let Some(cs) = fwd.get(&b) {
                pairs.extend(cs.iter().map(|&c| (a, c)));
            }
        }
        Ok(Relation { dom: self.dom.clone(), cod: next.cod.clone(), pairs })
    }

    pub fn dagger(&self) -> Relation {
        Relation {
            dom: self.cod.clone(),
            cod: self.dom.clone(),
            pairs: self.pairs.iter().map(|&(a, b)| (b, a)).collect(),
        }
    }

    /// The 0/1 matrix of the relation.
    pub fn to_matrix(&self) -> NatMatrix {
        let mut m = NatMatrix::zero(self.dom.clone(), self.cod.clone());
        for &(a, b) in &self.pairs {
            m.data[a * m.cols + b] = 1;
        }
        m
    }

    /// `Some` when every element of the domain is related to exactly one element.
    pub fn as_function(&self) -> Option<FinFunction> {
        let mut map = vec![None; self.dom.len()];
        for &(a, b) in &self.pairs {
            if map[a].replace(b).is_some() {
                return None;
            }
        }
        let map = map.into_iter().collect::<Option<Vec<_>>>()?;
        Some(FinFunction { dom: self.dom.clone(), cod: self.cod.clone(), map })
    }

    pub fn powerset_map(&self) -> PowersetMap {
        PowersetMap::new(self)
    }
}

impl PartialEq for Relation {
    fn eq(&self, other: &Self) -> bool {
        if self.dom != other.dom || self.cod != other.cod {
            return false;
        }
        let (Ok(l), Ok(r)) = (
            align(&self.dom, &other.dom, "relation equality"),
            align(&self.cod, &other.cod, "relation equality"),
        ) else {
            return false;
        };
        self.pairs.len() == other.pairs.len()
            && self
                .pairs
                .iter()
                .all(|&(a, b)| other.pairs.contains(&(remap(&l, a), remap(&r, b))))
    }
}

impl Eq for Relation {}

/// A total function between finite sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinFunction {
    dom: FinSet,
    cod: FinSet,
    map: Vec<usize>,
}

impl FinFunction {
    pub fn new(dom: FinSet, cod: FinSet, map: Vec<usize>) -> Result<Self, SpanError> {
        if map.len() != dom.len() {
            return Err(SpanError::Mismatch("function domain"));
        }
        if let Some(&bad) = map.iter().find(|&&b| b >= cod.len()) {
            return Err(SpanError::ForeignFoot { token: format!("->{bad}"), side: "right" });
        }
        Ok(FinFunction { dom, cod, map })
    }

    pub fn dom(&self) -> &FinSet {
        &self.dom
    }

    pub fn cod(&self) -> &FinSet {
        &self.cod
    }

    pub fn apply(&self, a: usize) -> usize {
        self.map[a]
    }

    pub fn table(&self) -> &[usize] {
        &self.map
    }

    pub fn graph(&self) -> Relation {
        Relation {
            dom: self.dom.clone(),
            cod: self.cod.clone(),
            pairs: self.map.iter().enumerate().map(|(a, &b)| (a, b)).collect(),
        }
    }

    pub fn to_matrix(&self) -> NatMatrix {
        self.graph().to_matrix()
    }
}

/// A natural-number matrix `dom x cod`, read as a map `dom -> N^cod`.
#[derive(Clone)]
pub struct NatMatrix {
    dom: FinSet,
    cod: FinSet,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl NatMatrix {
    pub fn zero(dom: FinSet, cod: FinSet) -> Self {
        let (rows, cols) = (dom.len(), cod.len());
        NatMatrix { dom, cod, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(a: &FinSet) -> Self {
        let mut m = NatMatrix::zero(a.clone(), a.clone());
        for i in 0..a.len() {
            m.data[i * m.cols + i] = 1;
        }
        m
    }

    pub fn from_rows(dom: FinSet, cod: FinSet, rows: &[Vec<u64>]) -> Result<Self, SpanError> {
        if rows.len() != dom.len() || rows.iter().any(|r| r.len() != cod.len()) {
            return Err(SpanError::Mismatch("matrix shape"));
        }
        let mut m = NatMatrix::zero(dom, cod);
        m.data = rows.concat();
        Ok(m)
    }

    pub fn dom(&self) -> &FinSet {
        &self.dom
    }

    pub fn cod(&self) -> &FinSet {
        &self.cod
    }

    pub fn get(&self, a: usize, b: usize) -> u64 {
        self.data[a * self.cols + b]
    }

    pub fn set(&mut self, a: usize, b: usize, v: u64) {
        self.data[a * self.cols + b] = v;
    }

    pub fn row(&self, a: usize) -> Multiset {
        Multiset {
            base: self.cod.clone(),
            counts: self.data[a * self.cols..(a + 1) * self.cols].to_vec(),
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        (0..self.rows)
            .map(|a| self.data[a * self.cols..(a + 1) * self.cols].to_vec())
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&c| c == 0)
    }

    pub fn transpose(&self) -> NatMatrix {
        let mut t = NatMatrix::zero(self.cod.clone(), self.dom.clone());
        for a in 0..self.rows {
            for b in 0..self.cols {
                t.data[b * t.cols + a] = self.data[a * self.cols + b];
            }
        }
        t
    }

    /// Pairs with a nonzero entry.
    pub fn support(&self) -> Relation {
        let pairs = (0..self.rows)
            .flat_map(|a| (0..self.cols).map(move |b| (a, b)))
            .filter(|&(a, b)| self.get(a, b) > 0)
            .collect();
        Relation { dom: self.dom.clone(), cod: self.cod.clone(), pairs }
    }

    /// Kleisli composite `self ; next`: the ordinary matrix product, with
    /// overflow reported rather than wrapped.
    pub fn compose(&self, next: &NatMatrix) -> Result<NatMatrix, SpanError> {
        let next = next.reindexed_rows(&self.cod, "matrix composition")?;
        let mut out = NatMatrix::zero(self.dom.clone(), next.cod.clone());
        for a in 0..self.rows {
            for k in 0..self.cols {
                let x = self.data[a * self.cols + k];
                if x == 0 {
                    continue;
                }
                for c in 0..next.cols {
                    let y = next.data[k * next.cols + c];
                    if y != 0 {
                        let cell = &mut out.data[a * out.cols + c];
                        *cell = checked_add(*cell, checked_mul(x, y)?)?;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Kleisli extension applied to `v`: `b -> sum_a v(a) * self(a, b)`.
    pub fn extend(&self, v: &Multiset) -> Result<Multiset, SpanError> {
        let map = align(&self.dom, &v.base, "multiset extension")?;
        let mut counts = vec![0u64; self.cols];
        for a in 0..self.rows {
            let x = v.counts[remap(&map, a)];
            if x == 0 {
                continue;
            }
            for (b, cell) in counts.iter_mut().enumerate() {
                let y = self.data[a * self.cols + b];
                if y != 0 {
                    *cell = checked_add(*cell, checked_mul(x, y)?)?;
                }
            }
        }
        Ok(Multiset { base: self.cod.clone(), counts })
    }

    /// Rows permuted so that the domain is listed in the order of `dom`.
    fn reindexed_rows(&self, dom: &FinSet, what: &'static str) -> Result<NatMatrix, SpanError> {
        match align(dom, &self.dom, what)? {
            None => Ok(self.clone()),
            Some(map) => {
                let mut out = NatMatrix::zero(dom.clone(), self.cod.clone());
                for (a, &src) in map.iter().enumerate() {
                    out.data[a * out.cols..(a + 1) * out.cols]
                        .copy_from_slice(&self.data[src * self.cols..(src + 1) * self.cols]);
                }
                Ok(out)
            }
        }
    }
}

impl PartialEq for NatMatrix {
    fn eq(&self, other: &Self) -> bool {
        if self.dom.same_order(&other.dom) && self.cod.same_order(&other.cod) {
            return self.data == other.data;
        }
        let (Ok(l), Ok(r)) = (
            align(&self.dom, &other.dom, "matrix equality"),
            align(&self.cod, &other.cod, "matrix equality"),
        ) else {
            return false;
        };
        (0..self.rows).all(|a| {
            (0..self.cols).all(|b| self.get(a, b) == other.get(remap(&l, a), remap(&r, b)))
        })
    }
}

impl Eq for NatMatrix {}

impl fmt::Debug for NatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NatMatrix {:?} -> {:?} ", self.dom, self.cod)?;
        f.debug_list().entries(self.to_rows()).finish()
    }
}

/// A finite multiset, i.e. an element of `N^base`.
#[derive(Clone)]
pub struct Multiset {
    base: FinSet,
    counts: Vec<u64>,
}

impl Multiset {
    pub fn zero(base: FinSet) -> Self {
        let counts = vec![0; base.len()];
        Multiset { base, counts }
    }

    pub fn new(base: FinSet, counts: Vec<u64>) -> Result<Self, SpanError> {
        if counts.len() != base.len() {
            return Err(SpanError::Mismatch("multiset counts"));
        }
        Ok(Multiset { base, counts })
    }

    /// The unit of the relative monad: count one at `a`.
    pub fn unit(base: &FinSet, a: usize) -> Result<Self, SpanError> {
        if a >= base.len() {
            return Err(SpanError::UnknownElement(format!("#{a}")));
        }
        let mut m = Multiset::zero(base.clone());
        m.counts[a] = 1;
        Ok(m)
    }

    pub fn unit_of(base: &FinSet, label: &str) -> Result<Self, SpanError> {
        Multiset::unit(base, base.require(label)?)
    }

    pub fn base(&self) -> &FinSet {
        &self.base
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn get(&self, a: usize) -> u64 {
        self.counts[a]
    }

    pub fn total(&self) -> Result<u64, SpanError> {
        self.counts.iter().try_fold(0u64, |acc, &c| checked_add(acc, c))
    }

    pub fn is_zero(&self) -> bool {
        self.counts.iter().all(|&c| c == 0)
    }

    pub fn add(&self, other: &Multiset) -> Result<Multiset, SpanError> {
        let map = align(&self.base, &other.base, "multiset sum")?;
        let counts = self
            .counts
            .iter()
            .enumerate()
            .map(|(a, &c)| checked_add(c, other.counts[remap(&map, a)]))
            .collect::<Result<_, _>>()?;
        Ok(Multiset { base: self.base.clone(), counts })
    }

    pub fn scale(&self, k: u64) -> Result<Multiset, SpanError> {
        let counts = self.counts.iter().map(|&c| checked_mul(c, k)).collect::<Result<_, _>>()?;
        Ok(Multiset { base: self.base.clone(), counts })
    }
}

impl PartialEq for Multiset {
    fn eq(&self, other: &Self) -> bool {
        match align(&self.base, &other.base, "multiset equality") {
            Ok(map) => self
                .counts
                .iter()
                .enumerate()
                .all(|(a, &c)| other.counts[remap(&map, a)] == c),
            Err(_) => false,
        }
    }
}

impl Eq for Multiset {}

impl fmt::Debug for Multiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(
                self.counts
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| c > 0)
                    .map(|(a, c)| (self.base.label(a), c)),
            )
            .finish()
    }
}

/// A finitely supported multiset of multisets over a common base, keyed by
/// count vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultisetBag {
    base: FinSet,
    weights: BTreeMap<Vec<u64>, u64>,
}

impl MultisetBag {
    pub fn new(base: FinSet) -> Self {
        MultisetBag { base, weights: BTreeMap::new() }
    }

    /// The unit at the multiset `v`, i.e. `v` with weight one.
    pub fn unit(v: &Multiset) -> Self {
        let mut bag = MultisetBag::new(v.base.clone());
        bag.weights.insert(v.counts.clone(), 1);
        bag
    }

    pub fn insert(&mut self, v: &Multiset, weight: u64) -> Result<(), SpanError> {
        let map = align(&self.base, &v.base, "multiset bag")?;
        let key: Vec<u64> = (0..self.base.len()).map(|a| v.counts[remap(&map, a)]).collect();
        let w = self.weights.entry(key).or_insert(0);
        *w = checked_add(*w, weight)?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `b -> sum_w bag(w) * w(b)`.
    pub fn flatten(&self) -> Result<Multiset, SpanError> {
        let mut counts = vec![0u64; self.base.len()];
        for (w, &k) in &self.weights {
            for (cell, &c) in counts.iter_mut().zip(w) {
                *cell = checked_add(*cell, checked_mul(k, c)?)?;
            }
        }
        Ok(Multiset { base: self.base.clone(), counts })
    }
}

/// A span morphism: a map of apexes commuting with both legs.
#[derive(Debug, Clone)]
pub struct SpanMorphism {
    source: Span,
    target: Span,
    map: Vec<usize>,
}

impl SpanMorphism {
    pub fn new(source: Span, target: Span, map: Vec<usize>) -> Result<Self, SpanError> {
        if source.dom != target.dom || source.cod != target.cod {
            return Err(SpanError::Mismatch("span morphism"));
        }
        if map.len() != source.tokens.len() {
            return Err(SpanError::BadMorphismArity { expected: source.tokens.len(), got: map.len() });
        }
        let l = align(&source.dom, &target.dom, "span morphism")?;
        let r = align(&source.cod, &target.cod, "span morphism")?;
        for (t, &i) in source.tokens.iter().zip(&map) {
            let ok = target
                .tokens
                .get(i)
                .is_some_and(|u| u.left == remap(&l, t.left) && u.right == remap(&r, t.right));
            if !ok {
                return Err(SpanError::NonCommuting(t.label.clone()));
            }
        }
        Ok(SpanMorphism { source, target, map })
    }

    pub fn source(&self) -> &Span {
        &self.source
    }

    pub fn target(&self) -> &Span {
        &self.target
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn is_iso(&self) -> bool {
        let image: BTreeSet<_> = self.map.iter().collect();
        self.source.tokens.len() == self.target.tokens.len() && image.len() == self.map.len()
    }
}

/// The unit of the image/inclusion local adjunction at `s`: each token goes to
/// the single token of `from_relation(image(s))` over the same feet.
pub fn image_unit(s: &Span) -> SpanMorphism {
    let target = Span::from_relation(&s.image());
    let position: HashMap<(usize, usize), usize> = target
        .tokens
        .iter()
        .enumerate()
        .map(|(i, t)| ((t.left, t.right), i))
        .collect();
    let map = s.tokens.iter().map(|t| position[&(t.left, t.right)]).collect();
    SpanMorphism { source: s.clone(), target, map }
}

/// Finds a span morphism `s => t` (an isomorphism when `iso_required`).
///
/// Morphisms over fixed feet split into independent `(a, b)` blocks, so a
/// morphism exists iff every nonempty block of `s` has a nonempty partner in
/// `t`, and an isomorphism iff all block sizes agree.
pub fn span_morphism_search(s: &Span, t: &Span, iso_required: bool) -> Result<Option<SpanMorphism>, SpanError> {
    if s.dom != t.dom || s.cod != t.cod {
        return Err(SpanError::Mismatch("span morphism search"));
    }
    let l = align(&s.dom, &t.dom, "span morphism search")?;
    let r = align(&s.cod, &t.cod, "span morphism search")?;
    let mut blocks: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (i, u) in t.tokens.iter().enumerate() {
        blocks.entry((u.left, u.right)).or_default().push(i);
    }
    if iso_required && s.to_matrix() != t.to_matrix() {
        return Ok(None);
    }
    let mut used: HashMap<(usize, usize), usize> = HashMap::new();
    let mut map = Vec::with_capacity(s.tokens.len());
    for x in &s.tokens {
        let key = (remap(&l, x.left), remap(&r, x.right));
        let Some(block) = blocks.get(&key) else {
            return Ok(None);
        };
        let k = used.entry(key).or_insert(0);
        map.push(if iso_required { block[*k] } else { block[0] });
        *k += 1;
    }
    Ok(Some(SpanMorphism { source: s.clone(), target: t.clone(), map }))
}

/// The powerset of a finite set, listed canonically: by size, then
/// lexicographically by member positions.
#[derive(Debug, Clone)]
pub struct Powerset {
    base: FinSet,
    subsets: Vec<BTreeSet<usize>>,
    index: HashMap<BTreeSet<usize>, usize>,
    set: FinSet,
}

/// `{l1,l2}` with members in base order.
pub fn subset_label(base: &FinSet, members: &BTreeSet<usize>) -> String {
    let inner: Vec<&str> = members.iter().map(|&i| base.label(i)).collect();
    format!("{{{}}}", inner.join(","))
}

/// All subsets of `0..n` in canonical order.
pub fn canonical_subsets(n: usize) -> Vec<BTreeSet<usize>> {
    let mut all: Vec<Vec<usize>> = (0u64..(1u64 << n))
        .map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).collect())
        .collect();
    all.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    all.into_iter().map(|v| v.into_iter().collect()).collect()
}

impl Powerset {
    pub fn new(base: &FinSet, limit: usize) -> Result<Self, SpanError> {
        Powerset::with_labels(base, limit, |members| subset_label(base, members))
    }

    /// Like [`Powerset::new`] with caller-chosen labels for the subsets.
    pub fn with_labels<F>(base: &FinSet, limit: usize, label: F) -> Result<Self, SpanError>
    where
        F: Fn(&BTreeSet<usize>) -> String,
    {
        if base.len() > limit || base.len() >= 63 {
            return Err(SpanError::PowersetTooLarge { size: base.len(), limit });
        }
        let subsets = canonical_subsets(base.len());
        let set = FinSet::new(subsets.iter().map(&label))?;
        let index = subsets.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(Powerset { base: base.clone(), subsets, index, set })
    }

    pub fn base(&self) -> &FinSet {
        &self.base
    }

    /// The subsets as a finite set of labels.
    pub fn as_set(&self) -> &FinSet {
        &self.set
    }

    pub fn subsets(&self) -> &[BTreeSet<usize>] {
        &self.subsets
    }

    pub fn subset(&self, i: usize) -> &BTreeSet<usize> {
        &self.subsets[i]
    }

    pub fn index_of(&self, members: &BTreeSet<usize>) -> Option<usize> {
        self.index.get(members).copied()
    }

    /// The Kleisli unit `a -> {a}`, as the graph of a function `A -> P(A)`.
    pub fn unit(&self) -> FinFunction {
        let map = (0..self.base.len())
            .map(|a| self.index[&BTreeSet::from([a])])
            .collect();
        FinFunction { dom: self.base.clone(), cod: self.set.clone(), map }
    }

    /// The counit of the Kleisli adjunction: membership `P(A) -> A`.
    pub fn counit(&self) -> Relation {
        let pairs = self
            .subsets
            .iter()
            .enumerate()
            .flat_map(|(i, s)| s.iter().map(move |&x| (i, x)))
            .collect();
        Relation { dom: self.set.clone(), cod: self.base.clone(), pairs }
    }
}

/// The direct image of a relation, `S -> { b | exists a in S. (a, b) in r }`.
#[derive(Debug, Clone)]
pub struct PowersetMap {
    relation: Relation,
    rows: Vec<BTreeSet<usize>>,
}

impl PowersetMap {
    pub fn new(r: &Relation) -> Self {
        let mut rows = vec![BTreeSet::new(); r.dom.len()];
        for &(a, b) in &r.pairs {
            rows[a].insert(b);
        }
        PowersetMap { relation: r.clone(), rows }
    }

    pub fn relation(&self) -> &Relation {
        &self.relation
    }

    pub fn apply(&self, s: &BTreeSet<usize>) -> BTreeSet<usize> {
        s.iter().flat_map(|&a| self.rows[a].iter().copied()).collect()
    }

    /// The whole map as a table indexed by the canonical subset order of the
    /// domain. Refused past [`POWERSET_TABLE_LIMIT`].
    pub fn table(&self) -> Result<Vec<(BTreeSet<usize>, BTreeSet<usize>)>, SpanError> {
        let n = self.relation.dom.len();
        if n > POWERSET_TABLE_LIMIT {
            return Err(SpanError::PowersetTooLarge { size: n, limit: POWERSET_TABLE_LIMIT });
        }
        Ok(canonical_subsets(n)
            .into_iter()
            .map(|s| {
                let img = self.apply(&s);
                (s, img)
            })
            .collect())
    }

    /// The map as a function between two materialized powersets.
    pub fn as_function(&self, dom: &Powerset, cod: &Powerset) -> Result<FinFunction, SpanError> {
        if dom.base != self.relation.dom || cod.base != self.relation.cod {
            return Err(SpanError::Mismatch("powerset map"));
        }
        let l = align(&self.relation.dom, &dom.base, "powerset map")?;
        let r = align(&cod.base, &self.relation.cod, "powerset map")?;
        let back_l = l.as_ref().map(|m| {
            let mut inv = vec![0; m.len()];
            for (i, &j) in m.iter().enumerate() {
                inv[j] = i;
            }
            inv
        });
        let back_r = r.as_ref().map(|m| {
            let mut inv = vec![0; m.len()];
            for (i, &j) in m.iter().enumerate() {
                inv[j] = i;
            }
            inv
        });
        let map = dom
            .subsets
            .iter()
            .map(|s| {
                let s: BTreeSet<usize> = s.iter().map(|&a| remap(&back_l, a)).collect();
                let img: BTreeSet<usize> = self.apply(&s).iter().map(|&b| remap(&back_r, b)).collect();
                cod.index[&img]
            })
            .collect();
        Ok(FinFunction { dom: dom.set.clone(), cod: cod.set.clone(), map })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(labels: &[&str]) -> FinSet {
        FinSet::new(labels.iter().copied()).unwrap()
    }

    #[test]
    fn finset_rejects_duplicates_and_ignores_order() {
        assert_eq!(FinSet::new(["a", "a"]).unwrap_err(), SpanError::DuplicateElement("a".into()));
        assert_eq!(set(&["a", "b"]), set(&["b", "a"]));
        assert_ne!(set(&["a", "b"]), set(&["a"]));
    }

    #[test]
    fn singleton_pullback() {
        let (a, b, c) = (set(&["1"]), set(&["2"]), set(&["3"]));
        let s = Span::from_label_pairs(a, b.clone(), &[("1", "2")]).unwrap();
        let t = Span::from_label_pairs(b, c, &[("2", "3")]).unwrap();
        let st = s.compose(&t).unwrap();
        assert_eq!(st.tokens().len(), 1);
        assert_eq!((st.tokens()[0].left, st.tokens()[0].right), (0, 0));
        assert_eq!(st.tokens()[0].label, "(1>2#0;2>3#0)");
    }

    #[test]
    fn doubled_tokens_compose_to_two() {
        let (a, b, c) = (set(&["1"]), set(&["2"]), set(&["3"]));
        let s = Span::from_label_pairs(a, b.clone(), &[("1", "2"), ("1", "2")]).unwrap();
        let t = Span::from_label_pairs(b, c, &[("2", "3")]).unwrap();
        assert_eq!(s.compose(&t).unwrap().multiplicity(0, 0), 2);
    }

    #[test]
    fn composition_rejects_mismatched_middle() {
        let s = Span::identity(&set(&["1"]));
        let t = Span::identity(&set(&["2"]));
        assert!(matches!(s.compose(&t), Err(SpanError::Mismatch(_))));
    }

    #[test]
    fn composition_aligns_reordered_middle() {
        let a = set(&["x"]);
        let b1 = set(&["p", "q"]);
        let b2 = set(&["q", "p"]);
        let s = Span::from_label_pairs(a.clone(), b1, &[("x", "q")]).unwrap();
        let t = Span::from_label_pairs(b2, a, &[("q", "x"), ("p", "x"), ("q", "x")]).unwrap();
        assert_eq!(s.compose(&t).unwrap().multiplicity(0, 0), 2);
    }

    #[test]
    fn identity_span_cases() {
        assert!(Span::identity(&FinSet::empty()).tokens().is_empty());
        let x = set(&["x"]);
        let id = Span::identity(&x);
        assert_eq!(id.tokens(), &[Token { label: "x".into(), left: 0, right: 0 }]);
        let xy = set(&["x", "y"]);
        assert_eq!(Span::identity(&xy).to_matrix(), NatMatrix::identity(&xy));
        let s = Span::from_label_pairs(xy.clone(), x, &[("x", "x"), ("y", "x"), ("y", "x")]).unwrap();
        assert!(Span::identity(&xy).compose(&s).unwrap().iso_eq(&s).unwrap());
    }

    #[test]
    fn dagger_swaps_feet() {
        let (a, b) = (set(&["1"]), set(&["2"]));
        let s = Span::from_label_pairs(a.clone(), b, &[("1", "2")]).unwrap();
        let d = s.dagger();
        assert_eq!((d.tokens()[0].left, d.tokens()[0].right), (0, 0));
        assert_eq!(d.dom(), &s.cod().clone());
        assert!(d.dagger().iso_eq(&s).unwrap());
        assert_eq!(d.dagger().tokens(), s.tokens());
        assert!(Span::identity(&a).dagger().iso_eq(&Span::identity(&a)).unwrap());
    }

    #[test]
    fn iso_eq_by_multiplicity() {
        let (a, b) = (set(&["1"]), set(&["2"]));
        let s = Span::from_label_pairs(a.clone(), b.clone(), &[("1", "2")]).unwrap();
        let relabeled = Span::new(a.clone(), b.clone(), vec![Token { label: "other".into(), left: 0, right: 0 }]).unwrap();
        assert!(s.iso_eq(&relabeled).unwrap());
        let two = Span::from_label_pairs(a.clone(), b.clone(), &[("1", "2"), ("1", "2")]).unwrap();
        assert!(!s.iso_eq(&two).unwrap());
        assert!(s.iso_eq(&Span::identity(&a)).is_err());
    }

    #[test]
    fn image_forgets_multiplicity() {
        let (a, b) = (set(&["1"]), set(&["2"]));
        let s = Span::from_label_pairs(a.clone(), b.clone(), &[("1", "2"), ("1", "2")]).unwrap();
        assert_eq!(s.image().pairs().iter().copied().collect::<Vec<_>>(), vec![(0, 0)]);
        let empty = Span::new(a, b, vec![]).unwrap();
        assert!(empty.image().pairs().is_empty());
    }

    #[test]
    fn relation_composition_and_converse() {
        let (a, b, c) = (set(&["1"]), set(&["2"]), set(&["3"]));
        let r = Relation::from_label_pairs(a.clone(), b.clone(), &[("1", "2")]).unwrap();
        let q = Relation::from_label_pairs(b.clone(), c, &[("2", "3")]).unwrap();
        assert_eq!(r.compose(&q).unwrap().pairs().len(), 1);
        assert_eq!(r.compose(&Relation::identity(&b)).unwrap(), r);
        assert_eq!(r.dagger().dagger(), r);
        assert_eq!(r.dagger().pairs().iter().copied().collect::<Vec<_>>(), vec![(0, 0)]);
        assert_eq!(Relation::identity(&a).dagger(), Relation::identity(&a));
        let rr = r.compose(&r.dagger()).unwrap();
        assert!(rr.contains(0, 0));
        assert!(Relation::identity(&a).compose(&q).is_err());
    }

    #[test]
    fn powerset_map_of_figure_edge() {
        let q = set(&["1", "2"]);
        let r = Relation::from_label_pairs(q.clone(), q.clone(), &[("1", "1"), ("1", "2")]).unwrap();
        let p = r.powerset_map();
        assert_eq!(p.apply(&BTreeSet::from([0])), BTreeSet::from([0, 1]));
        assert!(p.apply(&BTreeSet::new()).is_empty());
        let table = p.table().unwrap();
        assert_eq!(table.len(), 4);
        assert_eq!(table[0], (BTreeSet::new(), BTreeSet::new()));
    }

    #[test]
    fn powerset_table_is_capped() {
        let big = FinSet::numbered("s", POWERSET_TABLE_LIMIT + 1);
        let p = Relation::identity(&big).powerset_map();
        assert!(matches!(p.table(), Err(SpanError::PowersetTooLarge { .. })));
        // on-demand evaluation still works
        assert_eq!(p.apply(&BTreeSet::from([3, 20])), BTreeSet::from([3, 20]));
    }

    #[test]
    fn matrix_round_trips() {
        let xy = set(&["x", "y"]);
        let a = set(&["1", "2"]);
        let b = set(&["2"]);
        let s = Span::from_label_pairs(a.clone(), a.clone(), &[("1", "2"), ("1", "2"), ("2", "2")]).unwrap();
        let m = s.to_matrix();
        assert_eq!(m.to_rows(), vec![vec![0, 2], vec![0, 1]]);
        assert_eq!(Span::from_matrix(&m).to_matrix(), m);
        assert!(Span::from_matrix(&m).iso_eq(&s).unwrap());
        assert!(Span::from_matrix(&NatMatrix::zero(a, b)).tokens().is_empty());
        assert_eq!(Span::identity(&xy).to_matrix(), NatMatrix::identity(&xy));
    }

    #[test]
    fn one_by_one_product_and_units() {
        let a = set(&["a"]);
        let m = NatMatrix::from_rows(a.clone(), a.clone(), &[vec![2]]).unwrap();
        let n = NatMatrix::from_rows(a.clone(), a.clone(), &[vec![3]]).unwrap();
        assert_eq!(m.compose(&n).unwrap().to_rows(), vec![vec![6]]);
        assert_eq!(NatMatrix::identity(&a).compose(&m).unwrap(), m);
        assert_eq!(m.compose(&NatMatrix::identity(&a)).unwrap(), m);
    }

    #[test]
    fn matrix_overflow_is_reported() {
        let a = set(&["a", "b"]);
        let big = NatMatrix::from_rows(a.clone(), a.clone(), &[vec![u64::MAX, 1], vec![1, 1]]).unwrap();
        assert_eq!(big.compose(&big).unwrap_err(), SpanError::Overflow);
    }

    #[test]
    fn extension_hand_computed() {
        let a = set(&["1", "2"]);
        let b = set(&["x", "y"]);
        let m = NatMatrix::from_rows(a.clone(), b.clone(), &[vec![2, 0], vec![1, 1]]).unwrap();
        let v = Multiset::new(a.clone(), vec![1, 1]).unwrap();
        assert_eq!(m.extend(&v).unwrap().counts(), &[3, 1]);
        assert!(m.extend(&Multiset::zero(a.clone())).unwrap().is_zero());
        assert_eq!(m.extend(&Multiset::unit(&a, 1).unwrap()).unwrap(), m.row(1));
        assert_eq!(NatMatrix::identity(&a).extend(&v).unwrap(), v);
        assert!(m.extend(&Multiset::zero(b)).is_err());
    }

    #[test]
    fn unit_checks_membership() {
        let x = set(&["x"]);
        assert_eq!(Multiset::unit_of(&x, "x").unwrap().counts(), &[1]);
        assert!(Multiset::unit_of(&x, "y").is_err());
    }

    #[test]
    fn flatten_cases() {
        let x = set(&["x"]);
        let two = Multiset::new(x.clone(), vec![2]).unwrap();
        let mut bag = MultisetBag::new(x.clone());
        bag.insert(&two, 3).unwrap();
        assert_eq!(bag.flatten().unwrap().counts(), &[6]);
        let u = Multiset::unit(&x, 0).unwrap();
        assert_eq!(MultisetBag::unit(&u).flatten().unwrap(), u);
    }

    #[test]
    fn kleisli_unit_and_counit() {
        let one = set(&["1"]);
        let p = Powerset::new(&one, 20).unwrap();
        assert_eq!(p.counit().pairs().iter().copied().collect::<Vec<_>>(), vec![(1, 0)]);
        assert_eq!(p.as_set().label(1), "{1}");
        assert_eq!(p.unit().table(), &[1]);
        let empty = Powerset::new(&FinSet::empty(), 20).unwrap();
        assert!(empty.unit().table().is_empty());
        assert_eq!(empty.as_set().labels(), &["{}".to_string()]);
    }

    #[test]
    fn image_unit_cases() {
        let a = set(&["1", "2"]);
        let s = Span::from_label_pairs(a.clone(), a.clone(), &[("1", "2"), ("1", "2"), ("2", "1")]).unwrap();
        let eta = image_unit(&s);
        assert_eq!(eta.map()[0], eta.map()[1]);
        assert!(!eta.is_iso());
        assert!(SpanMorphism::new(eta.source().clone(), eta.target().clone(), eta.map().to_vec()).is_ok());
        let r = Span::from_label_pairs(a.clone(), a, &[("1", "2"), ("2", "1")]).unwrap();
        assert!(image_unit(&r).is_iso());
    }

    #[test]
    fn morphism_search_block_counting() {
        let (a, b) = (set(&["1"]), set(&["2"]));
        let one = Span::from_label_pairs(a.clone(), b.clone(), &[("1", "2")]).unwrap();
        let two = Span::from_label_pairs(a.clone(), b.clone(), &[("1", "2"), ("1", "2")]).unwrap();
        let empty = Span::new(a, b, vec![]).unwrap();
        let id = span_morphism_search(&one, &one, true).unwrap().unwrap();
        assert_eq!(id.map(), &[0]);
        assert!(span_morphism_search(&one, &empty, false).unwrap().is_none());
        assert!(span_morphism_search(&one, &two, false).unwrap().is_some());
        assert!(span_morphism_search(&one, &two, true).unwrap().is_none());
        assert!(span_morphism_search(&two, &one, false).unwrap().is_some());
    }

    #[test]
    fn span_morphism_rejects_non_commuting_map() {
        let a = set(&["1", "2"]);
        let s = Span::from_label_pairs(a.clone(), a.clone(), &[("1", "2")]).unwrap();
        let t = Span::from_label_pairs(a.clone(), a, &[("2", "2"), ("1", "2")]).unwrap();
        assert!(SpanMorphism::new(s.clone(), t.clone(), vec![0]).is_err());
        assert!(SpanMorphism::new(s, t, vec![1]).is_ok());
    }
}
