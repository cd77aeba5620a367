//! The MDS-code retrieval scheme.
//!
//! The query is a fixed P×K MDS generator matrix with P = K − M1 − M2,
//! identical for every configuration: the query literally carries no
//! information about (W, R, S), which is the whole privacy argument. The
//! server returns the P row combinations of the database. The decoder finds
//! the unique (up to scale) row-space vector supported exactly on
//! R ∪ S ∪ {W} and subtracts off the known side messages.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::field::{is_mds, vandermonde_generator, FieldElement, FieldMatrix, FieldVector};
use crate::model::{check_params, Database, SideInfoConfig, SideMessages};

/// Query payload: the generator matrix plus the instance parameters.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct MdsQuery {
    k: usize,
    m1: usize,
    m2: usize,
    modulus: u32,
    generator: FieldMatrix,
}

impl MdsQuery {
    /// Builds the deterministic Vandermonde-based query. Independent of any
    /// configuration by construction.
    pub fn build(k: usize, m1: usize, m2: usize, q: u32) -> Result<Self> {
        check_params(k, m1, m2)?;
        let p = k - m1 - m2;
        let generator = vandermonde_generator(p, k, q)?;
        debug_assert!(is_mds(&generator));
        Ok(MdsQuery { k, m1, m2, modulus: q, generator })
    }

    /// Wire-level constructor: accepts any structurally well-formed matrix.
    /// Run [`MdsQuery::validate`] to check the MDS property separately.
    pub fn from_parts(
        k: usize,
        m1: usize,
        m2: usize,
        q: u32,
        generator: FieldMatrix,
    ) -> Result<Self> {
        check_params(k, m1, m2)?;
        if generator.cols() != k || generator.rows() != k - m1 - m2 {
            return Err(Error::Wire(format!(
                "generator shape {}x{} does not match P={} K={k}",
                generator.rows(),
                generator.cols(),
                k - m1 - m2
            )));
        }
        if generator.modulus() != q {
            return Err(Error::Wire("generator modulus differs from q".into()));
        }
        Ok(MdsQuery { k, m1, m2, modulus: q, generator })
    }

    pub fn message_count(&self) -> usize {
        self.k
    }

    pub fn m1(&self) -> usize {
        self.m1
    }

    pub fn m2(&self) -> usize {
        self.m2
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    /// Number of downloaded combinations, P = K − M1 − M2.
    pub fn combination_count(&self) -> usize {
        self.generator.rows()
    }

    pub fn generator(&self) -> &FieldMatrix {
        &self.generator
    }

    /// The P×K coefficient matrix the answer realizes (the generator itself).
    pub fn combination_matrix(&self) -> FieldMatrix {
        self.generator.clone()
    }

    /// Flags a structurally sound but non-MDS generator.
    pub fn validate(&self) -> Result<()> {
        if !is_mds(&self.generator) {
            return Err(Error::Decode("generator is not MDS".into()));
        }
        Ok(())
    }

    /// The row-space combination u (length P) whose image u·G has support
    /// exactly `support`, normalized so the coefficient at `pivot` is 1.
    /// Exists and is unique up to scale whenever |support| = M1+M2+1 and the
    /// generator is MDS.
    pub fn support_combination(
        &self,
        support: &BTreeSet<usize>,
        pivot: usize,
    ) -> Result<FieldVector> {
        assert!(support.contains(&pivot), "pivot must lie in the support");
        let p = self.combination_count();
        let outside: Vec<usize> =
            (0..self.k).filter(|j| !support.contains(&(j + 1))).collect();
        // u·G zero outside the support <=> u in the nullspace of (G columns
        // outside the support) transposed.
        let constraints = self.generator.select_columns(&outside).transpose();
        let basis = constraints.nullspace();
        if basis.len() != 1 {
            return Err(Error::Decode(format!(
                "support combination not unique (nullspace dimension {}); generator is not MDS",
                basis.len()
            )));
        }
        let u = basis[0].clone();
        debug_assert_eq!(u.len(), p);
        let image = self.generator.vector_mul(&u);
        let at_pivot = image.element(pivot - 1);
        if at_pivot.is_zero() {
            return Err(Error::Decode(
                "support combination vanishes at the demand index; generator is not MDS".into(),
            ));
        }
        Ok(u.scale(at_pivot.inv()))
    }
}

/// Answer payload: P combinations, each of message length n.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct MdsAnswer {
    combinations: Vec<FieldVector>,
}

impl MdsAnswer {
    pub fn new(combinations: Vec<FieldVector>) -> Self {
        MdsAnswer { combinations }
    }

    pub fn combinations(&self) -> &[FieldVector] {
        &self.combinations
    }

    pub fn combination_count(&self) -> usize {
        self.combinations.len()
    }

    pub fn message_len(&self) -> usize {
        self.combinations.first().map(|v| v.len()).unwrap_or(0)
    }

    pub fn symbol_count(&self) -> usize {
        self.combinations.iter().map(|v| v.len()).sum()
    }
}

/// Server side: Y_i = (row i of G) · (X_1, …, X_K).
pub fn answer(query: &MdsQuery, db: &Database) -> Result<MdsAnswer> {
    if query.message_count() != db.message_count() {
        return Err(Error::InvalidParameter(format!(
            "query is for K={} but the database has K={}",
            query.message_count(),
            db.message_count()
        )));
    }
    if query.modulus() != db.modulus() {
        return Err(Error::InvalidParameter(format!(
            "query field GF({}) differs from database field GF({})",
            query.modulus(),
            db.modulus()
        )));
    }
    let n = db.message_len();
    let q = db.modulus();
    let mut combinations = Vec::with_capacity(query.combination_count());
    for i in 0..query.combination_count() {
        let row = query.generator().row(i);
        let mut acc = FieldVector::zeros(q, n);
        for j in 0..query.message_count() {
            acc = acc.add(&db.message(j + 1).scale(row.element(j)));
        }
        combinations.push(acc);
    }
    Ok(MdsAnswer { combinations })
}

/// User side: recover X_W from the answer and the side messages.
///
/// Side messages are trusted as given; wrong values produce a wrong output
/// without an error (linearity gives no way to notice).
pub fn decode(
    query: &MdsQuery,
    answer: &MdsAnswer,
    cfg: &SideInfoConfig,
    side: &SideMessages,
) -> Result<FieldVector> {
    cfg.validate_against(query.message_count())?;
    if cfg.m1() != query.m1() || cfg.m2() != query.m2() {
        return Err(Error::Decode(format!(
            "config has (M1,M2)=({},{}) but the query was built for ({},{})",
            cfg.m1(),
            cfg.m2(),
            query.m1(),
            query.m2()
        )));
    }
    if answer.combination_count() != query.combination_count() {
        return Err(Error::Decode(format!(
            "answer has {} combinations, query calls for {}",
            answer.combination_count(),
            query.combination_count()
        )));
    }
    let n = answer.message_len();
    let q = query.modulus();
    let support = cfg.known_indices();
    let u = query.support_combination(&support, cfg.demand())?;
    let coeffs = query.generator().vector_mul(&u);

    // u·Y, then strip the side-message contributions.
    let mut combined = FieldVector::zeros(q, n);
    for (i, y) in answer.combinations().iter().enumerate() {
        if y.len() != n {
            return Err(Error::Decode("answer combinations have uneven lengths".into()));
        }
        combined = combined.add(&y.scale(u.element(i)));
    }
    for &j in cfg.side_indices().iter() {
        let x = side.get(&j).ok_or_else(|| {
            Error::Decode(format!("missing side message {j} needed for decoding"))
        })?;
        if x.len() != n || x.modulus() != q {
            return Err(Error::Decode(format!("side message {j} has the wrong shape")));
        }
        combined = combined.sub(&x.scale(coeffs.element(j - 1)));
    }
    let at_demand = coeffs.element(cfg.demand() - 1);
    debug_assert_eq!(at_demand, FieldElement::one(q), "combination was normalized at W");
    Ok(combined.scale(at_demand.inv()))
}
