//! Finite-range translation-invariant commuting interaction specifications.

use faer::c64;

use crate::error::{Error, Result};
use crate::matrix::Op;
use crate::sites::{Interval, SiteSpace};
use crate::spectral::op_norm;

/// Commutation tolerance on embedded term pairs (absolute; the specs are
/// exact matrices, the tolerance only absorbs float noise).
pub const COMMUTE_TOL: f64 = 1e-10;

/// One interaction term. The matrix acts on `span` consecutive sites. For
/// translation-invariant specs the term repeats at every start that fits the
/// region; otherwise it sits at the fixed 1-based start `at`.
#[derive(Clone, Debug)]
pub struct Term {
    pub label: String,
    pub span: usize,
    pub matrix: Op,
    pub at: Option<usize>,
}

/// A finite-range interaction on a chain of qudits.
#[derive(Clone, Debug)]
pub struct HamiltonianSpec {
    pub local_dim: usize,
    pub range: usize,
    pub translation_invariant: bool,
    pub terms: Vec<Term>,
}

impl HamiltonianSpec {
    /// Builds a spec; checks dimensions, hermiticity and the range bound.
    /// Commutation is validated separately (or through [`custom`]).
    pub fn new(
        local_dim: usize,
        range: usize,
        translation_invariant: bool,
        terms: Vec<Term>,
    ) -> Result<Self> {
        if local_dim < 2 || range < 1 {
            return Err(Error::InvalidParameter(format!(
                "local_dim {local_dim}, range {range}"
            )));
        }
        for t in &terms {
            if t.span == 0 || t.span > range {
                return Err(Error::InvalidParameter(format!(
                    "term '{}' spans {} sites, exceeding range {range}",
                    t.label, t.span
                )));
            }
            let want = local_dim.pow(t.span as u32);
            if t.matrix.dim() != want {
                return Err(Error::DimensionMismatch(format!(
                    "term '{}' has matrix dim {}, expected {want}",
                    t.label,
                    t.matrix.dim()
                )));
            }
            let res = t.matrix.herm_residual();
            if res > 1e-10 * t.matrix.max_abs().max(1.0) {
                return Err(Error::NotHermitian { residual: res });
            }
            if !translation_invariant && t.at.is_none() {
                return Err(Error::InvalidParameter(format!(
                    "non-translation-invariant term '{}' needs a position",
                    t.label
                )));
            }
        }
        Ok(HamiltonianSpec { local_dim, range, translation_invariant, terms })
    }

    /// Interaction strength J = max over terms of the operator norm.
    pub fn strength(&self) -> f64 {
        self.terms.iter().map(|t| op_norm(&t.matrix)).fold(0.0, f64::max)
    }

    /// All placed terms `(start, term)` whose support lies inside `region`.
    /// Terms exiting the region are dropped (open boundary).
    pub fn placed_terms(&self, region: &Interval) -> Vec<(usize, &Term)> {
        let mut out = Vec::new();
        for t in &self.terms {
            if self.translation_invariant {
                if region.len() >= t.span {
                    for start in region.lo..=(region.hi + 1 - t.span) {
                        out.push((start, t));
                    }
                }
            } else if let Some(at) = t.at {
                if at >= region.lo && at + t.span - 1 <= region.hi {
                    out.push((at, t));
                }
            }
        }
        out
    }

    /// Placed terms on [1, n] whose support overlaps the given site.
    pub fn terms_overlapping(&self, site: usize, n: usize) -> Vec<(usize, &Term)> {
        self.placed_terms(&Interval::new(1, n))
            .into_iter()
            .filter(|(s, t)| (*s..*s + t.span).contains(&site))
            .collect()
    }

    /// Hamiltonian on a region, as a matrix on the region's Hilbert space.
    pub fn hamiltonian_on(&self, region: &Interval) -> Result<Op> {
        let k = region.len();
        let space = SiteSpace::new(k.max(1), self.local_dim)?;
        let mut h = Op::zeros(space.total_dim());
        for (start, t) in self.placed_terms(region) {
            // sites of the term relative to the region, 1-based
            let rel: Vec<usize> = (0..t.span).map(|o| start - region.lo + 1 + o).collect();
            h = h.add(&crate::sites::embed(&t.matrix, &rel, &space)?);
        }
        Ok(h.hermitize())
    }

    /// Like [`Self::hamiltonian_on`] but rejects regions shorter than the
    /// interaction range.
    pub fn hamiltonian_on_strict(&self, region: &Interval) -> Result<Op> {
        if region.len() < self.range {
            return Err(Error::InvalidParameter(format!(
                "region {region} shorter than range {}",
                self.range
            )));
        }
        self.hamiltonian_on(region)
    }

    /// Full-chain Hamiltonian.
    pub fn hamiltonian(&self, n: usize) -> Result<Op> {
        self.hamiltonian_on(&Interval::new(1, n))
    }

    /// Checks all embedded overlapping term pairs for commutation.
    pub fn validate_commuting(&self, n: usize) -> Result<CommutationReport> {
        let placed = self.placed_terms(&Interval::new(1, n));
        let mut max_norm = 0.0f64;
        let mut offending = Vec::new();
        for (i, (sa, ta)) in placed.iter().enumerate() {
            for (sb, tb) in placed.iter().skip(i + 1) {
                let ia = Interval::new(*sa, sa + ta.span - 1);
                let ib = Interval::new(*sb, sb + tb.span - 1);
                if !ia.overlaps(&ib) {
                    continue; // disjoint supports commute exactly
                }
                let window = Interval::new(ia.lo.min(ib.lo), ia.hi.max(ib.hi));
                let wspace = SiteSpace::new(window.len(), self.local_dim)?;
                let rel = |iv: &Interval, t: &Term| -> Vec<usize> {
                    (0..t.span).map(|o| iv.lo - window.lo + 1 + o).collect()
                };
                let ea = crate::sites::embed(&ta.matrix, &rel(&ia, ta), &wspace)?;
                let eb = crate::sites::embed(&tb.matrix, &rel(&ib, tb), &wspace)?;
                let c = op_norm(&ea.commutator(&eb));
                if c > COMMUTE_TOL {
                    offending.push(CommutatorPair {
                        a: (ta.label.clone(), *sa),
                        b: (tb.label.clone(), *sb),
                        norm: c,
                    });
                }
                max_norm = max_norm.max(c);
            }
        }
        Ok(CommutationReport { ok: offending.is_empty(), max_commutator_norm: max_norm, offending })
    }
}

#[derive(Clone, Debug)]
pub struct CommutatorPair {
    pub a: (String, usize),
    pub b: (String, usize),
    pub norm: f64,
}

#[derive(Clone, Debug)]
pub struct CommutationReport {
    pub ok: bool,
    pub max_commutator_norm: f64,
    pub offending: Vec<CommutatorPair>,
}

/// Ising chain `jz Z(x)Z + hz Z`; range 2, strength max(|jz|, |hz|).
pub fn ising_chain(jz: f64, hz: f64) -> HamiltonianSpec {
    use crate::matrix::pauli;
    let zz = pauli::z().kron(&pauli::z()).scale(c64::new(jz, 0.0));
    let z = pauli::z().scale(c64::new(hz, 0.0));
    let mut terms = vec![Term { label: "zz".into(), span: 2, matrix: zz, at: None }];
    if hz != 0.0 {
        terms.push(Term { label: "z".into(), span: 1, matrix: z, at: None });
    }
    HamiltonianSpec::new(2, 2, true, terms).expect("ising spec is valid")
}

/// Cluster-state Hamiltonian with stabilizer terms Z(x)X(x)Z; range 3.
pub fn cluster_state() -> HamiltonianSpec {
    use crate::matrix::pauli;
    let zxz = pauli::z().kron(&pauli::x()).kron(&pauli::z());
    HamiltonianSpec::new(
        2,
        3,
        true,
        vec![Term { label: "zxz".into(), span: 3, matrix: zxz, at: None }],
    )
    .expect("cluster spec is valid")
}

/// User-provided terms; rejected with the offending pairs when the embedded
/// terms fail to commute.
pub fn custom(
    local_dim: usize,
    range: usize,
    translation_invariant: bool,
    terms: Vec<Term>,
) -> Result<HamiltonianSpec> {
    let spec = HamiltonianSpec::new(local_dim, range, translation_invariant, terms)?;
    // a window of 2*range realizes every overlap geometry of a TI spec
    let probe_n = (2 * spec.range).max(spec.terms.iter().map(|t| t.at.unwrap_or(1) + t.span).max().unwrap_or(2));
    let report = spec.validate_commuting(probe_n)?;
    if !report.ok {
        return Err(Error::NonCommuting(report.max_commutator_norm));
    }
    Ok(spec)
}
