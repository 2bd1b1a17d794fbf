//! Consistent histories and safe reconfiguration of CPOG specifications.
//!
//! A history `H` (a set of executed actions) is consistent with a
//! specification `S` when some assignment of the variables makes every
//! action of `H` possible and no action outside `H` a predecessor of an
//! action inside it. For a reconfiguration from `from_cfg` to `to_cfg` by
//! the action `r`, the combined specification is
//! `r + [!flag] from_cfg + [flag] to_cfg`, where `flag` is set by `r`.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::boolean::{BoolExpr, VarName};
use crate::cpog::{canonicalize, ActionName, CanonicalForm, ControlKind, ControlMap, CpogExpr};

/// Default bound on the alphabet size for history enumeration.
pub const DEFAULT_ALPHABET_BOUND: usize = 16;

pub type History = BTreeSet<ActionName>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReconfigError {
    #[error("alphabet of {size} actions exceeds the bound of {bound}")]
    BoundExceeded { size: usize, bound: usize },
}

/// The canonical form of a specification with its transitive closure,
/// ready for repeated consistency queries.
#[derive(Debug, Clone)]
pub struct ClosedSpec {
    pub canonical: CanonicalForm,
    pub closed: CanonicalForm,
}

impl ClosedSpec {
    pub fn new(spec: &CpogExpr) -> Self {
        let canonical = canonicalize(spec);
        let closed = canonical.transitive_close();
        ClosedSpec { canonical, closed }
    }

    pub fn alphabet(&self) -> BTreeSet<ActionName> {
        self.canonical.vertices.keys().cloned().collect()
    }

    /// The consistency condition of `h`.
    pub fn consistency(&self, h: &History) -> BoolExpr {
        let mut c = BoolExpr::tt();
        for a in h {
            c = c.and(&self.closed.vertex(a));
            if c.is_false() {
                return c;
            }
        }
        for ((a, b), f) in &self.closed.arcs {
            if !h.contains(a) && h.contains(b) {
                c = c.and(&f.not());
                if c.is_false() {
                    return c;
                }
            }
        }
        c
    }
}

/// Consistency condition of a history against a specification.
pub fn consistency(h: &History, spec: &CpogExpr) -> BoolExpr {
    ClosedSpec::new(spec).consistency(h)
}

/// Two specifications are compatible for `h` when one assignment makes `h`
/// consistent with both.
pub fn compatible(h: &History, s1: &CpogExpr, s2: &CpogExpr) -> bool {
    !consistency(h, s1).and(&consistency(h, s2)).is_false()
}

/// A reconfiguration from one configuration to another.
#[derive(Debug, Clone)]
pub struct ReconfigSpec {
    pub r: ActionName,
    pub flag: VarName,
    pub from_cfg: CpogExpr,
    pub to_cfg: CpogExpr,
    pub combined: CpogExpr,
}

impl ReconfigSpec {
    pub fn new(r: ActionName, flag: VarName, from_cfg: CpogExpr, to_cfg: CpogExpr) -> Self {
        let flag_expr = BoolExpr::var(flag.clone());
        let combined = CpogExpr::par_all([
            CpogExpr::Action(r.clone()),
            CpogExpr::cond(flag_expr.not(), from_cfg.clone()),
            CpogExpr::cond(flag_expr, to_cfg.clone()),
        ]);
        ReconfigSpec {
            r,
            flag,
            from_cfg,
            to_cfg,
            combined,
        }
    }

    /// The control map entry of the flag.
    pub fn control(&self) -> ControlMap {
        let mut m = ControlMap::new();
        m.insert(self.flag.clone(), self.r.clone(), ControlKind::Flag)
            .expect("fresh map");
        m
    }

    /// The same reconfiguration in the opposite direction.
    pub fn reversed(&self) -> Self {
        ReconfigSpec::new(
            self.r.clone(),
            self.flag.clone(),
            self.to_cfg.clone(),
            self.from_cfg.clone(),
        )
    }
}

/// Analysis context for one reconfiguration specification.
#[derive(Debug, Clone)]
pub struct ReconfigAnalysis {
    pub spec: ReconfigSpec,
    closed: ClosedSpec,
    bound: usize,
}

/// Outcome of a guideline check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuidelineResult {
    pub pass: bool,
    pub counterexample: Option<History>,
    /// Number of forbidden-free consistent histories examined.
    pub checked: usize,
}

impl ReconfigAnalysis {
    pub fn new(spec: ReconfigSpec) -> Self {
        Self::with_bound(spec, DEFAULT_ALPHABET_BOUND)
    }

    pub fn with_bound(spec: ReconfigSpec, bound: usize) -> Self {
        let closed = ClosedSpec::new(&spec.combined);
        ReconfigAnalysis {
            spec,
            closed,
            bound,
        }
    }

    /// Actions that may appear in a history, excluding `r`.
    pub fn alphabet(&self) -> Vec<ActionName> {
        let mut alpha = self.spec.combined.actions();
        alpha.remove(&self.spec.r);
        alpha.into_iter().collect()
    }

    /// Consistency of `h` before reconfiguration: `r` has not fired, so its
    /// flag is still 0.
    pub fn before(&self, h: &History) -> BoolExpr {
        self.closed.consistency(h).restrict(&self.spec.flag, false)
    }

    /// Consistency of `h` plus `r`: the flag has been set to 1.
    pub fn after(&self, h: &History) -> BoolExpr {
        let mut hr = h.clone();
        hr.insert(self.spec.r.clone());
        self.closed.consistency(&hr).restrict(&self.spec.flag, true)
    }

    /// Whether `r` may fire after `h` without reaching an impossible state.
    pub fn is_safe(&self, h: &History) -> bool {
        !self.before(h).and(&self.after(h)).is_false()
    }

    fn histories(&self) -> Result<Vec<History>, ReconfigError> {
        let alpha = self.alphabet();
        if alpha.len() > self.bound {
            return Err(ReconfigError::BoundExceeded {
                size: alpha.len(),
                bound: self.bound,
            });
        }
        Ok(all_subsets(&alpha))
    }

    /// Every safe reconfiguration history.
    pub fn safe_histories(&self) -> Result<Vec<History>, ReconfigError> {
        Ok(self
            .histories()?
            .into_iter()
            .filter(|h| self.is_safe(h))
            .collect())
    }

    /// Checks that every consistent history avoiding `forbidden` is safe.
    /// The first violating history (smallest first) is returned on failure.
    pub fn check_forbidden_guideline(
        &self,
        forbidden: &BTreeSet<ActionName>,
    ) -> Result<GuidelineResult, ReconfigError> {
        let mut checked = 0;
        for h in self.histories()? {
            if !h.is_disjoint(forbidden) || self.before(&h).is_false() {
                continue;
            }
            checked += 1;
            if !self.is_safe(&h) {
                return Ok(GuidelineResult {
                    pass: false,
                    counterexample: Some(h),
                    checked,
                });
            }
        }
        Ok(GuidelineResult {
            pass: true,
            counterexample: None,
            checked,
        })
    }
}

/// The safe specification: `combined + r -> (sum of forbidden actions)`.
pub fn make_safe(spec: &ReconfigSpec, forbidden: &BTreeSet<ActionName>) -> CpogExpr {
    if forbidden.is_empty() {
        return spec.combined.clone();
    }
    let targets = CpogExpr::par_all(forbidden.iter().cloned().map(CpogExpr::Action));
    CpogExpr::par(
        spec.combined.clone(),
        CpogExpr::seq(CpogExpr::Action(spec.r.clone()), targets),
    )
}

/// Every history consistent with `spec`, smallest first.
pub fn enumerate_consistent(spec: &CpogExpr) -> Result<Vec<History>, ReconfigError> {
    enumerate_consistent_bounded(spec, DEFAULT_ALPHABET_BOUND)
}

pub fn enumerate_consistent_bounded(
    spec: &CpogExpr,
    bound: usize,
) -> Result<Vec<History>, ReconfigError> {
    let closed = ClosedSpec::new(spec);
    let alpha: Vec<ActionName> = spec.actions().into_iter().collect();
    if alpha.len() > bound {
        return Err(ReconfigError::BoundExceeded {
            size: alpha.len(),
            bound,
        });
    }
    Ok(all_subsets(&alpha)
        .into_iter()
        .filter(|h| !closed.consistency(h).is_false())
        .collect())
}

/// All subsets of `items`, ordered by size and then lexicographically.
pub fn all_subsets(items: &[ActionName]) -> Vec<History> {
    let mut out: Vec<History> = (0u64..(1u64 << items.len()))
        .map(|m| {
            (0..items.len())
                .filter(|i| m & (1 << i) != 0)
                .map(|i| items[i].clone())
                .collect()
        })
        .collect();
    out.sort_by(|a: &History, b: &History| {
        a.len().cmp(&b.len()).then_with(|| a.iter().cmp(b.iter()))
    });
    out
}

/// `{a, b, c}` rendering of a history.
pub fn fmt_history(h: &History) -> String {
    let v: Vec<&str> = h.iter().map(|a| a.as_str()).collect();
    format!("{{{}}}", v.join(", "))
}
