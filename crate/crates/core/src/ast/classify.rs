use super::{ChcClause, ChcSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ClauseRole {
    /// Predicate head, no body predicates.
    Fact,
    /// Predicate head with at least one body predicate.
    Rule,
    /// `false` head.
    Query,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ClauseClass {
    pub role: ClauseRole,
    pub linear: bool,
}

pub fn classify(clause: &ChcClause) -> ClauseClass {
    let preds = clause.body_predicates().len();
    let role = if clause.is_query() {
        ClauseRole::Query
    } else if preds == 0 {
        ClauseRole::Fact
    } else {
        ClauseRole::Rule
    };
    ClauseClass { role, linear: preds <= 1 }
}

/// A system is linear iff every clause is.
pub fn is_linear_system(system: &ChcSystem) -> bool {
    system.clauses.iter().all(|c| classify(c).linear)
}
