//! Seed-group ordering heuristics.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

/// What a heuristic looks at when ranking a group.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupFeatures {
    pub linear: bool,
    pub predicates: usize,
    /// Rare-transition priority; infinite for groups without transitions.
    pub priority: f64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Heuristic {
    /// Input order.
    Default,
    RareTransitions,
    Complex,
    Simple,
    /// Partition by the first heuristic, order each part by the second.
    Combination(Box<Heuristic>, Box<Heuristic>),
}

impl Heuristic {
    /// Orders `a` before `b` when `Less`. `Equal` leaves input order.
    pub fn compare(&self, a: &GroupFeatures, b: &GroupFeatures) -> Ordering {
        match self {
            Heuristic::Default => Ordering::Equal,
            Heuristic::RareTransitions => b.priority.total_cmp(&a.priority),
            Heuristic::Complex => a.linear.cmp(&b.linear).then(b.predicates.cmp(&a.predicates)),
            Heuristic::Simple => Heuristic::Complex.compare(b, a),
            Heuristic::Combination(first, second) => {
                first.partition(a).cmp(&first.partition(b)).then_with(|| second.compare(a, b))
            }
        }
    }

    /// Coarse class used when this heuristic splits groups for a
    /// combination; lower classes come first.
    fn partition(&self, f: &GroupFeatures) -> u8 {
        match self {
            Heuristic::Default => 0,
            Heuristic::RareTransitions => u8::from(f.priority.is_finite()),
            Heuristic::Complex => u8::from(f.linear),
            Heuristic::Simple => u8::from(!f.linear),
            Heuristic::Combination(first, _) => first.partition(f),
        }
    }

    /// Indices of `groups` in selection order; ties keep input order.
    pub fn order(&self, groups: &[GroupFeatures]) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..groups.len()).collect();
        idx.sort_by(|&a, &b| self.compare(&groups[a], &groups[b]));
        idx
    }
}

impl fmt::Display for Heuristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Heuristic::Default => f.write_str("default"),
            Heuristic::RareTransitions => f.write_str("rare-transitions"),
            Heuristic::Complex => f.write_str("complex"),
            Heuristic::Simple => f.write_str("simple"),
            Heuristic::Combination(a, b) => write!(f, "{a}+{b}"),
        }
    }
}

impl FromStr for Heuristic {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if let Some((a, b)) = s.split_once('+') {
            let (a, b): (Heuristic, Heuristic) = (a.parse()?, b.parse()?);
            if matches!(a, Heuristic::Combination(..)) || matches!(b, Heuristic::Combination(..)) {
                return Err("a combination takes exactly two heuristics".into());
            }
            return Ok(Heuristic::Combination(Box::new(a), Box::new(b)));
        }
        match s {
            "default" => Ok(Heuristic::Default),
            "rare-transitions" | "transitions" => Ok(Heuristic::RareTransitions),
            "complex" => Ok(Heuristic::Complex),
            "simple" => Ok(Heuristic::Simple),
            _ => Err(format!(
                "unknown heuristic `{s}` (expected default, rare-transitions, complex, simple or A+B)"
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn g(linear: bool, predicates: usize, priority: f64) -> GroupFeatures {
        GroupFeatures { linear, predicates, priority }
    }

    #[test]
    fn complex_and_simple() {
        let groups = [g(true, 3, 0.0), g(false, 1, 0.0)];
        assert_eq!(Heuristic::Complex.order(&groups), [1, 0]);
        assert_eq!(Heuristic::Simple.order(&groups), [0, 1]);
        let groups = [g(true, 1, 0.0), g(true, 4, 0.0), g(true, 2, 0.0)];
        assert_eq!(Heuristic::Complex.order(&groups), [1, 2, 0]);
    }

    #[test]
    fn rare_transitions_and_cold_start() {
        let groups = [g(true, 1, 10.0 / 9.0), g(true, 1, 10.0), g(true, 1, f64::INFINITY)];
        assert_eq!(Heuristic::RareTransitions.order(&groups), [2, 1, 0]);
        assert_eq!(Heuristic::Default.order(&groups), [0, 1, 2]);
    }

    #[test]
    fn combination_partitions_then_orders() {
        let groups = [g(true, 1, 5.0), g(false, 2, 1.0), g(true, 1, 9.0), g(false, 3, 7.0)];
        let h: Heuristic = "complex+rare-transitions".parse().unwrap();
        assert_eq!(h.order(&groups), [3, 1, 2, 0]);
        assert_eq!(h.to_string(), "complex+rare-transitions");
        assert!("complex+simple+default".parse::<Heuristic>().is_err());
    }

    fn features() -> impl Strategy<Value = Vec<GroupFeatures>> {
        proptest::collection::vec((any::<bool>(), 0usize..5).prop_map(|(l, p)| g(l, p, 0.0)), 0..12)
    }

    proptest! {
        #[test]
        fn simple_is_the_inverse_of_complex(groups in features()) {
            for a in &groups {
                for b in &groups {
                    prop_assert_eq!(Heuristic::Simple.compare(a, b), Heuristic::Complex.compare(a, b).reverse());
                    for c in &groups {
                        let le = |x, y| Heuristic::Complex.compare(x, y) != Ordering::Greater;
                        if le(a, b) && le(b, c) {
                            prop_assert!(le(a, c));
                        }
                    }
                }
            }
        }
    }
}
