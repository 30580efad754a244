//! Selective execution traces: filtered, normalized solver log lines hashed
//! into state identifiers.

use std::collections::BTreeMap;

use regex::Regex;
use serde::{Deserialize, Serialize};

/// 64-bit FNV-1a; stable across platforms and runs.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub type StateId = u64;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub states: Vec<StateId>,
    /// Counts of adjacent state pairs in `states`.
    pub transitions: BTreeMap<(StateId, StateId), u64>,
}

impl TraceSummary {
    pub fn from_states(states: Vec<StateId>) -> Self {
        let mut transitions = BTreeMap::new();
        for w in states.windows(2) {
            *transitions.entry((w[0], w[1])).or_insert(0) += 1;
        }
        TraceSummary { states, transitions }
    }

    /// Identity of the whole trace.
    pub fn trace_hash(&self) -> u64 {
        let bytes: Vec<u8> = self.states.iter().flat_map(|s| s.to_le_bytes()).collect();
        fn_hash_with_len(&bytes, self.states.len())
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

fn fn_hash_with_len(bytes: &[u8], len: usize) -> u64 {
    fnv1a(&[&(len as u64).to_le_bytes()[..], bytes].concat())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceSource {
    /// The solver's standard error stream.
    Stderr,
    /// A file the solver writes into its working directory.
    TraceFile(String),
}

/// Serializable description of a profile, as found in configuration files.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceProfileSpec {
    pub name: String,
    pub source: TraceSource,
    #[serde(default)]
    pub solver_args: Vec<String>,
    /// A line is kept iff it matches at least one pattern (after rewrites).
    pub include: Vec<String>,
    /// `(pattern, replacement)` rewrites applied to every line in order
    /// before filtering.
    #[serde(default)]
    pub normalize: Vec<(String, String)>,
}

#[derive(Clone, Debug)]
pub struct TraceProfile {
    pub spec: TraceProfileSpec,
    include: Vec<Regex>,
    normalize: Vec<(Regex, String)>,
}

impl TraceProfile {
    pub fn compile(spec: TraceProfileSpec) -> Result<Self, regex::Error> {
        let include = spec.include.iter().map(|p| Regex::new(p)).collect::<Result<_, _>>()?;
        let normalize = spec
            .normalize
            .iter()
            .map(|(p, r)| Ok((Regex::new(p)?, r.clone())))
            .collect::<Result<_, regex::Error>>()?;
        Ok(TraceProfile { spec, include, normalize })
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }

    /// Z3's internal trace channel restricted to the fixedpoint engine's tags.
    /// Requires a solver build with tracing enabled.
    pub fn z3_trace() -> Self {
        let spec = TraceProfileSpec {
            name: "z3-trace".into(),
            source: TraceSource::TraceFile(".z3-trace".into()),
            solver_args: vec!["-tr:spacer".into()],
            include: vec![r"^-------- \[spacer".into()],
            normalize: vec![
                (r"0x[0-9a-fA-F]+".into(), "".into()),
                (r":[0-9]+".into(), "".into()),
                (r"-+\s*$".into(), "".into()),
            ],
        };
        TraceProfile::compile(spec).expect("built-in profile")
    }

    /// Z3's verbose stderr log, keeping the fixedpoint engine's main-loop
    /// steps: preprocessing transforms, obligation expansion, child
    /// creation, level changes and propagation.
    pub fn z3_verbose() -> Self {
        let spec = TraceProfileSpec {
            name: "z3-verbose".into(),
            source: TraceSource::Stderr,
            solver_args: vec!["-v:3".into()],
            include: vec![
                r"^\(transform ".into(),
                r"^expand: ".into(),
                r"^create_child: ".into(),
                r"^Entering level ".into(),
                r"^Propagating: ".into(),
                r"^\(spacer::context::".into(),
            ],
            normalize: vec![
                (r"\(smt\.[^)]*\)".into(), "".into()),
                (r":(time|before-memory|after-memory) [0-9.]+".into(), ":$1".into()),
                (r" [0-9.]+s\)$".into(), ")".into()),
                (r"FAR\b.*$".into(), "FAR".into()),
                (r" U [0-9.]+".into(), "".into()),
                (r"^Propagating: .*$".into(), "Propagating:".into()),
                (r"\s+".into(), " ".into()),
                (r"^ | $".into(), "".into()),
            ],
        };
        TraceProfile::compile(spec).expect("built-in profile")
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "z3-trace" => Some(Self::z3_trace()),
            "z3-verbose" => Some(Self::z3_verbose()),
            _ => None,
        }
    }

    fn normalize_line(&self, line: &str) -> Option<String> {
        let mut s = line.to_string();
        for (re, rep) in &self.normalize {
            s = re.replace_all(&s, rep.as_str()).into_owned();
        }
        (!s.is_empty() && self.include.iter().any(|re| re.is_match(&s))).then_some(s)
    }

    /// Keeps matching lines, strips volatile tokens and hashes each survivor.
    pub fn normalize_trace(&self, raw: &str) -> TraceSummary {
        let states = raw
            .lines()
            .filter_map(|l| self.normalize_line(l.trim()))
            .map(|l| fnv1a(l.as_bytes()))
            .collect();
        TraceSummary::from_states(states)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn durations() -> TraceProfile {
        TraceProfile::compile(TraceProfileSpec {
            name: "t".into(),
            source: TraceSource::Stderr,
            solver_args: vec![],
            include: vec![r"^(propagate|induction)$".into()],
            normalize: vec![(r"\s*[0-9]+ms$".into(), "".into())],
        })
        .unwrap()
    }

    #[test]
    fn filters_strips_and_counts() {
        let t = durations().normalize_trace("propagate\nnoise\ninduction 17ms\npropagate\n");
        let (p, i) = (fnv1a(b"propagate"), fnv1a(b"induction"));
        assert_eq!(t.states, vec![p, i, p]);
        assert_eq!(t.transitions, BTreeMap::from([((p, i), 1), ((i, p), 1)]));
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
    }

    #[test]
    fn verbose_profile_normalizes_volatile_fields() {
        let p = TraceProfile::z3_verbose();
        let a = "expand: query!0 (1, 0) FAR  w(0) 1(smt.delete-inactive-clauses  :num-deleted-clauses 0)\n\
                 (spacer::context::check_reachability :time 0.00 :before-memory 20.39 :after-memory 20.59)\n\
                 \tcreate_child: inv (0, 1) FAR 239 U 0.00\n(smt.searching)\nEntering level 1";
        let b = a.replace("20.59", "31.02").replace("239", "17");
        let ta = p.normalize_trace(a);
        assert_eq!(ta.states.len(), 4);
        assert_eq!(ta, p.normalize_trace(&b));
        assert_eq!(ta.states[0], fnv1a(b"expand: query!0 (1, 0) FAR"));
    }

    proptest! {
        #[test]
        fn stripped_numbers_do_not_change_the_summary(
            lines in proptest::collection::vec((0usize..2, 0u32..100_000, 0u32..100_000), 0..20)
        ) {
            let names = ["propagate", "induction"];
            let render = |pick: fn(&(usize, u32, u32)) -> u32| lines
                .iter()
                .map(|l| format!("{} {}ms", names[l.0], pick(l)))
                .collect::<Vec<_>>()
                .join("\n");
            let p = durations();
            let a = p.normalize_trace(&render(|l| l.1));
            let b = p.normalize_trace(&render(|l| l.2));
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(a.trace_hash(), b.trace_hash());
            let pairs: u64 = a.transitions.values().sum();
            prop_assert_eq!(pairs as usize, a.states.len().saturating_sub(1));
        }
    }
}
