//! The bundled example programs and their declared outcomes.
//!
//! Each program opens with comment lines of the form
//! `// expect: type <type>` or `// expect: error <Code>`, optionally
//! followed by `// expect-budget: <source>: eps = <value>` lines.

macro_rules! bundled {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../corpus/", $name, ".solo")))),*]
    };
}

/// `(name, source text)` for every bundled program.
pub const CORPUS: &[(&str, &str)] = bundled![
    "dbl",
    "simple_privacy",
    "add_noise_twice",
    "summation",
    "sum_no_clip",
    "dangerous_map",
    "sensitive_branch",
    "pairs",
    "lists",
    "kmeans_iter",
    "cdf",
    "gd",
    "mwem",
    "select_query",
    "laplace1",
    "miscalibrated",
    "adv_comp",
    "variants",
];

pub fn get(name: &str) -> Option<&'static str> {
    CORPUS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Type(String),
    Error(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expectation {
    pub outcome: Outcome,
    /// Expected lines of the budget report, verbatim.
    pub budget: Vec<String>,
}

/// Read the header comments of a program.
pub fn expectation(text: &str) -> Option<Expectation> {
    let mut outcome = None;
    let mut budget = Vec::new();
    for line in text.lines() {
        let Some(c) = line.trim().strip_prefix("//") else { continue };
        let c = c.trim();
        if let Some(rest) = c.strip_prefix("expect:") {
            let rest = rest.trim();
            outcome = if let Some(t) = rest.strip_prefix("type ") {
                Some(Outcome::Type(t.trim().to_string()))
            } else {
                rest.strip_prefix("error ").map(|e| Outcome::Error(e.trim().to_string()))
            };
        } else if let Some(rest) = c.strip_prefix("expect-budget:") {
            budget.push(rest.trim().to_string());
        }
    }
    outcome.map(|outcome| Expectation { outcome, budget })
}
