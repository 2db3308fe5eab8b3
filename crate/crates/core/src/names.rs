//! Environment-name matching.
//!
//! Leaderboards spell game names inconsistently ("Q*Bert", "Qbert",
//! "Ms. Pac-Man", "MsPacman"). Names are compared through a canonical key:
//! ASCII-lowercased with everything but letters and digits removed.

/// Spellings that survive key folding but still refer to the same game.
const ALIASES: &[(&str, &str)] = &[
    ("montezumasrevenge", "montezumarevenge"),
    ("doubleddunk", "doubledunk"),
];

/// Canonical comparison key for an environment name.
pub fn canonical_key(name: &str) -> String {
    let key: String = name
        .chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect();
    match ALIASES.iter().find(|(alias, _)| *alias == key) {
        Some((_, target)) => (*target).to_string(),
        None => key,
    }
}

pub fn same_environment(a: &str, b: &str) -> bool {
    canonical_key(a) == canonical_key(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_punctuation_case_and_spaces() {
        assert_eq!(canonical_key("Q*Bert"), "qbert");
        assert!(same_environment("Q*Bert", "Qbert"));
        assert!(same_environment("Ms. Pac-Man", "MsPacman"));
        assert!(same_environment("Yar's Revenge", "Yars Revenge"));
        assert!(same_environment("Up'n Down", "Up n Down"));
        assert!(same_environment("Pitfall!", "Pitfall"));
        assert!(!same_environment("Pong", "Pooyan"));
    }

    #[test]
    fn aliases() {
        assert!(same_environment("Montezuma's Revenge", "Montezuma Revenge"));
        assert!(same_environment("DoubleDdunk", "Double Dunk"));
    }
}
