use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::tokenize::tokenize;
use crate::error::{Error, Result};

/// Question category of an utterance. Declaration order is the canonical
/// order used for tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QuestionCategory {
    What,
    When,
    Where,
    Which,
    Who,
    Why,
    How,
    YesNo,
    Compare,
}

impl QuestionCategory {
    pub const ALL: [QuestionCategory; 9] = [
        QuestionCategory::What,
        QuestionCategory::When,
        QuestionCategory::Where,
        QuestionCategory::Which,
        QuestionCategory::Who,
        QuestionCategory::Why,
        QuestionCategory::How,
        QuestionCategory::YesNo,
        QuestionCategory::Compare,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            QuestionCategory::What => "What",
            QuestionCategory::When => "When",
            QuestionCategory::Where => "Where",
            QuestionCategory::Which => "Which",
            QuestionCategory::Who => "Who",
            QuestionCategory::Why => "Why",
            QuestionCategory::How => "How",
            QuestionCategory::YesNo => "YesNo",
            QuestionCategory::Compare => "Compare",
        }
    }

    fn from_wh(token: &str) -> Option<Self> {
        Some(match token {
            "what" => QuestionCategory::What,
            "when" => QuestionCategory::When,
            "where" => QuestionCategory::Where,
            "which" => QuestionCategory::Which,
            "who" => QuestionCategory::Who,
            "why" => QuestionCategory::Why,
            "how" => QuestionCategory::How,
            _ => return None,
        })
    }
}

impl fmt::Display for QuestionCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QuestionCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        QuestionCategory::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s) || (s == "Yes/No" && *c == QuestionCategory::YesNo))
            .ok_or_else(|| Error::InvalidInput(format!("unknown question category `{s}`")))
    }
}

const AUXILIARIES: [&str; 15] = [
    "is", "are", "was", "were", "do", "does", "did", "can", "could", "will", "would", "should", "has", "have", "had",
];

fn is_auxiliary(token: &str) -> bool {
    AUXILIARIES.contains(&token)
}

fn is_compare_marker(token: &str) -> bool {
    token.starts_with("compar")
        || token.starts_with("similarit")
        || token.starts_with("differen")
        || token == "versus"
        || token == "vs"
}

/// Assigns one of the nine question categories with a fixed rule cascade:
/// comparison markers, then a wh-word in the first two tokens, then
/// description requests, then a leading auxiliary verb, falling back to What.
pub fn categorize(utterance: &str) -> Result<QuestionCategory> {
    if utterance.trim().is_empty() {
        return Err(Error::InvalidInput("cannot categorize an empty utterance".into()));
    }
    let tokens = tokenize(utterance).into_tokens();

    if tokens.iter().any(|t| is_compare_marker(t)) {
        return Ok(QuestionCategory::Compare);
    }
    if let Some(cat) = tokens.iter().take(2).find_map(|t| QuestionCategory::from_wh(t)) {
        return Ok(cat);
    }
    let describes = tokens.iter().any(|t| t == "describe")
        || tokens.windows(2).any(|w| w[0] == "tell" && w[1] == "me");
    if describes {
        return Ok(QuestionCategory::What);
    }
    if tokens.first().is_some_and(|t| is_auxiliary(t)) {
        return Ok(QuestionCategory::YesNo);
    }
    Ok(QuestionCategory::What)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use QuestionCategory::*;

    #[test]
    fn worked_examples() {
        assert_eq!(categorize("Tell me about Boer goats.").unwrap(), What);
        assert_eq!(
            categorize("What were the similarities and differences between the studies?").unwrap(),
            Compare
        );
        assert_eq!(categorize("Is it preventable?").unwrap(), YesNo);
    }

    #[test]
    fn cascade_order() {
        assert_eq!(categorize("And how does it spread?").unwrap(), How);
        assert_eq!(categorize("Why is blue light harmful?").unwrap(), Why);
        assert_eq!(categorize("Can you tell me about the Neolithic?").unwrap(), What);
        assert_eq!(categorize("Had they won before?").unwrap(), YesNo);
        assert_eq!(categorize("Lung cancer stages.").unwrap(), What);
        assert_eq!(categorize("Bulldog vs poodle").unwrap(), Compare);
    }

    #[test]
    fn empty_is_error() {
        assert!(categorize("").is_err());
        assert!(categorize("   ").is_err());
    }

    #[test]
    fn names_round_trip() {
        for c in QuestionCategory::ALL {
            assert_eq!(c.name().parse::<QuestionCategory>().unwrap(), c);
        }
        assert_eq!("Yes/No".parse::<QuestionCategory>().unwrap(), YesNo);
    }

    proptest! {
        #[test]
        fn total_over_non_empty(s in "[a-zA-Z?,. ]{0,40}[a-z][a-zA-Z?,. ]{0,40}") {
            let c = categorize(&s).unwrap();
            prop_assert!(QuestionCategory::ALL.contains(&c));
        }
    }
}
