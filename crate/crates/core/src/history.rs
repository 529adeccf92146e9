//! Agent-visible action histories.
//!
//! A history records what the agent knows it did: each action's intended
//! arguments and, for sensing actions, the reading it received. The actual
//! outcome of a noisy effector is never part of a history; situations that
//! differ only in those outcomes are indistinguishable to the agent, and the
//! belief engine integrates over them.
//!
//! Text form: `fwd(2); sonar()=5`. Whitespace and a trailing `;` are
//! ignored; the empty string is the empty history.

use std::fmt;

use thiserror::Error;

use crate::dsl::{Diagnostic, Parser};
use crate::model::Theory;

#[derive(Debug, Clone, PartialEq)]
pub struct ActionEvent {
    pub action: String,
    pub args: Vec<f64>,
    pub reading: Option<f64>,
}

impl ActionEvent {
    pub fn new(action: impl Into<String>, args: Vec<f64>) -> Self {
        ActionEvent {
            action: action.into(),
            args,
            reading: None,
        }
    }

    pub fn sensed(action: impl Into<String>, args: Vec<f64>, reading: f64) -> Self {
        ActionEvent {
            action: action.into(),
            args,
            reading: Some(reading),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct History {
    pub events: Vec<ActionEvent>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HistoryError {
    #[error("event {index}: undeclared action `{action}`")]
    UndeclaredAction { index: usize, action: String },
    #[error("event {index}: `{action}` takes {expected} argument(s), got {got}")]
    Arity {
        index: usize,
        action: String,
        expected: usize,
        got: usize,
    },
    #[error("event {index}: sensing action `{action}` needs a reading (`{action}(..)=value`)")]
    MissingReading { index: usize, action: String },
    #[error("event {index}: `{action}` is not a sensing action and cannot carry a reading")]
    UnexpectedReading { index: usize, action: String },
    #[error("event {index}: non-finite value")]
    NonFinite { index: usize },
}

impl History {
    pub fn new(events: Vec<ActionEvent>) -> Self {
        History { events }
    }

    pub fn empty() -> Self {
        History::default()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ActionEvent> {
        self.events.iter()
    }

    pub fn push(&mut self, e: ActionEvent) {
        self.events.push(e);
    }

    pub fn then(mut self, e: ActionEvent) -> Self {
        self.events.push(e);
        self
    }

    pub fn parse(text: &str) -> Result<History, Diagnostic> {
        let mut p = Parser::new(text)?;
        let mut events = Vec::new();
        if p.at_eof() {
            return Ok(History { events });
        }
        loop {
            let (name, args, reading) = p.event()?;
            events.push(ActionEvent {
                action: name.name,
                args: args.into_iter().map(|(v, _)| v).collect(),
                reading: reading.map(|(v, _)| v),
            });
            if !p.event_separator()? {
                break;
            }
        }
        Ok(History { events })
    }

    /// Checks action names, arities, and that readings appear exactly on
    /// sensing actions.
    pub fn validate(&self, theory: &Theory) -> Result<(), HistoryError> {
        for (index, e) in self.events.iter().enumerate() {
            let action = e.action.clone();
            let decl = theory.action(&e.action).ok_or_else(|| HistoryError::UndeclaredAction {
                index,
                action: action.clone(),
            })?;
            if decl.params.len() != e.args.len() {
                return Err(HistoryError::Arity {
                    index,
                    action,
                    expected: decl.params.len(),
                    got: e.args.len(),
                });
            }
            if e.args.iter().chain(e.reading.iter()).any(|v| !v.is_finite()) {
                return Err(HistoryError::NonFinite { index });
            }
            match (decl.is_sensing(), e.reading) {
                (true, None) => return Err(HistoryError::MissingReading { index, action }),
                (false, Some(_)) => return Err(HistoryError::UnexpectedReading { index, action }),
                _ => {}
            }
        }
        Ok(())
    }
}

impl fmt::Display for ActionEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.action)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")?;
        if let Some(z) = self.reading {
            write!(f, "={z}")?;
        }
        Ok(())
    }
}

impl fmt::Display for History {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.events.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl FromIterator<ActionEvent> for History {
    fn from_iter<I: IntoIterator<Item = ActionEvent>>(iter: I) -> Self {
        History {
            events: iter.into_iter().collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_theory;
    use proptest::prelude::*;

    #[test]
    fn parses_mini_syntax() {
        let h = History::parse(" fwd( 2 ) ;sonar()= -5.5 ;").unwrap();
        assert_eq!(
            h,
            History::new(vec![
                ActionEvent::new("fwd", vec![2.0]),
                ActionEvent::sensed("sonar", vec![], -5.5)
            ])
        );
        assert_eq!(h.to_string(), "fwd(2); sonar()=-5.5");
        assert!(History::parse("").unwrap().is_empty());
        assert!(History::parse("   \n").unwrap().is_empty());
        assert!(History::parse("fwd(2) sonar()").is_err());
        assert!(History::parse("fwd(x)").is_err());
    }

    #[test]
    fn validation() {
        let t = parse_theory(include_str!("../theories/robot1d.bat")).unwrap();
        assert!(History::parse("fwd(2); sonar()=5").unwrap().validate(&t).is_ok());
        assert!(matches!(
            History::parse("jump(1)").unwrap().validate(&t),
            Err(HistoryError::UndeclaredAction { .. })
        ));
        assert!(matches!(
            History::parse("fwd()").unwrap().validate(&t),
            Err(HistoryError::Arity { .. })
        ));
        assert!(matches!(
            History::parse("sonar()").unwrap().validate(&t),
            Err(HistoryError::MissingReading { .. })
        ));
        assert!(matches!(
            History::parse("fwd(1)=3").unwrap().validate(&t),
            Err(HistoryError::UnexpectedReading { .. })
        ));
    }

    fn arb_event() -> impl Strategy<Value = ActionEvent> {
        (
            prop::sample::select(vec!["fwd", "sonar", "a_b1"]),
            prop::collection::vec(-1e6..1e6f64, 0..3),
            prop::option::of(-1e6..1e6f64),
        )
            .prop_map(|(n, args, reading)| ActionEvent {
                action: n.to_string(),
                args,
                reading,
            })
    }

    proptest! {
        #[test]
        fn printing_reparses_equal(events in prop::collection::vec(arb_event(), 0..6)) {
            let h = History::new(events);
            prop_assert_eq!(History::parse(&h.to_string()).unwrap(), h);
        }
    }
}
