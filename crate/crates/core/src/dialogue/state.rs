//! Conversations as item sequences: the shared view that policies match and
//! learn on.

use serde::{Deserialize, Serialize};

use super::tracker::{EventKind, Tracker};
use super::ACTION_LISTEN;
use crate::corpus::{Story, StoryStep};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Item {
    /// A user turn with the sorted, deduplicated entity types it carried.
    User { intent: String, entities: Vec<String> },
    Action(String),
}

impl Item {
    /// Whether a conversation item satisfies this story item. Story entity
    /// lists are a required subset of what the user actually mentioned.
    pub fn admits(&self, observed: &Item) -> bool {
        match (self, observed) {
            (Item::User { intent, entities }, Item::User { intent: i, entities: e }) => {
                intent == i && entities.iter().all(|x| e.contains(x))
            }
            (Item::Action(a), Item::Action(b)) => a == b,
            _ => false,
        }
    }
}

/// Story steps with `action_listen` closing every user turn's actions.
pub fn expand_story(story: &Story) -> Vec<Item> {
    let mut items = Vec::with_capacity(story.steps.len() * 2);
    for step in &story.steps {
        match step {
            StoryStep::User { intent, entities } => {
                if !items.is_empty() {
                    close_turn(&mut items);
                }
                items.push(Item::User {
                    intent: intent.clone(),
                    entities: entities.clone(),
                });
            }
            StoryStep::Action(a) => items.push(Item::Action(a.clone())),
        }
    }
    close_turn(&mut items);
    items
}

fn close_turn(items: &mut Vec<Item>) {
    if items.last() != Some(&Item::Action(ACTION_LISTEN.to_string())) {
        items.push(Item::Action(ACTION_LISTEN.to_string()));
    }
}

pub fn tracker_items(tracker: &Tracker) -> Vec<Item> {
    tracker
        .events()
        .iter()
        .filter_map(|e| match &e.kind {
            EventKind::UserUttered { intent, entities, .. } => {
                let mut types: Vec<String> = entities.iter().map(|s| s.entity.clone()).collect();
                types.sort();
                types.dedup();
                Some(Item::User {
                    intent: intent.clone(),
                    entities: types,
                })
            }
            EventKind::ActionExecuted { action } => Some(Item::Action(action.clone())),
            _ => None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn user(i: &str) -> StoryStep {
        StoryStep::User {
            intent: i.into(),
            entities: vec![],
        }
    }

    #[test]
    fn listen_closes_each_turn() {
        let story = Story {
            name: "s".into(),
            steps: vec![user("greet"), StoryStep::Action("utter_greet".into()), user("bye"), StoryStep::Action("utter_bye".into())],
        };
        let items = expand_story(&story);
        let listen = Item::Action(ACTION_LISTEN.into());
        assert_eq!(items.len(), 6);
        assert_eq!(items[2], listen);
        assert_eq!(items[5], listen);
    }

    #[test]
    fn explicit_listen_not_doubled() {
        let story = Story {
            name: "s".into(),
            steps: vec![user("greet"), StoryStep::Action(ACTION_LISTEN.into())],
        };
        assert_eq!(expand_story(&story).len(), 2);
    }

    #[test]
    fn entity_subset_rule() {
        let story = Item::User {
            intent: "ask".into(),
            entities: vec!["city".into()],
        };
        let seen = |e: &[&str]| Item::User {
            intent: "ask".into(),
            entities: e.iter().map(|s| s.to_string()).collect(),
        };
        assert!(story.admits(&seen(&["city", "date"])));
        assert!(!story.admits(&seen(&["date"])));
        assert!(seen(&[]).admits(&seen(&["city"])));
    }
}
