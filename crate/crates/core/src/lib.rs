//! Online learning of executable world models.
//!
//! A learner keeps one candidate program as its theory of the environment.
//! New transitions the program fails to explain trigger program updates that
//! must preserve everything explained so far; rejected updates refine a tree
//! of hypothesis classes that both stratifies the evidence shown in the next
//! update and guides which transitions the explorer collects next.

pub mod runtime;
pub mod evidence;
pub mod events;
pub mod programmer;
pub mod explorer;
pub mod evaluator;
pub mod orchestrator;
