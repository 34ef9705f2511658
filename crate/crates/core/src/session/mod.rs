//! Assistance sessions: prompt construction, response clean-up and the
//! proposal state machine.
//!
//! Every answer becomes a *proposal* that is validated for its kind.
//! `apply` is refused unless the latest validation passed, whichever path
//! led there.

mod prompt;
mod state;
mod strip;

pub use self::prompt::{
    build_prompt, build_prompt_with, prompt_section, render, template_placeholders, PromptBundle,
    PromptError, PromptInputs, PromptKind, PromptSettings, TruncationSummary, UnknownKind,
    EXAMPLE_INPUT, EXAMPLE_MAPPING, EXAMPLE_OUTPUT, EXAMPLE_TARGET_SCHEMA, MAPPING_INSTRUCTIONS,
    ROLE_SENTENCE,
};
pub use self::state::{
    validate_proposal, Applied, ApplyTarget, Exchange, Phase, SessionError, SessionState,
    Validation,
};
pub use self::strip::strip_artifacts;
