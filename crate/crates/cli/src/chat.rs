//! Line-driven schema chat. Plain lines are modification requests for the
//! selected sub-schema; lines starting with `/` are commands. Reads from
//! any `BufRead`, so a piped transcript drives it the same way a person
//! at a terminal does.

use std::io::{self, BufRead, Write};

use schemaforge_core::document::{to_pretty_json, DocPath};
use schemaforge_core::gateway::{GatewayConfig, Transport};
use schemaforge_core::schema::SchemaNode;
use schemaforge_core::session::{
    build_prompt_with, Applied, ApplyTarget, Phase, PromptInputs, PromptKind, PromptSettings,
    SessionError, SessionState, Validation,
};

pub const HELP: &str = "\
commands:
  <text>            ask for a change to the selected part of the schema
  /create <text>    ask for a new schema from a description
  /ask <text>       ask a question about the schema (never applied)
  /edit             replace the proposal with the lines that follow, ending with a lone `.`
  /accept           apply the proposal (only when it passed validation)
  /discard          drop the proposal
  /select <pointer> choose the sub-schema that requests refer to
  /show             print the current schema
  /help             this text
  /quit             stop (end of input does the same)";

pub struct Chat<'a> {
    pub gateway: &'a GatewayConfig,
    pub transport: &'a dyn Transport,
    pub settings: &'a PromptSettings,
    pub schema: SchemaNode,
    pub selection: DocPath,
    session: Option<SessionState>,
    pub gateway_failed: bool,
}

impl<'a> Chat<'a> {
    pub fn new(
        gateway: &'a GatewayConfig,
        transport: &'a dyn Transport,
        settings: &'a PromptSettings,
        schema: SchemaNode,
        selection: DocPath,
    ) -> Self {
        Chat {
            gateway,
            transport,
            settings,
            schema,
            selection,
            session: None,
            gateway_failed: false,
        }
    }

    /// Runs until `/quit` or end of input. Messages go to `out`.
    pub fn run(&mut self, input: impl BufRead, out: &mut impl Write) -> io::Result<()> {
        let mut lines = input.lines();
        while let Some(line) = lines.next() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let (cmd, rest) = match line.strip_prefix('/') {
                Some(c) => {
                    let (c, r) = c.split_once(char::is_whitespace).unwrap_or((c, ""));
                    (Some(c), r.trim())
                }
                None => (None, line.trim()),
            };
            match cmd {
                None => self.request(rest, out)?,
                Some("create") => self.start(PromptKind::SchemaCreate, rest, out)?,
                Some("ask") => self.ask(rest, out)?,
                Some("edit") => {
                    let mut text = Vec::new();
                    for l in lines.by_ref() {
                        let l = l?;
                        if l.trim_end_matches('\r') == "." {
                            break;
                        }
                        text.push(l);
                    }
                    self.edit(&text.join("\n"), out)?;
                }
                Some("accept") | Some("apply") => self.accept(out)?,
                Some("discard") => self.discard(out)?,
                Some("select") => match DocPath::from_pointer(rest) {
                    Ok(p) => {
                        self.selection = p;
                        writeln!(out, "selected {}", display_pointer(&self.selection))?;
                    }
                    Err(e) => writeln!(out, "error: {e}")?,
                },
                Some("show") => writeln!(out, "{}", to_pretty_json(self.schema.as_node()))?,
                Some("help") => writeln!(out, "{HELP}")?,
                Some("quit") | Some("exit") => break,
                Some(other) => writeln!(out, "error: unknown command /{other}; try /help")?,
            }
        }
        Ok(())
    }

    fn open_session(&self) -> Option<&SessionState> {
        self.session
            .as_ref()
            .filter(|s| matches!(s.phase, Phase::Proposed | Phase::UserEditing))
    }

    /// Follows up on an open proposal, or starts a modification.
    fn request(&mut self, text: &str, out: &mut impl Write) -> io::Result<()> {
        match self.open_session().map(|s| s.kind) {
            Some(kind) if !kind.is_query() => self.submit(kind, text, out),
            _ => self.start(PromptKind::SchemaModify, text, out),
        }
    }

    fn start(&mut self, kind: PromptKind, text: &str, out: &mut impl Write) -> io::Result<()> {
        if self.open_session().is_some() {
            writeln!(out, "note: the open proposal was dropped")?;
        }
        self.session = Some(SessionState::new(kind));
        self.submit(kind, text, out)
    }

    fn ask(&mut self, text: &str, out: &mut impl Write) -> io::Result<()> {
        let inputs = self.inputs(PromptKind::SchemaQuery, text);
        let mut session = SessionState::new(PromptKind::SchemaQuery);
        match build_prompt_with(PromptKind::SchemaQuery, &inputs, self.settings) {
            Ok(bundle) => match session.submit(&bundle, self.gateway, self.transport) {
                Ok(()) => writeln!(out, "{}", session.proposal.unwrap_or_default())?,
                Err(e) => self.report_error(e, out)?,
            },
            Err(e) => writeln!(out, "error: {e}")?,
        }
        Ok(())
    }

    fn inputs(&self, kind: PromptKind, text: &str) -> PromptInputs {
        PromptInputs {
            description: Some(text.to_string()),
            schema: Some(self.schema.clone()),
            context_path: (kind == PromptKind::SchemaModify).then(|| self.selection.clone()),
            ..PromptInputs::default()
        }
    }

    fn submit(&mut self, kind: PromptKind, text: &str, out: &mut impl Write) -> io::Result<()> {
        let mut inputs = self.inputs(kind, text);
        let session = self.session.as_mut().expect("started");
        // Follow-ups keep the part of the schema the proposal was about.
        if let Some(path) = &session.context_path {
            inputs.context_path = Some(path.clone());
        }
        let bundle = match build_prompt_with(kind, &inputs, self.settings) {
            Ok(b) => b,
            Err(e) => return writeln!(out, "error: {e}"),
        };
        match session.submit(&bundle, self.gateway, self.transport) {
            Ok(()) => {
                let raw = &session.history.last().expect("just submitted").raw_response;
                writeln!(out, "--- proposal ({kind}) ---")?;
                writeln!(out, "{}", raw.trim_end())?;
                let session = session.clone();
                show_validation(&session, out)
            }
            Err(e) => self.report_error(e, out),
        }
    }

    fn edit(&mut self, text: &str, out: &mut impl Write) -> io::Result<()> {
        let Some(session) = self.session.as_mut() else {
            return writeln!(out, "error: nothing to edit");
        };
        match session.user_edit(text) {
            Ok(()) => {
                let session = session.clone();
                show_validation(&session, out)
            }
            Err(e) => writeln!(out, "error: {e}"),
        }
    }

    fn accept(&mut self, out: &mut impl Write) -> io::Result<()> {
        let Some(session) = self.session.as_mut() else {
            return writeln!(out, "error: nothing to accept");
        };
        match session.apply(ApplyTarget::Schema(&self.schema)) {
            Ok(Applied::Schema(s)) => {
                self.schema = s;
                writeln!(out, "applied")
            }
            Ok(Applied::Document(_)) => unreachable!("schema sessions only"),
            Err(e) => writeln!(out, "error: {e}"),
        }
    }

    fn discard(&mut self, out: &mut impl Write) -> io::Result<()> {
        let Some(session) = self.session.as_mut() else {
            return writeln!(out, "error: nothing to discard");
        };
        match session.discard() {
            Ok(()) => writeln!(out, "discarded"),
            Err(e) => writeln!(out, "error: {e}"),
        }
    }

    fn report_error(&mut self, e: SessionError, out: &mut impl Write) -> io::Result<()> {
        if matches!(e, SessionError::Gateway(_)) {
            self.gateway_failed = true;
        }
        writeln!(out, "error: {e}")
    }
}

fn display_pointer(p: &DocPath) -> String {
    if p.is_root() {
        "the whole schema".into()
    } else {
        p.to_pointer()
    }
}

fn show_validation(session: &SessionState, out: &mut impl Write) -> io::Result<()> {
    match &session.validation {
        Some(Validation::Schema { report }) | Some(Validation::Document { report }) => {
            if report.valid {
                writeln!(out, "--- valid; /accept to apply ---")
            } else {
                writeln!(out, "--- invalid ({} problem(s)); /edit or ask again ---", report.violations.len())?;
                for v in &report.violations {
                    writeln!(out, "  {v}")?;
                }
                Ok(())
            }
        }
        Some(Validation::Mapping { report }) => {
            for d in &report.diagnostics {
                writeln!(out, "  {}:{} {}", d.line, d.column, d.message)?;
            }
            Ok(())
        }
        Some(Validation::Skipped) | None => Ok(()),
    }
}
