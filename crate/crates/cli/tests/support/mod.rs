//! Shared by the CLI tests and the acceptance run: a binary runner, a
//! local stand-in for a chat-completion endpoint and the chemistry
//! pipeline.
#![allow(dead_code)]

use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::sync::Arc;
use std::time::Duration;

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_schemaforge")
}

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn chemistry() -> PathBuf {
    repo_root().join("fixtures/chemistry")
}

pub fn replay_dir() -> PathBuf {
    repo_root().join("fixtures/replay")
}

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the binary with a clean environment: no user config file and no
/// key unless `env` sets one.
pub fn run_with(args: &[&str], stdin: &str, env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(bin());
    cmd.args(args)
        .env_remove("SCHEMAFORGE_API_KEY")
        .env_remove("SCHEMAFORGE_CONFIG")
        .env("XDG_CONFIG_HOME", "/nonexistent-schemaforge-config")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    for (k, v) in env {
        cmd.env(k, v);
    }
    let mut child = cmd.spawn().expect("spawn schemaforge");
    child
        .stdin
        .take()
        .unwrap()
        .write_all(stdin.as_bytes())
        .expect("write stdin");
    let Output {
        status,
        stdout,
        stderr,
    } = child.wait_with_output().unwrap();
    Run {
        code: status.code().unwrap_or(-1),
        stdout: String::from_utf8(stdout).unwrap(),
        stderr: String::from_utf8(stderr).unwrap(),
    }
}

pub fn run(args: &[&str]) -> Run {
    run_with(args, "", &[])
}

pub type Handler = Arc<dyn Fn(&str, &str) -> (u16, String) + Send + Sync>;

/// Serves HTTP/1.1 requests on a background thread; `handler` gets the
/// header block and the body. Returns the base URL.
pub fn stub(handler: Handler) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        for stream in listener.incoming().flatten() {
            let handler = handler.clone();
            std::thread::spawn(move || serve_one(stream, &*handler));
        }
    });
    format!("http://{addr}")
}

fn serve_one(mut stream: TcpStream, handler: &(dyn Fn(&str, &str) -> (u16, String) + Send + Sync)) {
    stream.set_read_timeout(Some(Duration::from_secs(5))).ok();
    let mut got = Vec::new();
    let mut buf = [0u8; 16 * 1024];
    let (head, body) = loop {
        let Ok(n) = stream.read(&mut buf) else { return };
        if n == 0 {
            return;
        }
        got.extend_from_slice(&buf[..n]);
        let text = String::from_utf8_lossy(&got).to_string();
        if let Some(end) = text.find("\r\n\r\n") {
            let head = text[..end].to_string();
            let len = head
                .lines()
                .find_map(|l| {
                    let (k, v) = l.split_once(':')?;
                    k.eq_ignore_ascii_case("content-length").then(|| v.trim().parse::<usize>().ok())?
                })
                .unwrap_or(0);
            if got.len() >= end + 4 + len {
                let body = String::from_utf8_lossy(&got[end + 4..end + 4 + len]).to_string();
                break (head, body);
            }
        }
    };
    let (status, body) = handler(&head, &body);
    let resp = format!(
        "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
        body.len()
    );
    stream.write_all(resp.as_bytes()).ok();
}

/// Wraps text as a chat-completion response body.
pub fn completion(content: &str) -> String {
    serde_json::json!({"choices": [{"index": 0, "message": {"role": "assistant", "content": content}}]})
        .to_string()
}

/// Content of the last message in a request body.
pub fn last_message(body: &str) -> String {
    let v: serde_json::Value = serde_json::from_str(body).expect("request body is JSON");
    v["messages"].as_array().and_then(|m| m.last()).and_then(|m| m["content"].as_str()).unwrap_or("").to_string()
}

/// Answers the three chemistry requests from `fixtures/chemistry/answers`.
pub fn chemistry_model() -> Handler {
    let answers = chemistry().join("answers");
    let read = move |name: &str| std::fs::read_to_string(answers.join(name)).unwrap();
    let (create, modify, mapping) = (read("create.txt"), read("modify.txt"), read("mapping.txt"));
    Arc::new(move |_, body| {
        let last = last_message(body);
        let answer = if last.contains("Input document") {
            &mapping
        } else if last.contains("compound class") {
            &modify
        } else if last.contains("MOF synthesis") {
            &create
        } else {
            return (400, r#"{"error":"unexpected request"}"#.into());
        };
        (200, completion(answer))
    })
}

pub const REMARKS: &str = "product_purity holds yes or no; map it to a boolean.";

pub enum Mode {
    Replay,
    /// Sends requests to `endpoint` and writes the answers into the replay
    /// directory.
    Record { endpoint: String },
}

pub struct Pipeline {
    pub work: tempfile::TempDir,
    pub inferred: serde_json::Value,
    pub improved: serde_json::Value,
    pub mapping: String,
    pub output: serde_json::Value,
    pub validate: Run,
    pub chat_log: String,
}

impl Pipeline {
    pub fn path(&self, name: &str) -> PathBuf {
        self.work.path().join(name)
    }
}

/// CSV import, inference, two chat turns, mapping generation, apply and
/// validation, each as its own CLI call.
pub fn chemistry_pipeline(mode: &Mode) -> Result<Pipeline, String> {
    let work = tempfile::tempdir().unwrap();
    let p = |n: &str| work.path().join(n).to_string_lossy().to_string();
    let empty_config = p("config.toml");
    std::fs::write(&empty_config, "").unwrap();
    let replay = replay_dir().to_string_lossy().to_string();
    let mut global = vec!["--config".to_string(), empty_config, "--replay".into(), replay];
    let mut env: Vec<(&str, &str)> = Vec::new();
    match mode {
        Mode::Record { endpoint } => {
            global.extend(["--record".into(), "--endpoint".into(), endpoint.clone()]);
            env.push(("SCHEMAFORGE_API_KEY", "recording-key"));
        }
        // Nothing listens on the discard port, so a stray live call fails.
        Mode::Replay => global.extend(["--endpoint".into(), "http://127.0.0.1:9".into()]),
    }
    let call = |args: &[&str], stdin: &str| -> Result<String, String> {
        let mut all: Vec<&str> = global.iter().map(String::as_str).collect();
        all.extend_from_slice(args);
        let r = run_with(&all, stdin, &env);
        if r.code != 0 {
            return Err(format!("{args:?} exited {}: {}", r.code, r.stderr));
        }
        Ok(r.stdout)
    };
    let save = |name: &str, text: &str| std::fs::write(work.path().join(name), text).unwrap();
    let json = |text: &str| serde_json::from_str::<serde_json::Value>(text).map_err(|e| e.to_string());

    let csv = chemistry().join("experiments.csv").to_string_lossy().to_string();
    save("experiments.json", &call(&["convert", &csv, "--to", "json"], "")?);
    let inferred = call(&["infer", &p("experiments.json")], "")?;
    save("inferred.json", &inferred);

    let transcript = std::fs::read_to_string(chemistry().join("chat.txt")).unwrap();
    let mut all: Vec<&str> = global.iter().map(String::as_str).collect();
    let schema_arg = p("inferred.json");
    all.extend(["schema", "chat", "--schema", &schema_arg]);
    let chat = run_with(&all, &transcript, &env);
    if chat.code != 0 {
        return Err(format!("schema chat exited {}: {}", chat.code, chat.stderr));
    }
    save("improved.json", &chat.stdout);

    let mapping = call(
        &[
            "map",
            "generate",
            "--input",
            &p("experiments.json"),
            "--target-schema",
            &p("improved.json"),
            "--remarks",
            REMARKS,
        ],
        "",
    )?;
    save("mapping.jnt", &mapping);
    let output = call(&["map", "apply", "--input", &p("experiments.json"), "--mapping", &p("mapping.jnt")], "")?;
    save("output.json", &output);
    let mut all: Vec<&str> = global.iter().map(String::as_str).collect();
    let (out_arg, schema_arg) = (p("output.json"), p("improved.json"));
    all.extend(["validate", &out_arg, "--schema", &schema_arg]);
    let validate = run_with(&all, "", &env);

    Ok(Pipeline {
        inferred: json(&inferred)?,
        improved: json(&chat.stdout)?,
        mapping,
        output: json(&output)?,
        validate,
        chat_log: chat.stderr,
        work,
    })
}
