// SPDX-License-Identifier: Apache-2.0

//! Out-of-process backend speaking line-delimited JSON over stdin/stdout.
//!
//! Each request is one JSON object on one line; the scorer answers with one
//! JSON object on one line. Requests:
//!
//! | `op`               | fields                        | response                                   |
//! |--------------------|-------------------------------|--------------------------------------------|
//! | `describe`         |                               | `{model_id, style, capabilities}`          |
//! | `tokenize`         | `text`                        | `{tokens: [{text, start, end}]}`           |
//! | `token_logprobs`   | `text`                        | `{logprobs: [..], total, n_tokens}`        |
//! | `position_logprob` | `text`, `position`            | `{logprob}`                                |
//! | `masked_candidates`| `masked_text`, `candidates`   | `{logprobs: {candidate: logprob}}`         |
//! | `embeddings`       | `text`, `want_embeddings`     | `{tokens: [..], embeddings: [[..]]}`       |
//!
//! Offsets are Unicode character offsets into the request text; tokens are
//! content tokens only. Failures answer `{error, kind}` where `kind` is one of
//! `multi_token` (with `candidate`), `unknown_candidate`, `unsupported`, or
//! anything else for a generic backend error.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Capability, ModelStyle, ScorerBackend, Token, TokenEmbedding};
use crate::error::{Error, Result};
use crate::lexicon::Auxiliary;

#[derive(Debug, Serialize)]
struct Request<'a> {
    op: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    text: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    masked_text: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    candidates: Option<Vec<&'a str>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    position: Option<usize>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    want_embeddings: bool,
}

impl<'a> Request<'a> {
    fn op(op: &'a str) -> Self {
        Request {
            op,
            text: None,
            masked_text: None,
            candidates: None,
            position: None,
            want_embeddings: false,
        }
    }
}

#[derive(Debug, Deserialize)]
struct Describe {
    model_id: String,
    #[serde(default)]
    style: ModelStyle,
    capabilities: Vec<Capability>,
}

struct Pipe {
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

pub struct ProtoScorer {
    model_id: String,
    style: ModelStyle,
    capabilities: Vec<Capability>,
    pipe: Mutex<Pipe>,
    child: Mutex<Child>,
}

impl ProtoScorer {
    /// Spawns `command` through `sh -c` and asks it to describe itself.
    pub fn spawn(command: &str) -> Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Backend(format!("cannot start `{command}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        let mut scorer = ProtoScorer {
            model_id: String::new(),
            style: ModelStyle::Masked,
            capabilities: Vec::new(),
            pipe: Mutex::new(Pipe { stdin, stdout }),
            child: Mutex::new(child),
        };
        let d: Describe = serde_json::from_value(scorer.call(&Request::op("describe"))?)
            .map_err(|e| Error::Backend(format!("bad describe response: {e}")))?;
        scorer.model_id = d.model_id;
        scorer.style = d.style;
        scorer.capabilities = d.capabilities;
        Ok(scorer)
    }

    fn call(&self, req: &Request<'_>) -> Result<Value> {
        let line = serde_json::to_string(req).expect("request serializes");
        let mut pipe = self.pipe.lock().expect("pipe lock");
        writeln!(pipe.stdin, "{line}")
            .and_then(|_| pipe.stdin.flush())
            .map_err(|e| Error::Backend(format!("write to scorer failed: {e}")))?;
        let mut reply = String::new();
        let n = pipe
            .stdout
            .read_line(&mut reply)
            .map_err(|e| Error::Backend(format!("read from scorer failed: {e}")))?;
        if n == 0 {
            return Err(Error::Backend("scorer closed its output".into()));
        }
        let value: Value = serde_json::from_str(&reply)
            .map_err(|e| Error::Backend(format!("malformed scorer reply: {e}")))?;
        if let Some(msg) = value.get("error") {
            let msg = msg.as_str().unwrap_or("unspecified").to_string();
            let candidate = value
                .get("candidate")
                .and_then(Value::as_str)
                .unwrap_or_default()
                .to_string();
            return Err(match value.get("kind").and_then(Value::as_str) {
                Some("multi_token") => Error::MultiTokenCandidate { candidate },
                Some("unknown_candidate") => Error::UnknownCandidate { candidate },
                _ => Error::Backend(msg),
            });
        }
        Ok(value)
    }

    fn field<T: serde::de::DeserializeOwned>(value: &Value, name: &str) -> Result<T> {
        let v = value
            .get(name)
            .ok_or_else(|| Error::Backend(format!("scorer reply lacks `{name}`")))?;
        serde_json::from_value(v.clone())
            .map_err(|e| Error::Backend(format!("bad `{name}` in scorer reply: {e}")))
    }

    fn require(&self, cap: Capability) -> Result<()> {
        if self.capabilities.contains(&cap) {
            Ok(())
        } else {
            Err(self.unsupported(cap))
        }
    }
}

impl Drop for ProtoScorer {
    fn drop(&mut self) {
        if let Ok(mut child) = self.child.lock() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

impl ScorerBackend for ProtoScorer {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn style(&self) -> ModelStyle {
        self.style
    }

    fn capabilities(&self) -> Vec<Capability> {
        self.capabilities.clone()
    }

    fn concurrent_safe(&self) -> bool {
        false
    }

    fn tokenize(&self, text: &str) -> Result<Vec<Token>> {
        let reply = self.call(&Request {
            text: Some(text),
            ..Request::op("tokenize")
        })?;
        Self::field(&reply, "tokens")
    }

    fn position_logprob(&self, text: &str, position: usize) -> Result<f64> {
        self.require(Capability::SequenceLogprob)?;
        let reply = self.call(&Request {
            text: Some(text),
            position: Some(position),
            ..Request::op("position_logprob")
        })?;
        Self::field(&reply, "logprob")
    }

    fn token_logprobs(&self, text: &str) -> Result<Vec<f64>> {
        self.require(Capability::SequenceLogprob)?;
        let reply = self.call(&Request {
            text: Some(text),
            ..Request::op("token_logprobs")
        })?;
        Self::field(&reply, "logprobs")
    }

    fn masked_candidates(
        &self,
        masked_text: &str,
        candidates: &[Auxiliary],
    ) -> Result<BTreeMap<Auxiliary, f64>> {
        self.require(Capability::MaskedCandidates)?;
        let reply = self.call(&Request {
            masked_text: Some(masked_text),
            candidates: Some(candidates.iter().map(Auxiliary::as_str).collect()),
            ..Request::op("masked_candidates")
        })?;
        Self::field(&reply, "logprobs")
    }

    fn embeddings(&self, text: &str) -> Result<Vec<TokenEmbedding>> {
        self.require(Capability::Embeddings)?;
        let reply = self.call(&Request {
            text: Some(text),
            want_embeddings: true,
            ..Request::op("embeddings")
        })?;
        let tokens: Vec<Token> = Self::field(&reply, "tokens")?;
        let vectors: Vec<Vec<f64>> = Self::field(&reply, "embeddings")?;
        if tokens.len() != vectors.len() {
            return Err(Error::Backend(format!(
                "{} tokens but {} embeddings",
                tokens.len(),
                vectors.len()
            )));
        }
        Ok(tokens
            .into_iter()
            .zip(vectors)
            .map(|(token, vector)| TokenEmbedding { token, vector })
            .collect())
    }
}
