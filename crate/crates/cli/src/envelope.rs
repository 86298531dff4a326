use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    VerificationFailure,
    InputError,
    BudgetError,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::VerificationFailure => 1,
            Status::InputError => 2,
            Status::BudgetError => 3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of_bytes(path: &Path, bytes: &[u8]) -> Self {
        InputDigest {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        }
    }
}

/// What a command produced: a JSON payload, a text rendering and a status.
#[derive(Debug)]
pub struct Outcome {
    pub status: Status,
    pub inputs: Vec<InputDigest>,
    pub result: Value,
    pub text: String,
}

impl Outcome {
    pub fn error(status: Status, message: impl Into<String>) -> Self {
        let message = message.into();
        Outcome {
            status,
            inputs: Vec::new(),
            result: serde_json::json!({ "error": message }),
            text: format!("error: {message}"),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ReportEnvelope {
    pub command: Vec<String>,
    pub inputs: Vec<InputDigest>,
    pub result: Value,
    pub status: Status,
    pub exit_code: u8,
    #[serde(skip)]
    text: String,
}

impl ReportEnvelope {
    pub fn new(command: Vec<String>, outcome: Outcome) -> Self {
        ReportEnvelope {
            command,
            inputs: outcome.inputs,
            result: outcome.result,
            exit_code: outcome.status.exit_code(),
            status: outcome.status,
            text: outcome.text,
        }
    }

    pub fn exit_code(&self) -> u8 {
        self.exit_code
    }

    /// Write errors such as a closed pipe are ignored; the exit code still
    /// reports the outcome.
    pub fn print(&self, json: bool) {
        let _ = if json {
            let body = serde_json::to_string_pretty(self).expect("report serializes");
            writeln!(io::stdout().lock(), "{body}")
        } else if self.status == Status::Ok || self.status == Status::VerificationFailure {
            writeln!(io::stdout().lock(), "{}", self.text)
        } else {
            writeln!(io::stderr().lock(), "{}", self.text)
        };
    }
}
