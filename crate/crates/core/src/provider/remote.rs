use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use super::protocol::{encode_line, Request, RequestBody, Response, ResponseBody, PROTOCOL_VERSION};
use super::{Context, DistributionProvider, ProviderError};
use crate::exact::DistributionStep;
use crate::TokenId;

/// Where a remote provider listens.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Endpoint {
    /// `tcp:<host>:<port>`
    Tcp(String),
    /// `exec:<program> [args...]`: spawn a child and talk over its stdio.
    Exec(Vec<String>),
}

impl FromStr for Endpoint {
    type Err = ProviderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let invalid = || ProviderError::InvalidDescriptor(s.to_string());
        let (kind, rest) = s.split_once(':').ok_or_else(invalid)?;
        match kind {
            "tcp" if !rest.is_empty() => Ok(Self::Tcp(rest.to_string())),
            "exec" => {
                let argv: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
                if argv.is_empty() {
                    return Err(invalid());
                }
                Ok(Self::Exec(argv))
            }
            _ => Err(invalid()),
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Tcp(addr) => write!(f, "tcp:{addr}"),
            Self::Exec(argv) => write!(f, "exec:{}", argv.join(" ")),
        }
    }
}

struct Connection {
    reader: Box<dyn BufRead + Send>,
    writer: Box<dyn Write + Send>,
    child: Option<Child>,
}

impl Drop for Connection {
    fn drop(&mut self) {
        if let Some(child) = &mut self.child {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

/// Client side of the wire protocol. One request is in flight at a time.
pub struct RemoteProvider {
    conn: Mutex<Connection>,
    session: String,
    verify: bool,
}

impl RemoteProvider {
    pub fn connect(endpoint: &Endpoint, session: &str) -> Result<Self, ProviderError> {
        let unavailable = |e: std::io::Error| ProviderError::RemoteUnavailable(format!("{endpoint}: {e}"));
        let conn = match endpoint {
            Endpoint::Tcp(addr) => {
                let stream = TcpStream::connect(addr).map_err(unavailable)?;
                let reader = BufReader::new(stream.try_clone().map_err(unavailable)?);
                Connection {
                    reader: Box::new(reader),
                    writer: Box::new(stream),
                    child: None,
                }
            }
            Endpoint::Exec(argv) => {
                let mut child = Command::new(&argv[0])
                    .args(&argv[1..])
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .spawn()
                    .map_err(unavailable)?;
                let stdin = child.stdin.take().expect("piped stdin");
                let stdout = child.stdout.take().expect("piped stdout");
                Connection {
                    reader: Box::new(BufReader::new(stdout)),
                    writer: Box::new(stdin),
                    child: Some(child),
                }
            }
        };
        Ok(Self {
            conn: Mutex::new(conn),
            session: session.to_string(),
            verify: false,
        })
    }

    /// Wraps an already-open pair of streams.
    pub fn from_streams(
        reader: impl BufRead + Send + 'static,
        writer: impl Write + Send + 'static,
        session: &str,
    ) -> Self {
        Self {
            conn: Mutex::new(Connection {
                reader: Box::new(reader),
                writer: Box::new(writer),
                child: None,
            }),
            session: session.to_string(),
            verify: false,
        }
    }

    /// Send every distribution request twice and require byte-identical
    /// answers.
    pub fn verify_determinism(mut self, on: bool) -> Self {
        self.verify = on;
        self
    }

    pub fn health(&self) -> Result<String, ProviderError> {
        match self.call(&Request::new(RequestBody::Health))?.1 {
            ResponseBody::Ok { model } => Ok(model),
            other => Err(unexpected(&other)),
        }
    }

    fn call(&self, request: &Request) -> Result<(String, ResponseBody), ProviderError> {
        let mut conn = self.conn.lock().expect("connection lock");
        let line = encode_line(request);
        let io = |e: std::io::Error| ProviderError::RemoteUnavailable(e.to_string());
        conn.writer.write_all(line.as_bytes()).map_err(io)?;
        conn.writer.flush().map_err(io)?;
        let mut reply = String::new();
        if conn.reader.read_line(&mut reply).map_err(io)? == 0 {
            return Err(ProviderError::RemoteUnavailable(
                "connection closed".to_string(),
            ));
        }
        let response: Response = serde_json::from_str(reply.trim_end())
            .map_err(|e| ProviderError::Protocol(format!("bad response: {e}")))?;
        if response.v != PROTOCOL_VERSION {
            return Err(ProviderError::Protocol(format!(
                "unsupported protocol version {}",
                response.v
            )));
        }
        match response.body {
            ResponseBody::Error { message } => Err(ProviderError::Remote(message)),
            body => Ok((reply, body)),
        }
    }
}

fn unexpected(body: &ResponseBody) -> ProviderError {
    ProviderError::Protocol(format!("unexpected response {body:?}"))
}

impl DistributionProvider for RemoteProvider {
    fn next_distribution(&self, ctx: &Context) -> Result<Arc<DistributionStep>, ProviderError> {
        if ctx.tokens().is_empty() {
            return Err(ProviderError::EmptyContext);
        }
        let request = Request::new(RequestBody::Next {
            session: self.session.clone(),
            context: ctx.tokens().to_vec(),
            prompt_len: Some(ctx.prompt().len()),
        });
        let (raw, body) = self.call(&request)?;
        if self.verify {
            let (again, _) = self.call(&request)?;
            if again != raw {
                return Err(ProviderError::NonDeterministicResponse);
            }
        }
        match body {
            ResponseBody::Dist { tokens, probs } => {
                Ok(Arc::new(DistributionStep::from_decimal_strings(tokens, &probs)?))
            }
            other => Err(unexpected(&other)),
        }
    }

    fn detokenize(&self, tokens: &[TokenId]) -> Result<Option<String>, ProviderError> {
        let request = Request::new(RequestBody::Detokenize {
            tokens: tokens.to_vec(),
        });
        match self.call(&request)?.1 {
            ResponseBody::Text { text } => Ok(Some(text)),
            other => Err(unexpected(&other)),
        }
    }
}
