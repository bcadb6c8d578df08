//! Line-delimited JSON wire protocol between the codec and a remote
//! distribution provider.
//!
//! Each message is one JSON object on one `\n`-terminated line. Fields are
//! written in the order declared here; probabilities travel as decimal
//! strings and token ids as integers, never as surface text. See
//! `docs/protocol.md` for the byte-level description.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{Context, DistributionProvider, ProviderError};
use crate::TokenId;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Request {
    pub v: u32,
    #[serde(flatten)]
    pub body: RequestBody,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum RequestBody {
    Next {
        session: String,
        context: Vec<TokenId>,
        /// How many leading context tokens are prompt. Providers that only
        /// look at the context may ignore it.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        prompt_len: Option<usize>,
    },
    Health,
    Detokenize {
        tokens: Vec<TokenId>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Response {
    pub v: u32,
    #[serde(flatten)]
    pub body: ResponseBody,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum ResponseBody {
    Dist {
        tokens: Vec<TokenId>,
        probs: Vec<String>,
    },
    Ok {
        model: String,
    },
    Text {
        text: String,
    },
    Error {
        message: String,
    },
}

impl Request {
    pub fn new(body: RequestBody) -> Self {
        Self {
            v: PROTOCOL_VERSION,
            body,
        }
    }
}

impl Response {
    pub fn new(body: ResponseBody) -> Self {
        Self {
            v: PROTOCOL_VERSION,
            body,
        }
    }

    pub fn error(message: impl Into<String>) -> Self {
        Self::new(ResponseBody::Error {
            message: message.into(),
        })
    }
}

/// Serializes one message as a single line, including the trailing `\n`.
pub fn encode_line<T: Serialize>(message: &T) -> String {
    let mut line = serde_json::to_string(message).expect("protocol messages serialize");
    line.push('\n');
    line
}

/// Answers requests from `reader` until end of input. A malformed request is
/// answered with an error frame and ends the session.
pub fn serve<R: BufRead, W: Write>(
    provider: &dyn DistributionProvider,
    model_name: &str,
    reader: R,
    mut writer: W,
) -> Result<(), ProviderError> {
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let request: Request = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                writer.write_all(encode_line(&Response::error(format!("bad request: {e}"))).as_bytes())?;
                writer.flush()?;
                return Err(ProviderError::Protocol(e.to_string()));
            }
        };
        if request.v != PROTOCOL_VERSION {
            let message = format!("unsupported protocol version {}", request.v);
            writer.write_all(encode_line(&Response::error(&message)).as_bytes())?;
            writer.flush()?;
            return Err(ProviderError::Protocol(message));
        }
        let response = match answer(provider, model_name, request.body) {
            Ok(body) => Response::new(body),
            Err(e) => Response::error(e.to_string()),
        };
        writer.write_all(encode_line(&response).as_bytes())?;
        writer.flush()?;
    }
    Ok(())
}

fn answer(
    provider: &dyn DistributionProvider,
    model_name: &str,
    body: RequestBody,
) -> Result<ResponseBody, ProviderError> {
    match body {
        RequestBody::Next {
            context,
            prompt_len,
            ..
        } => {
            let prompt_len = prompt_len.unwrap_or(context.len()).min(context.len());
            let mut ctx = Context::new(context[..prompt_len].to_vec());
            for &t in &context[prompt_len..] {
                ctx.push(t);
            }
            let step = provider.next_distribution(&ctx)?;
            // integer weights are exact decimals with the same normalization
            Ok(ResponseBody::Dist {
                tokens: step.tokens().to_vec(),
                probs: step.weights().iter().map(|w| w.to_string()).collect(),
            })
        }
        RequestBody::Health => Ok(ResponseBody::Ok {
            model: model_name.to_string(),
        }),
        RequestBody::Detokenize { tokens } => match provider.detokenize(&tokens)? {
            Some(text) => Ok(ResponseBody::Text { text }),
            None => Err(ProviderError::Protocol(
                "provider cannot detokenize".to_string(),
            )),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_bytes_are_pinned() {
        let next = Request::new(RequestBody::Next {
            session: "s1".into(),
            context: vec![3, 1, 4],
            prompt_len: None,
        });
        assert_eq!(
            encode_line(&next),
            "{\"v\":1,\"op\":\"next\",\"session\":\"s1\",\"context\":[3,1,4]}\n"
        );
        assert_eq!(
            encode_line(&Request::new(RequestBody::Health)),
            "{\"v\":1,\"op\":\"health\"}\n"
        );
        assert_eq!(
            encode_line(&Response::new(ResponseBody::Dist {
                tokens: vec![0, 1],
                probs: vec!["0.65".into(), "0.35".into()],
            })),
            "{\"v\":1,\"op\":\"dist\",\"tokens\":[0,1],\"probs\":[\"0.65\",\"0.35\"]}\n"
        );
        assert_eq!(
            encode_line(&Response::error("boom")),
            "{\"v\":1,\"op\":\"error\",\"message\":\"boom\"}\n"
        );
    }

    #[test]
    fn messages_parse_back() {
        let line = r#"{"v":1,"op":"next","session":"a","context":[1],"prompt_len":1}"#;
        let req: Request = serde_json::from_str(line).unwrap();
        assert_eq!(
            req.body,
            RequestBody::Next {
                session: "a".into(),
                context: vec![1],
                prompt_len: Some(1)
            }
        );
        let resp: Response = serde_json::from_str(r#"{"v":1,"op":"text","text":"hi"}"#).unwrap();
        assert_eq!(resp.body, ResponseBody::Text { text: "hi".into() });
    }
}
