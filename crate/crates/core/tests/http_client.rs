//! The HTTP rewrite client against a throwaway local server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;

use newsprobe_core::corpus::{Cleaner, CleaningConfig};
use newsprobe_core::synthesis::{
    build_prompt, rewrite_article, GateConfig, HttpRewriteClient, HttpRewriteConfig, RetryPolicy, RewriteClient,
    RewriteError, REASON_PROVIDER_ERROR,
};
use newsprobe_core::{Article, OriginLabel};

/// Serves one canned response per connection, in order, and records the
/// request bodies.
fn serve(responses: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<(String, String)>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&seen);
    thread::spawn(move || {
        for (status, body) in responses {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream);
            let mut len = 0;
            let mut auth = String::new();
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                let lower = line.to_ascii_lowercase();
                if let Some(v) = lower.strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                if lower.starts_with("authorization:") {
                    auth = line.trim().to_string();
                }
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            log.lock().unwrap().push((auth, String::from_utf8(buf).unwrap()));
            let mut stream = reader.into_inner();
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
    });
    (url, seen)
}

fn config(url: String) -> HttpRewriteConfig {
    HttpRewriteConfig {
        endpoint: url,
        model: "test-model".into(),
        timeout_secs: 10,
        temperature: Some(0.2),
    }
}

fn completion(text: &str) -> String {
    serde_json::json!({"choices": [{"message": {"role": "assistant", "content": text}}]}).to_string()
}

#[test]
fn sends_prompt_and_body_and_reads_reply() {
    let (url, seen) = serve(vec![(200, completion("yeniden yazılmış metin"))]);
    let client = HttpRewriteClient::new(config(url), Some("k123".into()));
    let r = client.rewrite("PROMPT", "asıl metin").unwrap();
    assert_eq!(r.text, "yeniden yazılmış metin");
    assert_eq!(r.metadata["model"], "test-model");
    let seen = seen.lock().unwrap();
    assert_eq!(seen[0].0.to_ascii_lowercase(), "authorization: bearer k123");
    let body: serde_json::Value = serde_json::from_str(&seen[0].1).unwrap();
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["messages"][0]["content"], "PROMPT");
    assert_eq!(body["messages"][1]["content"], "asıl metin");
    assert_eq!(body["temperature"], 0.2);
}

#[test]
fn status_classes() {
    let (url, _) = serve(vec![(503, "{}".into()), (401, "{}".into())]);
    let client = HttpRewriteClient::new(config(url), None);
    assert!(matches!(client.rewrite("p", "b"), Err(RewriteError::Transient(_))));
    assert!(matches!(client.rewrite("p", "b"), Err(RewriteError::Fatal(_))));
}

#[test]
fn retries_transient_failures_then_verifies() {
    let body = "Belediye başkanı yeni parkın açılışını yaptı ve vatandaşlara teşekkür etti";
    let (url, seen) = serve(vec![(500, "{}".into()), (429, "{}".into()), (200, completion(body))]);
    let client = HttpRewriteClient::new(config(url), None);
    let article = Article {
        id: "a1".into(),
        source: "S".into(),
        published_at: chrono::NaiveDate::from_ymd_opt(2021, 2, 3).unwrap(),
        title: None,
        body: body.into(),
        origin: Some(OriginLabel::HumanWritten),
    };
    let cleaner = Cleaner::new(CleaningConfig::default()).unwrap();
    let r = rewrite_article(
        &article,
        &client,
        &build_prompt("S").unwrap(),
        &cleaner,
        &GateConfig::default(),
        &RetryPolicy::immediate(3),
    )
    .unwrap();
    assert!(r.accepted, "{:?}", r.rejection_reasons);
    assert_eq!(r.cosine_similarity, 1.0);
    assert_eq!(seen.lock().unwrap().len(), 3);
}

#[test]
fn exhausted_retries_are_a_rejection() {
    let (url, _) = serve(vec![(500, "{}".into()), (500, "{}".into())]);
    let client = HttpRewriteClient::new(config(url), None);
    let article = Article {
        id: "a2".into(),
        source: "S".into(),
        published_at: chrono::NaiveDate::from_ymd_opt(2021, 2, 3).unwrap(),
        title: None,
        body: "metin".into(),
        origin: Some(OriginLabel::HumanWritten),
    };
    let cleaner = Cleaner::new(CleaningConfig::passthrough()).unwrap();
    let r = rewrite_article(
        &article,
        &client,
        &build_prompt("S").unwrap(),
        &cleaner,
        &GateConfig::default(),
        &RetryPolicy::immediate(2),
    )
    .unwrap();
    assert!(!r.accepted);
    assert_eq!(r.rejection_reasons, vec![REASON_PROVIDER_ERROR.to_string()]);
}
