//! Adapter that drives an external classifier over a line protocol.
//!
//! Requests go to the child's stdin, one JSON object per line:
//! `{"id": <int>, "path": "<image file>"}`. The child answers on stdout
//! with `{"id": <int>, "class_index": <int>}` lines, in any order.
//! Images are handed over as temporary PPM files with pixels clamped to
//! [0, 255] and rounded.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{ClassifierError, Predictor};
use crate::pnm;
use crate::snr::ImageF;

#[derive(Serialize)]
struct Request<'a> {
    id: usize,
    path: &'a str,
}

#[derive(Deserialize)]
struct Response {
    id: usize,
    class_index: usize,
}

/// Spawns one child process per batch and matches responses by id.
#[derive(Clone, Debug)]
pub struct ExternalClassifier {
    program: String,
    args: Vec<String>,
    classes: usize,
    timeout: Duration,
}

impl ExternalClassifier {
    /// `command` is split on whitespace into program and arguments.
    pub fn new(command: &str, classes: usize, timeout: Duration) -> Result<Self, ClassifierError> {
        let mut parts = command.split_whitespace().map(str::to_string);
        let program = parts
            .next()
            .ok_or_else(|| ClassifierError::Adapter("empty command line".to_string()))?;
        Ok(ExternalClassifier { program, args: parts.collect(), classes, timeout })
    }

    pub fn classify(&self, images: &[ImageF]) -> Result<Vec<usize>, ClassifierError> {
        if images.is_empty() {
            return Ok(Vec::new());
        }
        let dir = tempfile::tempdir().map_err(|e| ClassifierError::Io {
            path: "<tempdir>".to_string(),
            source: e,
        })?;
        let mut paths = Vec::with_capacity(images.len());
        for (i, image) in images.iter().enumerate() {
            let rgb = to_rgb(image)?;
            let path = dir.path().join(format!("img_{i:06}.ppm"));
            pnm::write(&rgb, &path)?;
            paths.push(path);
        }

        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| ClassifierError::Adapter(format!("spawn {}: {e}", self.program)))?;

        let mut stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");

        // writer thread so a child that answers eagerly cannot deadlock us
        let requests: Vec<String> = paths
            .iter()
            .enumerate()
            .map(|(id, p)| {
                serde_json::to_string(&Request { id, path: &p.to_string_lossy() })
                    .expect("request serializes")
            })
            .collect();
        let writer = std::thread::spawn(move || -> std::io::Result<()> {
            for line in requests {
                stdin.write_all(line.as_bytes())?;
                stdin.write_all(b"\n")?;
            }
            Ok(()) // dropping stdin closes the pipe
        });

        let (tx, rx) = mpsc::channel::<std::io::Result<String>>();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });

        let result = self.collect_responses(images.len(), &rx);
        // a broken pipe from an early-exiting child surfaces below as a
        // protocol or exit-status error, which is more useful
        let _ = writer.join();
        match result {
            Ok(classes) => {
                reap(&mut child, self.timeout)?;
                Ok(classes)
            }
            Err(err) => {
                let _ = child.kill();
                let _ = child.wait();
                Err(err)
            }
        }
    }

    fn collect_responses(
        &self,
        expected: usize,
        rx: &mpsc::Receiver<std::io::Result<String>>,
    ) -> Result<Vec<usize>, ClassifierError> {
        let mut answers: Vec<Option<usize>> = vec![None; expected];
        let mut received = 0usize;
        while received < expected {
            let line = match rx.recv_timeout(self.timeout) {
                Ok(Ok(line)) => line,
                Ok(Err(e)) => return Err(ClassifierError::Adapter(format!("read: {e}"))),
                Err(mpsc::RecvTimeoutError::Timeout) => {
                    return Err(ClassifierError::Timeout(self.timeout))
                }
                Err(mpsc::RecvTimeoutError::Disconnected) => {
                    return Err(ClassifierError::Protocol(format!(
                        "child closed stdout after {received} of {expected} responses"
                    )))
                }
            };
            let response: Response = serde_json::from_str(&line)
                .map_err(|_| ClassifierError::Protocol(line.clone()))?;
            if response.id >= expected
                || (self.classes > 0 && response.class_index >= self.classes)
            {
                return Err(ClassifierError::Protocol(line));
            }
            if answers[response.id].replace(response.class_index).is_some() {
                return Err(ClassifierError::Protocol(format!("duplicate id: {line}")));
            }
            received += 1;
        }
        Ok(answers.into_iter().map(|a| a.expect("all ids answered")).collect())
    }
}

fn to_rgb(image: &ImageF) -> Result<ImageF, ClassifierError> {
    match image.channels() {
        3 => Ok(image.clone()),
        1 => {
            let mut data = Vec::with_capacity(image.data().len() * 3);
            for &v in image.data() {
                data.extend_from_slice(&[v, v, v]);
            }
            Ok(ImageF::new(image.width(), image.height(), 3, data)?)
        }
        c => Err(ClassifierError::Adapter(format!(
            "cannot hand a {c}-channel image to an external classifier"
        ))),
    }
}

fn reap(child: &mut Child, timeout: Duration) -> Result<(), ClassifierError> {
    let deadline = Instant::now() + timeout;
    loop {
        match child.try_wait() {
            Ok(Some(status)) if status.success() => return Ok(()),
            Ok(Some(status)) => {
                let mut detail = status.to_string();
                if let Some(stderr) = child.stderr.take() {
                    let mut text = String::new();
                    use std::io::Read;
                    let _ = BufReader::new(stderr).read_to_string(&mut text);
                    let text = text.trim();
                    if !text.is_empty() {
                        detail = format!("{detail}: {text}");
                    }
                }
                return Err(ClassifierError::ChildFailed(detail));
            }
            Ok(None) => {
                if Instant::now() >= deadline {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(ClassifierError::Timeout(timeout));
                }
                std::thread::sleep(Duration::from_millis(2));
            }
            Err(e) => return Err(ClassifierError::Adapter(format!("wait: {e}"))),
        }
    }
}

impl Predictor for ExternalClassifier {
    fn predict_batch(&self, images: &[ImageF]) -> Result<Vec<usize>, ClassifierError> {
        self.classify(images)
    }

    fn class_count(&self) -> usize {
        self.classes
    }
}
