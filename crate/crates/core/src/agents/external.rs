//! Subprocess agent speaking the lockstep wire protocol over stdio.
//!
//! Frames are 2 octets env->agent and 1 octet agent->env, strictly
//! alternating with no delimiters. A read that stalls past the timeout is an
//! agent failure. The stream ends when we close the child's stdin.

use std::io::{Read, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver};
use std::thread::JoinHandle;
use std::time::Duration;

use super::{Agent, AgentSnapshot};
use crate::error::HarnessError;
use crate::stream::{encode_frame, Reward, Symbol};

pub const DEFAULT_READ_TIMEOUT: Duration = Duration::from_secs(5);

pub struct ExternalAgent {
    child: Child,
    stdin: Option<std::process::ChildStdin>,
    bytes: Receiver<std::io::Result<u8>>,
    reader: Option<JoinHandle<()>>,
    timeout: Duration,
}

impl ExternalAgent {
    pub fn spawn(program: &str, args: &[String]) -> Result<Self, HarnessError> {
        Self::spawn_with_timeout(program, args, DEFAULT_READ_TIMEOUT)
    }

    pub fn spawn_with_timeout(
        program: &str,
        args: &[String],
        timeout: Duration,
    ) -> Result<Self, HarnessError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| HarnessError::AgentFailure(format!("spawn {program:?}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let mut stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        let reader = std::thread::spawn(move || {
            let mut buf = [0u8; 1];
            loop {
                match stdout.read_exact(&mut buf) {
                    Ok(()) => {
                        if tx.send(Ok(buf[0])).is_err() {
                            break;
                        }
                    }
                    Err(e) => {
                        let _ = tx.send(Err(e));
                        break;
                    }
                }
            }
        });
        Ok(ExternalAgent {
            child,
            stdin: Some(stdin),
            bytes: rx,
            reader: Some(reader),
            timeout,
        })
    }
}

impl Agent for ExternalAgent {
    fn step(&mut self, reward: Reward, observation: Symbol) -> Result<Symbol, HarnessError> {
        let frame = encode_frame(observation, reward);
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| HarnessError::AgentFailure("agent stdin already closed".into()))?;
        stdin
            .write_all(&frame)
            .and_then(|_| stdin.flush())
            .map_err(|e| HarnessError::AgentFailure(format!("write frame: {e}")))?;
        match self.bytes.recv_timeout(self.timeout) {
            Ok(Ok(b)) => Ok(Symbol(b)),
            Ok(Err(e)) => Err(HarnessError::AgentFailure(format!("read reply: {e}"))),
            Err(mpsc::RecvTimeoutError::Timeout) => Err(HarnessError::AgentFailure(format!(
                "agent reply timed out after {:?}",
                self.timeout
            ))),
            Err(mpsc::RecvTimeoutError::Disconnected) => Err(HarnessError::AgentFailure(
                "agent closed its output stream".into(),
            )),
        }
    }

    fn snapshot(&self) -> Result<AgentSnapshot, HarnessError> {
        Err(HarnessError::AgentFailure(
            "external agents do not support snapshots".into(),
        ))
    }

    fn restore(&mut self, _snapshot: &AgentSnapshot) -> Result<(), HarnessError> {
        Err(HarnessError::AgentFailure(
            "external agents do not support snapshots".into(),
        ))
    }
}

impl Drop for ExternalAgent {
    fn drop(&mut self) {
        // Closing stdin signals the end of the stream; give the child a
        // moment to exit on its own before killing it.
        drop(self.stdin.take());
        let deadline = std::time::Instant::now() + Duration::from_millis(200);
        loop {
            match self.child.try_wait() {
                Ok(Some(_)) => break,
                Ok(None) if std::time::Instant::now() < deadline => {
                    std::thread::sleep(Duration::from_millis(10))
                }
                _ => {
                    let _ = self.child.kill();
                    let _ = self.child.wait();
                    break;
                }
            }
        }
        if let Some(handle) = self.reader.take() {
            let _ = handle.join();
        }
    }
}
