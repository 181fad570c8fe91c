//! Guidance computed by a child process speaking newline-delimited JSON.
//!
//! ```text
//! -> {"type":"init","vertices":[[x,y,z]...],"faces":[[i,j,k]...],"meta":{...}}
//! -> {"type":"step","epoch":n,"vertices":[[x,y,z]...]}
//! <- {"type":"grad","epoch":n,"loss":f,"grad":[[gx,gy,gz]...]}
//! -> {"type":"close"}
//! ```

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::time::Duration;

use serde_json::{json, Value};

use super::sources::GuidanceSource;
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Vec3};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);

pub struct External {
    name: String,
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
    n_vertices: usize,
}

fn points(p: &[Vec3]) -> Vec<[f64; 3]> {
    p.iter().map(|v| [v.x, v.y, v.z]).collect()
}

impl External {
    /// Runs `command` through the shell and sends the init message.
    pub fn spawn(
        name: impl Into<String>,
        command: &str,
        source: &Mesh,
        meta: Value,
        timeout: Duration,
    ) -> Result<Self> {
        let name = name.into();
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Protocol(format!("cannot spawn `{command}`: {e}")))?;
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let stdin = child.stdin.take();
        let mut ext = Self {
            name,
            child,
            stdin,
            lines: rx,
            timeout,
            n_vertices: source.n_vertices(),
        };
        let init = json!({
            "type": "init",
            "vertices": points(source.vertices()),
            "faces": source.faces(),
            "meta": meta,
        });
        ext.send(&init, 0)?;
        Ok(ext)
    }

    fn fail(&self, epoch: usize, message: impl Into<String>) -> Error {
        Error::Guidance {
            source_name: self.name.clone(),
            epoch,
            message: message.into(),
        }
    }

    fn send(&mut self, msg: &Value, epoch: usize) -> Result<()> {
        let Some(stdin) = self.stdin.as_mut() else {
            return Err(self.fail(epoch, "guidance input already closed"));
        };
        let mut line = serde_json::to_string(msg).expect("json");
        line.push('\n');
        if let Err(e) = stdin.write_all(line.as_bytes()).and_then(|_| stdin.flush()) {
            return Err(self.fail(epoch, format!("write failed: {e}")));
        }
        Ok(())
    }

    fn receive(&self, epoch: usize) -> Result<String> {
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(self.fail(epoch, format!("read failed: {e}"))),
            Err(RecvTimeoutError::Timeout) => Err(self.fail(epoch, format!("no reply within {:?}", self.timeout))),
            Err(RecvTimeoutError::Disconnected) => Err(self.fail(epoch, "guidance process closed its output")),
        }
    }

    fn parse_reply(&self, epoch: usize, line: &str) -> Result<(f64, Vec<Vec3>)> {
        let msg: Value = serde_json::from_str(line).map_err(|e| self.fail(epoch, format!("invalid JSON: {e}")))?;
        match msg.get("type").and_then(Value::as_str) {
            Some("grad") => {}
            other => return Err(self.fail(epoch, format!("unexpected message type {other:?}"))),
        }
        if msg.get("epoch").and_then(Value::as_u64) != Some(epoch as u64) {
            return Err(self.fail(epoch, format!("reply for epoch {:?}", msg.get("epoch"))));
        }
        let loss = msg
            .get("loss")
            .and_then(Value::as_f64)
            .filter(|l| l.is_finite())
            .ok_or_else(|| self.fail(epoch, "loss is missing or not a finite number"))?;
        let rows = msg
            .get("grad")
            .and_then(Value::as_array)
            .ok_or_else(|| self.fail(epoch, "grad is missing"))?;
        if rows.len() != self.n_vertices {
            return Err(self.fail(
                epoch,
                format!("grad has {} rows, expected {}", rows.len(), self.n_vertices),
            ));
        }
        let mut grad = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            let vals: Option<Vec<f64>> = row
                .as_array()
                .filter(|r| r.len() == 3)
                .and_then(|r| r.iter().map(Value::as_f64).collect());
            match vals {
                Some(v) if v.iter().all(|x| x.is_finite()) => grad.push(Vec3::new(v[0], v[1], v[2])),
                _ => return Err(self.fail(epoch, format!("grad row {i} is not three finite numbers"))),
            }
        }
        Ok((loss, grad))
    }
}

impl GuidanceSource for External {
    fn name(&self) -> &str {
        &self.name
    }

    fn evaluate(&mut self, epoch: usize, mesh: &Mesh) -> Result<(f64, Vec<Vec3>)> {
        if mesh.n_vertices() != self.n_vertices {
            return Err(self.fail(epoch, "vertex count changed"));
        }
        let step = json!({"type": "step", "epoch": epoch, "vertices": points(mesh.vertices())});
        self.send(&step, epoch)?;
        let line = self.receive(epoch)?;
        self.parse_reply(epoch, &line)
    }

    fn finish(&mut self) -> Result<()> {
        if self.stdin.is_some() {
            let _ = self.send(&json!({"type": "close"}), 0);
            self.stdin = None;
        }
        let _ = self.child.wait();
        Ok(())
    }
}

impl Drop for External {
    fn drop(&mut self) {
        self.stdin = None;
        if let Ok(None) = self.child.try_wait() {
            let _ = self.child.kill();
        }
        let _ = self.child.wait();
    }
}
