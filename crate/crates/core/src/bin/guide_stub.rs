//! Minimal guidance process for the stylize protocol.
//!
//! Modes: `zero` replies with zero gradients, `nan` replies with a NaN loss,
//! `vertex-match <target.obj>` computes `1/2 |V - target|^2`.

use std::io::{self, BufRead, Write};
use std::process::ExitCode;

use darap::mesh::{load_obj, Vec3};
use darap::style::VertexMatch;
use serde_json::{json, Value};

enum Mode {
    Zero,
    Nan,
    VertexMatch(Vec<Vec3>),
}

fn vertices(msg: &Value) -> Option<Vec<Vec3>> {
    msg.get("vertices")?
        .as_array()?
        .iter()
        .map(|r| {
            let r = r.as_array()?;
            Some(Vec3::new(r.first()?.as_f64()?, r.get(1)?.as_f64()?, r.get(2)?.as_f64()?))
        })
        .collect()
}

fn rows(g: &[Vec3]) -> Vec<[f64; 3]> {
    g.iter().map(|v| [v.x, v.y, v.z]).collect()
}

fn run(mode: Mode) -> Result<(), String> {
    let stdin = io::stdin();
    let mut out = io::stdout().lock();
    let mut n = None;
    for line in stdin.lock().lines() {
        let line = line.map_err(|e| e.to_string())?;
        if line.trim().is_empty() {
            continue;
        }
        let msg: Value = serde_json::from_str(&line).map_err(|e| e.to_string())?;
        let reply = match msg.get("type").and_then(Value::as_str) {
            Some("init") => {
                n = Some(vertices(&msg).ok_or("init without vertices")?.len());
                continue;
            }
            Some("close") => return Ok(()),
            Some("step") => {
                let epoch = msg.get("epoch").and_then(Value::as_u64).ok_or("step without epoch")?;
                let v = vertices(&msg).ok_or("step without vertices")?;
                if Some(v.len()) != n {
                    return Err("vertex count differs from init".into());
                }
                match &mode {
                    Mode::Zero => json!({"type": "grad", "epoch": epoch, "loss": 0.0, "grad": rows(&vec![Vec3::zeros(); v.len()])})
                        .to_string(),
                    // JSON has no NaN literal, so emit the token by hand
                    Mode::Nan => format!(
                        "{{\"type\":\"grad\",\"epoch\":{epoch},\"loss\":NaN,\"grad\":{}}}",
                        serde_json::to_string(&rows(&vec![Vec3::zeros(); v.len()])).expect("json")
                    ),
                    Mode::VertexMatch(target) => {
                        let (loss, g) = VertexMatch::loss_and_grad(target, &v).map_err(|e| e.to_string())?;
                        json!({"type": "grad", "epoch": epoch, "loss": loss, "grad": rows(&g)}).to_string()
                    }
                }
            }
            other => return Err(format!("unexpected message type {other:?}")),
        };
        writeln!(out, "{reply}").and_then(|_| out.flush()).map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mode = match args.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["zero"] => Mode::Zero,
        ["nan"] => Mode::Nan,
        ["vertex-match", path] => match load_obj(path) {
            Ok(m) => Mode::VertexMatch(m.vertices().to_vec()),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        _ => {
            eprintln!("usage: darap-guide-stub zero | nan | vertex-match <target.obj>");
            return ExitCode::from(1);
        }
    };
    match run(mode) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(4)
        }
    }
}
