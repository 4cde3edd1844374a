//! Potential evaluated by an external process over standard streams.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use dikin_core::walk::Potential;
use dikin_core::{Error, Result};
use nalgebra::DVector;

use crate::error::CliError;

struct Channel {
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
    line: String,
}

/// Sends `EVAL x1 … xd` and reads back one decimal per request.
pub struct PipeOracle {
    child: Mutex<Child>,
    channel: Mutex<Channel>,
    dim: usize,
}

impl PipeOracle {
    pub fn spawn(command: &[String], dim: usize) -> Result<Self, CliError> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| CliError::Config("external target needs a command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| CliError::Config(format!("cannot start oracle {program}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(Self {
            child: Mutex::new(child),
            channel: Mutex::new(Channel {
                stdin,
                stdout,
                line: String::new(),
            }),
            dim,
        })
    }
}

impl Potential for PipeOracle {
    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                actual: x.len(),
            });
        }
        let mut ch = self.channel.lock().map_err(|_| Error::Oracle("oracle channel poisoned".into()))?;
        let mut request = String::from("EVAL");
        for v in x.iter() {
            request.push(' ');
            request.push_str(&v.to_string());
        }
        request.push('\n');
        let io = |e: std::io::Error| Error::Oracle(format!("oracle pipe: {e}"));
        ch.stdin.write_all(request.as_bytes()).map_err(io)?;
        ch.stdin.flush().map_err(io)?;
        let Channel { stdout, line, .. } = &mut *ch;
        line.clear();
        if stdout.read_line(line).map_err(io)? == 0 {
            return Err(Error::Oracle("oracle closed its output".into()));
        }
        line.trim()
            .parse::<f64>()
            .map_err(|_| Error::Oracle(format!("oracle replied {:?}, expected a number", line.trim())))
    }
}

impl Drop for PipeOracle {
    fn drop(&mut self) {
        if let Ok(mut child) = self.child.lock() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}
